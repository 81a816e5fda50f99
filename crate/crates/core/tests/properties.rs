use cadence_core::eval::roc_curve;
use cadence_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kern(family: KernelFamily, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    match family {
        KernelFamily::Gaussian => (-gamma * sq).exp(),
        KernelFamily::Laplace => (-gamma * l1).exp(),
        KernelFamily::Cauchy => 1.0 / (1.0 + gamma * sq),
    }
}

fn naive_mmd(family: KernelFamily, gamma: f64, a: &Matrix, b: &Matrix) -> f64 {
    let mean = |p: &Matrix, q: &Matrix| {
        let mut s = 0.0;
        for i in 0..p.rows() {
            for j in 0..q.rows() {
                s += kern(family, gamma, p.row(i), q.row(j));
            }
        }
        s / (p.rows() * q.rows()) as f64
    };
    mean(a, a) + mean(b, b) - 2.0 * mean(a, b)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn family() -> impl Strategy<Value = KernelFamily> {
    prop::sample::select(KernelFamily::ALL.to_vec())
}

/// Two point sets of equal width.
fn point_sets() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..6, 1usize..8, 1usize..8).prop_flat_map(|(d, m, n)| (matrix(m, d), matrix(n, d)))
}

fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            total += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / total
}

fn labelled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            // coarse values so ties are common
            prop::collection::vec((0i32..8).prop_map(|v| v as f64 * 0.25), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter("both classes present", |(_, l)| l.iter().any(|&x| x) && l.iter().any(|&x| !x))
    })
}

fn random_series(t: usize, c: usize) -> impl Strategy<Value = TimeSeries> {
    prop::collection::vec(-10.0f64..10.0, t * c)
        .prop_map(move |v| TimeSeries::from_matrix("p", Matrix::from_vec(t, c, v).unwrap(), vec![]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mmd_matches_naive_oracle((a, b) in point_sets(), fam in family(), gamma in 0.05f64..3.0) {
        let got = mmd2_batch(&KernelSpec::fixed(fam, gamma), &a, &b).unwrap().value;
        let want = naive_mmd(fam, gamma, &a, &b).max(0.0);
        prop_assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
    }

    #[test]
    fn mmd_symmetric_and_permutation_invariant((a, b) in point_sets(), fam in family(), seed in any::<u64>()) {
        let spec = KernelSpec::median(fam);
        if let Ok(v) = mmd2_batch(&spec, &a, &b) {
            prop_assert_eq!(v.value, mmd2_batch(&spec, &b, &a).unwrap().value);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows: Vec<Vec<f64>> = a.iter_rows().map(<[f64]>::to_vec).collect();
            for i in (1..rows.len()).rev() {
                rows.swap(i, rng.random_range(0..=i));
            }
            let shuffled = Matrix::from_rows(&rows).unwrap();
            let fixed = KernelSpec::fixed(fam, v.gamma);
            let p = mmd2_batch(&fixed, &shuffled, &b).unwrap().value;
            prop_assert!((p - v.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn self_mmd_is_zero((a, _b) in point_sets(), fam in family(), gamma in 0.05f64..3.0) {
        let v = mmd2_batch(&KernelSpec::fixed(fam, gamma), &a, &a).unwrap().value;
        prop_assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn kernel_identities(x in prop::collection::vec(-5.0f64..5.0, 1..6), shift in -2.0f64..2.0, fam in family(), gamma in 0.01f64..5.0) {
        let spec = KernelSpec::fixed(fam, gamma);
        prop_assert_eq!(kernel_eval(&spec, &x, &x).unwrap(), 1.0);
        let y: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let k = kernel_eval(&spec, &x, &y).unwrap();
        prop_assert!(k > 0.0 && k <= 1.0);
        prop_assert_eq!(k, kernel_eval(&spec, &y, &x).unwrap());
    }

    #[test]
    fn median_gamma_scale_covariance(a in matrix(7, 3), fam in family(), s in 0.1f64..10.0) {
        if let Ok(g) = median_gamma(&a, fam) {
            let scaled = Matrix::from_vec(7, 3, a.as_slice().iter().map(|v| v * s).collect()).unwrap();
            let gs = median_gamma(&scaled, fam).unwrap();
            // γ ∝ 1/m² for the Euclidean families and 1/m for L1
            let want = match fam {
                KernelFamily::Laplace => g / s,
                _ => g / (s * s),
            };
            prop_assert!((gs - want).abs() <= 1e-12 * want.abs().max(1.0), "{gs} vs {want}");
        }
    }

    #[test]
    fn pair_mmd_is_two_minus_two_k(x in prop::collection::vec(-2.0f64..2.0, 3), y in prop::collection::vec(-2.0f64..2.0, 3), fam in family()) {
        let spec = KernelSpec::fixed(fam, 0.5);
        let v = mmd_pair(&spec, &x, &y).unwrap().value;
        prop_assert!((v - 2.0 * (1.0 - kern(fam, 0.5, &x, &y))).abs() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn auc_matches_mann_whitney((scores, labels) in labelled_scores()) {
        let (roc, auc) = roc_curve(&scores, &labels).unwrap();
        prop_assert!((auc - brute_force_auc(&scores, &labels)).abs() <= 1e-10);
        prop_assert_eq!(roc.first(), Some(&(0.0, 0.0)));
        prop_assert_eq!(roc.last(), Some(&(1.0, 1.0)));
        for w in roc.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn auc_invariant_under_monotone_maps((scores, labels) in labelled_scores(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let (_, base) = roc_curve(&scores, &labels).unwrap();
        let affine: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let expd: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert!((roc_curve(&affine, &labels).unwrap().1 - base).abs() <= 1e-12);
        prop_assert!((roc_curve(&expd, &labels).unwrap().1 - base).abs() <= 1e-12);
    }

    #[test]
    fn window_invariants(ts in (1usize..4).prop_flat_map(|c| random_series(30, c)), w in 1usize..15) {
        let pairs = make_pairs(&ts, w).unwrap();
        prop_assert_eq!(pairs.len(), ts.len() - 2 * w + 1);
        let c = ts.channels();
        for p in &pairs {
            prop_assert_eq!(p.x_left.len(), w * c);
            let left = unflatten_window(&p.x_left, c).unwrap();
            prop_assert_eq!(&left, &ts.values().slice_rows(p.t - w, p.t));
            prop_assert_eq!(flatten_window(&left), p.x_left.clone());
            prop_assert_eq!(&unflatten_window(&p.x_right, c).unwrap(), &ts.values().slice_rows(p.t, p.t + w));
        }
        prop_assert_eq!(pairs.first().unwrap().t, w);
        prop_assert_eq!(pairs.last().unwrap().t, ts.len() - w);
    }

    #[test]
    fn detect_is_scale_invariant(scores in prop::collection::vec(0.0f64..1.0, 20..80), c in 0.01f64..100.0, width in (0usize..4).prop_map(|k| 2 * k + 1)) {
        let n = scores.len();
        let s = ScoreSeries::from_scores("s", 3, n + 5, scores.clone()).unwrap();
        let scaled = ScoreSeries::from_scores("s", 3, n + 5, scores.iter().map(|v| v * c).collect()).unwrap();
        let d1 = detect(&smooth(&s, width).unwrap(), 0.4, 3).unwrap();
        let d2 = detect(&smooth(&scaled, width).unwrap(), 0.4, 3).unwrap();
        prop_assert_eq!(d1.change_points, d2.change_points);
    }

    #[test]
    fn segments_partition_the_series(ts in random_series(60, 2), scores in prop::collection::vec(0.0f64..1.0, 51)) {
        let s = ScoreSeries::from_scores("s", 5, 60, scores).unwrap();
        let det = detect(&smooth(&s, 3).unwrap(), 0.4, 5).unwrap();
        let segs = segment(&ts, &det);
        prop_assert_eq!(segs.first().unwrap().0, 0);
        prop_assert_eq!(segs.last().unwrap().1, 60);
        for pair in segs.windows(2) {
            prop_assert_eq!(pair[0].1, pair[1].0);
        }
        let rows: usize = segs.iter().map(|(_, _, m)| m.rows()).sum();
        prop_assert_eq!(rows, 60);
        prop_assert_eq!(segs.len(), det.change_points.len() + 1);
    }

    #[test]
    fn normalize_is_idempotent_and_bounded(ts in random_series(25, 3)) {
        let once = normalize(&ts);
        let twice = normalize(&once);
        for (a, b) in once.values().as_slice().iter().zip(twice.values().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(a));
        }
    }

    #[test]
    fn split_preserves_length(t in 5usize..3000, train in 0.2f64..0.8) {
        let rest = 1.0 - train;
        let spec = SplitSpec { train_frac: train, val_frac: rest / 2.0, test_frac: rest / 2.0 };
        let ts = TimeSeries::from_matrix("s", Matrix::zeros(t, 1), vec![]).unwrap();
        if let Ok((a, b, c)) = split_chrono(&ts, &spec) {
            prop_assert_eq!(a.len() + b.len() + c.len(), t);
        }
    }
}

#[test]
fn median_gamma_hand_example() {
    let pts = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
    assert_eq!(median_gamma(&pts, KernelFamily::Gaussian).unwrap(), 0.5);
}

#[test]
fn uniform_random_scores_give_chance_auc() {
    let cps: Vec<usize> = (1..50).map(|k| k * 200).collect();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let s = ScoreSeries::from_scores("u", 25, 10_049, scores).unwrap();
        let r = roc_auc(&s, &cps, 25).unwrap();
        assert!((r.auc - 0.5).abs() <= 0.02, "seed {seed}: {}", r.auc);
    }
}

fn trained_identity(window: usize, channels: usize) -> AutoencoderModel {
    let t = 4 * window;
    let ts = TimeSeries::from_matrix("z", Matrix::zeros(t, channels), vec![]).unwrap();
    let pairs = make_pairs(&ts, window).unwrap();
    let cfg = TrainConfig {
        iterations: 0,
        window,
        ..TrainConfig::default()
    };
    let mut model = train(&pairs, None, &cfg).unwrap().0;
    model.meta.channels = channels;
    model
}

#[test]
fn constant_series_scores_zero() {
    let model = trained_identity(5, 2);
    let ts = TimeSeries::from_matrix("c", Matrix::from_vec(40, 2, vec![0.37; 80]).unwrap(), vec![]).unwrap();
    let s = score_series(&model, &ts, &KernelSpec::default()).unwrap();
    assert_eq!(s.len(), 40 - 10 + 1);
    assert!(s.scores.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn scores_depend_only_on_neighbouring_windows(ts in random_series(40, 1), pos in 0usize..40, bump in 0.5f64..3.0) {
        let model = init_and_freeze(5);
        let base = score_series(&model, &ts, &KernelSpec::default()).unwrap();
        let mut values = ts.values().clone();
        values.set(pos, 0, values.get(pos, 0) + bump);
        let other = TimeSeries::from_matrix("p", values, vec![]).unwrap();
        let moved = score_series(&model, &other, &KernelSpec::default()).unwrap();
        for i in 0..base.len() {
            let t = base.boundary(i);
            if pos + 5 < t || pos >= t + 5 {
                prop_assert_eq!(base.scores[i], moved.scores[i]);
            }
        }
    }
}

fn init_and_freeze(window: usize) -> AutoencoderModel {
    let mut model = init_model(window, 3, 9).unwrap();
    model.meta.window = window;
    model.frozen_gamma = Some(0.8);
    model
}

#[test]
fn minibatch_matches_golden() {
    let ts = TimeSeries::from_matrix("g", Matrix::from_vec(60, 1, (0..60).map(f64::from).collect()).unwrap(), vec![]).unwrap();
    let pairs = make_pairs(&ts, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let batch = sample_minibatch(&pairs, 16, &mut rng).unwrap();
    let got: Vec<String> = batch.boundaries.iter().map(usize::to_string).collect();
    let golden = include_str!("golden/minibatch_seed42.txt").trim();
    assert_eq!(got.join(","), golden);
    // same stream drawn by hand: uniform index into the 51 pairs
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let by_hand: Vec<usize> = (0..16).map(|_| 5 + rng.random_range(0..51usize)).collect();
    assert_eq!(batch.boundaries, by_hand);
    for (i, &t) in batch.boundaries.iter().enumerate() {
        assert_eq!(batch.x_left.row(i)[0], (t - 5) as f64);
        assert_eq!(batch.x_right.row(i)[0], t as f64);
    }
}
