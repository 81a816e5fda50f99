use std::fs;
use std::path::{Path, PathBuf};

use cadence::dataio::{load_csv, load_manifest, read_labels, write_csv, write_labels};
use cadence::DataError;
use cadence_core::{split_chrono, Matrix, SplitSpec, TimeSeries};

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn four_rows_two_channels_with_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "s.csv", "a,b\n1,2\n3,4\n5,6\n7,8\n");
    let labels = write(dir.path(), "s.labels", "2\n");
    let ts = load_csv(&data, Some(&labels)).unwrap();
    assert_eq!((ts.len(), ts.channels()), (4, 2));
    assert_eq!(ts.change_points(), &[2]);
    assert_eq!(ts.channel_names(), &["a".to_string(), "b".to_string()]);
    assert_eq!(ts.values().row(3), &[7.0, 8.0]);
    assert_eq!(ts.name(), "s");
}

#[test]
fn unparsable_field_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "bad.csv", "a,b\n1.0,2.0\n1.0,x\n");
    match load_csv(&data, None) {
        Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn wrong_field_count_and_blank_field() {
    let dir = tempfile::tempdir().unwrap();
    let short = write(dir.path(), "short.csv", "a,b\n1,2\n3\n");
    assert!(matches!(load_csv(&short, None), Err(DataError::MalformedRow { line: 3, .. })));
    let blank = write(dir.path(), "blank.csv", "a,b\n1,\n");
    assert!(matches!(load_csv(&blank, None), Err(DataError::MalformedRow { line: 2, .. })));
}

#[test]
fn header_only_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "e.csv", "a,b\n");
    assert!(matches!(load_csv(&data, None), Err(DataError::EmptySeries { .. })));
}

#[test]
fn label_outside_series_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "s.csv", "a\n1\n2\n3\n");
    let labels = write(dir.path(), "l.txt", "1\n3\n");
    match load_csv(&data, Some(&labels)) {
        Err(DataError::LabelOutOfRange { index, len, .. }) => assert_eq!((index, len), (3, 3)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn labels_accept_crlf_and_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let labels = write(dir.path(), "l.txt", "30\r\n7\r\n7\r\n\r\n");
    assert_eq!(read_labels(&labels).unwrap(), vec![7, 30]);
    let bad = write(dir.path(), "bad.txt", "4\n-1\n");
    assert!(matches!(read_labels(&bad), Err(DataError::MalformedRow { line: 2, .. })));
}

#[test]
fn missing_file_names_the_path() {
    let err = load_csv(Path::new("/nonexistent/series.csv"), None).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/series.csv"), "{err}");
}

#[test]
fn write_then_load_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let vals = vec![
        0.1,
        -0.0,
        1e-300,
        std::f64::consts::PI,
        -123456.789e10,
        f64::MIN_POSITIVE,
        1.0 / 3.0,
        f64::MAX,
    ];
    let ts = TimeSeries::new(
        "r",
        Matrix::from_vec(4, 2, vals).unwrap(),
        vec!["x".into(), "y".into()],
        vec![1, 3],
    )
    .unwrap();
    let data = dir.path().join("r.csv");
    let labels = dir.path().join("r.labels");
    write_csv(&data, &ts).unwrap();
    write_labels(&labels, ts.change_points()).unwrap();
    let back = load_csv(&data, Some(&labels)).unwrap();
    let bits = |t: &TimeSeries| t.values().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&ts));
    assert_eq!(back.change_points(), ts.change_points());
    assert_eq!(back.channel_names(), ts.channel_names());
}

#[test]
fn manifest_object_and_array_resolve_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("d")).unwrap();
    write(&dir.path().join("d"), "s.csv", "a\n1\n2\n");
    let one = write(dir.path(), "one.json", r#"{"data": "d/s.csv", "labels": "d/s.labels", "name": "bee"}"#);
    let entries = load_manifest(&one).unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].data, dir.path().join("d/s.csv"));
    assert_eq!(entries[0].labels.as_deref(), Some(dir.path().join("d/s.labels").as_path()));
    assert_eq!(entries[0].series_name(), "bee");

    let many = write(
        dir.path(),
        "many.json",
        r#"[{"data": "d/s.csv", "dataset": "yahoo"}, {"data": "d/s.csv", "name": "b", "dataset": "yahoo"}]"#,
    );
    let entries = load_manifest(&many).unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e.dataset_name() == "yahoo"));
    assert_eq!(entries[0].load().unwrap().name(), "s");

    let unknown = write(dir.path(), "bad.json", r#"{"data": "d/s.csv", "colour": 1}"#);
    assert!(load_manifest(&unknown).is_err());
}

#[test]
fn beedance_sized_split() {
    let ts = TimeSeries::from_matrix("b", Matrix::zeros(1057, 3), vec![]).unwrap();
    let (a, b, c) = split_chrono(&ts, &SplitSpec::default()).unwrap();
    assert_eq!((a.len(), b.len(), c.len()), (634, 211, 212));
}
