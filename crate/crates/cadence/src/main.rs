fn main() {
    std::process::exit(cadence::cli::run(std::env::args_os()));
}
