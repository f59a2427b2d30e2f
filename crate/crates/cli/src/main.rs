fn main() {
    std::process::exit(compactness_cli::run_cli(std::env::args_os()));
}
