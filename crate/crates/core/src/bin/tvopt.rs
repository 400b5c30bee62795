fn main() {
    std::process::exit(tvopt::cli::run_cli(std::env::args_os()));
}
