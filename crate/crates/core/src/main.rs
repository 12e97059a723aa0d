fn main() {
    std::process::exit(limitlab::cli::run_cli(std::env::args_os()));
}
