fn main() {
    std::process::exit(corridor::cli::run_cli(std::env::args_os()));
}
