fn main() {
    std::process::exit(wrenchsim::cli::run_cli(std::env::args_os()));
}
