fn main() -> std::process::ExitCode {
    normdiscount::cli::run(std::env::args_os())
}
