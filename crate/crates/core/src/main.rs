fn main() {
    if let Err(e) = kgs::cli::configure_workers() {
        eprintln!("error: {e}");
        std::process::exit(kgs::cli::exit_code(&e));
    }
    std::process::exit(kgs::cli::main_with_args(std::env::args_os()));
}
