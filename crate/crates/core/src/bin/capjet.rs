fn main() {
    std::process::exit(capjet::cli::main_with_args(std::env::args_os()));
}
