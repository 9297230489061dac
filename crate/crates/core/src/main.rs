fn main() {
    std::process::exit(oag::cli::main_with_args(std::env::args_os()));
}
