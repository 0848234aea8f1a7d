fn main() {
    std::process::exit(kovi::cli::main_with_args(std::env::args_os()));
}
