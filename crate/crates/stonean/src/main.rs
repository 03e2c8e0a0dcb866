fn main() {
    std::process::exit(stonean::cli::main_with_args(std::env::args_os()));
}
