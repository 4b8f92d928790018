fn main() {
    std::process::exit(failnet::cli::main_with_args(std::env::args_os()));
}
