fn main() {
    std::process::exit(contextcurate::cli::main_with_args(std::env::args_os()));
}
