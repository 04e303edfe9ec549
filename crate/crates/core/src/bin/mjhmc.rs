fn main() {
    std::process::exit(mjhmc::cli::main_with_args(std::env::args_os()));
}
