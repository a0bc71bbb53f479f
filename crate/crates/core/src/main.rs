fn main() {
    std::process::exit(riskbandit::cli::main_with_args(std::env::args_os()));
}
