fn main() {
    std::process::exit(qfals::cli::main_with_args(std::env::args_os()));
}
