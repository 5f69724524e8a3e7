fn main() {
    std::process::exit(nullwave::cli::main_with_args(std::env::args_os()));
}
