fn main() {
    std::process::exit(hardy_lab::cli::main_with_args(std::env::args_os()));
}
