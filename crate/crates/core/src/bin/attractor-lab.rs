fn main() {
    std::process::exit(attractor_lab::cli::main_with_args(std::env::args_os()));
}
