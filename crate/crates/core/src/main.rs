fn main() {
    std::process::exit(lrdfield::cli::main_with_args(std::env::args_os()));
}
