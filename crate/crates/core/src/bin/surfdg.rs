fn main() {
    std::process::exit(surfdg::cli::main_with_args(std::env::args_os()));
}
