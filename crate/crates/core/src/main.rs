fn main() {
    std::process::exit(lna_mor::cli::main_with_args(std::env::args_os()));
}
