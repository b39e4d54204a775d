fn main() {
    std::process::exit(superadiabatic::cli::main_with_args(std::env::args_os()));
}
