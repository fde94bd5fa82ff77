fn main() {
    std::process::exit(lhessian::cli::run(std::env::args_os()));
}
