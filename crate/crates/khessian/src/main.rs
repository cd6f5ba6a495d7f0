fn main() {
    std::process::exit(khessian::cli::main());
}
