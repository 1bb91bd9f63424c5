fn main() {
    std::process::exit(hybrid_surrogate::cli::main_with_args());
}
