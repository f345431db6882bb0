fn main() {
    std::process::exit(raptor_threshold::cli::main());
}
