fn main() {
    std::process::exit(divgen::cli::main());
}
