fn main() {
    std::process::exit(rolemodel::cli::main());
}
