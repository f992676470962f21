fn main() {
    std::process::exit(intent_markets::cli::main());
}
