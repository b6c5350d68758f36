fn main() {
    std::process::exit(shocklab::cli::main());
}
