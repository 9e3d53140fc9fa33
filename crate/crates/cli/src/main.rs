fn main() {
    std::process::exit(sqfree_cli::run(std::env::args().collect()));
}
