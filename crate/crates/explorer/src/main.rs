fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(explorer::harness::cli(&argv));
}
