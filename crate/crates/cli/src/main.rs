fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(subwave_cli::run(&argv));
}
