fn main() {
    std::process::exit(ptbp::cli::run())
}
