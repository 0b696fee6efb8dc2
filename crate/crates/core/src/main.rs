fn main() {
    std::process::exit(heterotest::cli::run(std::env::args_os()));
}
