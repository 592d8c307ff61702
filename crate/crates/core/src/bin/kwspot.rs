fn main() {
    std::process::exit(kwspot::cli::run(std::env::args_os()));
}
