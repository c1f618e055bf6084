fn main() {
    std::process::exit(logoquant::cli::run(std::env::args_os()));
}
