fn main() {
    std::process::exit(adaptive_k::cli::run(std::env::args_os()));
}
