fn main() {
    std::process::exit(sdae::cli::run(std::env::args_os()));
}
