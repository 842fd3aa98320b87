fn main() {
    std::process::exit(lapdet::cli::run(std::env::args_os()));
}
