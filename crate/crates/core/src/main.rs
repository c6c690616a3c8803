fn main() {
    std::process::exit(logsphere::cli::run(std::env::args_os()));
}
