fn main() {
    std::process::exit(drbm::cli::run(std::env::args_os()));
}
