fn main() {
    std::process::exit(qbat::cli::run(std::env::args_os()));
}
