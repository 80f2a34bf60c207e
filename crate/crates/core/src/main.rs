fn main() {
    std::process::exit(chessgram::cli::run(std::env::args()));
}
