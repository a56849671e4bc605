fn main() {
    std::process::exit(qostbc::cli::run(std::env::args_os()));
}
