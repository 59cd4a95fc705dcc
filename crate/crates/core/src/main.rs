fn main() {
    std::process::exit(dgs::cli::run(std::env::args_os()));
}
