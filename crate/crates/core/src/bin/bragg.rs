fn main() {
    std::process::exit(bragg::cli::run(std::env::args_os()));
}
