fn main() {
    std::process::exit(cardguess::cli::run(std::env::args_os()));
}
