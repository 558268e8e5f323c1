fn main() {
    std::process::exit(cardioforest::cli::run(std::env::args_os()));
}
