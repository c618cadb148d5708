fn main() {
    std::process::exit(puffin_sentiment::cli::main_with_args(std::env::args_os()));
}
