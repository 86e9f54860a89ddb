fn main() {
    std::process::exit(halfline::cli::run(std::env::args_os()));
}
