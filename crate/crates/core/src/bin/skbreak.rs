fn main() {
    std::process::exit(skbreak::cli::run(std::env::args_os()));
}
