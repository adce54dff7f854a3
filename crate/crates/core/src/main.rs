fn main() {
    std::process::exit(kummer::cli::run(std::env::args_os()));
}
