fn main() {
    std::process::exit(cdrlike::cli::run(std::env::args_os()));
}
