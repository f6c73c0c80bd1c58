fn main() {
    std::process::exit(condent::cli::run(std::env::args_os()));
}
