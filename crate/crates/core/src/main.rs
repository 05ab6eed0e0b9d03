fn main() {
    std::process::exit(csent::cli::run(std::env::args_os()));
}
