fn main() {
    std::process::exit(zomefab::cli::run(std::env::args_os()));
}
