fn main() {
    std::process::exit(virtual_prior::cli::run(std::env::args_os()));
}
