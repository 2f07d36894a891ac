fn main() {
    std::process::exit(premack::cli::run(std::env::args_os()));
}
