fn main() {
    std::process::exit(superpose_cli::run(std::env::args_os()));
}
