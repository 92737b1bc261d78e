fn main() {
    std::process::exit(stablerelu_cli::run(std::env::args_os()));
}
