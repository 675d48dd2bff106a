fn main() {
    std::process::exit(itos_cli::run(std::env::args_os()));
}
