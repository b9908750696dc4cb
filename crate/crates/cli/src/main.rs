fn main() {
    std::process::exit(gaussbound_cli::run(std::env::args_os()));
}
