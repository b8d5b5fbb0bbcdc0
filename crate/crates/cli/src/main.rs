fn main() {
    std::process::exit(cachemodes_cli::run(std::env::args_os()));
}
