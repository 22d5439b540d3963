fn main() {
    std::process::exit(comove_cli::run(std::env::args_os()));
}
