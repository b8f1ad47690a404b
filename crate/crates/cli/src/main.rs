fn main() {
    std::process::exit(gatlink_cli::main_with_args(std::env::args_os()));
}
