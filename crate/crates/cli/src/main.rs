fn main() {
    std::process::exit(folhodge_cli::main_with(std::env::args_os()));
}
