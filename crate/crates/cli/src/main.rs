fn main() {
    std::process::exit(shufflecut_cli::main_with_args(std::env::args_os()));
}
