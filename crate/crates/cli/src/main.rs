fn main() {
    std::process::exit(cohortsplit_cli::main_with_args(std::env::args_os()));
}
