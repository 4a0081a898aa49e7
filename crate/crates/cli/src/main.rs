fn main() {
    std::process::exit(pscatter_cli::main_with_args(std::env::args_os()));
}
