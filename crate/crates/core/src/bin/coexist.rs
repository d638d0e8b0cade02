fn main() {
    std::process::exit(coexist::cli::main_with(std::env::args_os()));
}
