fn main() {
    std::process::exit(gmnorm::cli::main_with(std::env::args_os()));
}
