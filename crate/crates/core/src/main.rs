fn main() {
    std::process::exit(evgaze::cli::main_with(std::env::args_os()));
}
