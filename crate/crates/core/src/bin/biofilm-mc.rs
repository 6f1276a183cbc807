fn main() {
    std::process::exit(biofilm_mc::cli::run(std::env::args_os()));
}
