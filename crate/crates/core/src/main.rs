fn main() {
    std::process::exit(funarch::cli::run(std::env::args_os()));
}
