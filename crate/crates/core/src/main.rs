fn main() {
    std::process::exit(resectsim::cli::run(std::env::args_os()));
}
