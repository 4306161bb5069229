fn main() {
    std::process::exit(sharesynth::cli::run(std::env::args_os()));
}
