fn main() {
    std::process::exit(linksynth::cli::run(std::env::args_os()));
}
