fn main() {
    std::process::exit(footstep::cli::run(std::env::args_os()));
}
