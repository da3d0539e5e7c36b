fn main() {
    std::process::exit(facetrack::cli::main_with_args(std::env::args_os()));
}
