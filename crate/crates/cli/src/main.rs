fn main() {
    std::process::exit(lentil_cli::run(std::env::args_os()));
}
