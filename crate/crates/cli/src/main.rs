fn main() {
    std::process::exit(bottlab_cli::run(std::env::args_os()));
}
