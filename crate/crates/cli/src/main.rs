fn main() {
    std::process::exit(polcomp_cli::run(std::env::args_os()));
}
