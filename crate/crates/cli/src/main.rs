fn main() {
    std::process::exit(ntd_cli::run(std::env::args_os()));
}
