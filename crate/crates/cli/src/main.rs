fn main() {
    std::process::exit(csf_cli::run(std::env::args_os()));
}
