fn main() {
    std::process::exit(virtlase_cli::run(std::env::args_os()));
}
