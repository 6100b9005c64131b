fn main() {
    std::process::exit(emolatent_cli::run_cli(std::env::args_os()));
}
