fn main() {
    std::process::exit(plate_tone_cli::run_cli(std::env::args_os()));
}
