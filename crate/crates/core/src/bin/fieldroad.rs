fn main() {
    std::process::exit(fieldroad::cli::cli_main(std::env::args_os()));
}
