fn main() {
    std::process::exit(breather_forge::cli::run_command(std::env::args_os()));
}
