fn main() {
    std::process::exit(weaktrace_cli::run_command(std::env::args_os()));
}
