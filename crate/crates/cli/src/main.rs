fn main() {
    std::process::exit(roleprobe_cli::run(std::env::args_os()));
}
