fn main() {
    std::process::exit(bt_cli::run(std::env::args_os()));
}
