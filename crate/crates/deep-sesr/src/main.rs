fn main() {
    std::process::exit(deep_sesr::cli::run(std::env::args_os()));
}
