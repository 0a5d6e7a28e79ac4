fn main() {
    std::process::exit(ikdl::cli::run(std::env::args_os()));
}
