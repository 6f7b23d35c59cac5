fn main() {
    edgebench::init_logging();
    std::process::exit(edgebench::cli::run(std::env::args_os()));
}
