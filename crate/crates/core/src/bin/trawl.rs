fn main() {
    std::process::exit(trawl_core::cli::run(std::env::args_os()));
}
