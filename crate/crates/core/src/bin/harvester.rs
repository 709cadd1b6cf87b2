fn main() {
    std::process::exit(harvester_core::cli::run(std::env::args_os()));
}
