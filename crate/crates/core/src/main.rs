fn main() {
    std::process::exit(bohm_ergo::cli::run(std::env::args_os()));
}
