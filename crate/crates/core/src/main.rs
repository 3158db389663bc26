fn main() {
    std::process::exit(rcw_core::cli::run(std::env::args_os()));
}
