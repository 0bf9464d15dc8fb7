fn main() {
    std::process::exit(aztec_mvop::cli::run(std::env::args_os()));
}
