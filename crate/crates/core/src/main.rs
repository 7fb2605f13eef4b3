fn main() {
    std::process::exit(ma_aircomp::harness::cli::run(std::env::args_os()));
}
