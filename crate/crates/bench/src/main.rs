fn main() {
    std::process::exit(rtdp_bench::cli::run(std::env::args_os()));
}
