fn main() {
    std::process::exit(gompertz_opt::cli::run(std::env::args_os()));
}
