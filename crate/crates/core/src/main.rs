fn main() {
    std::process::exit(tacpred::cli::run(std::env::args_os()));
}
