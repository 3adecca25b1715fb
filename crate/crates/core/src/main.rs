fn main() {
    std::process::exit(jetcarnot::cli::run(std::env::args_os()));
}
