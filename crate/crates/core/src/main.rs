fn main() {
    std::process::exit(qsense::cli::run(std::env::args_os()));
}
