fn main() {
    std::process::exit(dfde::cli::run(std::env::args_os()));
}
