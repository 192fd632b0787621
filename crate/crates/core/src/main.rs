fn main() {
    std::process::exit(tlquant::cli::run(std::env::args_os()));
}
