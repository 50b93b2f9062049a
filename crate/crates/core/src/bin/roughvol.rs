fn main() {
    std::process::exit(roughvol::cli::run(std::env::args_os()));
}
