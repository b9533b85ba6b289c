fn main() {
    std::process::exit(spectra_cli::run(std::env::args_os()));
}
