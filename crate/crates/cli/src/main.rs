fn main() {
    std::process::exit(rho_lab_cli::run(std::env::args_os()));
}
