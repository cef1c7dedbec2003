fn main() {
    std::process::exit(dtppo::experiments::cli::cli_main(std::env::args_os()));
}
