fn main() {
    std::process::exit(rsd::cli::cli_main(std::env::args_os()));
}
