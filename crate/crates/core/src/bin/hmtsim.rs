fn main() { std::process::exit(hmtsim::cli::cli_main(std::env::args())) }
