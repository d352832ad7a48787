use std::process::exit;

fn main() {
    exit(trackmpc::cli::run(std::env::args_os()));
}
