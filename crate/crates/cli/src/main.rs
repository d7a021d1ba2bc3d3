use clap::Parser;
use ghostorbit_cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
