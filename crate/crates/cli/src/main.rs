use clap::Parser;
use mvl_cli::commands::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
