use clap::Parser;

use mpanon::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
