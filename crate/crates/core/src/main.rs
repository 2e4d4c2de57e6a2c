use clap::Parser;

use hybrid_dof::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
