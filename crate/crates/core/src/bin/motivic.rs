use clap::Parser;
use motivic_engine::cli::{run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    std::process::exit(run(config));
}
