use clap::Parser;
use sgn_cli::{run, tune_allocator, Cli};

fn main() {
    tune_allocator();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
