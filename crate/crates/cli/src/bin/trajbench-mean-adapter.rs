//! Mean-predictor model process for protocol conformance tests.

use std::io;

use clap::Parser;
use trajbench::adapter::{serve, FailureMode};

#[derive(Parser)]
#[command(version, about = "Mean-predictor model speaking protocol version 1 on stdin/stdout")]
struct Args {
    /// Misbehave in the given way.
    #[arg(long, value_enum, default_value = "none")]
    mode: FailureMode,
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    serve(io::stdin().lock(), io::stdout().lock(), io::stderr(), args.mode)
}
