//! hgmatch: build, sparsify, solve, and verify configuration-avoiding
//! matching instances from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error (clap's own default), 3 stage failure.

mod args;
mod build_cmds;
mod check;
mod pipeline;
mod run_cmds;
mod util;

use args::{Cli, Command, KindArg};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Thread count never affects results (randomness is counter-based),
        // so a pool that was already set up is fine to keep.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    let result = match &cli.command {
        Command::BuildSteiner(a) => build_cmds::build_design(KindArg::Steiner, a),
        Command::BuildPartite(a) => build_cmds::build_design(KindArg::Partite, a),
        Command::BuildRainbow(a) => build_cmds::build_rainbow(a),
        Command::LiftDisjoint(a) => build_cmds::lift_disjoint(a),
        Command::LiftList(a) => build_cmds::lift_list(a),
        Command::Regularize(a) => build_cmds::regularize(a),
        Command::Sparsify(a) => run_cmds::sparsify(a),
        Command::Nibble(a) => run_cmds::nibble(a),
        Command::Finish(a) => run_cmds::finish(a),
        Command::Pipeline(a) => pipeline::pipeline(a),
        Command::Verify(a) => check::verify(a),
        Command::Diagnose(a) => run_cmds::diagnose(a),
    };

    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
