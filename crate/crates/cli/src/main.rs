mod args;
mod commands;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, DiagnoseCommand};
use commands::Outcome;

fn main() {
    // OREY_THREADS caps parallelism before any worker pool spins up.
    if let Ok(v) = std::env::var("OREY_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome { checks_passed }) if !checks_passed => {
            eprintln!(
                "{}",
                json!({"error": "one or more diagnostic checks failed", "kind": "check"})
            );
            std::process::exit(1);
        }
        Ok(_) => {}
        Err(e) => {
            eprintln!("{}", json!({"error": format!("{e:#}"), "kind": "run"}));
            std::process::exit(2);
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Simulate(opts) => commands::simulate(&opts.resolve()?),
        Command::Qv(opts) => commands::qv(&opts.resolve()?),
        Command::Expect(opts) => commands::expect(&opts.resolve()?),
        Command::Estimate(opts) => commands::estimate(&opts.resolve()?),
        Command::Mc(opts) => commands::mc(&opts.resolve()?),
        Command::Diagnose(d) => match d {
            DiagnoseCommand::Lambda(opts) => commands::diagnose_lambda(&opts.resolve()?),
            DiagnoseCommand::Remark(opts) => commands::diagnose_remark(&opts.resolve()?),
            DiagnoseCommand::Logratio(opts) => commands::diagnose_logratio(&opts.resolve()?),
            DiagnoseCommand::Rowsum(opts) => commands::diagnose_rowsum(&opts.resolve()?),
        },
    }
}
