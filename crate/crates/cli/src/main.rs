use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod report;

use args::{Cli, Command};

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("DYNABG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        anyhow::anyhow!("DYNABG_THREADS must be a positive integer (got '{raw}')")
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{}", line.trim());
            return ExitCode::from(2);
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Pool(a) => commands::pool(a),
        Command::Segment(a) => commands::segment(a),
        Command::Detect(a) => commands::detect(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => commands::bench(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
