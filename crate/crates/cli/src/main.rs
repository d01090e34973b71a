mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command, Common};
use output::{emit, CliError, Outcome, RunConfig, EXIT_TOLERANCE};

fn run(cli: Cli) -> Result<i32, CliError> {
    let start = Instant::now();
    let (config, common, outcome): (RunConfig, &Common, Outcome) = match &cli.command {
        Command::Constants(a) => (commands::base_config("constants", &a.common), &a.common, commands::constants(a)?),
        Command::Prop1(a) => {
            let mut c = commands::base_config("prop1", &a.common);
            c.terms = Some(a.terms);
            c.alpha = Some(a.alpha.clone());
            (c, &a.common, commands::prop1(a)?)
        }
        Command::AlphaScan(a) => {
            let mut c = commands::base_config("alpha-scan", &a.common);
            c.terms = Some(a.terms);
            c.alpha = Some(format!("{} + [{}]", a.center, a.offsets.join(",")));
            (c, &a.common, commands::alpha_scan(a)?)
        }
        Command::Borel(a) => {
            let mut c = commands::base_config("borel", &a.common);
            c.terms = Some(a.terms);
            c.alpha = Some(a.alpha.clone());
            (c, &a.common, commands::borel(a)?)
        }
        Command::Stokes(a) => {
            let mut c = commands::base_config("stokes", &a.common);
            c.alpha = Some(a.alpha.clone());
            c.n = Some(a.n);
            (c, &a.common, commands::stokes(a)?)
        }
        Command::Moments(a) => {
            let mut c = commands::base_config("moments", &a.common);
            c.n = Some(a.n);
            c.seed = a.mc_samples.map(|_| a.seed);
            (c, &a.common, commands::moments(a)?)
        }
        Command::GenSeries(a) => {
            let mut c = commands::base_config("gen-series", &a.common);
            c.terms = Some(a.terms);
            c.alpha = Some(a.alpha.clone());
            c.n = Some(a.n);
            (c, &a.common, commands::gen_series(a)?)
        }
        Command::VerifyAll(a) => {
            let mut c = commands::base_config("verify-all", &a.common);
            c.seed = Some(a.seed);
            (c, &a.common, commands::verify_all(a)?)
        }
    };
    let runtime = start.elapsed().as_millis();
    emit(&config, &outcome, runtime, common.format, common.output.as_ref())?;
    Ok(if outcome.tolerance_met { 0 } else { EXIT_TOLERANCE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("einlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
