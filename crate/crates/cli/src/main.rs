use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use spe_cli::{
    jaynes::{jaynes_table, render_jaynes, JaynesInput},
    output::OutputDir,
    pipeline::render_summary,
    CliError, Pipeline, PipelineConfig,
};
use spe_core::state::{CMatrix, Scheme};

#[derive(Parser, Debug)]
#[command(name = "spe", version)]
#[command(about = "Optimal error intervals for quantum state properties from click data")]
struct Cli {
    /// Override every seed with SEED + stage index
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Pipeline configuration (JSON)
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides the one in the config
    #[arg(long)]
    outputs: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Describe a measurement scheme
    PomInfo {
        /// tetrahedron, tat or simplex:K
        #[arg(long)]
        scheme: String,

        /// Print the operators as JSON
        #[arg(long)]
        json: bool,
    },
    /// Simulate click counts from the configured true state
    Simulate(ConfigArgs),
    /// Sample the posterior under the reference prior
    Sample(ConfigArgs),
    /// Run the reference iteration and build the F-likelihood
    Marginal(ConfigArgs),
    /// Compute interval families, SCIs and the plausible interval
    Intervals(ConfigArgs),
    /// Run all missing stages and write the summary
    Report(ConfigArgs),
    /// Compare confidence and credible intervals for the first-failure model
    Jaynes {
        /// Observed failure times, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,

        #[arg(long, default_value_t = 1.0)]
        rate: f64,

        /// Coverage and credibility
        #[arg(long, default_value_t = 0.95)]
        level: f64,

        /// Coverage simulations per interval type
        #[arg(long, default_value_t = 0)]
        trials: u64,

        /// Write jaynes.json, jaynes.csv and jaynes.txt here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn pipeline(args: &ConfigArgs, seed: Option<u64>) -> Result<Pipeline, CliError> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    if let Some(dir) = &args.outputs {
        cfg.outputs = dir.clone();
    }
    Pipeline::new(cfg)
}

fn pom_info(scheme: &str, json: bool) -> Result<(), CliError> {
    let scheme: Scheme = scheme.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    let Some(pom) = scheme.pom() else {
        println!("{scheme}: {} outcomes on the bare probability simplex", scheme.outcomes());
        return Ok(());
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&pom.to_document())?);
        return Ok(());
    }
    let d = pom.dim();
    let span = CMatrix::from_fn(pom.len(), d * d, |k, j| pom.outcomes()[k][(j / d, j % d)]);
    let rank = span.rank(1e-10);
    println!("scheme       {scheme}");
    println!("outcomes     {}", pom.len());
    println!("dimension    {d}");
    println!("span rank    {rank} of {}{}", d * d, if rank == d * d { " (tomographically complete)" } else { "" });
    println!("\n{:<8}{:>10}", "label", "trace");
    for (label, m) in pom.labels().iter().zip(pom.outcomes()) {
        println!("{label:<8}{:>10.4}", m.trace().re);
    }
    Ok(())
}

fn jaynes(input: JaynesInput, out: Option<PathBuf>) -> Result<(), CliError> {
    let table = jaynes_table(input)?;
    let text = render_jaynes(&table);
    print!("{text}");
    if let Some(dir) = out {
        let hash = hex::encode(Sha256::digest(serde_json::to_vec(&table.input)?));
        let out = OutputDir::create(&dir, &hash)?;
        out.write_json("jaynes.json", "jaynes", &table)?;
        out.write_text("jaynes.txt", &text)?;
        let header = ["lower", "upper", "coverage"].map(String::from);
        // Rows in method order: ci_type1, ci_type2, sci_flat.
        let rows = table.rows.iter().map(|r| vec![r.lower, r.upper, r.coverage.unwrap_or(f64::NAN)]);
        out.write_table("jaynes.csv", &header, rows)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::PomInfo { scheme, json } => pom_info(&scheme, json),
        Command::Simulate(a) => {
            let c = pipeline(&a, seed)?.simulate()?;
            println!("counts {:?}", c.counts);
            Ok(())
        }
        Command::Sample(a) => {
            let s = pipeline(&a, seed)?.sample()?;
            println!("{} points written to sample.csv", s.len());
            Ok(())
        }
        Command::Marginal(a) => {
            let m = pipeline(&a, seed)?.marginal()?;
            let it = &m.iteration;
            println!("{} prior rounds (converged: {}), F_ML = {:.4}", it.trace.len(), it.converged, m.likelihood.argmax);
            Ok(())
        }
        Command::Intervals(a) => {
            let iv = pipeline(&a, seed)?.intervals()?;
            println!("lambda_crit = {:.4}", iv.family.lambda_crit_ratio);
            Ok(())
        }
        Command::Report(a) => {
            let p = pipeline(&a, seed)?;
            match p.report() {
                Ok(s) => {
                    print!("{}", render_summary(&s));
                    Ok(())
                }
                Err(e) => {
                    if let Ok(text) = std::fs::read_to_string(p.out.path("summary.txt")) {
                        print!("{text}");
                    }
                    Err(e)
                }
            }
        }
        Command::Jaynes { times, rate, level, trials, out } => {
            jaynes(JaynesInput { times, rate, level, trials, seed: seed.unwrap_or(0) }, out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
