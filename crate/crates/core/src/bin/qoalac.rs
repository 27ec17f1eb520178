use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qoalac::compiler::{compile, parse_pipeline};
use qoalac::experiments::{
    build_run, formula_report, run_sweep, write_csv, Config, ScenarioKind, ScenarioSpec, SweepParam, DEFAULT_SEEDS,
};
use qoalac::ir::{parse_programs, validate, write_programs};
use qoalac::runtime::derive_seed;
use qoalac::TimingParams;

#[derive(Parser)]
#[command(name = "qoalac", version, about = "Compile and simulate hybrid quantum network programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile programs in the text IR format.
    Compile {
        /// Pass or `+`-separated pipeline, e.g. `hybrid+block-coop:8`.
        #[arg(long)]
        strategy: String,
        /// Gate bound for a bare `block-coop`.
        #[arg(long)]
        n: Option<u32>,
        /// Multiplier for a bare `deadline-coop`.
        #[arg(long)]
        m: Option<u32>,
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario sweep and write aggregated metrics as CSV.
    Simulate {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        c: Option<usize>,
        /// Use the scenario's second compilation choice.
        #[arg(long)]
        treatment: bool,
        /// `role=pipeline` with role one of server, c1, local. Repeatable.
        #[arg(long)]
        strategy: Vec<String>,
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Seed count or a file with one seed per line.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the JSON-lines trace of the first run.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Evaluate the link and latency formulas.
    Formulas {
        /// Exit with failure if any value is outside its tolerance.
        #[arg(long)]
        check: bool,
    },
}

fn fill_parameters(strategy: &str, n: Option<u32>, m: Option<u32>) -> String {
    strategy
        .split('+')
        .map(|s| {
            let s = s.trim();
            match (s, n, m) {
                ("block-coop" | "coop" | "cooperative", Some(n), _) => format!("{s}:{n}"),
                ("deadline-coop", _, Some(m)) => format!("{s}:{m}"),
                _ => s.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join("+")
}

fn parse_seed(s: &str) -> Result<u64> {
    let s = s.trim();
    Ok(match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16)?,
        None => s.parse()?,
    })
}

fn load_seeds(arg: &str) -> Result<Vec<u64>> {
    if let Ok(k) = arg.parse::<usize>() {
        return Ok((0..k)
            .map(|i| DEFAULT_SEEDS.get(i).copied().unwrap_or_else(|| derive_seed(0x5eed, i as u64)))
            .collect());
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading seeds from {arg}"))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(parse_seed).collect()
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Compile { strategy, n, m, input, out } => {
            let pipeline = parse_pipeline(&fill_parameters(&strategy, n, m))?;
            let src = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let programs = parse_programs(&src)?;
            let mut compiled = Vec::new();
            for p in &programs {
                let report = validate(p);
                if !report.is_ok() {
                    bail!("program `{}` is invalid: {report}", p.name);
                }
                compiled.push(compile(p, &pipeline, &TimingParams::default())?);
            }
            output(out.as_ref())?.write_all(write_programs(&compiled).as_bytes())?;
            Ok(true)
        }
        Cmd::Simulate { scenario, n, c, treatment, strategy, sweep, values, seeds, runs, config, out, trace_out } => {
            let mut spec = match (&config, &scenario) {
                (Some(path), _) => {
                    let mut cfg = Config::load(path)?;
                    if let Some(s) = &scenario {
                        cfg.scenario.kind = Some(s.parse()?);
                    }
                    if let Some(n) = n {
                        cfg.scenario.n = n;
                    }
                    if let Some(c) = c {
                        cfg.scenario.c = c;
                    }
                    cfg.scenario.treatment |= treatment;
                    cfg.scenario()?
                }
                (None, Some(s)) => {
                    let kind: ScenarioKind = s.parse()?;
                    let c = c.unwrap_or(if matches!(kind, ScenarioKind::Rotation | ScenarioKind::Bqc) { 1 } else { 2 });
                    ScenarioSpec::paper(kind, n.unwrap_or(3), c, treatment)
                }
                (None, None) => bail!("either --scenario or --config is required"),
            };
            for s in &strategy {
                spec.pipelines.set(s)?;
            }
            if let Some(s) = sweep {
                spec.sweep = s.parse::<SweepParam>()?;
            }
            if let Some(v) = values {
                spec.values = v;
            }
            if let Some(s) = seeds {
                spec.seeds = load_seeds(&s)?;
            }
            if let Some(r) = runs {
                spec.runs_per_seed = r;
            }
            spec.validate()?;
            if let Some(path) = trace_out {
                let seed = derive_seed(spec.seeds[0], 0);
                let setup = build_run(&spec, spec.values[0], seed)?;
                let trace = setup.simulate(derive_seed(seed, 1), true)?;
                trace.write_jsonl(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?)?;
            }
            let result = run_sweep(&spec)?;
            write_csv(&[result], output(out.as_ref())?)?;
            Ok(true)
        }
        Cmd::Formulas { check } => {
            let mut all = true;
            for l in formula_report() {
                let ok = l.ok();
                all &= ok;
                println!(
                    "{:<36} {:>14.9} {:<3} reference {:>12.7} tolerance {:>5.1}%  {}",
                    l.name,
                    l.value,
                    l.unit,
                    l.reference,
                    l.tolerance * 100.0,
                    if ok { "ok" } else { "MISMATCH" }
                );
            }
            Ok(all || !check)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
