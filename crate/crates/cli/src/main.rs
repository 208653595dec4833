use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fewnomial::harness::kernel_check::{stirling_bounds, uniform_table};
use fewnomial::harness::{
    convergence_study, emit_convergence, emit_report, emit_samples, run_experiment,
    sample_and_solve, theory, ExperimentConfig,
};
use fewnomial::potential::legendre::write_corners_csv;
use fewnomial::Error;

/// Zero statistics of random fewnomial systems.
#[derive(Parser, Debug)]
#[command(name = "fewlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample systems and write them with their zeros.
    Sample,
    /// Compute the limiting density only.
    Density,
    /// Sample, solve and compare against the limit.
    Compare,
    /// Check the monomial mass bounds and the uniform kernel limit.
    KernelCheck,
    /// Compare at every degree of the list and fit the decay rate.
    Convergence,
}

enum Failure {
    Config(String),
    Breach(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) => Failure::Config(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::from_path(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = cli.seed {
        cfg.ensemble.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write(
    path: &Path,
    body: impl FnOnce(&mut std::fs::File) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let ctx = |e: std::io::Error| Failure::Other(format!("cannot write {}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(ctx)?;
    }
    let mut f = std::fs::File::create(path).map_err(ctx)?;
    body(&mut f).map_err(ctx)
}

fn kernel_check(dir: &Path) -> Result<(), Failure> {
    let mut lines = vec!["check,m,n,value,bound,pass".to_string()];
    let mut ok = true;
    for m in [1, 2] {
        for n in [20, 100, 500] {
            let c = stirling_bounds(m, n)?;
            println!(
                "stirling m={m} N={n}: {} evaluations, margins lower {:.4} upper {:.4} (C' = {:.4}) {}",
                c.evaluations,
                c.lower_margin,
                c.upper_margin,
                c.c_prime,
                if c.passed() { "PASS" } else { "FAIL" }
            );
            ok &= c.passed();
            lines.push(format!(
                "stirling,{m},{n},{},{},{}",
                c.lower_margin.min(c.upper_margin),
                c.c_prime,
                c.passed()
            ));
        }
    }
    let rows = uniform_table(
        &[vec![0], vec![1], vec![2]],
        2,
        &[25, 50, 100, 200, 400],
        (-5.0, 5.0),
        200,
    )?;
    for (i, r) in rows.iter().enumerate() {
        let pass = r.error <= r.bound && (i == 0 || r.error < rows[i - 1].error);
        println!(
            "uniform N={}: sup error {:.3e}, envelope {:.3e} {}",
            r.n,
            r.error,
            r.bound,
            if pass { "PASS" } else { "FAIL" }
        );
        ok &= pass;
        lines.push(format!("uniform,1,{},{},{},{pass}", r.n, r.error, r.bound));
    }
    write(&dir.join("kernel_check.csv"), |f| {
        writeln!(f, "{}", lines.join("\n"))
    })?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Other("kernel checks failed".into()))
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Command::KernelCheck = cli.command {
        let cfg = cli.config.as_ref().map(|_| load(cli)).transpose()?;
        return kernel_check(&out_dir(cli, cfg.as_ref()));
    }
    let cfg = load(cli)?;
    let dir = out_dir(cli, Some(&cfg));
    match cli.command {
        Command::Sample => {
            let n = cfg.degrees()[0];
            let (systems, results) = sample_and_solve(&cfg, 0, n)?;
            let total = results.len();
            let zero_sets: Vec<_> = results
                .into_iter()
                .filter_map(|r| r.map_err(|e| log::warn!("solve failed: {e}")).ok())
                .collect();
            emit_samples(&systems, &zero_sets, &dir)?;
            println!(
                "wrote {} systems ({} solved) to {}",
                systems.len(),
                zero_sets.len(),
                dir.display()
            );
            let rate = (total - zero_sets.len()) as f64 / total.max(1) as f64;
            if rate > fewnomial::solver::zeros::MAX_FAILURE_RATE {
                return Err(Failure::Breach(format!("solver failure rate {rate:.3}")));
            }
        }
        Command::Density => {
            let t = theory(&cfg)?;
            write(&dir.join("density.csv"), |f| t.density.write_csv(f))?;
            if let Some(c) = &t.corners {
                write(&dir.join("corners.csv"), |f| write_corners_csv(c, f))?;
            }
            println!("{}: total mass {:.6}", t.description, t.density.total_mass);
        }
        Command::Compare => {
            let r = run_experiment(&cfg)?;
            emit_report(&r, &dir)?;
            let m = &r.metrics;
            println!(
                "N={} tv={:.4} theory_mass={:.4} empirical_mass={:.4}+-{:.4} failure_rate={:.3}",
                m.n, m.tv, m.theory_mass, m.empirical_mass, m.empirical_se, m.failure_rate
            );
            if r.failed {
                return Err(Failure::Breach(format!(
                    "solver failure rate {:.3}",
                    m.failure_rate
                )));
            }
        }
        Command::Convergence => {
            let s = convergence_study(&cfg)?;
            emit_convergence(&s, &dir)?;
            for r in &s.reports {
                let m = &r.metrics;
                println!(
                    "N={} tv={:.4} potential_error={:?}",
                    m.n, m.tv, m.potential_error
                );
            }
            println!("slope of {}: {:?}", s.slope_metric, s.slope);
            if let Some(r) = s.reports.iter().find(|r| r.failed) {
                return Err(Failure::Breach(format!(
                    "solver failure rate {:.3} at N={}",
                    r.metrics.failure_rate, r.metrics.n
                )));
            }
        }
        Command::KernelCheck => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Breach(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
