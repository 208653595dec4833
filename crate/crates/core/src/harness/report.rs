//! Output directory layout.
//!
//! A comparison writes `density.csv` (theory), `empirical.csv`, `metrics.csv`, `config.toml`,
//! `summary.txt` and `plot.gp`, plus `corners.csv` when the limit is atomic. A convergence
//! study writes `convergence.csv` and one such directory per degree under `n_<N>/`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ensemble::FewnomialSystem;
use crate::error::{Error, Result};
use crate::harness::run::{ComparisonReport, ConvergenceStudy};
use crate::potential::legendre::write_corners_csv;
use crate::solver::ZeroSet;

fn write_file(
    path: PathBuf,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let wrap = |source| Error::Output {
        path: path.clone(),
        source,
    };
    let mut out = BufWriter::new(File::create(&path).map_err(wrap)?);
    body(&mut out).and_then(|_| out.flush()).map_err(wrap)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Output {
        path: dir.to_path_buf(),
        source,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.10e}"))
}

fn plot_script(m: usize) -> &'static str {
    if m == 1 {
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'rho'\nset ylabel 'density'\n\
         plot 'density.csv' using 1:2 with lines title 'theory', 'empirical.csv' using 1:2 with steps title 'empirical'\n"
    } else {
        "set datafile separator ','\nset key autotitle columnhead\nset view map\nset multiplot layout 1,2\n\
         splot 'density.csv' using 1:2:3 with points palette pt 5 title 'theory'\n\
         splot 'empirical.csv' using 1:2:3 with points palette pt 5 title 'empirical'\nunset multiplot\n"
    }
}

/// Writes one comparison into `dir`, creating it if needed.
pub fn emit_report(report: &ComparisonReport, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_file(dir.join("density.csv"), |o| {
        report.theory.density.write_csv(o)
    })?;
    write_file(dir.join("empirical.csv"), |o| report.empirical.write_csv(o))?;
    if let Some(c) = &report.theory.corners {
        write_file(dir.join("corners.csv"), |o| write_corners_csv(c, o))?;
    }
    let m = &report.metrics;
    write_file(dir.join("metrics.csv"), |o| {
        writeln!(o, "metric,value")?;
        writeln!(o, "n,{}", m.n)?;
        writeln!(o, "degree,{}", m.degree)?;
        writeln!(o, "systems,{}", report.empirical.systems)?;
        writeln!(o, "tv,{:.10e}", m.tv)?;
        writeln!(o, "w1,{}", fmt_opt(m.w1))?;
        writeln!(o, "theory_mass,{:.10e}", m.theory_mass)?;
        writeln!(o, "empirical_mass,{:.10e}", m.empirical_mass)?;
        writeln!(o, "empirical_se,{:.10e}", m.empirical_se)?;
        writeln!(o, "outside_mass,{:.10e}", m.outside_mass)?;
        writeln!(o, "failure_rate,{:.6}", m.failure_rate)?;
        writeln!(o, "mass_consistent,{}", m.mass_consistent)?;
        writeln!(o, "potential_error,{}", fmt_opt(m.potential_error))
    })?;
    let toml = report.config.to_toml_string()?;
    write_file(dir.join("config.toml"), |o| o.write_all(toml.as_bytes()))?;
    write_file(dir.join("summary.txt"), |o| {
        writeln!(o, "theory: {}", report.theory.description)?;
        writeln!(o, "seed: {}", report.config.ensemble.seed)?;
        writeln!(
            o,
            "commit: {}",
            option_env!("FEWLAB_COMMIT").unwrap_or("unknown")
        )?;
        writeln!(o, "wall_time_s: {:.3}", report.wall_time.as_secs_f64())?;
        writeln!(o, "failed: {}", report.failed)
    })?;
    write_file(dir.join("plot.gp"), |o| {
        o.write_all(plot_script(report.config.ensemble.m).as_bytes())
    })
}

/// Writes every degree of a study and the summary table.
pub fn emit_convergence(study: &ConvergenceStudy, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    for r in &study.reports {
        emit_report(r, &dir.join(format!("n_{}", r.metrics.n)))?;
    }
    write_file(dir.join("convergence.csv"), |o| {
        writeln!(
            o,
            "n,degree,tv,w1,potential_error,theory_mass,empirical_mass,empirical_se,failure_rate"
        )?;
        for r in &study.reports {
            let m = &r.metrics;
            writeln!(
                o,
                "{},{},{:.10e},{},{},{:.10e},{:.10e},{:.10e},{:.6}",
                m.n,
                m.degree,
                m.tv,
                fmt_opt(m.w1),
                fmt_opt(m.potential_error),
                m.theory_mass,
                m.empirical_mass,
                m.empirical_se,
                m.failure_rate
            )?;
        }
        writeln!(
            o,
            "# slope({}) = {}",
            study.slope_metric,
            fmt_opt(study.slope)
        )
    })
}

/// Sampled systems (one spectrum and coefficient line per equation) and their zeros,
/// one `zeros/NNNNN.csv` per solved system.
pub fn emit_samples(systems: &[FewnomialSystem], zero_sets: &[ZeroSet], dir: &Path) -> Result<()> {
    create_dir(&dir.join("zeros"))?;
    write_file(dir.join("systems.txt"), |o| {
        for (i, s) in systems.iter().enumerate() {
            writeln!(
                o,
                "system {i} weighting {} degree {}",
                s.weighting, s.degree
            )?;
            for eq in &s.equations {
                writeln!(o, "spectrum {}", eq.spectrum)?;
                let cs: Vec<String> = eq
                    .coeffs
                    .iter()
                    .map(|c| format!("{:.16e}{:+.16e}i", c.re, c.im))
                    .collect();
                writeln!(o, "coeffs {}", cs.join(" "))?;
            }
        }
        Ok(())
    })?;
    for zs in zero_sets {
        write_file(
            dir.join("zeros").join(format!("{:05}.csv", zs.system_id)),
            |o| zs.write_csv(o),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{convergence_study, run_experiment, sample_and_solve, ExperimentConfig};

    const CFG: &str = "[ensemble]\nkind = \"kac\"\nm = 1\nf = 3\nn = 20\nsystems = 3\n";

    #[test]
    fn report_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_experiment(&ExperimentConfig::from_toml_str(CFG).unwrap()).unwrap();
        emit_report(&r, dir.path()).unwrap();
        for f in [
            "density.csv",
            "empirical.csv",
            "corners.csv",
            "metrics.csv",
            "config.toml",
            "summary.txt",
            "plot.gp",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let echoed = fs::read_to_string(dir.path().join("config.toml")).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&echoed).unwrap(), r.config);
    }

    #[test]
    fn samples_and_convergence_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_toml_str(CFG).unwrap();
        let (systems, results) = sample_and_solve(&cfg, 0, 20).unwrap();
        let zs: Vec<ZeroSet> = results.into_iter().map(|r| r.unwrap()).collect();
        emit_samples(&systems, &zs, dir.path()).unwrap();
        assert!(dir.path().join("zeros/00002.csv").exists());
        let text = fs::read_to_string(dir.path().join("systems.txt")).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("system ")).count(), 3);

        let cfg = ExperimentConfig::from_toml_str(&CFG.replace("n = 20", "n_list = [10, 20, 30]"))
            .unwrap();
        let study = convergence_study(&cfg).unwrap();
        emit_convergence(&study, dir.path()).unwrap();
        assert!(dir.path().join("n_30/metrics.csv").exists());
        assert_eq!(
            fs::read_to_string(dir.path().join("convergence.csv"))
                .unwrap()
                .lines()
                .count(),
            5
        );
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let r = run_experiment(&ExperimentConfig::from_toml_str(CFG).unwrap()).unwrap();
        let err = emit_report(&r, &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("sub"), "{err}");
    }
}
