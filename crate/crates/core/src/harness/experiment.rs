//! Repeated episodes, summaries and output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::episode::{Experiment, Trajectory};
use super::fit::{default_window, fit_loglog, fit_regret_exponent};
use crate::error::Result;
use crate::policy::PolicyKind;

pub const CSV_HEADER: &str = "rep,t,action,inst_regret,cum_regret,info_gain,ratio";

/// `printf("%.9g")` formatting.
pub fn format_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub game: String,
    pub policy: PolicyKind,
    pub horizon: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub delta: f64,
    /// Mean and standard deviation of the cumulative regret at n/4, n/2, n.
    pub checkpoints: Vec<Checkpoint>,
    pub mean_final_regret: f64,
    /// Plays of every action, summed over repetitions.
    pub action_counts: Vec<usize>,
    pub fallback_rounds: usize,
    /// Log-log slope of the mean regret over `[n/2, n]`, when defined.
    pub regret_exponent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: Summary,
    pub trajectories: Vec<Trajectory>,
    /// Mean cumulative regret over repetitions, indexed by `t - 1`.
    pub mean_cum_regret: Vec<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ExperimentResult {
    fn new(exp: &Experiment, trajectories: Vec<Trajectory>) -> Self {
        let cfg = &exp.config;
        let n = cfg.horizon;
        let mut mean_cum_regret = vec![0.0; n];
        for traj in &trajectories {
            for (m, r) in mean_cum_regret.iter_mut().zip(&traj.rounds) {
                *m += r.cum_regret;
            }
        }
        for m in &mut mean_cum_regret {
            *m /= trajectories.len() as f64;
        }
        let mut checkpoints = Vec::new();
        for t in [(n / 4).max(1), (n / 2).max(1), n] {
            if checkpoints.last().is_some_and(|c: &Checkpoint| c.t == t) {
                continue;
            }
            let at: Vec<f64> = trajectories
                .iter()
                .map(|tr| tr.rounds[t - 1].cum_regret)
                .collect();
            let (mean, std) = mean_std(&at);
            checkpoints.push(Checkpoint { t, mean, std });
        }
        let mut action_counts = vec![0; exp.num_actions()];
        for traj in &trajectories {
            for r in &traj.rounds {
                action_counts[r.action] += 1;
            }
        }
        let regret_exponent = if n >= 4 {
            fit_regret_exponent(&mean_cum_regret, default_window(n)).ok()
        } else {
            None
        };
        let summary = Summary {
            game: exp.game_name(),
            policy: cfg.policy,
            horizon: n,
            reps: cfg.reps,
            base_seed: cfg.base_seed,
            delta: exp.policy().delta,
            mean_final_regret: mean_cum_regret[n - 1],
            checkpoints,
            action_counts,
            fallback_rounds: trajectories.iter().map(Trajectory::fallback_count).sum(),
            regret_exponent,
        };
        Self {
            summary,
            trajectories,
            mean_cum_regret,
        }
    }

    /// Writes `rounds.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_csv(&dir.join("rounds.csv"), &self.trajectories)?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&self.summary)? + "\n",
        )?;
        Ok(())
    }
}

pub fn write_csv(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for traj in trajectories {
        for r in &traj.rounds {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                traj.rep,
                r.t,
                r.action,
                format_g9(r.inst_regret),
                format_g9(r.cum_regret),
                format_g9(r.info_gain),
                format_g9(r.ratio)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Runs all repetitions in parallel, merged in repetition order. Output
/// files are written when the config names an output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let exp = Experiment::new(config.clone())?;
    let trajectories = (0..config.reps)
        .into_par_iter()
        .map(|rep| exp.run_episode(rep))
        .collect::<Result<Vec<_>>>()?;
    let result = ExperimentResult::new(&exp, trajectories);
    if let Some(dir) = &config.out_path {
        result.write(Path::new(dir))?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub horizons: Vec<usize>,
    pub summaries: Vec<Summary>,
    /// Log-log slope of the mean final regret against the horizon.
    pub exponent: Option<f64>,
}

/// Runs the experiment once per horizon. With an output directory, each
/// horizon goes to `h<n>/` and the sweep summary to `sweep_summary.json`.
pub fn run_sweep(config: &ExperimentConfig, horizons: &[usize]) -> Result<SweepSummary> {
    let mut summaries = Vec::new();
    for &n in horizons {
        let mut cfg = config.with_horizon(n);
        cfg.out_path = config.out_path.as_ref().map(|dir| {
            Path::new(dir)
                .join(format!("h{n}"))
                .to_string_lossy()
                .into_owned()
        });
        summaries.push(run_experiment(&cfg)?.summary);
    }
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| (s.horizon as f64, s.mean_final_regret))
        .collect();
    let sweep = SweepSummary {
        horizons: horizons.to_vec(),
        exponent: fit_loglog(&points).ok(),
        summaries,
    };
    if let Some(dir) = &config.out_path {
        fs::create_dir_all(dir)?;
        fs::write(
            Path::new(dir).join("sweep_summary.json"),
            serde_json::to_string_pretty(&sweep)? + "\n",
        )?;
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (999999999.5, "1e+09"),
            (f64::INFINITY, "inf"),
            (1e-300, "1e-300"),
            (42.0, "42"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g9(x), s, "{x}");
        }
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
