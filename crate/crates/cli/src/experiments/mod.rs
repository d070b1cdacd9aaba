//! Experiment drivers, one per subcommand.

mod beamtrap;
mod capacity;
mod coop;
mod dynamic;
mod heavytail;
mod pareto;
mod plan;
mod single;

use crate::config::Scenario;
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::mc;

pub use beamtrap::beamtrap_scenarios;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Experiment {
    MtltSingle,
    MtltCoop,
    Heavytail,
    Beamtrap,
    CapacityStatic,
    Pareto,
    MtltDyn,
    CapacityCompare,
    Plan,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::MtltSingle,
        Experiment::MtltCoop,
        Experiment::Heavytail,
        Experiment::Beamtrap,
        Experiment::CapacityStatic,
        Experiment::Pareto,
        Experiment::MtltDyn,
        Experiment::CapacityCompare,
        Experiment::Plan,
        Experiment::Validate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::MtltSingle => "mtlt-single",
            Experiment::MtltCoop => "mtlt-coop",
            Experiment::Heavytail => "heavytail",
            Experiment::Beamtrap => "beamtrap",
            Experiment::CapacityStatic => "capacity-static",
            Experiment::Pareto => "pareto",
            Experiment::MtltDyn => "mtlt-dyn",
            Experiment::CapacityCompare => "capacity-compare",
            Experiment::Plan => "plan",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// config trajectory / realisation counts (10⁴ × 20 by default)
    Desk,
    /// 2·10⁵ trajectories over 200 realisations
    Paper,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub experiment: Experiment,
    pub scenario: Scenario,
    pub seed: u64,
    pub scale: Scale,
}

impl RunSpec {
    pub fn new(experiment: Experiment, scenario: Scenario) -> Self {
        let seed = scenario.seed;
        Self { experiment, scenario, seed, scale: Scale::Desk }
    }

    pub fn n_trajectories(&self) -> usize {
        match self.scale {
            Scale::Desk => self.scenario.n_trajectories,
            Scale::Paper => 200_000,
        }
    }

    pub fn n_realizations(&self) -> usize {
        match self.scale {
            Scale::Desk => self.scenario.n_realizations,
            Scale::Paper => 200,
        }
    }

    /// Independent seed for sub-task `tag`.
    pub fn seed_for(&self, tag: u64) -> u64 {
        mc::derive_seed(self.seed, tag)
    }
}

/// Runs one experiment. Infeasible grid points become rows with a non-"ok"
/// status; only configuration-level failures are returned as errors.
pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    if spec.n_trajectories() < 1000 {
        eprintln!("warning: {} trajectories per point is below 10^3; estimates will be noisy", spec.n_trajectories());
    }
    let mut table = match spec.experiment {
        Experiment::MtltSingle => single::run(spec)?,
        Experiment::MtltCoop => coop::run(spec)?,
        Experiment::Heavytail => heavytail::run(spec)?,
        Experiment::Beamtrap => beamtrap::run(spec)?,
        Experiment::CapacityStatic => capacity::run_static(spec)?,
        Experiment::Pareto => pareto::run(spec)?,
        Experiment::MtltDyn => dynamic::run(spec)?,
        Experiment::CapacityCompare => capacity::run_compare(spec)?,
        Experiment::Plan => plan::run(spec)?,
        Experiment::Validate => crate::validate::run(spec)?,
    };
    table.meta("seed", spec.seed);
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("scale", if spec.scale == Scale::Paper { "paper" } else { "desk" });
    table.meta("n_trajectories", spec.n_trajectories());
    table.meta("n_realizations", spec.n_realizations());
    for (k, v) in spec.scenario.raw.entries() {
        table.meta(&format!("config.{k}"), v);
    }
    Ok(table)
}

/// Log-spaced grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let mut g: Vec<f64> = (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Least-squares slope of ln y against ln x over the finite positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    mc::linear_fit(&lx, &ly).0
}

fn status<T>(r: &isactrack::Result<T>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1.0, 1000.0, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[6] - 1000.0).abs() < 1e-9);
        assert!((g[2] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn slope_of_power_law() {
        let x = log_grid(1.0, 100.0, 5);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y) + 0.5).abs() < 1e-12);
    }
}
