//! Brownian target, first-passage Monte Carlo over disks and sectors, and the
//! beamwidth trap.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mc::{self, Rng};
use crate::phy::{self, RadioParams};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::f64::consts::PI;

/// Euler steps per squared boundary scale: σ_step = scale / 50.
pub const STEPS_PER_SCALE2: f64 = 2500.0;
/// Censoring horizon as a multiple of the analytic mean.
pub const CENSOR_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionParams {
    pub d: f64,
    pub dt: f64,
}

impl DiffusionParams {
    /// Default step for a zone of characteristic size `scale`.
    pub fn for_scale(d: f64, scale: f64) -> Self {
        Self { d, dt: max_dt(d, scale) }
    }

    pub fn sigma_step(&self) -> f64 {
        (2.0 * self.d * self.dt).sqrt()
    }

    pub fn check(&self, scale: f64) -> Result<()> {
        if !(self.d > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParam(format!("D = {}, dt = {}", self.d, self.dt)));
        }
        let required = max_dt(self.d, scale);
        if self.dt > required * (1.0 + 1e-12) {
            return Err(Error::StepTooCoarse { dt: self.dt, required });
        }
        Ok(())
    }
}

fn max_dt(d: f64, scale: f64) -> f64 {
    scale * scale / (2.0 * d * STEPS_PER_SCALE2)
}

/// Options shared by every walker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkOptions {
    /// Brownian-bridge test for crossings between grid times.
    pub bridge: bool,
}

impl Default for WalkOptions {
    fn default() -> Self {
        Self { bridge: true }
    }
}

/// A safe zone seen through its signed distance (positive inside).
pub trait Domain: Sync {
    fn signed_distance(&self, p: Point) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Domain for Disk {
    #[inline]
    fn signed_distance(&self, p: Point) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        self.radius - (dx * dx + dy * dy).sqrt()
    }
}

/// A = { r ≤ R_max, |φ| ≤ θ_m/2 } with apex at `center`, axis along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorZone {
    pub r_max: f64,
    pub theta_m: f64,
    pub center: Point,
}

impl SectorZone {
    pub fn new(r_max: f64, theta_m: f64, center: Point) -> Result<Self> {
        if !(r_max > 0.0 && theta_m > 0.0 && theta_m <= 2.0 * PI) {
            return Err(Error::InvalidParam(format!("sector R = {r_max}, θ = {theta_m}")));
        }
        Ok(Self { r_max, theta_m, center })
    }

    fn full(&self) -> bool {
        self.theta_m >= 2.0 * PI
    }

    /// Smallest of the radius, the radial gap and the angular half-width at `start`.
    pub fn scale(&self, start: Point) -> f64 {
        let x = start[0] - self.center[0];
        let y = start[1] - self.center[1];
        let r = (x * x + y * y).sqrt();
        let mut s = self.r_max.min(self.r_max - r);
        if !self.full() {
            s = s.min(r * (0.5 * self.theta_m).min(0.5 * PI).sin());
        }
        s.max(self.r_max * 1e-3)
    }
}

impl Domain for SectorZone {
    fn signed_distance(&self, p: Point) -> f64 {
        let x = p[0] - self.center[0];
        let y = p[1] - self.center[1];
        let r = (x * x + y * y).sqrt();
        let radial = self.r_max - r;
        if self.full() {
            return radial;
        }
        let half = 0.5 * self.theta_m;
        let phi = y.atan2(x).abs();
        // distance to the nearer bounding ray (the one at +half, by symmetry)
        let (c, s) = (half.cos(), half.sin());
        let py = y.abs();
        let along = x * c + py * s;
        let ray = if along >= 0.0 { (x * s - py * c).abs() } else { r };
        if phi <= half {
            radial.min(ray)
        } else if radial >= 0.0 {
            -ray
        } else {
            radial.min(-ray)
        }
    }
}

/// One exit time. Returns (time, censored).
pub fn first_exit<D: Domain + ?Sized>(
    domain: &D,
    start: Point,
    diff: DiffusionParams,
    t_max: f64,
    opts: WalkOptions,
    rng: &mut Rng,
) -> (f64, bool) {
    let sig = diff.sigma_step();
    let sig2 = sig * sig;
    let mut x = start;
    let mut d0 = domain.signed_distance(x);
    if d0 <= 0.0 {
        return (0.0, false);
    }
    let max_steps = (t_max / diff.dt).ceil() as u64;
    for n in 0..max_steps {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        x[0] += sig * z1;
        x[1] += sig * z2;
        let d1 = domain.signed_distance(x);
        let t = n as f64 * diff.dt;
        if d1 <= 0.0 {
            return (t + diff.dt * d0 / (d0 - d1), false);
        }
        if opts.bridge {
            let k = 2.0 * d0 * d1 / sig2;
            if k < 40.0 && rng.random::<f64>() < (-k).exp() {
                return (t + 0.5 * diff.dt, false);
            }
        }
        d0 = d1;
    }
    (t_max, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FptEnsemble {
    pub samples: Vec<f64>,
    pub censored: Vec<bool>,
    pub t_max: f64,
    pub mean: f64,
    pub std_error: f64,
    /// 1%, 10% and 50% quantiles
    pub quantiles: [f64; 3],
    pub n_censored: usize,
}

impl FptEnsemble {
    pub fn new(samples: Vec<f64>, censored: Vec<bool>, t_max: f64) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |p| mc::quantile_sorted(&sorted, p);
        Self {
            mean: mc::mean(&samples),
            std_error: mc::std_error(&samples),
            quantiles: [q(0.01), q(0.10), q(0.50)],
            n_censored: censored.iter().filter(|c| **c).count(),
            samples,
            censored,
            t_max,
        }
    }

    pub fn from_pairs(pairs: Vec<(f64, bool)>, t_max: f64) -> Self {
        let (s, c) = pairs.into_iter().unzip();
        Self::new(s, c, t_max)
    }

    /// Samples that ended in an actual exit.
    pub fn uncensored(&self) -> Vec<f64> {
        self.samples.iter().zip(&self.censored).filter(|(_, c)| !**c).map(|(s, _)| *s).collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.samples.len().max(1) as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Monte-Carlo exit times from any domain, trajectories in parallel.
pub fn simulate_fpt<D: Domain>(
    domain: &D,
    start: Point,
    diff: DiffusionParams,
    t_max: f64,
    n: usize,
    seed: u64,
    opts: WalkOptions,
) -> FptEnsemble {
    let pairs = mc::par_map(seed, n, |_, rng| first_exit(domain, start, diff, t_max, opts, rng));
    FptEnsemble::from_pairs(pairs, t_max)
}

#[allow(non_snake_case)]
pub fn simulate_fpt_disk(R: f64, start_radius: f64, diff: DiffusionParams, n: usize, seed: u64) -> Result<FptEnsemble> {
    simulate_fpt_disk_with(R, start_radius, diff, n, seed, WalkOptions::default())
}

#[allow(non_snake_case)]
pub fn simulate_fpt_disk_with(
    R: f64,
    start_radius: f64,
    diff: DiffusionParams,
    n: usize,
    seed: u64,
    opts: WalkOptions,
) -> Result<FptEnsemble> {
    if !(start_radius >= 0.0 && start_radius < R) {
        return Err(Error::InvalidParam(format!("start radius {start_radius} not in [0, {R})")));
    }
    diff.check(R)?;
    let t_max = CENSOR_FACTOR * mtlt_disk_analytic(R, diff.d);
    let disk = Disk { center: [0.0, 0.0], radius: R };
    Ok(simulate_fpt(&disk, [start_radius, 0.0], diff, t_max, n, seed, opts))
}

/// R² / 4D.
#[allow(non_snake_case)]
pub fn mtlt_disk_analytic(R: f64, d: f64) -> f64 {
    R * R / (4.0 * d)
}

/// Mean disk exit from radius r: (R² - r²) / 4D.
#[allow(non_snake_case)]
pub fn disk_exit_mean(R: f64, start_radius: f64, d: f64) -> f64 {
    (R * R - start_radius * start_radius) / (4.0 * d)
}

pub fn simulate_fpt_sector(zone: &SectorZone, start: Point, diff: DiffusionParams, n: usize, seed: u64) -> Result<FptEnsemble> {
    simulate_fpt_sector_with(zone, start, diff, n, seed, WalkOptions::default())
}

pub fn simulate_fpt_sector_with(
    zone: &SectorZone,
    start: Point,
    diff: DiffusionParams,
    n: usize,
    seed: u64,
    opts: WalkOptions,
) -> Result<FptEnsemble> {
    if zone.signed_distance(start) <= 0.0 {
        return Err(Error::InvalidParam("start outside the sector".into()));
    }
    diff.check(zone.scale(start))?;
    let t_max = CENSOR_FACTOR * mtlt_disk_analytic(zone.r_max, diff.d);
    Ok(simulate_fpt(zone, start, diff, t_max, n, seed, opts))
}

/// (1/2D) min((R_max - r0)², r0²(θ_m/2)²); zero once r0 ≥ R_max.
pub fn mtlt_bound_decoupled(r0: f64, r_max: f64, theta_m: f64, d: f64) -> f64 {
    if r0 >= r_max {
        return 0.0;
    }
    let radial = (r_max - r0).powi(2);
    let angular = (r0 * 0.5 * theta_m).powi(2);
    radial.min(angular) / (2.0 * d)
}

/// θ_crit = (2π / r0²) √(P_t σ / (γ_s 𝒩)); also returns θ_crit² in its own closed form.
pub fn theta_crit(r0: f64, radio: &RadioParams, noise: f64) -> (f64, f64) {
    let theta = 2.0 * PI / (r0 * r0) * (radio.p_t * radio.sigma / (radio.gamma_s * noise)).sqrt();
    let theta2 = 4.0 * PI * PI * radio.p_t * radio.sigma / (r0.powi(4) * radio.gamma_s * noise);
    (theta, theta2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamtrapPoint {
    pub theta: f64,
    pub r_max: f64,
    pub mtlt: f64,
    pub std_error: f64,
    pub bound: f64,
}

/// MTLT over a beamwidth grid with the mean-field range law at each θ.
#[allow(clippy::too_many_arguments)]
pub fn beamtrap_sweep(
    r0: f64,
    theta_grid: &[f64],
    radio: &RadioParams,
    density: f64,
    d: f64,
    n: usize,
    seed: u64,
    opts: WalkOptions,
) -> Result<Vec<BeamtrapPoint>> {
    if theta_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParam("theta grid must be ascending".into()));
    }
    let noise = phy::mean_field_noise(density, radio)?;
    theta_grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let r_max = phy::mean_field_range(theta, radio, noise);
            let bound = mtlt_bound_decoupled(r0, r_max, theta, d);
            if r0 >= r_max {
                return Ok(BeamtrapPoint { theta, r_max, mtlt: 0.0, std_error: 0.0, bound });
            }
            let zone = SectorZone::new(r_max, theta, [0.0, 0.0])?;
            let start = [r0, 0.0];
            let diff = DiffusionParams::for_scale(d, zone.scale(start));
            let ens = simulate_fpt_sector_with(&zone, start, diff, n, mc::derive_seed(seed, i as u64), opts)?;
            Ok(BeamtrapPoint { theta, r_max, mtlt: ens.mean, std_error: ens.std_error, bound })
        })
        .collect()
}
