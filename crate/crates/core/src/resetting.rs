//! Dynamic clustering as diffusion with Poisson resetting to the cluster centre.

use crate::error::{Error, Result};
use crate::kinematics::{self, DiffusionParams, FptEnsemble, WalkOptions, CENSOR_FACTOR};
use crate::mc::{self, Rng};
use crate::phy::special;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;
use std::f64::consts::PI;

/// Below this Bessel argument the quotient (I0(x) - 1)/ν is summed as a series.
pub const SERIES_ARGUMENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HandoverParams {
    /// handover rate, 1/s
    pub nu_h: f64,
    /// overhead per handover, s
    pub tau_ho: f64,
    /// hardware ceiling on the handover rate, 1/s (may be infinite)
    pub nu_h_max: f64,
}

impl HandoverParams {
    pub fn new(nu_h: f64, tau_ho: f64, nu_h_max: f64) -> Result<Self> {
        if !(nu_h >= 0.0 && tau_ho >= 0.0 && nu_h <= nu_h_max) {
            return Err(Error::InvalidParam(format!("nu_h={nu_h}, tau_ho={tau_ho}, nu_h_max={nu_h_max}")));
        }
        Ok(Self { nu_h, tau_ho, nu_h_max })
    }
}

impl Default for HandoverParams {
    fn default() -> Self {
        Self { nu_h: 0.0, tau_ho: 0.05, nu_h_max: f64::INFINITY }
    }
}

/// Mean exit time from a disk of radius R with resetting at rate ν:
/// (1/ν)[I0(R√(ν/D)) - 1], continuous at ν = 0 where it equals R²/4D.
#[allow(non_snake_case)]
pub fn mtlt_dynamic(R: f64, d: f64, nu_h: f64) -> f64 {
    let x = R * (nu_h / d).sqrt();
    if x < SERIES_ARGUMENT {
        // (R²/4D) Σ_{k≥1} (x²/4)^{k-1} / (k!)²
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 2..10 {
            term *= q / ((k * k) as f64);
            sum += term;
        }
        return R * R / (4.0 * d) * sum;
    }
    (special::i0(x) - 1.0) / nu_h
}

/// Large-argument form e^x / (ν √(2πx)).
#[allow(non_snake_case)]
pub fn mtlt_dynamic_asymptotic(R: f64, d: f64, nu_h: f64) -> f64 {
    let x = R * (nu_h / d).sqrt();
    x.exp() / (nu_h * (2.0 * PI * x).sqrt())
}

/// r_K = √(K / πλ).
pub fn footprint_radius(k: f64, density: f64) -> f64 {
    (k / (PI * density)).sqrt()
}

/// ν_c = πλD / K, where the Bessel argument at the footprint equals one.
pub fn nu_crossover(k: f64, density: f64, d: f64) -> f64 {
    PI * density * d / k
}

/// ν_min ≈ (πλD/K) ln²(K*_static / K).
pub fn nu_min(k: f64, density: f64, d: f64, k_star_static: f64) -> Result<f64> {
    if k_star_static <= k {
        return Err(Error::StaticSufficient);
    }
    Ok(nu_crossover(k, density, d) * (k_star_static / k).ln().powi(2))
}

/// Handover rate at which `mtlt_dynamic` equals `tau_req`, by bisection in ln ν.
#[allow(non_snake_case)]
pub fn nu_required(R: f64, d: f64, tau_req: f64) -> Result<f64> {
    if !(R > 0.0 && d > 0.0 && tau_req > 0.0) {
        return Err(Error::InvalidParam(format!("R={R}, d={d}, tau_req={tau_req}")));
    }
    if tau_req <= static_limit(R, d) {
        return Err(Error::StaticSufficient);
    }
    let nu_c = d / (R * R);
    let (mut lo, mut hi) = (nu_c.ln() - 30.0, nu_c.ln());
    while mtlt_dynamic(R, d, hi.exp()) < tau_req {
        lo = hi;
        hi += 2.0;
        if hi > nu_c.ln() + 1e4f64.ln() * 2.0 + 20.0 {
            return Err(Error::Infeasible(format!("tau_req={tau_req} beyond reach")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mtlt_dynamic(R, d, mid.exp()) < tau_req {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(hi.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hysteresis {
    /// Δr* = [√(πλ) ln(K*/K)]^{-1}, m
    pub margin: f64,
    /// D / Δr*², 1/s
    pub nu_eff: f64,
    /// margin whose D/Δr² equals ν_min(K) exactly: √K · Δr*
    pub margin_matched: f64,
}

/// Hysteresis margin for a drop/add rule, with the handover rate it implies.
///
/// The published margin drops the 1/K of ν_min, so D/Δr*² = K·ν_min(K); it
/// agrees with ν_min only at K = 1. `margin_matched` restores the factor.
pub fn hysteresis_margin(density: f64, k: f64, k_star_static: f64, d: f64) -> Result<Hysteresis> {
    if k_star_static <= k {
        return Err(Error::StaticSufficient);
    }
    let margin = 1.0 / ((PI * density).sqrt() * (k_star_static / k).ln());
    Ok(Hysteresis { margin, nu_eff: d / (margin * margin), margin_matched: k.sqrt() * margin })
}

fn exp1(rng: &mut Rng) -> f64 {
    Exp1.sample(rng)
}

/// Exit time of one resetting walker from the disk B(0, R).
#[allow(non_snake_case)]
fn resetting_exit(R: f64, nu: f64, diff: DiffusionParams, t_max: f64, opts: WalkOptions, rng: &mut Rng) -> (f64, bool) {
    let mut x = [0.0f64, 0.0f64];
    let mut d0 = R;
    let mut t = 0.0;
    let mut next_reset = if nu > 0.0 { exp1(rng) / nu } else { f64::INFINITY };
    let mut n_steps = 0u64;
    loop {
        if t >= t_max {
            return (t_max, true);
        }
        let full = t + diff.dt <= next_reset;
        let h = if full { diff.dt } else { next_reset - t };
        let sig = (2.0 * diff.d * h).sqrt();
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        x[0] += sig * z1;
        x[1] += sig * z2;
        let d1 = R - (x[0] * x[0] + x[1] * x[1]).sqrt();
        if d1 <= 0.0 {
            return (t + h * d0 / (d0 - d1), false);
        }
        if opts.bridge && sig > 0.0 {
            let k = 2.0 * d0 * d1 / (sig * sig);
            if k < 40.0 && rng.random::<f64>() < (-k).exp() {
                return (t + 0.5 * h, false);
            }
        }
        if full {
            n_steps += 1;
            // grid times stay exact between resets
            t = if next_reset.is_finite() { t + diff.dt } else { n_steps as f64 * diff.dt };
            d0 = d1;
        } else {
            t = next_reset;
            x = [0.0, 0.0];
            d0 = R;
            next_reset = t + exp1(rng) / nu;
        }
    }
}

/// Resetting Monte Carlo validating the Bessel closed form.
#[allow(non_snake_case)]
pub fn simulate_resetting_fpt(
    R: f64,
    d: f64,
    nu_h: f64,
    diff: DiffusionParams,
    n: usize,
    seed: u64,
    opts: WalkOptions,
) -> Result<FptEnsemble> {
    if !(nu_h >= 0.0) || diff.d != d {
        return Err(Error::InvalidParam(format!("nu_h = {nu_h}, D = {d} vs {}", diff.d)));
    }
    diff.check(R)?;
    let t_max = CENSOR_FACTOR * mtlt_dynamic(R, d, nu_h);
    let pairs = mc::par_map(seed, n, |_, rng| resetting_exit(R, nu_h, diff, t_max, opts, rng));
    Ok(FptEnsemble::from_pairs(pairs, t_max))
}

/// Resetting walker with default step and options.
#[allow(non_snake_case)]
pub fn simulate_resetting_default(R: f64, d: f64, nu_h: f64, n: usize, seed: u64) -> Result<FptEnsemble> {
    simulate_resetting_fpt(R, d, nu_h, DiffusionParams::for_scale(d, R), n, seed, WalkOptions::default())
}

/// Static value the dynamic curve must recover as ν → 0.
#[allow(non_snake_case)]
pub fn static_limit(R: f64, d: f64) -> f64 {
    kinematics::mtlt_disk_analytic(R, d)
}
