//! Beam model, SINCR, interference and clutter functionals, coverage and
//! the maximum safe tracking range.

pub mod quad;
pub mod special;

use crate::error::{Error, Result};
use crate::geometry::{dist2, Point, PointSet};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::Serialize;
use std::f64::consts::PI;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamPattern {
    pub theta_m: f64,
    pub zeta: f64,
    pub g_m: f64,
    pub g_s: f64,
}

impl BeamPattern {
    /// Main-lobe probability θ_m / 2π.
    pub fn p(&self) -> f64 {
        self.theta_m / (2.0 * PI)
    }

    pub fn gains(&self) -> GainPairDistribution {
        let p = self.p();
        GainPairDistribution {
            atoms: [
                (self.g_m * self.g_m, p * p),
                (self.g_m * self.g_s, 2.0 * p * (1.0 - p)),
                (self.g_s * self.g_s, (1.0 - p) * (1.0 - p)),
            ],
        }
    }

    /// One-way gain for a uniformly oriented beam.
    pub fn sample_gain<R: Rng>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.p() {
            self.g_m
        } else {
            self.g_s
        }
    }
}

pub fn make_beam(theta_m: f64, zeta: f64) -> Result<BeamPattern> {
    if !(theta_m > 0.0 && theta_m <= 2.0 * PI) {
        return Err(Error::InvalidParam(format!("theta_m = {theta_m} outside (0, 2π]")));
    }
    if !(0.0..1.0).contains(&zeta) {
        return Err(Error::InvalidParam(format!("zeta = {zeta} outside [0, 1)")));
    }
    let g_m = 2.0 * PI / (theta_m + zeta * (2.0 * PI - theta_m));
    Ok(BeamPattern { theta_m, zeta, g_m, g_s: zeta * g_m })
}

/// Beamwidth that gives main-lobe gain `g_m` at side-lobe ratio `zeta`.
pub fn beamwidth_for_gain(g_m: f64, zeta: f64) -> Result<f64> {
    // 2π/G = θ(1-ζ) + 2πζ
    let theta = 2.0 * PI * (1.0 / g_m - zeta) / (1.0 - zeta);
    if !(theta > 0.0) {
        return Err(Error::InvalidParam(format!("gain {g_m} unreachable at zeta {zeta}")));
    }
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainPairDistribution {
    /// (coupled gain G_tx·G_rx, probability)
    pub atoms: [(f64, f64); 3],
}

impl GainPairDistribution {
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(g, w)| g * w).sum()
    }
}

/// (p G_m + (1-p) G_s)², identically one for an energy-conserving beam.
pub fn mean_coupled_gain(beam: &BeamPattern) -> f64 {
    let p = beam.p();
    let g = p * beam.g_m + (1.0 - p) * beam.g_s;
    g * g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadioParams {
    /// transmit power, W
    pub p_t: f64,
    /// target RCS, m²
    pub sigma: f64,
    /// detection threshold, linear
    pub gamma_s: f64,
    /// noise power, W
    pub w0: f64,
    /// blockage rate, 1/m
    pub beta: f64,
    /// BS hard-core spacing, m
    pub d_min_b: f64,
    /// clutter density, 1/m²
    pub lambda_c: f64,
    pub alpha_c: f64,
    pub g_c: f64,
    pub sigma_c: f64,
    /// minimum target range guard, m
    pub r_min: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            p_t: dbm_to_watt(46.0),
            sigma: 1.0,
            gamma_s: db_to_linear(5.0),
            // -174 dBm/Hz + 80 dB (100 MHz) + 9 dB noise figure
            w0: dbm_to_watt(-174.0 + 80.0 + 9.0),
            beta: 1e-2,
            d_min_b: 50.0,
            lambda_c: 1e-4,
            alpha_c: 3.5,
            g_c: 1.0,
            sigma_c: 1e-4,
            r_min: 10.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("p_t", self.p_t),
            ("sigma", self.sigma),
            ("gamma_s", self.gamma_s),
            ("beta", self.beta),
            ("g_c", self.g_c),
        ];
        for (name, v) in pos {
            if !(v > 0.0) {
                return Err(Error::InvalidParam(format!("{name} = {v} must be positive")));
            }
        }
        let nonneg = [
            ("w0", self.w0),
            ("d_min_b", self.d_min_b),
            ("lambda_c", self.lambda_c),
            ("sigma_c", self.sigma_c),
            ("r_min", self.r_min),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(Error::InvalidParam(format!("{name} = {v} must be non-negative")));
            }
        }
        if self.alpha_c <= 2.0 {
            return Err(Error::DivergentClutter(self.alpha_c));
        }
        Ok(())
    }
}

/// How the coverage probability treats the interference gains and which
/// impairments it keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverageModel {
    pub gains: GainModel,
    pub clutter: bool,
    pub noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainModel {
    /// Three-atom expectation over the coupled gain.
    Exact,
    /// Mean coupled gain Ḡ = 1 inside the kernel (approximation).
    MeanGain,
}

impl CoverageModel {
    pub const FULL: Self = Self { gains: GainModel::Exact, clutter: true, noise: true };
    /// Interference only, mean-gain kernel: the blockage-dominated law.
    pub const INTERFERENCE_LIMITED: Self = Self { gains: GainModel::MeanGain, clutter: false, noise: false };
}

/// 𝓘(β, a) = ∫_{d_min}^∞ a v e^{-βv} / (v² + a) dv.
pub fn interference_integral(beta: f64, a: f64, d_min: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    // e^{-βv} < 1e-12 beyond v*
    let v_star = (1e12f64.ln() / beta).max(d_min);
    if v_star <= d_min {
        return 0.0;
    }
    let lo = if d_min > 0.0 { d_min } else { 1e-9 * a.sqrt().min(1.0 / beta) };
    // integrate over u = ln v; the integrand spans many decades
    let f = |u: f64| {
        let v = u.exp();
        a * v * v * (-beta * v).exp() / (v * v + a)
    };
    quad::integrate(f, lo.ln(), v_star.ln(), 1e-11, 0.0)
}

fn laplace_exponent(s: f64, radio: &RadioParams, density: f64, gains: &GainPairDistribution, model: GainModel) -> f64 {
    if s <= 0.0 || density <= 0.0 {
        return 0.0;
    }
    let e = match model {
        GainModel::Exact => gains
            .atoms
            .iter()
            .map(|(g, w)| w * interference_integral(radio.beta, s * radio.p_t * g, radio.d_min_b))
            .sum(),
        GainModel::MeanGain => gains.mean() * interference_integral(radio.beta, s * radio.p_t * gains.mean(), radio.d_min_b),
    };
    2.0 * PI * density * e
}

/// Laplace transform of the BS-to-BS interference at `s`.
pub fn cli_laplace(s: f64, radio: &RadioParams, density: f64, gains: &GainPairDistribution) -> f64 {
    (-laplace_exponent(s, radio, density, gains, GainModel::Exact)).exp()
}

/// Mean-gain form of the interference Laplace transform (approximation).
pub fn cli_laplace_mean_gain(s: f64, radio: &RadioParams, density: f64, gains: &GainPairDistribution) -> f64 {
    (-laplace_exponent(s, radio, density, gains, GainModel::MeanGain)).exp()
}

/// Laplace transform of the aggregate clutter return.
pub fn clutter_laplace(s: f64, radio: &RadioParams) -> Result<f64> {
    let a = radio.alpha_c;
    if a <= 2.0 {
        return Err(Error::DivergentClutter(a));
    }
    if s <= 0.0 || radio.lambda_c <= 0.0 {
        return Ok(1.0);
    }
    let d = 2.0 / a;
    let k = PI * radio.lambda_c * special::gamma(1.0 + d) * special::gamma(1.0 - d);
    Ok((-k * (s * radio.p_t * radio.g_c * radio.sigma_c).powf(d)).exp())
}

/// E[I_dir] = 2πλ P_t Ḡ E1(β d_min).
pub fn mean_cli(density: f64, radio: &RadioParams, gains: &GainPairDistribution) -> Result<f64> {
    if radio.d_min_b <= 0.0 {
        return Err(Error::DivergentMean);
    }
    if density <= 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * PI * density * radio.p_t * gains.mean() * special::e1(radio.beta * radio.d_min_b)?)
}

/// Mean clutter power with the r_min guard, 2πλ_c P_t G_c σ_c r_min^{2-α}/(α-2).
pub fn mean_clutter(radio: &RadioParams) -> Result<f64> {
    if radio.alpha_c <= 2.0 {
        return Err(Error::DivergentClutter(radio.alpha_c));
    }
    if radio.lambda_c <= 0.0 {
        return Ok(0.0);
    }
    if radio.r_min <= 0.0 {
        return Err(Error::DivergentMean);
    }
    let a = radio.alpha_c;
    Ok(2.0 * PI * radio.lambda_c * radio.p_t * radio.g_c * radio.sigma_c * radio.r_min.powf(2.0 - a) / (a - 2.0))
}

/// Mean-field disturbance 𝒩 = E[I_dir] + E[C] + W0 (with Ḡ = 1).
pub fn mean_field_noise(density: f64, radio: &RadioParams) -> Result<f64> {
    let unit = GainPairDistribution { atoms: [(1.0, 1.0), (0.0, 0.0), (0.0, 0.0)] };
    Ok(mean_cli(density, radio, &unit)? + mean_clutter(radio)? + radio.w0)
}

/// The `s` of the coverage expression at range r0.
pub fn coverage_s(r0: f64, radio: &RadioParams, beam: &BeamPattern) -> f64 {
    radio.gamma_s * r0.powi(4) / (radio.p_t * beam.g_m * beam.g_m * radio.sigma)
}

pub fn coverage_probability(r0: f64, density: f64, radio: &RadioParams, beam: &BeamPattern) -> Result<f64> {
    coverage_probability_with(r0, density, radio, beam, CoverageModel::FULL)
}

pub fn coverage_probability_with(
    r0: f64,
    density: f64,
    radio: &RadioParams,
    beam: &BeamPattern,
    model: CoverageModel,
) -> Result<f64> {
    let s = coverage_s(r0, radio, beam);
    let mut log_p = -laplace_exponent(s, radio, density, &beam.gains(), model.gains);
    if model.noise {
        log_p -= s * radio.w0;
    }
    if model.clutter {
        log_p += clutter_laplace(s, radio)?.ln();
    }
    Ok(log_p.exp())
}

const RANGE_LO: f64 = 1.0;
const RANGE_HI: f64 = 1e5;

/// R_max,1: root of P_cov(R) = 1 - ε0 by bisection in log R.
pub fn max_safe_range(epsilon_0: f64, density: f64, radio: &RadioParams, beam: &BeamPattern) -> Result<f64> {
    max_safe_range_with(epsilon_0, density, radio, beam, CoverageModel::FULL)
}

pub fn max_safe_range_with(
    epsilon_0: f64,
    density: f64,
    radio: &RadioParams,
    beam: &BeamPattern,
    model: CoverageModel,
) -> Result<f64> {
    if !(epsilon_0 > 0.0 && epsilon_0 < 1.0) {
        return Err(Error::InvalidParam(format!("epsilon_0 = {epsilon_0}")));
    }
    let target = 1.0 - epsilon_0;
    let p = |r: f64| coverage_probability_with(r, density, radio, beam, model);
    let p_lo = p(RANGE_LO)?;
    if p_lo < target {
        return Err(Error::InfeasibleOutage(p_lo));
    }
    if p(RANGE_HI)? >= target {
        return Err(Error::RangeUnbounded(RANGE_HI));
    }
    let (mut lo, mut hi) = (RANGE_LO.ln(), RANGE_HI.ln());
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if p(mid.exp())? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Mean-field range law R⁴ = P_t G_m² σ / (γ_s 𝒩) with G_m ≈ 2π/θ.
pub fn mean_field_range(theta_m: f64, radio: &RadioParams, noise: f64) -> f64 {
    let g = 2.0 * PI / theta_m;
    (radio.p_t * g * g * radio.sigma / (radio.gamma_s * noise)).powf(0.25)
}

/// Clutter scatterers are drawn in a disk of this radius around the sensing BS.
pub const CLUTTER_RADIUS: f64 = 200.0;

/// One SINCR draw for the target at `target` sensed by BS `serving`.
///
/// Echo and every interferer carry unit-mean exponential fading; beam
/// orientations are uniform; interferers survive LoS thinning with
/// probability e^{-βv}. Clutter is a fresh HPPP around the sensing BS.
pub fn sample_sincr<R: Rng>(
    realization: &PointSet,
    serving: usize,
    target: Point,
    radio: &RadioParams,
    beam: &BeamPattern,
    rng: &mut R,
) -> Result<f64> {
    let b0 = realization.points[serving];
    let r0 = dist2(b0, target).sqrt();
    if r0 < radio.r_min {
        return Err(Error::Collocated(r0));
    }
    let h0: f64 = Exp1.sample(rng);
    let signal = radio.p_t * beam.g_m * beam.g_m * radio.sigma * h0 / r0.powi(4);
    let mut interference = 0.0;
    for (j, b) in realization.points.iter().enumerate() {
        if j == serving {
            continue;
        }
        let v = dist2(*b, b0).sqrt();
        if rng.random::<f64>() >= (-radio.beta * v).exp() {
            continue;
        }
        let g = beam.sample_gain(rng) * beam.sample_gain(rng);
        let h: f64 = Exp1.sample(rng);
        interference += radio.p_t * g * h / (v * v);
    }
    let clutter = sample_clutter(radio, rng);
    Ok(signal / (interference + clutter + radio.w0))
}

/// Aggregate clutter return from an HPPP of scatterers around the origin.
pub fn sample_clutter<R: Rng>(radio: &RadioParams, rng: &mut R) -> f64 {
    let mean = radio.lambda_c * PI * CLUTTER_RADIUS * CLUTTER_RADIUS;
    if mean <= 0.0 {
        return 0.0;
    }
    let n = Poisson::new(mean).unwrap().sample(rng) as usize;
    let mut c = 0.0;
    for _ in 0..n {
        let r = CLUTTER_RADIUS * rng.random::<f64>().sqrt();
        let g: f64 = Exp1.sample(rng);
        c += radio.p_t * radio.g_c * radio.sigma_c * g * r.powf(-radio.alpha_c);
    }
    c
}
