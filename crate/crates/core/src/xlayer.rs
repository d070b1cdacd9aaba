//! Cross-layer planning: traffic, blocking, QoS inversion, optimal cluster
//! size, capacity ceilings and the three-stage Pareto sweep.

use crate::error::{Error, Result};
use crate::geometry::{self, Regime, Region, C_STAR};
use crate::kinematics;
use crate::mc;
use crate::phy::{self, special, RadioParams};
use crate::resetting::{self, HandoverParams};
use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use std::f64::consts::PI;

/// M/M/∞ target traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrafficParams {
    /// arrival rate, 1/(s·m²)
    pub lambda_a: f64,
    /// sojourn rate, 1/s
    pub mu_sj: f64,
    /// steady-state target density, 1/m²
    pub lambda_t: f64,
}

impl TrafficParams {
    pub fn from_density(lambda_t: f64, mu_sj: f64) -> Result<Self> {
        if !(lambda_t >= 0.0 && mu_sj > 0.0) {
            return Err(Error::InvalidParam(format!("lambda_T={lambda_t}, mu_sj={mu_sj}")));
        }
        Ok(Self { lambda_a: lambda_t * mu_sj, mu_sj, lambda_t })
    }

    pub fn from_arrivals(lambda_a: f64, mu_sj: f64) -> Result<Self> {
        if !(mu_sj > 0.0) {
            return Err(Error::InvalidParam(format!("mu_sj={mu_sj}")));
        }
        Self::from_density(lambda_a / mu_sj, mu_sj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QosParams {
    pub eta: f64,
    pub eps_micro: f64,
    pub eps_macro: f64,
    pub eps_rel: f64,
    pub p_link: f64,
}

impl Default for QosParams {
    fn default() -> Self {
        Self { eta: 0.3, eps_micro: 1e-2, eps_macro: 0.05, eps_rel: 1e-3, p_link: 0.9 }
    }
}

impl QosParams {
    pub fn validate(&self) -> Result<()> {
        let open = [("eps_micro", self.eps_micro), ("eps_macro", self.eps_macro), ("eps_rel", self.eps_rel)];
        for (name, v) in open {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParam(format!("{name} = {v} not in (0, 1]")));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParam(format!("eta = {} not in (0, 1]", self.eta)));
        }
        if !(self.p_link > 0.0 && self.p_link <= 1.0) {
            return Err(Error::InvalidParam(format!("p_link = {} not in (0, 1]", self.p_link)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceParams {
    pub rho_0: f64,
    pub rho_max: f64,
    /// bandwidth, Hz
    pub bandwidth: f64,
}

impl Default for ResourceParams {
    fn default() -> Self {
        Self { rho_0: 0.01, rho_max: 0.10, bandwidth: 1e8 }
    }
}

impl ResourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_0 > 0.0 && self.rho_0 <= self.rho_max && self.rho_max <= 1.0) {
            return Err(Error::InvalidParam(format!("rho_0={}, rho_max={}", self.rho_0, self.rho_max)));
        }
        if self.m_max() < 1 {
            return Err(Error::InvalidParam("M_max < 1".into()));
        }
        Ok(())
    }

    /// ⌊ρ_max/ρ0⌋, guarded against ρ_max/ρ0 landing a rounding error below an integer.
    pub fn m_max(&self) -> u64 {
        m_max(self.rho_max, self.rho_0)
    }
}

fn m_max(rho_max: f64, rho_0: f64) -> u64 {
    let r = rho_max / rho_0;
    let n = r.round();
    if (r - n).abs() < 1e-9 * n.max(1.0) {
        n as u64
    } else {
        r.floor() as u64
    }
}

/// MTLT target from the exponential-tail inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauReq {
    /// -(η/μ)/ln(1-ε), s
    pub exact: f64,
    /// η/(μ ε), s
    pub small_eps: f64,
}

pub fn tau_req(qos: &QosParams, traffic: &TrafficParams) -> TauReq {
    let t = qos.eta / traffic.mu_sj;
    let exact = if qos.eps_micro >= 1.0 { 0.0 } else { -t / (-qos.eps_micro).ln_1p() };
    TauReq { exact, small_eps: t / qos.eps_micro }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KStar {
    pub k: u64,
    /// -4πηλD / (μ ln(1-ε))
    pub pre_ceiling: f64,
    /// 4πηλD / (μ ε)
    pub pre_ceiling_small_eps: f64,
}

pub fn k_star_static(density: f64, d: f64, qos: &QosParams, traffic: &TrafficParams) -> KStar {
    let tau = tau_req(qos, traffic);
    let scale = 4.0 * PI * density * d;
    let pre = scale * tau.exact;
    KStar { k: (pre.ceil() as u64).max(1), pre_ceiling: pre, pre_ceiling_small_eps: scale * tau.small_eps }
}

/// Mean per-BS cooperation load K λ_T / λ_b.
pub fn mean_load(k: f64, traffic: &TrafficParams, density: f64) -> f64 {
    k * traffic.lambda_t / density
}

/// P(N > M_max) for N ~ Poisson(K λ_T / λ_b).
pub fn blocking_probability(resources: &ResourceParams, k: f64, traffic: &TrafficParams, density: f64) -> f64 {
    blocking_at(resources.m_max(), mean_load(k, traffic, density))
}

pub fn blocking_at(m_max: u64, mean: f64) -> f64 {
    special::poisson_sf_sum(m_max, mean)
}

/// Largest ρ0 with P_block ≤ ε_macro. P_block depends on ρ0 only through
/// M = ⌊ρ_max/ρ0⌋, so the answer is ρ_max / M for the smallest admissible M.
pub fn invert_rho0(eps_macro: f64, k: f64, traffic: &TrafficParams, density: f64, rho_max: f64) -> Result<f64> {
    if !(eps_macro > 0.0) || !(rho_max > 0.0) || !(density > 0.0) {
        return Err(Error::InvalidParam(format!("eps_macro={eps_macro}, rho_max={rho_max}, density={density}")));
    }
    let mean = mean_load(k, traffic, density);
    Ok(rho_max / smallest_m(eps_macro, mean)? as f64)
}

/// Smallest M ≥ 1 with P(Poisson(mean) > M) ≤ ε.
pub fn smallest_m(eps: f64, mean: f64) -> Result<u64> {
    const M_CAP: u64 = 1 << 20;
    if blocking_at(1, mean) <= eps {
        return Ok(1);
    }
    let mut hi = 2u64;
    while blocking_at(hi, mean) > eps {
        hi *= 2;
        if hi > M_CAP {
            return Err(Error::Infeasible(format!("blocking {eps} unreachable at mean load {mean}")));
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if blocking_at(mid, mean) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// c = ((M+1)! ε)^{1/(M+1)} / M.
pub fn tail_correction(m_max: u64, eps_macro: f64) -> Result<f64> {
    if m_max == 0 || !(eps_macro > 0.0) {
        return Err(Error::InvalidParam(format!("M_max={m_max}, eps_macro={eps_macro}")));
    }
    let n = (m_max + 1) as f64;
    Ok(((special::ln_gamma(n + 1.0) + eps_macro.ln()) / n).exp() / m_max as f64)
}

/// Largest Poisson mean whose tail above M stays within ε (the strict per-BS load).
pub fn strict_mean_load(m_max: u64, eps: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, m_max as f64 + 1.0);
    while blocking_at(m_max, hi) <= eps {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if blocking_at(m_max, mid) <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// ⌈ln ε_rel / ln(1 - p_link)⌉.
pub fn k_rel(p_link: f64, eps_rel: f64) -> Result<u64> {
    if !(p_link > 0.0 && p_link < 1.0 && eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(Error::InvalidParam(format!("p_link={p_link}, eps_rel={eps_rel}")));
    }
    let r = eps_rel.ln() / (1.0 - p_link).ln();
    // exact ratios such as ln 0.01 / ln 0.01 must not round up
    let k = if (r - r.round()).abs() < 1e-12 * r.abs().max(1.0) { r.round() } else { r.ceil() };
    Ok((k as u64).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityStatic {
    pub regime: Regime,
    /// mean-load ceiling, exact ln(1-ε), 1/m²
    pub lambda_t_max: f64,
    /// same with the small-ε form
    pub lambda_t_max_small_eps: f64,
    /// λ_T ceiling times the Poisson-tail correction
    pub lambda_t_max_strict: f64,
    /// μ λ_T^max, 1/(s·m²)
    pub lambda_a_max: f64,
    /// ρ_max λ_b / (ρ0 max(K*, k_floor)) with the real-valued K*; equals
    /// `lambda_t_max` whenever K* exceeds the floor
    pub lambda_t_max_floored: f64,
    pub tail_correction: f64,
    pub k_star: KStar,
}

/// Phase-conditioned capacity ceiling. Super-critical applies when the
/// network percolates (always, if `r_max1` is None) and K* > 1.
pub fn capacity_static(
    density: f64,
    d: f64,
    qos: &QosParams,
    traffic: &TrafficParams,
    resources: &ResourceParams,
    r_max1: Option<f64>,
    k_floor: f64,
) -> Result<CapacityStatic> {
    qos.validate()?;
    resources.validate()?;
    if !(density > 0.0 && d > 0.0) {
        return Err(Error::InvalidParam(format!("density={density}, D={d}")));
    }
    let ks = k_star_static(density, d, qos, traffic);
    let percolates = r_max1.is_none_or(|r| geometry::percolation_parameter(density, r).1 == Regime::Supercritical);
    let c = tail_correction(resources.m_max(), qos.eps_macro)?;
    let ratio = resources.rho_max / resources.rho_0;
    let (regime, lt, lt_small) = if percolates && ks.k > 1 {
        let mu = traffic.mu_sj;
        let exact = -ratio * mu * (-qos.eps_micro).ln_1p() / (4.0 * PI * d * qos.eta);
        let small = ratio * mu * qos.eps_micro / (4.0 * PI * d * qos.eta);
        (Regime::Supercritical, exact, small)
    } else {
        (Regime::Subcritical, ratio * density, ratio * density)
    };
    Ok(CapacityStatic {
        regime,
        lambda_t_max: lt,
        lambda_t_max_small_eps: lt_small,
        lambda_t_max_strict: c * lt,
        lambda_a_max: traffic.mu_sj * lt,
        lambda_t_max_floored: ratio * density / ks.pre_ceiling.max(k_floor).max(1.0),
        tail_correction: c,
        k_star: ks,
    })
}

/// BS density at which the real-valued K*_static equals `k`.
pub fn crossover_density_static(k: f64, d: f64, qos: &QosParams, traffic: &TrafficParams) -> f64 {
    let tau = tau_req(qos, traffic).exact;
    k / (4.0 * PI * d * tau)
}

/// ρ0 (1 + ν_h τ_ho).
pub fn rho_eff(rho_0: f64, handover: &HandoverParams) -> f64 {
    rho_0 * (1.0 + handover.nu_h * handover.tau_ho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynRegime {
    HandoverRich,
    MidBudget,
    HandoverStarved,
    SubcriticalSingleBs,
}

impl DynRegime {
    pub fn label(&self) -> &'static str {
        match self {
            DynRegime::HandoverRich => "handover-rich",
            DynRegime::MidBudget => "mid-budget",
            DynRegime::HandoverStarved => "handover-starved",
            DynRegime::SubcriticalSingleBs => "subcritical-single-bs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanningResult {
    pub k_star: u64,
    pub nu_h_star: f64,
    pub rho0_star: Option<f64>,
    pub theta_m_star: Option<f64>,
    pub regime: DynRegime,
    pub k_star_static: KStar,
    pub k_rel: u64,
    /// π λ D ln²(K*_static) / ν_max, before the reliability floor
    pub k_min: f64,
    /// ν_min(1) and the Bessel crossover π λ D / K*_static bounding the regimes
    pub nu_min_single: f64,
    pub nu_low: f64,
    pub capacity_static: f64,
    pub capacity_dynamic: f64,
    /// the kinematic target is already met at K_rel without handover
    pub auto_met: bool,
    /// K* λ_T ρ_eff / (λ_b ρ_max) ≤ 1 (equivalently K* λ_T / λ_b ≤ M_max at ν = 0)
    pub resource_feasible: bool,
    /// sub-critical only: R_max,1²/4D ≥ τ_req
    pub kinematic_feasible: bool,
}

/// Three-regime dynamic optimum (K*, ν_h*). With `r_max1` given and Q ≤ c*
/// the network does not percolate and the single-BS branch is returned.
pub fn optimum_dynamic(
    density: f64,
    d: f64,
    qos: &QosParams,
    traffic: &TrafficParams,
    resources: &ResourceParams,
    handover: &HandoverParams,
    r_max1: Option<f64>,
) -> Result<PlanningResult> {
    qos.validate()?;
    resources.validate()?;
    if !(density > 0.0 && d > 0.0) || !(handover.nu_h_max >= 0.0) {
        return Err(Error::InvalidParam(format!("density={density}, D={d}, nu_max={}", handover.nu_h_max)));
    }
    let ks = k_star_static(density, d, qos, traffic);
    let krel = k_rel(qos.p_link, qos.eps_rel).unwrap_or(1);
    let base = PI * density * d;
    let kpre = ks.pre_ceiling;
    let nu_min_single = if kpre > 1.0 { base * kpre.ln().powi(2) } else { 0.0 };
    let nu_low = base / kpre;
    let nu_max = handover.nu_h_max;
    let k_min = if nu_max > 0.0 { base * kpre.max(1.0).ln().powi(2) / nu_max } else { f64::INFINITY };
    let tau = tau_req(qos, traffic).exact;

    let subcritical = r_max1.map(|r| geometry::percolation_parameter(density, r).1 == Regime::Subcritical);
    let (regime, k, nu, kin_ok) = if subcritical == Some(true) {
        let r = r_max1.unwrap();
        (DynRegime::SubcriticalSingleBs, krel.max(1), 0.0, r * r / (4.0 * d) >= tau)
    } else if nu_max >= nu_min_single {
        let k = krel.max(1);
        let nu = if kpre <= k as f64 { 0.0 } else { resetting::nu_min(k as f64, density, d, kpre)? };
        (DynRegime::HandoverRich, k, nu, true)
    } else if nu_max > nu_low {
        let k = (k_min.ceil() as u64).clamp(1, ks.k).max(krel);
        let nu = if kpre <= k as f64 { 0.0 } else { nu_max };
        (DynRegime::MidBudget, k, nu, true)
    } else {
        (DynRegime::HandoverStarved, ks.k.max(krel), 0.0, true)
    };
    let auto_met = kpre <= krel as f64;
    let ho = HandoverParams { nu_h: nu, ..*handover };
    let load = k as f64 * traffic.lambda_t * rho_eff(resources.rho_0, &ho) / density;
    let stat = capacity_static(density, d, qos, traffic, resources, r_max1, krel as f64)?;
    let dynamic = capacity_dynamic(density, d, qos, traffic, resources, handover)?;
    Ok(PlanningResult {
        k_star: k,
        nu_h_star: nu,
        rho0_star: invert_rho0(qos.eps_macro, k as f64, traffic, density, resources.rho_max).ok(),
        theta_m_star: None,
        regime,
        k_star_static: ks,
        k_rel: krel,
        k_min,
        nu_min_single,
        nu_low,
        capacity_static: stat.lambda_t_max_floored,
        capacity_dynamic: dynamic.lambda_t_max,
        auto_met,
        resource_feasible: load <= resources.rho_max * (1.0 + 1e-12),
        kinematic_feasible: kin_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityDynamic {
    /// 1/m²
    pub lambda_t_max: f64,
    /// π λ D τ_ho ln²(K*_static/K_rel), zero once K*_static ≤ K_rel
    pub overhead: f64,
    /// overhead / K_rel
    pub overhead_fraction: f64,
}

/// ρ_max λ_b / (ρ0 [K_rel + π λ_b D τ_ho ln²(K*_static/K_rel)]).
pub fn capacity_dynamic(
    density: f64,
    d: f64,
    qos: &QosParams,
    traffic: &TrafficParams,
    resources: &ResourceParams,
    handover: &HandoverParams,
) -> Result<CapacityDynamic> {
    let krel = k_rel(qos.p_link, qos.eps_rel)? as f64;
    let ks = k_star_static(density, d, qos, traffic).pre_ceiling;
    let overhead = if ks <= krel { 0.0 } else { PI * density * d * handover.tau_ho * (ks / krel).ln().powi(2) };
    Ok(CapacityDynamic {
        lambda_t_max: resources.rho_max * density / (resources.rho_0 * (krel + overhead)),
        overhead,
        overhead_fraction: overhead / krel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Crossover {
    /// 1/m²
    At(f64),
    /// the overhead never reaches K_rel inside the search bracket
    NeverSaturates,
}

pub const CROSSOVER_BRACKET_KM2: (f64, f64) = (1.0, 1e8);

/// Root of K_rel = π λ D τ_ho ln²(K*_static(λ)/K_rel) by bisection in ln λ,
/// searched above the static crossover where the log argument exceeds one.
pub fn crossover_density_dynamic(
    d: f64,
    qos: &QosParams,
    traffic: &TrafficParams,
    handover: &HandoverParams,
    k_rel: f64,
) -> Result<Crossover> {
    if !(d > 0.0 && k_rel >= 1.0) {
        return Err(Error::InvalidParam(format!("D={d}, K_rel={k_rel}")));
    }
    let f = |lam: f64| {
        let ks = k_star_static(lam, d, qos, traffic).pre_ceiling;
        let oh = if ks <= k_rel { 0.0 } else { PI * lam * d * handover.tau_ho * (ks / k_rel).ln().powi(2) };
        oh - k_rel
    };
    let lo_bound = (CROSSOVER_BRACKET_KM2.0 * 1e-6).max(crossover_density_static(k_rel, d, qos, traffic));
    let hi_bound = CROSSOVER_BRACKET_KM2.1 * 1e-6;
    if handover.tau_ho <= 0.0 || f(hi_bound) < 0.0 {
        return Ok(Crossover::NeverSaturates);
    }
    let (mut lo, mut hi) = (lo_bound.ln(), hi_bound.ln());
    if f(lo.exp()) >= 0.0 {
        return Ok(Crossover::At(lo.exp()));
    }
    // 1% relative in λ
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossover::At((0.5 * (lo + hi)).exp()))
}

/// UE-rate surrogate R̄(θ) = log2(1 + SNR0 / (1 + κ ζ (2π − θ) λ_b A_ref)).
/// A stand-in with tunable constants; only its monotonicity is relied upon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSurrogate {
    pub snr0: f64,
    pub kappa: f64,
    pub zeta: f64,
    /// reference area turning λ_b into a count, m²
    pub area_ref: f64,
}

impl Default for RateSurrogate {
    fn default() -> Self {
        Self { snr0: 100.0, kappa: 1.0, zeta: 1e-4, area_ref: 1e6 }
    }
}

impl RateSurrogate {
    pub fn rate(&self, theta_m: f64, density: f64) -> f64 {
        let leak = self.kappa * self.zeta * (2.0 * PI - theta_m).max(0.0) * density * self.area_ref;
        (1.0 + self.snr0 / (1.0 + leak)).log2()
    }
}

/// B (1 − N̄ρ0) R̄(θ) with N̄ = Kλ_T/λ_b.
pub fn comm_capacity_surrogate(
    rho_0: f64,
    theta_m: f64,
    k: f64,
    traffic: &TrafficParams,
    density: f64,
    resources: &ResourceParams,
    rate: &RateSurrogate,
) -> Result<f64> {
    let load = mean_load(k, traffic, density) * rho_0;
    if load >= 1.0 {
        return Err(Error::ResourceSaturated(load));
    }
    Ok(resources.bandwidth * (1.0 - load) * rate.rate(theta_m, density))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamLimits {
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for BeamLimits {
    fn default() -> Self {
        Self { theta_min: 1f64.to_radians(), theta_max: 120f64.to_radians() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoInputs {
    pub density: f64,
    pub traffic: TrafficParams,
    pub qos: QosParams,
    pub resources: ResourceParams,
    pub radio: RadioParams,
    pub rate: RateSurrogate,
    pub beams: BeamLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoRow {
    pub eta: f64,
    pub d: f64,
    pub tau_req: f64,
    pub k_star: u64,
    pub theta_m_star: f64,
    /// λ_b π R(θ*)² with the mean-field range
    pub q: f64,
    pub supercritical: bool,
    pub rho0_star: f64,
    pub rho0_feasible: bool,
    /// Ĉ at the configured ρ0, bit/s
    pub c_hat: f64,
    /// B R̄(θ_max) − Ĉ: capacity given up to sensing, bit/s
    pub c_cost: f64,
}

/// Stage (i) K*, stage (ii) θ* = min(θ_max, θ_crit(r_K*), argmax R̄),
/// stage (iii) ρ0* from the blocking inversion; Ĉ at each (η, D).
pub fn pareto_sweep(eta_grid: &[f64], d_set: &[f64], p: &ParetoInputs) -> Result<Vec<ParetoRow>> {
    if eta_grid.is_empty() || d_set.is_empty() {
        return Err(Error::InvalidParam("empty Pareto grid".into()));
    }
    let noise = phy::mean_field_noise(p.density, &p.radio)?;
    let c_free = p.resources.bandwidth * p.rate.rate(p.beams.theta_max, p.density);
    let mut rows = Vec::new();
    for &d in d_set {
        for &eta in eta_grid {
            let qos = QosParams { eta, ..p.qos };
            qos.validate()?;
            let tau = tau_req(&qos, &p.traffic).exact;
            let ks = k_star_static(p.density, d, &qos, &p.traffic);
            let rk = resetting::footprint_radius(ks.k as f64, p.density);
            let (theta_crit, _) = kinematics::theta_crit(rk, &p.radio, noise);
            // the surrogate rate rises with θ, so its argmax is θ_max
            let theta = p.beams.theta_max.min(theta_crit).max(p.beams.theta_min);
            let range = phy::mean_field_range(theta, &p.radio, noise);
            let (q, regime) = geometry::percolation_parameter(p.density, range);
            let rho0 = invert_rho0(qos.eps_macro, ks.k as f64, &p.traffic, p.density, p.resources.rho_max);
            let c_hat = comm_capacity_surrogate(
                p.resources.rho_0,
                theta,
                ks.k as f64,
                &p.traffic,
                p.density,
                &p.resources,
                &p.rate,
            )?;
            rows.push(ParetoRow {
                eta,
                d,
                tau_req: tau,
                k_star: ks.k,
                theta_m_star: theta,
                q,
                supercritical: regime == Regime::Supercritical,
                rho0_star: *rho0.as_ref().unwrap_or(&f64::NAN),
                rho0_feasible: rho0.is_ok(),
                c_hat,
                c_cost: c_free - c_hat,
            });
        }
    }
    Ok(rows)
}

/// How cooperators are assigned in the load simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Marking {
    /// each target marks K distinct BSs uniformly at random
    Random,
    /// each target's K nearest BSs (loads read from the central BSs only)
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadStats {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// fraction of BS loads above M_max
    pub blocking: f64,
}

/// Per-BS cooperation counts with targets as a PPP of density λ_T.
#[allow(clippy::too_many_arguments)]
pub fn simulate_load(
    density: f64,
    lambda_t: f64,
    k: usize,
    m_max: u64,
    side: f64,
    n_realizations: usize,
    marking: Marking,
    seed: u64,
) -> Result<LoadStats> {
    let region = Region::square(side);
    let per: Vec<Result<Vec<u32>>> = mc::par_map(seed, n_realizations, |_, rng| {
        let bs = geometry::sample_hppp_with(density, region, rng);
        if bs.len() < k {
            return Err(Error::InsufficientPoints { need: k, have: bs.len() });
        }
        let mut load = vec![0u32; bs.len()];
        match marking {
            Marking::Random => {
                let mean = lambda_t * region.area();
                let n_t = if mean > 0.0 { Poisson::new(mean).unwrap().sample(rng) as usize } else { 0 };
                for _ in 0..n_t {
                    for i in rand::seq::index::sample(rng, bs.len(), k) {
                        load[i] += 1;
                    }
                }
                Ok(load)
            }
            Marking::Nearest => {
                let targets = geometry::sample_hppp_with(lambda_t, region, rng);
                let index = geometry::knn_index(&bs);
                for t in &targets.points {
                    for i in geometry::knn_with(&bs, Some(&index), *t, k)?.indices {
                        load[i] += 1;
                    }
                }
                let margin = 2.0 * resetting::footprint_radius(k as f64, density);
                Ok(load
                    .into_iter()
                    .zip(&bs.points)
                    .filter(|(_, p)| region.edge_distance(**p) > margin)
                    .map(|(l, _)| l)
                    .collect())
            }
        }
    });
    let mut loads = Vec::new();
    for r in per {
        loads.extend(r?.into_iter().map(f64::from));
    }
    if loads.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, have: 0 });
    }
    let blocked = loads.iter().filter(|l| **l > m_max as f64).count();
    Ok(LoadStats {
        samples: loads.len(),
        mean: mc::mean(&loads),
        variance: mc::variance(&loads),
        blocking: blocked as f64 / loads.len() as f64,
    })
}

/// Draws a random parameter set inside the documented ranges.
pub fn random_scenario(rng: &mut mc::Rng) -> (f64, f64, QosParams, TrafficParams, ResourceParams, HandoverParams, Option<f64>) {
    let log_uniform = |rng: &mut mc::Rng, lo: f64, hi: f64| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
    let density = log_uniform(rng, 1e-7, 1e-1);
    let d = log_uniform(rng, 0.01, 100.0);
    let qos = QosParams {
        eta: log_uniform(rng, 1e-3, 1.0),
        eps_micro: log_uniform(rng, 1e-5, 0.99),
        eps_macro: log_uniform(rng, 1e-6, 0.5),
        eps_rel: log_uniform(rng, 1e-6, 0.5),
        p_link: rng.random_range(0.5..0.999),
    };
    let traffic = TrafficParams::from_density(log_uniform(rng, 1e-8, 1e-2), log_uniform(rng, 1e-4, 1.0)).unwrap();
    let rho_max = rng.random_range(0.01..1.0);
    let resources = ResourceParams { rho_0: rho_max * rng.random_range(0.001..1.0), rho_max, bandwidth: 1e8 };
    let nu_h_max = match rng.random_range(0..4) {
        0 => 0.0,
        1 => f64::INFINITY,
        _ => log_uniform(rng, 1e-8, 1e3),
    };
    let handover = HandoverParams { nu_h: 0.0, tau_ho: log_uniform(rng, 1e-3, 0.1), nu_h_max };
    let r_max1 = (rng.random::<f64>() < 0.5).then(|| (C_STAR * log_uniform(rng, 0.1, 10.0) / (PI * density)).sqrt());
    (density, d, qos, traffic, resources, handover, r_max1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    const KM2: f64 = 1e-6;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn traffic(lambda_t: f64) -> TrafficParams {
        TrafficParams::from_density(lambda_t, 1e-2).unwrap()
    }

    #[test]
    fn traffic_little() {
        let t = TrafficParams::from_arrivals(2e-7, 1e-2).unwrap();
        assert!(rel(t.lambda_t, 2e-5) < 1e-12);
        assert!(TrafficParams::from_density(1.0, 0.0).is_err());
    }

    #[test]
    fn tau_req_values() {
        let q = QosParams::default();
        let t = tau_req(&q, &traffic(0.0));
        assert!((t.exact - 2985.0).abs() < 0.05, "{}", t.exact);
        assert!((t.small_eps - 3000.0).abs() < 1e-9);
        let near_one = tau_req(&QosParams { eps_micro: 1.0 - 1e-12, ..q }, &traffic(0.0));
        assert!(near_one.exact < 2.0);
        assert_eq!(tau_req(&QosParams { eps_micro: 1.0, ..q }, &traffic(0.0)).exact, 0.0);
    }

    #[test]
    fn tau_req_gap() {
        // 1 − exact/small = ε/2 + ε²/12 + …, so the gap just exceeds ε/2
        for eps in [1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9] {
            let q = QosParams { eps_micro: eps, ..QosParams::default() };
            let t = tau_req(&q, &traffic(0.0));
            let gap = 1.0 - t.exact / t.small_eps;
            assert!(gap > 0.0 && gap <= 0.5 * eps * (1.0 + eps), "{eps}: {gap}");
            assert!(gap >= 0.5 * eps);
        }
    }

    #[test]
    fn k_star_landmarks() {
        let q = QosParams::default();
        let t = traffic(0.0);
        let macro_ = k_star_static(10.0 * KM2, 1.0, &q, &t);
        assert!(rel(macro_.pre_ceiling_small_eps, 0.377) < 1e-3, "{macro_:?}");
        assert!(rel(macro_.pre_ceiling, 0.3751) < 1e-3);
        assert_eq!(macro_.k, 1);
        let dense = k_star_static(1e3 * KM2, 1.0, &q, &t);
        assert!(rel(dense.pre_ceiling_small_eps, 37.7) < 1e-3);
        assert!(rel(dense.pre_ceiling, 37.7) < 0.01);
        assert_eq!(dense.k, 38);
        let a = k_star_static(3e-5, 1.0, &q, &t).pre_ceiling;
        let b = k_star_static(6e-5, 1.0, &q, &t).pre_ceiling;
        assert!(rel(b, 2.0 * a) < 1e-14);
    }

    #[test]
    fn blocking_values() {
        let r = ResourceParams { rho_0: 0.01, rho_max: 0.10, bandwidth: 1e8 };
        assert_eq!(r.m_max(), 10);
        assert_eq!(blocking_probability(&r, 3.0, &traffic(0.0), 1e-5), 0.0);
        let p = blocking_probability(&r, 3.0, &traffic(1e-5), 1e-5);
        // direct pmf sum
        let mut cdf = 0.0;
        let mut pmf = (-3.0f64).exp();
        for k in 0..=10 {
            if k > 0 {
                pmf *= 3.0 / k as f64;
            }
            cdf += pmf;
        }
        assert!(rel(p, 1.0 - cdf) < 1e-9);
        assert!((p - 2.9e-4).abs() < 0.05e-4, "{p}");
        for mean in [0.1, 1.0, 3.0, 7.5, 20.0] {
            for m in [0, 1, 5, 10, 30] {
                let a = blocking_at(m, mean);
                let b = special::gamma_p(m as f64 + 1.0, mean);
                assert!((a - b).abs() < 1e-12, "{m} {mean}: {a} {b}");
            }
        }
    }

    #[test]
    fn m_max_floor_is_robust() {
        assert_eq!(m_max(0.3, 0.1), 3);
        assert_eq!(m_max(0.1, 0.03), 3);
        assert_eq!(m_max(0.2, 0.005), 40);
    }

    #[test]
    fn rho0_inversion() {
        let t = traffic(1e-5);
        assert!(rel(invert_rho0(1.0, 3.0, &t, 1e-5, 0.1).unwrap(), 0.1) < 1e-12);
        let r = invert_rho0(0.05, 3.0, &t, 1e-5, 0.1).unwrap();
        assert!(rel(r, 0.1 / 6.0) < 1e-12);
        assert!(blocking_at(m_max(0.1, r), 3.0) <= 0.05);
        assert!(blocking_at(5, 3.0) > 0.05);
        let tighter = invert_rho0(0.01, 3.0, &t, 1e-5, 0.1).unwrap();
        assert!(tighter < r);
    }

    #[test]
    fn tail_correction_values() {
        let c = tail_correction(10, 0.05).unwrap();
        assert!((c - 0.374).abs() < 5e-4, "{c}");
        assert!(tail_correction(10, 1e-300).unwrap() < 1e-20);
        // c·M is a lower bound on the exact strict per-BS mean load
        for m in [5, 10, 20] {
            let c = tail_correction(m, 0.05).unwrap();
            let exact = strict_mean_load(m, 0.05);
            assert!(c * (m as f64) < exact, "{m}: {} vs {exact}", c * m as f64);
            assert!(c < 1.0);
        }
    }

    #[test]
    fn k_rel_values() {
        assert_eq!(k_rel(0.9, 1e-3).unwrap(), 3);
        assert_eq!(k_rel(0.99, 1e-2).unwrap(), 1);
        assert!(k_rel(1.0, 0.1).is_err());
    }

    #[test]
    fn static_capacity_landmarks() {
        let q = QosParams::default();
        let r = ResourceParams::default();
        let t = traffic(0.0);
        let hi = capacity_static(1e3 * KM2, 1.0, &q, &t, &r, None, 3.0).unwrap();
        assert_eq!(hi.regime, Regime::Supercritical);
        assert!((hi.lambda_t_max_small_eps / KM2 - 265.3).abs() < 0.05, "{}", hi.lambda_t_max_small_eps / KM2);
        assert!((hi.lambda_t_max / KM2 - 266.6).abs() < 0.1);
        assert!(rel(hi.lambda_a_max, 1e-2 * hi.lambda_t_max) < 1e-14);
        assert!(rel(hi.lambda_t_max_strict, hi.tail_correction * hi.lambda_t_max) < 1e-14);
        let other = capacity_static(1e2 * KM2, 1.0, &q, &t, &r, None, 3.0).unwrap();
        assert_eq!(other.lambda_t_max.to_bits(), hi.lambda_t_max.to_bits());
        // sub-critical: linear in λ_b
        let r1 = 100.0;
        let a = capacity_static(1.0 * KM2, 1.0, &q, &t, &r, Some(r1), 3.0).unwrap();
        let b = capacity_static(2.0 * KM2, 1.0, &q, &t, &r, Some(r1), 3.0).unwrap();
        assert_eq!(a.regime, Regime::Subcritical);
        assert!(rel(b.lambda_t_max, 2.0 * a.lambda_t_max) < 1e-14);
        let x = crossover_density_static(3.0, 1.0, &q, &t) / KM2;
        assert!((75.0..=85.0).contains(&x), "{x}");
    }

    #[test]
    fn rho_eff_values() {
        let h = |nu| HandoverParams { nu_h: nu, tau_ho: 0.05, nu_h_max: f64::INFINITY };
        assert_eq!(rho_eff(0.01, &h(0.0)), 0.01);
        assert!(rel(rho_eff(0.01, &h(1e-2)), 0.01 * 1.0005) < 1e-14);
        let a = rho_eff(0.01, &h(1.0)) - rho_eff(0.01, &h(0.0));
        let b = rho_eff(0.01, &h(2.0)) - rho_eff(0.01, &h(0.0));
        assert!(rel(b, 2.0 * a) < 1e-12);
    }

    fn plan(density: f64, nu_max: f64) -> PlanningResult {
        let h = HandoverParams { nu_h: 0.0, tau_ho: 0.05, nu_h_max: nu_max };
        optimum_dynamic(
            density,
            1.0,
            &QosParams::default(),
            &traffic(10.0 * KM2),
            &ResourceParams::default(),
            &h,
            None,
        )
        .unwrap()
    }

    #[test]
    fn dynamic_optimum_cases() {
        let m = plan(10.0 * KM2, 10.0);
        assert_eq!((m.k_star, m.nu_h_star), (3, 0.0));
        assert!(m.auto_met);
        let d = plan(1e3 * KM2, 10.0);
        assert_eq!(d.regime, DynRegime::HandoverRich);
        assert_eq!(d.k_star, 3);
        assert!((d.nu_h_star - 6.7e-3).abs() < 0.05e-3, "{}", d.nu_h_star);
        assert!((3e-3..=3e-2).contains(&d.nu_h_star));
        let s = plan(1e3 * KM2, 0.0);
        assert_eq!(s.regime, DynRegime::HandoverStarved);
        assert_eq!((s.k_star, s.nu_h_star), (38, 0.0));
        // mid-budget sits between the Bessel crossover and ν_min(1)
        let mid_nu = (d.nu_low * d.nu_min_single).sqrt();
        let mb = plan(1e3 * KM2, mid_nu);
        assert_eq!(mb.regime, DynRegime::MidBudget);
        assert_eq!(mb.nu_h_star, mid_nu);
        assert!(mb.k_star >= 3 && mb.k_star <= 38);
        assert!(mb.resource_feasible);
    }

    #[test]
    fn dynamic_capacity_landmarks() {
        let q = QosParams::default();
        let r = ResourceParams::default();
        let t = traffic(0.0);
        let h = HandoverParams::default();
        let ratio = |lam: f64| {
            let dy = capacity_dynamic(lam * KM2, 1.0, &q, &t, &r, &h).unwrap();
            let st = capacity_static(lam * KM2, 1.0, &q, &t, &r, None, 3.0).unwrap();
            (dy, dy.lambda_t_max / st.lambda_t_max_floored)
        };
        let (dy, r1000) = ratio(1e3);
        assert!((dy.lambda_t_max / KM2 - 3333.0).abs() < 2.0, "{}", dy.lambda_t_max / KM2);
        assert!((10.0..=15.0).contains(&r1000), "{r1000}");
        let (_, r100) = ratio(100.0);
        assert!((r100 - 1.3).abs() < 0.1, "{r100}");
        for lam in [1.0, 10.0, 100.0, 1e3] {
            assert!(ratio(lam).0.overhead_fraction < 0.01);
        }
        assert_eq!(ratio(10.0).0.overhead, 0.0);
    }

    #[test]
    fn dynamic_beats_static_strict() {
        let q = QosParams::default();
        let r = ResourceParams::default();
        let t = traffic(0.0);
        let h = HandoverParams::default();
        for i in 0..30 {
            let lam = 10f64.powf(i as f64 * 8.0 / 29.0) * KM2;
            let dy = capacity_dynamic(lam, 1.0, &q, &t, &r, &h).unwrap().lambda_t_max;
            let st = capacity_static(lam, 1.0, &q, &t, &r, None, 3.0).unwrap();
            assert!(dy >= st.tail_correction * st.lambda_t_max_floored, "{lam}");
        }
    }

    #[test]
    fn crossover_dynamic() {
        let q = QosParams::default();
        let t = traffic(0.0);
        let h = HandoverParams::default();
        let Crossover::At(x) = crossover_density_dynamic(1.0, &q, &t, &h, 3.0).unwrap() else { panic!() };
        assert!((1e5..=1e6).contains(&(x / KM2)), "{}", x / KM2);
        let zero = HandoverParams { tau_ho: 0.0, ..h };
        assert_eq!(crossover_density_dynamic(1.0, &q, &t, &zero, 3.0).unwrap(), Crossover::NeverSaturates);
        let Crossover::At(y) = crossover_density_dynamic(1.0, &q, &t, &HandoverParams { tau_ho: 0.1, ..h }, 3.0).unwrap()
        else {
            panic!()
        };
        assert!(y < x);
    }

    #[test]
    fn comm_surrogate() {
        let t = traffic(10.0 * KM2);
        let r = ResourceParams::default();
        let s = RateSurrogate::default();
        let lam = 100.0 * KM2;
        let free = comm_capacity_surrogate(0.0, 0.5, 3.0, &t, lam, &r, &s).unwrap();
        assert!(rel(free, r.bandwidth * s.rate(0.5, lam)) < 1e-14);
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let c = comm_capacity_surrogate(0.01, 0.5, k as f64, &t, lam, &r, &s).unwrap();
            assert!(c < prev);
            prev = c;
        }
        let a = comm_capacity_surrogate(0.01, 0.5, 2.0, &t, lam, &r, &s).unwrap();
        let load = 2.0 * 0.1 * 0.01;
        assert!(rel(a, free * (1.0 - load)) < 1e-14);
        assert!(matches!(comm_capacity_surrogate(1.0, 0.5, 10.0, &t, lam, &r, &s), Err(Error::ResourceSaturated(_))));
    }

    fn pareto_inputs() -> ParetoInputs {
        ParetoInputs {
            density: 100.0 * KM2,
            traffic: traffic(10.0 * KM2),
            qos: QosParams::default(),
            resources: ResourceParams { rho_0: 0.005, rho_max: 0.20, bandwidth: 1e8 },
            radio: RadioParams::default(),
            rate: RateSurrogate::default(),
            beams: BeamLimits::default(),
        }
    }

    #[test]
    fn pareto_properties() {
        let etas: Vec<f64> = (0..12).map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 11.0)).collect();
        let ds = [1.0, 5.0, 20.0, 50.0];
        let rows = pareto_sweep(&etas, &ds, &pareto_inputs()).unwrap();
        assert_eq!(rows.len(), etas.len() * ds.len());
        for d in ds {
            let c: Vec<f64> = rows.iter().filter(|r| r.d == d).map(|r| r.c_hat).collect();
            assert!(c.windows(2).all(|w| w[1] <= w[0]), "D={d}: {c:?}");
        }
        for r in rows.iter().filter(|r| r.k_star >= 2) {
            assert!(r.supercritical, "{r:?}");
        }
        // D = 20 against D = 1 at the same τ_req
        let cost = |d: f64, eta: f64| rows.iter().find(|r| r.d == d && r.eta == eta).unwrap().c_cost;
        let ratio = cost(20.0, 1.0) / cost(1.0, 1.0);
        assert!((10f64.sqrt()..=10f64.powf(1.5)).contains(&ratio), "{ratio}");
        assert!(pareto_sweep(&[], &ds, &pareto_inputs()).is_err());
    }

    #[test]
    fn blocking_monte_carlo_random_marking() {
        let lam = 1e-5;
        let st = simulate_load(lam, lam, 3, 5, 10_000.0, 100, Marking::Random, 5).unwrap();
        assert!(st.samples > 90_000);
        let want = blocking_at(5, 3.0);
        assert!(rel(st.blocking, want) < 0.10, "{} vs {want}", st.blocking);
        assert!(rel(st.mean, 3.0) < 0.02);
    }

    #[test]
    fn nearest_marking_is_overdispersed() {
        let lam = 1e-5;
        let st = simulate_load(lam, lam, 3, 5, 10_000.0, 40, Marking::Nearest, 6).unwrap();
        assert!(rel(st.mean, 3.0) < 0.05, "{st:?}");
        assert!(st.variance > 1.15 * st.mean, "{st:?}");
    }

    #[test]
    fn regime_fuzz() {
        let mut rng = mc::stream(99, 0);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..10_000 {
            let (lam, d, q, t, r, h, r1) = random_scenario(&mut rng);
            let p = optimum_dynamic(lam, d, &q, &t, &r, &h, r1).unwrap();
            seen.insert(p.regime);
            assert!(p.k_star >= p.k_rel.max(1));
            assert!(p.nu_h_star >= 0.0 && p.nu_h_star <= h.nu_h_max);
            let expected = if r1.is_some_and(|r| geometry::percolation_parameter(lam, r).1 == Regime::Subcritical) {
                DynRegime::SubcriticalSingleBs
            } else if h.nu_h_max >= p.nu_min_single {
                DynRegime::HandoverRich
            } else if h.nu_h_max > p.nu_low {
                DynRegime::MidBudget
            } else {
                DynRegime::HandoverStarved
            };
            assert_eq!(p.regime, expected);
        }
        assert_eq!(seen.len(), 4);
    }

    proptest! {
        #[test]
        fn blocking_monotone(k in 1.0f64..20.0, lt in 1e-7f64..1e-4, m in 1u64..30) {
            let r = ResourceParams { rho_0: 0.1 / m as f64, rho_max: 0.1, bandwidth: 1.0 };
            let t = TrafficParams::from_density(lt, 0.01).unwrap();
            let p = blocking_probability(&r, k, &t, 1e-5);
            prop_assert!(blocking_probability(&r, k + 1.0, &t, 1e-5) >= p);
            let t2 = TrafficParams::from_density(lt * 1.5, 0.01).unwrap();
            prop_assert!(blocking_probability(&r, k, &t2, 1e-5) >= p);
            let bigger = ResourceParams { rho_0: r.rho_0 * 1.5, ..r };
            prop_assert!(blocking_probability(&bigger, k, &t, 1e-5) >= p);
        }

        #[test]
        fn k_rel_is_a_ceiling(p in 0.01f64..0.999, e in 1e-6f64..0.9) {
            let k = k_rel(p, e).unwrap() as i32;
            prop_assert!((1.0 - p).powi(k) <= e * (1.0 + 1e-9));
            if k > 1 {
                prop_assert!((1.0 - p).powi(k - 1) > e);
            }
        }

        #[test]
        fn lambda_cancellation(e in 1.0f64..3.0, f in 1.0f64..4.0) {
            let q = QosParams::default();
            let t = TrafficParams::from_density(0.0, 0.01).unwrap();
            let r = ResourceParams::default();
            let a = capacity_static(10f64.powf(-e), 1.0, &q, &t, &r, None, 1.0).unwrap();
            let b = capacity_static(10f64.powf(-e) * f, 1.0, &q, &t, &r, None, 1.0).unwrap();
            if a.regime == Regime::Supercritical && b.regime == Regime::Supercritical {
                prop_assert_eq!(a.lambda_t_max.to_bits(), b.lambda_t_max.to_bits());
            }
        }
    }
}
