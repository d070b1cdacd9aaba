//! Cross-checks of the closed forms against independent oracles.

use crate::config::{Scenario, KM2};
use crate::experiments::RunSpec;
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::coop::{tail_exponent_fit, DEFAULT_TAIL_WINDOW};
use isactrack::geometry::{self, knn, knn_moment, sample_hppp, sample_hppp_with, Region};
use isactrack::kinematics::{mtlt_disk_analytic, simulate_fpt_disk, DiffusionParams};
use isactrack::mc;
use isactrack::phy::{self, special, BeamPattern, RadioParams};
use isactrack::resetting::{self, mtlt_dynamic, simulate_resetting_default, static_limit};
use isactrack::xlayer::{self, Crossover, Marking};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo, hi }
    }

    /// |value - target| / |target| ≤ tol, stored as the relative error in [0, tol].
    pub fn rel(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::new(name, ((value - target) / target).abs(), 0.0, tol)
    }

    pub fn pass(&self) -> bool {
        self.value >= self.lo && self.value <= self.hi
    }
}

/// Interferers seen by a BS at the origin: PPP outside d_min (cut at 3 km,
/// where LoS survival is e^{-30}), independent beam draws, Rayleigh fading.
pub fn sample_interference(radio: &RadioParams, density: f64, beam: &BeamPattern, rng: &mut mc::Rng) -> f64 {
    let (lo, hi) = (radio.d_min_b, 3000f64.max(30.0 / radio.beta));
    let mean = density * PI * (hi * hi - lo * lo);
    if mean <= 0.0 {
        return 0.0;
    }
    let n = Poisson::new(mean).unwrap().sample(rng) as usize;
    let mut total = 0.0;
    for _ in 0..n {
        let v = (lo * lo + rng.random::<f64>() * (hi * hi - lo * lo)).sqrt();
        if rng.random::<f64>() >= (-radio.beta * v).exp() {
            continue;
        }
        let g = beam.sample_gain(rng) * beam.sample_gain(rng);
        let h: f64 = Exp1.sample(rng);
        total += radio.p_t * g * h / (v * v);
    }
    total
}

/// Clutter around the origin: explicit scatterers inside `rc`, Campbell mean beyond.
pub fn sample_clutter(radio: &RadioParams, rc: f64, rng: &mut mc::Rng) -> f64 {
    let a = radio.alpha_c;
    let unit = radio.p_t * radio.g_c * radio.sigma_c;
    let mut total = 2.0 * PI * radio.lambda_c * unit * rc.powf(2.0 - a) / (a - 2.0);
    let mean = radio.lambda_c * PI * rc * rc;
    if mean <= 0.0 {
        return 0.0;
    }
    let n = Poisson::new(mean).unwrap().sample(rng) as usize;
    for _ in 0..n {
        let r = rc * rng.random::<f64>().sqrt();
        let h: f64 = Exp1.sample(rng);
        total += unit * h * r.powf(-a);
    }
    total
}

/// Radius whose far-field clutter exponent at `s` is 0.05.
pub fn clutter_radius(radio: &RadioParams, s: f64) -> f64 {
    let a = radio.alpha_c;
    let k = 2.0 * PI * radio.lambda_c * s * radio.p_t * radio.g_c * radio.sigma_c / (a - 2.0);
    (k / 0.05).powf(1.0 / (a - 2.0)).max(50.0)
}

/// Interference and clutter Laplace transforms against PGFL sampling.
pub fn laplace_checks(sc: &Scenario, n: usize, seed: u64) -> Result<Vec<Check>> {
    let (radio, beam, density) = (&sc.radio, &sc.beam, sc.lambda_b);
    let mean = phy::mean_cli(density, radio, &beam.gains())?;
    let draws = mc::par_map(seed, n, |_, rng| sample_interference(radio, density, beam, rng));
    let mut out = Vec::new();
    for f in [0.5, 1.0, 2.0] {
        let s = f / mean;
        let est = mc::mean(&draws.iter().map(|i| (-s * i).exp()).collect::<Vec<_>>());
        let an = phy::cli_laplace(s, radio, density, &beam.gains());
        out.push(Check::rel(format!("cli_laplace(s={f}/E[I]) vs PGFL oracle, rel"), est, an, 0.03));
    }
    let kc = PI * radio.lambda_c * special::gamma(1.0 + 2.0 / radio.alpha_c) * special::gamma(1.0 - 2.0 / radio.alpha_c);
    for (i, target) in [0.8f64, 0.5, 0.3].into_iter().enumerate() {
        let s = (-target.ln() / kc).powf(radio.alpha_c / 2.0) / (radio.p_t * radio.g_c * radio.sigma_c);
        let rc = clutter_radius(radio, s);
        let draws = mc::par_map(mc::derive_seed(seed, 1 + i as u64), n, |_, rng| (-s * sample_clutter(radio, rc, rng)).exp());
        let an = phy::clutter_laplace(s, radio)?;
        out.push(Check::rel(format!("clutter_laplace(L={target}) vs PGFL oracle, rel"), mc::mean(&draws), an, 0.03));
    }
    Ok(out)
}

/// Coverage against full-SINCR sampling at ranges where the closed form gives `levels`.
pub fn coverage_checks(sc: &Scenario, levels: &[f64], n: usize, seed: u64) -> Result<Vec<Check>> {
    let (radio, beam, density) = (&sc.radio, &sc.beam, sc.lambda_b);
    let mut out = Vec::new();
    for (i, &level) in levels.iter().enumerate() {
        let (mut lo, mut hi) = (1.0f64, 1e5f64);
        for _ in 0..100 {
            let mid = (lo * hi).sqrt();
            if phy::coverage_probability(mid, density, radio, beam)? > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r0 = lo;
        let an = phy::coverage_probability(r0, density, radio, beam)?;
        let s = phy::coverage_s(r0, radio, beam);
        let rc = clutter_radius(radio, s);
        let hits = mc::par_map(mc::derive_seed(seed, i as u64), n, |_, rng| {
            let h0: f64 = Exp1.sample(rng);
            let signal = radio.p_t * beam.g_m * beam.g_m * radio.sigma * h0 / r0.powi(4);
            let noise = sample_interference(radio, density, beam, rng) + sample_clutter(radio, rc, rng) + radio.w0;
            f64::from(signal / noise >= radio.gamma_s)
        });
        out.push(Check::new(format!("coverage at r0={r0:.1} m vs SINCR oracle, abs diff"), (mc::mean(&hits) - an).abs(), 0.0, 0.02));
    }
    Ok(out)
}

/// Disk exit mean against R²/4D.
pub fn disk_exit_check(n: usize, seed: u64) -> Result<Check> {
    let (r, d) = (100.0, 1.0);
    let e = simulate_fpt_disk(r, 0.0, DiffusionParams::for_scale(d, r), n, seed)?;
    Ok(Check::rel(format!("disk exit mean (n={n}) vs R^2/4D, rel"), e.mean, mtlt_disk_analytic(r, d), 0.02))
}

/// Resetting walkers against the Bessel closed form.
pub fn resetting_checks(n: usize, seed: u64) -> Result<Vec<Check>> {
    let (r, d) = (50.0, 1.0);
    let mut out = Vec::new();
    for (i, x) in [0.5f64, 1.0, 2.0, 3.0].into_iter().enumerate() {
        let nu = d * x * x / (r * r);
        let e = simulate_resetting_default(r, d, nu, n, mc::derive_seed(seed, i as u64))?;
        out.push(Check::rel(format!("resetting MC at Bessel arg {x} (n={n}), rel"), e.mean, mtlt_dynamic(r, d, nu), 0.03));
    }
    let base = static_limit(r, d);
    out.push(Check::rel("mtlt_dynamic(nu -> 0+) vs R^2/4D, rel", mtlt_dynamic(r, d, 1e-300), base, 1e-6));
    Ok(out)
}

/// Poisson blocking: two tail implementations, then random-marking occupancy.
pub fn blocking_checks(n_realizations: usize, seed: u64) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for mean in [0.1, 0.5, 1.0, 3.0, 7.5, 20.0, 60.0] {
        for m in [0u64, 1, 3, 5, 10, 30, 100] {
            let a = xlayer::blocking_at(m, mean);
            let b = 1.0 - special::gamma_q(m as f64 + 1.0, mean);
            worst = worst.max((a - b).abs());
        }
    }
    let lam = 1e-5;
    let st = xlayer::simulate_load(lam, lam, 3, 5, 10_000.0, n_realizations, Marking::Random, seed)?;
    Ok(vec![
        Check::new("Poisson tail sum vs 1 - Q(M+1, mean), max abs diff", worst, 0.0, 1e-12),
        Check::rel("blocking vs marked-PPP occupancy (K=3, mean 3, M=5), rel", st.blocking, xlayer::blocking_at(5, 3.0), 0.10),
    ])
}

/// Closed-form landmarks at the configured defaults.
pub fn landmark_checks(sc: &Scenario) -> Result<Vec<Check>> {
    let (q, t, r, h) = (&sc.qos, &sc.traffic, &sc.resources, &sc.handover);
    let k_rel = xlayer::k_rel(q.p_link, q.eps_rel)? as f64;
    let cap = xlayer::capacity_static(1e3 * KM2, sc.d, q, t, r, None, k_rel)?;
    let dyn_ = xlayer::capacity_dynamic(1e3 * KM2, sc.d, q, t, r, h)?;
    let ks_macro = xlayer::k_star_static(10.0 * KM2, sc.d, q, t);
    let ks_dense = xlayer::k_star_static(1e3 * KM2, sc.d, q, t);
    let nu_min = resetting::nu_min(3.0, 1e3 * KM2, sc.d, ks_dense.pre_ceiling)?;
    let x_dyn = match xlayer::crossover_density_dynamic(sc.d, q, t, h, k_rel)? {
        Crossover::At(x) => x / KM2,
        Crossover::NeverSaturates => f64::INFINITY,
    };
    Ok(vec![
        Check::new("static super-critical ceiling (small-eps), 1/km2", cap.lambda_t_max_small_eps / KM2, 265.25, 265.35),
        Check::new("static crossover density, 1/km2", xlayer::crossover_density_static(k_rel, sc.d, q, t) / KM2, 75.0, 85.0),
        Check::new("dynamic/static ceiling at 1e3/km2", dyn_.lambda_t_max / cap.lambda_t_max_floored, 10.0, 15.0),
        Check::rel("K*_static pre-ceiling at 10/km2 (small-eps), rel", ks_macro.pre_ceiling_small_eps, 0.377, 1e-3),
        Check::rel("K*_static pre-ceiling at 1e3/km2 (small-eps), rel", ks_dense.pre_ceiling_small_eps, 37.7, 1e-3),
        Check::new("tail correction c(M=10, eps=0.05)", xlayer::tail_correction(10, 0.05)?, 0.3735, 0.3745),
        Check::new("K_rel(0.9, 1e-3)", k_rel, 3.0, 3.0),
        Check::new("nu_min(K=3, 1e3/km2), 1/s", nu_min, 3e-3, 3e-2),
        Check::new("dynamic crossover density, 1/km2", x_dyn, 1e5, 1e6),
        Check::rel("blocking P(N>10), mean 3, rel", xlayer::blocking_at(10, 3.0), 2.9e-4, 0.02),
    ])
}

/// Geometry oracles: k-NN against sorting, guarded moments, HPPP counts.
pub fn geometry_checks(seed: u64) -> Result<Vec<Check>> {
    let mut mismatches = 0usize;
    for i in 0..100u64 {
        let pts = sample_hppp(5e-5, Region::square(3162.0), mc::derive_seed(seed, i));
        if pts.len() < 10 {
            continue;
        }
        let mut rng = mc::stream(seed, 1000 + i);
        let qp = pts.region.sample_central(1.0, &mut rng);
        let got = knn(&pts, qp, 10)?;
        let mut all: Vec<(f64, usize)> = pts.points.iter().enumerate().map(|(j, p)| (geometry::dist2(*p, qp), j)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if all[..10].iter().map(|x| x.1).ne(got.indices.iter().copied()) {
            mismatches += 1;
        }
    }
    // E[r_k^-4 | r_k > r_min] for r_k² ~ Gamma(k, 1/πλ); band is 4 standard errors
    let (density, r_min) = (1e-5, 10.0);
    let mut moments = Vec::new();
    for k in [1usize, 3] {
        let law = Gamma::new(k as f64, 1.0 / (PI * density)).unwrap();
        let mut rng = mc::stream(seed, 7 + k as u64);
        let mut acc = Vec::with_capacity(1_000_000);
        while acc.len() < 1_000_000 {
            let r2: f64 = law.sample(&mut rng);
            if r2 > r_min * r_min {
                acc.push(r2.powi(-2));
            }
        }
        let m = mc::mean(&acc);
        let rse = (mc::variance(&acc) / acc.len() as f64).sqrt() / m;
        moments.push(Check::rel(format!("guarded moment E[r_{k}^-4 | r_{k} > 10 m] vs Gamma sampling, rel (4 s.e.)"), m, knn_moment(k, density, 2.0, r_min)?, 4.0 * rse));
    }
    let counts: Vec<f64> = (0..1000u64)
        .map(|i| sample_hppp_with(1e-5, Region::square(3162.2777), &mut mc::stream(seed, 10_000 + i)).len() as f64)
        .collect();
    let z = (mc::mean(&counts) - 100.0) / (100.0f64 / 1000.0).sqrt();
    Ok(vec![
        Check::new("k-NN vs sort oracle, mismatching instances", mismatches as f64, 0.0, 0.0),
        Check::new("HPPP mean count over 1e3 seeds, z-score", z.abs(), 0.0, 3.0),
    ]
    .into_iter()
    .chain(moments)
    .collect())
}

pub fn beam_checks() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        for j in 0..100 {
            let b = phy::make_beam(2.0 * PI * (i as f64 + 0.5) / 100.0, 0.99 * j as f64 / 99.0).unwrap();
            worst = worst.max((phy::mean_coupled_gain(&b) - 1.0).abs());
        }
    }
    vec![Check::new("energy conservation, max |G_bar - 1| over 1e4 beams", worst, 0.0, 1e-12)]
}

pub fn tail_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = mc::stream(seed, 0);
    let x: Vec<f64> = (0..200_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.05)).collect();
    let f = tail_exponent_fit(&x, DEFAULT_TAIL_WINDOW)?;
    Ok(vec![Check::new("Pareto(1.05) control tail exponent", f.exponent, 1.0, 1.1)])
}

pub fn all_checks(spec: &RunSpec) -> Result<Vec<Check>> {
    let sc = &spec.scenario;
    let n = spec.n_trajectories();
    let mut out = beam_checks();
    out.extend(geometry_checks(spec.seed_for(1))?);
    out.extend(laplace_checks(sc, 10_000, spec.seed_for(2))?);
    out.extend(coverage_checks(sc, &[0.9, 0.6, 0.3], 100_000, spec.seed_for(3))?);
    out.push(disk_exit_check(n, spec.seed_for(4))?);
    out.extend(resetting_checks(n, spec.seed_for(5))?);
    out.extend(blocking_checks(100, spec.seed_for(6))?);
    out.extend(landmark_checks(sc)?);
    out.extend(tail_checks(spec.seed_for(7))?);
    Ok(out)
}

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let checks = all_checks(spec)?;
    let mut t = ResultTable::new("validate", &[("check", "-"), ("value", "1"), ("lo", "1"), ("hi", "1"), ("pass", "-")]);
    for c in &checks {
        t.push(vec![c.name.as_str().into(), c.value.into(), c.lo.into(), c.hi.into(), c.pass().into()]);
    }
    t.meta("failures", checks.iter().filter(|c| !c.pass()).count());
    Ok(t)
}
