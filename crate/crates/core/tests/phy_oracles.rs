use isactrack::mc;
use isactrack::phy::{
    beamwidth_for_gain, cli_laplace, clutter_laplace, coverage_probability, make_beam, mean_cli, mean_coupled_gain,
    BeamPattern, RadioParams,
};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use std::f64::consts::PI;

const V_MAX: f64 = 3000.0;

fn beam() -> BeamPattern {
    make_beam(beamwidth_for_gain(1e3, 1e-4).unwrap(), 1e-4).unwrap()
}

fn one_way(b: &BeamPattern, rng: &mut mc::Rng) -> f64 {
    if rng.random::<f64>() < b.theta_m / (2.0 * PI) {
        b.g_m
    } else {
        b.g_s
    }
}

/// BS-to-BS interference at a receiver at the origin: PPP on d_min < v < V_MAX,
/// LoS with probability e^{-βv}, independent tx/rx beam draws, Rayleigh fading.
fn sample_interference(radio: &RadioParams, density: f64, b: &BeamPattern, rng: &mut mc::Rng) -> f64 {
    let (lo, hi) = (radio.d_min_b, V_MAX);
    let n = Poisson::new(density * PI * (hi * hi - lo * lo)).unwrap().sample(rng) as usize;
    let mut total = 0.0;
    for _ in 0..n {
        let v = (lo * lo + rng.random::<f64>() * (hi * hi - lo * lo)).sqrt();
        if rng.random::<f64>() >= (-radio.beta * v).exp() {
            continue;
        }
        let g = one_way(b, rng) * one_way(b, rng);
        let h: f64 = Exp1.sample(rng);
        total += radio.p_t * g * h / (v * v);
    }
    total
}

/// Clutter PPP in a disk of radius `rc` around the origin, plus the Campbell
/// mean of everything beyond `rc`.
fn sample_clutter(radio: &RadioParams, rc: f64, rng: &mut mc::Rng) -> f64 {
    let a = radio.alpha_c;
    let far = 2.0 * PI * radio.lambda_c * radio.p_t * radio.g_c * radio.sigma_c * rc.powf(2.0 - a) / (a - 2.0);
    let n = Poisson::new(radio.lambda_c * PI * rc * rc).unwrap().sample(rng) as usize;
    let mut total = far;
    for _ in 0..n {
        let r = rc * rng.random::<f64>().sqrt();
        let h: f64 = Exp1.sample(rng);
        total += radio.p_t * radio.g_c * radio.sigma_c * h * r.powf(-radio.alpha_c);
    }
    total
}

/// Radius at which the far-field clutter exponent at `s` equals `tol`.
fn clutter_radius(radio: &RadioParams, s: f64, tol: f64) -> f64 {
    let a = radio.alpha_c;
    // 2πλ s P G σ r^{2-α} / (α-2) = tol
    let k = 2.0 * PI * radio.lambda_c * s * radio.p_t * radio.g_c * radio.sigma_c / (a - 2.0);
    (k / tol).powf(1.0 / (a - 2.0)).max(50.0)
}

#[test]
fn interference_laplace_against_pgfl_oracle() {
    let radio = RadioParams::default();
    let b = beam();
    let density = 1e-5;
    let mean = mean_cli(density, &radio, &b.gains()).unwrap();
    let draws: Vec<f64> = mc::par_map(41, 10_000, |_, rng| sample_interference(&radio, density, &b, rng));
    for f in [0.5, 1.0, 2.0] {
        let s = f / mean;
        let mc_l = mc::mean(&draws.iter().map(|i| (-s * i).exp()).collect::<Vec<_>>());
        let an = cli_laplace(s, &radio, density, &b.gains());
        assert!(((mc_l - an) / an).abs() < 0.03, "s = {f}/E[I]: MC {mc_l} vs {an}");
    }
}

#[test]
fn clutter_laplace_against_pgfl_oracle() {
    let radio = RadioParams::default();
    for target in [0.8, 0.5, 0.3] {
        // s with L_C(s) = target
        let k = PI * radio.lambda_c * isactrack::phy::special::gamma(1.0 + 2.0 / radio.alpha_c)
            * isactrack::phy::special::gamma(1.0 - 2.0 / radio.alpha_c);
        let s = (-(target as f64).ln() / k).powf(radio.alpha_c / 2.0) / (radio.p_t * radio.g_c * radio.sigma_c);
        let rc = clutter_radius(&radio, s, 0.05);
        let draws: Vec<f64> = mc::par_map(42, 10_000, |_, rng| (-s * sample_clutter(&radio, rc, rng)).exp());
        let an = clutter_laplace(s, &radio).unwrap();
        assert!((an - target).abs() < 1e-9);
        let mc_l = mc::mean(&draws);
        assert!(((mc_l - an) / an).abs() < 0.03, "{target}: MC {mc_l} vs {an}");
    }
}

#[test]
fn coverage_against_sincr_oracle() {
    let radio = RadioParams::default();
    let b = beam();
    let density = 1e-5;
    let n = 100_000;
    let mut prev = 1.0;
    for (i, level) in [0.95, 0.8, 0.6, 0.4, 0.2].into_iter().enumerate() {
        // r0 where the analytic coverage equals `level`
        let (mut lo, mut hi) = (1.0f64, 1e5f64);
        for _ in 0..100 {
            let mid = (lo * hi).sqrt();
            if coverage_probability(mid, density, &radio, &b).unwrap() > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r0 = lo;
        let an = coverage_probability(r0, density, &radio, &b).unwrap();
        assert!(an <= prev);
        prev = an;
        let s = radio.gamma_s * r0.powi(4) / (radio.p_t * b.g_m * b.g_m * radio.sigma);
        let rc = clutter_radius(&radio, s, 0.05);
        let hits: Vec<f64> = mc::par_map(50 + i as u64, n, |_, rng| {
            let h0: f64 = Exp1.sample(rng);
            let signal = radio.p_t * b.g_m * b.g_m * radio.sigma * h0 / r0.powi(4);
            let noise = sample_interference(&radio, density, &b, rng) + sample_clutter(&radio, rc, rng) + radio.w0;
            f64::from(signal / noise >= radio.gamma_s)
        });
        let p = mc::mean(&hits);
        assert!((p - an).abs() < 0.02, "r0 = {r0:.1}: MC {p} vs {an}");
    }
}

#[test]
fn energy_conservation_grid() {
    for i in 0..100 {
        for j in 0..100 {
            let theta = 2.0 * PI * (i as f64 + 0.5) / 100.0;
            let zeta = 0.99 * j as f64 / 99.0;
            let b = make_beam(theta, zeta).unwrap();
            assert!((mean_coupled_gain(&b) - 1.0).abs() < 1e-12, "{theta} {zeta}");
        }
    }
}
