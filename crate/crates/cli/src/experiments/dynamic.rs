//! MTLT under cluster handover (resetting to the commit point) against the
//! handover rate, over eight decades around ν_c = πλ_bD/K.

use super::{log_grid, RunSpec};
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::resetting::{footprint_radius, mtlt_dynamic, mtlt_dynamic_asymptotic, nu_crossover, simulate_resetting_default, static_limit};

pub const KS: [usize; 4] = [1, 3, 10, 100];
/// Monte Carlo is skipped where the closed form exceeds this multiple of the
/// static value (walk length grows with the ratio).
pub const MC_CAP: f64 = 10.0;

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let mut t = ResultTable::new(
        "mtlt-dyn",
        &[
            ("k", "1"),
            ("r_k", "m"),
            ("nu_h", "1/s"),
            ("nu_over_nu_c", "1"),
            ("bessel_arg", "1"),
            ("mtlt_closed_form", "s"),
            ("mtlt_asymptotic", "s"),
            ("mtlt_static", "s"),
            ("ratio_to_static", "1"),
            ("mtlt_mc", "s"),
            ("std_error", "s"),
            ("censored_fraction", "1"),
        ],
    );
    let ratios = log_grid(1e-4, 1e4, 33);
    for (ki, &k) in KS.iter().enumerate() {
        let r = footprint_radius(k as f64, sc.lambda_b);
        let nu_c = nu_crossover(k as f64, sc.lambda_b, sc.d);
        let stat = static_limit(r, sc.d);
        t.meta_num(&format!("nu_c_k{k}_per_s"), nu_c);
        for (i, &f) in ratios.iter().enumerate() {
            let nu = f * nu_c;
            let closed = mtlt_dynamic(r, sc.d, nu);
            let (mc, se, cens) = if closed <= MC_CAP * stat {
                let e = simulate_resetting_default(r, sc.d, nu, spec.n_trajectories(), spec.seed_for((ki * 1000 + i) as u64))?;
                (Some(e.mean), Some(e.std_error), Some(e.censored_fraction()))
            } else {
                (None, None, None)
            };
            t.push(vec![
                k.into(),
                r.into(),
                nu.into(),
                f.into(),
                (r * (nu / sc.d).sqrt()).into(),
                closed.into(),
                mtlt_dynamic_asymptotic(r, sc.d, nu).into(),
                stat.into(),
                (closed / stat).into(),
                mc.into(),
                se.into(),
                cens.into(),
            ]);
        }
    }
    Ok(t)
}
