//! Scenario configuration: flat `key = value` lines grouped under optional
//! `[section]` headers. Every key has a default; unknown keys are rejected.

use anyhow::{anyhow, bail, Context, Result};
use isactrack::phy::{self, db_to_linear, dbm_to_watt, BeamPattern, RadioParams};
use isactrack::resetting::HandoverParams;
use isactrack::xlayer::{QosParams, RateSurrogate, ResourceParams, TrafficParams};
use std::collections::BTreeMap;
use std::path::Path;

pub const KM2: f64 = 1e-6;

/// (section, key, default, note)
pub const KEYS: &[(&str, &str, f64, &str)] = &[
    ("network", "lambda_b_per_km2", 10.0, "BS density"),
    ("network", "side_km", 10.0, "square simulation window"),
    ("network", "d_min_m", 50.0, "BS hard-core spacing"),
    ("network", "r_min_m", 10.0, "minimum target range"),
    ("network", "lambda_c_per_m2", 1e-4, "clutter density"),
    ("kinematics", "d_m2_per_s", 1.0, "target diffusion coefficient"),
    ("traffic", "lambda_t_per_km2", 10.0, "steady-state target density"),
    ("traffic", "sojourn_s", 100.0, "mean sojourn 1/mu_sj"),
    ("qos", "eta", 0.3, "tracked fraction of sojourn"),
    ("qos", "eps_micro", 1e-2, "per-target loss probability"),
    ("qos", "eps_macro", 0.05, "blocking target"),
    ("qos", "p_link", 0.9, "per-link availability"),
    ("qos", "eps_rel", 1e-3, "all-links-down target"),
    ("qos", "eps_0", 1e-2, "single-BS outage for R_max,1"),
    ("resources", "rho_0", 0.01, "per-target sensing share"),
    ("resources", "rho_max", 0.10, "per-BS sensing budget"),
    ("resources", "bandwidth_mhz", 100.0, "system bandwidth"),
    ("handover", "tau_ho_ms", 50.0, "handover signalling time"),
    ("handover", "nu_h_max_per_s", f64::INFINITY, "handover-rate budget"),
    ("radio", "p_t_dbm", 46.0, "transmit power"),
    ("radio", "gamma_s_db", 5.0, "detection threshold"),
    ("radio", "sigma_m2", 1.0, "target RCS"),
    ("radio", "g_m_dbi", 30.0, "main-lobe gain"),
    ("radio", "zeta_db", -40.0, "side-lobe ratio"),
    ("radio", "beta_per_m", 1e-2, "LoS blockage rate"),
    ("radio", "alpha_c", 3.5, "clutter path-loss exponent"),
    ("radio", "g_c_db", 0.0, "clutter gain"),
    ("radio", "sigma_c_m2", 1e-4, "clutter RCS"),
    ("radio", "noise_psd_dbm_per_hz", -174.0, "thermal noise density"),
    ("radio", "noise_figure_db", 9.0, "receiver noise figure"),
    ("rate", "snr0_db", 20.0, "UE surrogate reference SNR"),
    ("rate", "kappa", 1.0, "UE surrogate leakage weight"),
    ("rate", "area_ref_km2", 1.0, "UE surrogate reference area"),
    ("pareto", "pareto_lambda_b_per_km2", 100.0, "BS density of the Pareto sweep"),
    ("pareto", "pareto_rho_0", 0.005, "sensing share of the Pareto sweep"),
    ("pareto", "pareto_rho_max", 0.20, "sensing budget of the Pareto sweep"),
    ("experiment", "n_trajectories", 1e4, "trajectories per data point"),
    ("experiment", "n_realizations", 20.0, "BS realisations per data point"),
    ("experiment", "seed", 1.0, "master seed (the --seed flag wins)"),
];

fn lookup(key: &str) -> Option<&'static (&'static str, &'static str, f64, &'static str)> {
    KEYS.iter().find(|k| k.1 == key)
}

/// Raw values in file units, keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<&'static str, f64>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|k| (k.1, k.2)).collect() }
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let at = || format!("line {}", n + 1);
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| anyhow!("{}: unterminated section header", at()))?.trim();
                if !KEYS.iter().any(|k| k.0 == name) {
                    bail!("{}: unknown section [{name}]", at());
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("{}: expected key = value", at()))?;
            let key = key.trim();
            let spec = lookup(key).ok_or_else(|| anyhow!("{}: unknown key `{key}`", at()))?;
            if let Some(s) = &section {
                if s != spec.0 {
                    bail!("{}: key `{key}` belongs in [{}], found in [{s}]", at(), spec.0);
                }
            }
            let v: f64 = value.trim().parse().with_context(|| format!("{}: `{key}` is not a number", at()))?;
            if v.is_nan() {
                bail!("{}: `{key}` is NaN", at());
            }
            cfg.values.insert(spec.1, v);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn get(&self, key: &str) -> f64 {
        self.values[lookup(key).unwrap_or_else(|| panic!("no key {key}")).1]
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let spec = lookup(key).ok_or_else(|| anyhow!("unknown key `{key}`"))?;
        self.values.insert(spec.1, value);
        Ok(())
    }

    /// `section.key = value` in declaration order, for output metadata.
    pub fn entries(&self) -> Vec<(String, String)> {
        KEYS.iter().map(|k| (format!("{}.{}", k.0, k.1), format!("{}", self.values[k.1]))).collect()
    }
}

/// Resolved scenario in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub raw: RawConfig,
    /// BS density, 1/m²
    pub lambda_b: f64,
    pub side: f64,
    pub d: f64,
    pub radio: RadioParams,
    pub beam: BeamPattern,
    pub zeta: f64,
    pub eps_0: f64,
    pub qos: QosParams,
    pub traffic: TrafficParams,
    pub resources: ResourceParams,
    pub handover: HandoverParams,
    pub rate: RateSurrogate,
    pub pareto_lambda_b: f64,
    pub pareto_resources: ResourceParams,
    pub n_trajectories: usize,
    pub n_realizations: usize,
    pub seed: u64,
}

fn count(raw: &RawConfig, key: &str) -> Result<usize> {
    let v = raw.get(key);
    if !(v >= 1.0 && v.fract() == 0.0 && v < 1e12) {
        bail!("`{key}` = {v} must be a positive integer");
    }
    Ok(v as usize)
}

impl Scenario {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let g = |k: &str| raw.get(k);
        let positive = [
            "lambda_b_per_km2",
            "side_km",
            "d_m2_per_s",
            "sojourn_s",
            "bandwidth_mhz",
            "sigma_m2",
            "beta_per_m",
            "pareto_lambda_b_per_km2",
            "area_ref_km2",
        ];
        for k in positive {
            if !(g(k) > 0.0) || g(k).is_infinite() {
                bail!("`{k}` = {} must be positive and finite", g(k));
            }
        }
        for k in ["eps_0", "eps_micro", "eps_macro", "eps_rel"] {
            if !(g(k) > 0.0 && g(k) < 1.0) {
                bail!("`{k}` = {} must lie in (0, 1)", g(k));
            }
        }
        if !(g("p_link") > 0.0 && g("p_link") < 1.0) {
            bail!("`p_link` = {} must lie in (0, 1)", g("p_link"));
        }
        if !(g("lambda_t_per_km2") >= 0.0) {
            bail!("`lambda_t_per_km2` must be non-negative");
        }
        let seed = g("seed");
        if !(seed >= 0.0 && seed.fract() == 0.0 && seed <= u64::MAX as f64) {
            bail!("`seed` = {seed} must be a non-negative integer");
        }
        let bandwidth = g("bandwidth_mhz") * 1e6;
        let zeta = db_to_linear(g("zeta_db"));
        let radio = RadioParams {
            p_t: dbm_to_watt(g("p_t_dbm")),
            sigma: g("sigma_m2"),
            gamma_s: db_to_linear(g("gamma_s_db")),
            w0: dbm_to_watt(g("noise_psd_dbm_per_hz") + 10.0 * bandwidth.log10() + g("noise_figure_db")),
            beta: g("beta_per_m"),
            d_min_b: g("d_min_m"),
            lambda_c: g("lambda_c_per_m2"),
            alpha_c: g("alpha_c"),
            g_c: db_to_linear(g("g_c_db")),
            sigma_c: g("sigma_c_m2"),
            r_min: g("r_min_m"),
        };
        radio.validate().context("radio parameters")?;
        let theta = phy::beamwidth_for_gain(db_to_linear(g("g_m_dbi")), zeta).context("g_m_dbi / zeta_db")?;
        let beam = phy::make_beam(theta, zeta)?;
        let qos = QosParams {
            eta: g("eta"),
            eps_micro: g("eps_micro"),
            eps_macro: g("eps_macro"),
            eps_rel: g("eps_rel"),
            p_link: g("p_link"),
        };
        qos.validate().context("qos parameters")?;
        let traffic = TrafficParams::from_density(g("lambda_t_per_km2") * KM2, 1.0 / g("sojourn_s"))?;
        let resources = ResourceParams { rho_0: g("rho_0"), rho_max: g("rho_max"), bandwidth };
        resources.validate().context("resource parameters")?;
        let pareto_resources = ResourceParams { rho_0: g("pareto_rho_0"), rho_max: g("pareto_rho_max"), bandwidth };
        pareto_resources.validate().context("pareto resource parameters")?;
        let handover = HandoverParams::new(0.0, g("tau_ho_ms") * 1e-3, g("nu_h_max_per_s")).context("handover parameters")?;
        let rate = RateSurrogate {
            snr0: db_to_linear(g("snr0_db")),
            kappa: g("kappa"),
            zeta,
            area_ref: g("area_ref_km2") / KM2,
        };
        Ok(Self {
            lambda_b: g("lambda_b_per_km2") * KM2,
            side: g("side_km") * 1e3,
            d: g("d_m2_per_s"),
            radio,
            beam,
            zeta,
            eps_0: g("eps_0"),
            qos,
            traffic,
            resources,
            handover,
            rate,
            pareto_lambda_b: g("pareto_lambda_b_per_km2") * KM2,
            pareto_resources,
            n_trajectories: count(&raw, "n_trajectories")?,
            n_realizations: count(&raw, "n_realizations")?,
            seed: seed as u64,
            raw,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(RawConfig::load(path)?).with_context(|| format!("in {}", path.display()))
    }

    pub fn k_rel(&self) -> u64 {
        isactrack::xlayer::k_rel(self.qos.p_link, self.qos.eps_rel).expect("validated")
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

/// Template listing every key with its default.
pub fn template() -> String {
    let mut out = String::new();
    let mut section = "";
    for (s, k, v, note) in KEYS {
        if *s != section {
            if !section.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{s}]\n"));
            section = s;
        }
        out.push_str(&format!("{k} = {v}  # {note}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_table_defaults() {
        let s = Scenario::parse("").unwrap();
        assert_eq!(s, Scenario::default());
        assert!((s.lambda_b - 1e-5).abs() < 1e-20);
        assert_eq!(s.d, 1.0);
        assert!((s.traffic.mu_sj - 0.01).abs() < 1e-15);
        assert_eq!(s.radio.d_min_b, 50.0);
        assert_eq!(s.radio.r_min, 10.0);
        assert_eq!((s.qos.eta, s.qos.eps_micro, s.qos.eps_macro), (0.3, 1e-2, 0.05));
        assert_eq!((s.qos.p_link, s.qos.eps_rel), (0.9, 1e-3));
        assert_eq!((s.resources.rho_0, s.resources.rho_max), (0.01, 0.10));
        assert_eq!(s.k_rel(), 3);
        assert!((s.handover.tau_ho - 0.05).abs() < 1e-15);
        assert!((s.radio.gamma_s - 3.1623).abs() < 1e-4);
        assert!((s.radio.p_t - 39.81).abs() < 0.01);
        assert!((s.beam.g_m - 1000.0).abs() < 1e-9);
        assert_eq!(s.radio.beta, 1e-2);
        assert_eq!(s.radio.alpha_c, 3.5);
        assert!((s.zeta - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn override_touches_one_key() {
        let a = Scenario::default();
        let b = Scenario::parse("lambda_b_per_km2 = 20").unwrap();
        assert!((b.lambda_b - 2e-5).abs() < 1e-20);
        assert_eq!(Scenario { lambda_b: a.lambda_b, raw: a.raw.clone(), ..b }, a);
    }

    #[test]
    fn db_keys_convert() {
        let s = Scenario::parse("[radio]\nzeta_db = -40\n").unwrap();
        assert!((s.zeta - 1e-4).abs() < 1e-18);
        let s = Scenario::parse("[radio]\nzeta_db = -35\n").unwrap();
        assert!((s.zeta - 10f64.powf(-3.5)).abs() < 1e-18);
        // 30 dBi needs ζ < 1e-3
        assert!(Scenario::parse("[radio]\nzeta_db = -30\n").is_err());
    }

    #[test]
    fn errors_name_the_key() {
        let e = format!("{:#}", Scenario::parse("lamda_b_per_km2 = 3").unwrap_err());
        assert!(e.contains("unknown key `lamda_b_per_km2`"), "{e}");
        let e = format!("{:#}", Scenario::parse("[qos]\nrho_0 = 0.1").unwrap_err());
        assert!(e.contains("[resources]"), "{e}");
        let e = format!("{:#}", Scenario::parse("eta = abc").unwrap_err());
        assert!(e.contains("`eta`"), "{e}");
        let e = format!("{:#}", Scenario::parse("eps_micro = 2").unwrap_err());
        assert!(e.contains("eps_micro"), "{e}");
        assert!(Scenario::parse("[nope]").is_err());
        assert!(Scenario::load(Path::new("/nonexistent/cfg.ini")).is_err());
    }

    #[test]
    fn template_round_trips() {
        assert_eq!(Scenario::parse(&template()).unwrap(), Scenario::default());
    }
}
