//! Static K-NN cooperation: NCI fusion, coverage scaling, the percolation
//! phase transition of the cooperative MTLT and near-critical tails.

use crate::error::{Error, Result};
use crate::geometry::{self, dist2, GridIndex, Point, PointSet, Regime, Region};
use crate::kinematics::{self, DiffusionParams, Disk, Domain, FptEnsemble, WalkOptions, CENSOR_FACTOR};
use crate::mc::{self, Rng};
use serde::Serialize;
use std::f64::consts::PI;

/// A committed K-NN cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub indices: Vec<usize>,
    /// r_1 ≤ … ≤ r_K, m
    pub distances: Vec<f64>,
    /// realised footprint radius, the K-th distance
    pub r_k: f64,
    /// √(K/πλ), the radius used in the closed forms
    pub r_k_analytic: f64,
    pub commit: Point,
}

impl Cluster {
    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

pub fn commit_cluster(realization: &PointSet, index: Option<&GridIndex>, at: Point, k: usize) -> Result<Cluster> {
    let nn = geometry::knn_with(realization, index, at, k)?;
    Ok(Cluster {
        r_k: nn.r_k(),
        r_k_analytic: crate::resetting::footprint_radius(k as f64, realization.density),
        indices: nn.indices,
        distances: nn.distances,
        commit: at,
    })
}

/// Σ S_k / (Σ (I_k + C_k) + K W0).
pub fn coop_sincr(echoes: &[f64], interference: &[f64], clutter: &[f64], w0: f64) -> Result<f64> {
    let k = echoes.len();
    if k == 0 {
        return Err(Error::InvalidParam("empty cluster".into()));
    }
    if interference.len() != k || clutter.len() != k {
        return Err(Error::InvalidParam(format!(
            "length mismatch: {k} echoes, {} interference, {} clutter",
            interference.len(),
            clutter.len()
        )));
    }
    let signal: f64 = echoes.iter().sum();
    let disturbance: f64 = interference.iter().zip(clutter).map(|(i, c)| i + c).sum();
    Ok(signal / (disturbance + k as f64 * w0))
}

/// R_max,K = R_max,1 K^{-1/4}.
pub fn effective_radius_nci(r_max1: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParam("K must be at least 1".into()));
    }
    Ok(r_max1 * (k as f64).powf(-0.25))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageRegime {
    HeavyOverlap,
    Dilute,
}

/// Mean cooperative coverage area. Heavy overlap (K < Q²) gives K/λ, the
/// footprint area; otherwise the shrunken disks are disjoint, √K π R_max,1².
pub fn coverage_area_scaling(k: usize, density: f64, r_max1: f64) -> Result<(CoverageRegime, f64)> {
    if k == 0 || !(density > 0.0) || !(r_max1 > 0.0) {
        return Err(Error::InvalidParam(format!("K={k}, density={density}, R={r_max1}")));
    }
    let (q, _) = geometry::percolation_parameter(density, r_max1);
    let k = k as f64;
    if k < q * q {
        Ok((CoverageRegime::HeavyOverlap, k / density))
    } else {
        Ok((CoverageRegime::Dilute, k.sqrt() * PI * r_max1 * r_max1))
    }
}

/// Area of a union of equal disks by horizontal strips of height `h`, each
/// strip's chord intervals merged exactly. With `clip`, the union is
/// intersected with that disk.
pub fn union_area(centers: &[Point], radius: f64, h: f64, clip: Option<(Point, f64)>) -> f64 {
    if centers.is_empty() {
        return 0.0;
    }
    let mut y_lo = centers.iter().map(|c| c[1]).fold(f64::INFINITY, f64::min) - radius;
    let mut y_hi = centers.iter().map(|c| c[1]).fold(f64::NEG_INFINITY, f64::max) + radius;
    if let Some((c, r)) = clip {
        y_lo = y_lo.max(c[1] - r);
        y_hi = y_hi.min(c[1] + r);
    }
    if y_hi <= y_lo {
        return 0.0;
    }
    let n_strips = ((y_hi - y_lo) / h).ceil() as usize;
    let h = (y_hi - y_lo) / n_strips as f64;
    // centres sorted by y so each strip scans a contiguous window
    let mut by_y: Vec<Point> = centers.to_vec();
    by_y.sort_by(|a, b| a[1].total_cmp(&b[1]));
    let mut first = 0;
    let mut spans: Vec<(f64, f64)> = Vec::new();
    let mut total = 0.0;
    for j in 0..n_strips {
        let y = y_lo + (j as f64 + 0.5) * h;
        while first < by_y.len() && by_y[first][1] < y - radius {
            first += 1;
        }
        spans.clear();
        for c in &by_y[first..] {
            if c[1] > y + radius {
                break;
            }
            let dy = y - c[1];
            let w = (radius * radius - dy * dy).max(0.0).sqrt();
            if w > 0.0 {
                spans.push((c[0] - w, c[0] + w));
            }
        }
        let (mut cl, mut cr) = (f64::NEG_INFINITY, f64::INFINITY);
        if let Some((c, r)) = clip {
            let dy = y - c[1];
            let w = (r * r - dy * dy).max(0.0).sqrt();
            cl = c[0] - w;
            cr = c[0] + w;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut len = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for &(a, b) in spans.iter() {
            match cur {
                Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
                _ => {
                    if let Some((ca, cb)) = cur {
                        len += (cb.min(cr) - ca.max(cl)).max(0.0);
                    }
                    cur = Some((a, b));
                }
            }
        }
        if let Some((ca, cb)) = cur {
            len += (cb.min(cr) - ca.max(cl)).max(0.0);
        }
        total += len;
    }
    total * h
}

/// Rasterisation step used for Boolean-model areas, as a fraction of the radius.
pub const AREA_RESOLUTION: f64 = 1.0 / 20.0;

/// Area of (union of disks of radius R_max,1 K^{-1/4} on the cluster members)
/// ∩ B(commit, r_K).
pub fn cluster_coverage_area(realization: &PointSet, cluster: &Cluster, r_max1: f64) -> Result<f64> {
    let rk = effective_radius_nci(r_max1, cluster.k())?;
    let centers: Vec<Point> = cluster.indices.iter().map(|&i| realization.points[i]).collect();
    let h = rk.min(cluster.r_k.max(rk * 1e-3)) * AREA_RESOLUTION;
    Ok(union_area(&centers, rk, h, Some((cluster.commit, cluster.r_k))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMtlt {
    pub regime: Regime,
    /// s
    pub mtlt: f64,
    pub q: f64,
}

/// Phase-conditioned cooperative MTLT: R_max,1²/4D below c*, K/(4πλD) above.
pub fn mtlt_static(k: usize, density: f64, d: f64, r_max1: f64) -> Result<PhaseMtlt> {
    if k == 0 || !(density > 0.0) || !(d > 0.0) || !(r_max1 > 0.0) {
        return Err(Error::InvalidParam(format!("K={k}, density={density}, D={d}, R={r_max1}")));
    }
    let (q, regime) = geometry::percolation_parameter(density, r_max1);
    let mtlt = match regime {
        Regime::Subcritical => r_max1 * r_max1 / (4.0 * d),
        Regime::Supercritical => k as f64 / (4.0 * PI * density * d),
    };
    Ok(PhaseMtlt { regime, mtlt, q })
}

/// Union of equal disks; signed distance is R minus the distance to the
/// nearest centre. That understates the depth inside overlaps, so walkers
/// in an island run without the bridge test.
pub struct Island {
    centers: Vec<Point>,
    radius: f64,
    grid: GridIndex,
}

impl Island {
    pub fn new(centers: Vec<Point>, radius: f64) -> Self {
        let grid = GridIndex::new(&centers, radius);
        Self { centers, radius, grid }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

impl Domain for Island {
    fn signed_distance(&self, p: Point) -> f64 {
        let reach = 1.5 * self.radius;
        let mut best = reach * reach;
        self.grid.for_each_candidate(p, reach, |i| {
            best = best.min(dist2(self.centers[i], p));
        });
        self.radius - best.sqrt()
    }
}

/// Safe zone used for the cooperative walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoopZone {
    /// B(X0, r_K) on the realised K-th neighbour distance
    Footprint,
    /// the Boolean component (disks of R_max,1 on every BS) containing X0
    Island,
    /// disks of R_max,1 on the K nearest BSs only, component containing X0
    KnnUnion,
}

/// Realisation plus the structures the walkers query.
pub struct CoopNetwork {
    pub realization: PointSet,
    pub r_max1: f64,
    index: GridIndex,
    cover: GridIndex,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl CoopNetwork {
    pub fn new(realization: PointSet, r_max1: f64) -> Self {
        let index = geometry::knn_index(&realization);
        let cover = GridIndex::new(&realization.points, r_max1);
        let (labels, count) = geometry::boolean_components(&realization.points, r_max1);
        let mut members = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        Self { realization, r_max1, index, cover, labels, members }
    }

    /// Index of some BS whose disk covers `p`.
    pub fn covering(&self, p: Point) -> Option<usize> {
        let r2 = self.r_max1 * self.r_max1;
        let mut hit = None;
        self.cover.for_each_candidate(p, self.r_max1, |i| {
            if hit.is_none() && dist2(self.realization.points[i], p) < r2 {
                hit = Some(i);
            }
        });
        hit
    }

    pub fn cluster(&self, at: Point, k: usize) -> Result<Cluster> {
        commit_cluster(&self.realization, Some(&self.index), at, k)
    }

    pub fn island(&self, at: Point) -> Option<Island> {
        let seed = self.covering(at)?;
        let pts = self.members[self.labels[seed]].iter().map(|&i| self.realization.points[i]).collect();
        Some(Island::new(pts, self.r_max1))
    }

    /// Disks of the K nearest BSs, restricted to the components that cover `at`.
    pub fn knn_union(&self, cluster: &Cluster) -> Island {
        let pts: Vec<Point> = cluster.indices.iter().map(|&i| self.realization.points[i]).collect();
        let (labels, count) = geometry::boolean_components(&pts, self.r_max1);
        let r2 = self.r_max1 * self.r_max1;
        let mut keep = vec![false; count];
        for (p, &l) in pts.iter().zip(&labels) {
            if dist2(*p, cluster.commit) < r2 {
                keep[l] = true;
            }
        }
        let kept = pts.iter().zip(&labels).filter(|(_, l)| keep[**l]).map(|(p, _)| *p).collect();
        Island::new(kept, self.r_max1)
    }

    /// A uniform point of the central region; with `covered`, retried until
    /// some disk covers it.
    pub fn sample_start(&self, frac: f64, covered: bool, rng: &mut Rng) -> Result<Point> {
        for _ in 0..100_000 {
            let p = self.realization.region.sample_central(frac, rng);
            if !covered || self.covering(p).is_some() {
                return Ok(p);
            }
        }
        Err(Error::Infeasible("no covered point found in the central region".into()))
    }
}

fn exit_from(
    net: &CoopNetwork,
    zone: CoopZone,
    start: Point,
    k: usize,
    d: f64,
    opts: WalkOptions,
    rng: &mut Rng,
) -> Result<(f64, bool)> {
    match zone {
        CoopZone::Footprint => {
            let c = net.cluster(start, k)?;
            if c.r_k <= 0.0 {
                return Ok((0.0, false));
            }
            let diff = DiffusionParams::for_scale(d, c.r_k);
            let t_max = CENSOR_FACTOR * kinematics::mtlt_disk_analytic(c.r_k, d);
            Ok(kinematics::first_exit(&Disk { center: start, radius: c.r_k }, start, diff, t_max, opts, rng))
        }
        CoopZone::Island | CoopZone::KnnUnion => {
            let island = match zone {
                CoopZone::Island => match net.island(start) {
                    Some(i) => i,
                    None => return Ok((0.0, false)),
                },
                _ => net.knn_union(&net.cluster(start, k)?),
            };
            if island.is_empty() {
                return Ok((0.0, false));
            }
            let diff = DiffusionParams::for_scale(d, net.r_max1);
            let t_max = CENSOR_FACTOR * kinematics::mtlt_disk_analytic(net.r_max1, d) * island.len() as f64;
            let walk = WalkOptions { bridge: false };
            Ok(kinematics::first_exit(&island, start, diff, t_max, walk, rng))
        }
    }
}

/// Monte-Carlo MTLT of a cluster committed at `start` on one realisation.
pub fn simulate_coop_mtlt(
    net: &CoopNetwork,
    start: Point,
    k: usize,
    zone: CoopZone,
    d: f64,
    n: usize,
    seed: u64,
    opts: WalkOptions,
) -> Result<FptEnsemble> {
    if k == 0 || k > net.realization.len() {
        return Err(Error::InsufficientPoints { need: k, have: net.realization.len() });
    }
    let pairs = mc::par_map(seed, n, |_, rng| exit_from(net, zone, start, k, d, opts, rng));
    let pairs: Result<Vec<(f64, bool)>> = pairs.into_iter().collect();
    let t_max = pairs.as_ref().map(|p| p.iter().map(|x| x.0).fold(0.0, f64::max)).unwrap_or(0.0);
    Ok(FptEnsemble::from_pairs(pairs?, t_max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoopSweep {
    /// BS density, 1/m²
    pub density: f64,
    pub r_max1: f64,
    pub ks: Vec<usize>,
    pub zone: CoopZone,
    pub d: f64,
    pub n_realizations: usize,
    /// trajectories per realisation, each from its own start point
    pub n_trajectories: usize,
    pub side: f64,
    /// fraction of the region from which starts are drawn
    pub central: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoopSweepPoint {
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    /// mean of r_K²/4D over the same starts
    pub footprint_mean: f64,
    pub censored_fraction: f64,
}

/// MTLT against K with common random numbers: each trajectory fixes its start
/// and noise stream once and replays them for every K.
pub fn coop_mtlt_sweep(cfg: &CoopSweep, opts: WalkOptions) -> Result<Vec<CoopSweepPoint>> {
    if cfg.ks.is_empty() || cfg.n_realizations == 0 || cfg.n_trajectories == 0 {
        return Err(Error::InvalidParam("empty sweep".into()));
    }
    let nk = cfg.ks.len();
    let covered = cfg.zone != CoopZone::Footprint;
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); nk];
    let mut foot: Vec<Vec<f64>> = vec![Vec::new(); nk];
    let mut cens = vec![0usize; nk];
    for r in 0..cfg.n_realizations {
        let rs = mc::derive_seed(cfg.seed, r as u64);
        let pts = geometry::sample_hppp(cfg.density, Region::square(cfg.side), rs);
        let net = CoopNetwork::new(pts, cfg.r_max1);
        let kmax = *cfg.ks.iter().max().unwrap();
        if kmax > net.realization.len() {
            return Err(Error::InsufficientPoints { need: kmax, have: net.realization.len() });
        }
        let rows = mc::par_map(mc::derive_seed(rs, 1), cfg.n_trajectories, |_, rng| -> Result<Vec<(f64, bool, f64)>> {
            let start = net.sample_start(cfg.central, covered, rng)?;
            let base = rng.clone();
            cfg.ks
                .iter()
                .map(|&k| {
                    let mut walk = base.clone();
                    let (t, c) = exit_from(&net, cfg.zone, start, k, cfg.d, opts, &mut walk)?;
                    let rk = net.cluster(start, k)?.r_k;
                    Ok((t, c, rk * rk / (4.0 * cfg.d)))
                })
                .collect()
        });
        for row in rows {
            for (j, (t, c, f)) in row?.into_iter().enumerate() {
                times[j].push(t);
                foot[j].push(f);
                cens[j] += c as usize;
            }
        }
    }
    Ok(cfg
        .ks
        .iter()
        .enumerate()
        .map(|(j, &k)| CoopSweepPoint {
            k,
            mean: mc::mean(&times[j]),
            std_error: mc::std_error(&times[j]),
            footprint_mean: mc::mean(&foot[j]),
            censored_fraction: cens[j] as f64 / times[j].len() as f64,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    /// positive CCDF exponent over the whole window
    pub exponent: f64,
    pub std_error: f64,
    /// exponents on the lower and upper halves of the window (split in log CCDF)
    pub lower: f64,
    pub upper: f64,
    /// the two halves agree within `POWER_LAW_DRIFT`
    pub power_law: bool,
}

pub const MIN_TAIL_SAMPLES: usize = 10_000;
pub const DEFAULT_TAIL_WINDOW: (f64, f64) = (0.90, 0.999);
/// Largest relative gap between half-window exponents still called a power law.
pub const POWER_LAW_DRIFT: f64 = 0.25;

fn ccdf_slope(sorted: &[f64], lo: f64, hi: f64) -> Result<(f64, f64)> {
    let n = sorted.len();
    let i0 = (lo * n as f64).floor() as usize;
    let i1 = ((hi * n as f64).floor() as usize).min(n);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, &v) in sorted.iter().enumerate().take(i1).skip(i0) {
        if v > 0.0 {
            x.push(v.ln());
            y.push((1.0 - i as f64 / n as f64).ln());
        }
    }
    if x.len() < 3 || x.first() == x.last() {
        return Err(Error::InsufficientSamples { need: 3, have: x.len() });
    }
    let (slope, icept) = mc::linear_fit(&x, &y);
    let mx = mc::mean(&x);
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let res: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (b - icept - slope * a).powi(2)).collect();
    let se = (mc::pairwise_sum(&res) / (x.len() - 2) as f64 / mc::pairwise_sum(&sxx)).sqrt();
    Ok((-slope, se))
}

/// Least-squares slope of log CCDF against log t over the quantile window.
pub fn tail_exponent_fit(samples: &[f64], window: (f64, f64)) -> Result<TailFit> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_TAIL_SAMPLES, have: samples.len() });
    }
    let (lo, hi) = window;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParam(format!("window ({lo}, {hi})")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (exponent, std_error) = ccdf_slope(&sorted, lo, hi)?;
    let mid = 1.0 - ((1.0 - lo) * (1.0 - hi).max(1.0 / samples.len() as f64)).sqrt();
    let (lower, _) = ccdf_slope(&sorted, lo, mid)?;
    let (upper, _) = ccdf_slope(&sorted, mid, hi)?;
    let power_law = (upper - lower).abs() / exponent < POWER_LAW_DRIFT;
    Ok(TailFit { exponent, std_error, lower, upper, power_law })
}

/// Areas of every connected component of the Boolean model, one entry per
/// component.
pub fn component_areas(points: &[Point], radius: f64) -> Vec<f64> {
    let (labels, count) = geometry::boolean_components(points, radius);
    let mut members = vec![Vec::new(); count];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(points[i]);
    }
    let h = radius * AREA_RESOLUTION;
    members.iter().map(|m| union_area(m, radius, h, None)).collect()
}

/// Area of the component containing a uniformly drawn covered point of the
/// central region (so large components are drawn in proportion to area).
pub fn sample_connected_component(realization: &PointSet, radius: f64, seed: u64) -> Result<f64> {
    if !(radius > 0.0) || realization.is_empty() {
        return Err(Error::InvalidParam(format!("radius {radius}, {} points", realization.len())));
    }
    let net = CoopNetwork::new(realization.clone(), radius);
    let mut rng = mc::stream(seed, 0);
    let start = net.sample_start(0.8, true, &mut rng)?;
    let island = net.island(start).expect("start is covered");
    Ok(union_area(&island.centers, radius, radius * AREA_RESOLUTION, None))
}

/// MTLT proxy per component: area/(4πD), the disk value R²/4D at equal area.
pub fn area_to_mtlt(area: f64, d: f64) -> f64 {
    area / (4.0 * PI * d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEnsemble {
    pub q_values: Vec<f64>,
    pub samples: Vec<f64>,
}

/// One component-MTLT sample per Boolean component, pooled over realisations at
/// each Q in `q_values` (radius 1 m, square window of side `side`).
pub fn near_critical_ensemble(q_values: &[f64], side: f64, n_realizations: usize, d: f64, seed: u64) -> TailEnsemble {
    let radius = 1.0;
    let mut samples = Vec::new();
    for (qi, &q) in q_values.iter().enumerate() {
        let density = q / (PI * radius * radius);
        let per: Vec<Vec<f64>> = mc::par_map(mc::derive_seed(seed, qi as u64), n_realizations, |_, rng| {
            let pts = geometry::sample_hppp_with(density, Region::square(side), rng);
            component_areas(&pts.points, radius).into_iter().map(|a| area_to_mtlt(a, d)).collect()
        });
        samples.extend(per.into_iter().flatten());
    }
    TailEnsemble { q_values: q_values.to_vec(), samples }
}
