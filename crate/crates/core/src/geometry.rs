//! Point processes, nearest-neighbour queries and Boolean-model connectivity.

use crate::error::{Error, Result};
use crate::mc;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

pub type Point = [f64; 2];

/// Continuum percolation threshold of the planar Boolean model, Q = λπR².
pub const C_STAR: f64 = 1.128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
    pub centered: bool,
}

impl Region {
    pub fn new(width: f64, height: f64, centered: bool) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidParam(format!("region {width} x {height}")));
        }
        Ok(Self { width, height, centered })
    }

    pub fn square(side: f64) -> Self {
        Self { width: side, height: side, centered: true }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// (x_min, y_min, x_max, y_max)
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        if self.centered {
            (-0.5 * self.width, -0.5 * self.height, 0.5 * self.width, 0.5 * self.height)
        } else {
            (0.0, 0.0, self.width, self.height)
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let (x0, y0, x1, y1) = self.bounds();
        p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1
    }

    /// Distance from `p` to the nearest region edge (0 outside).
    pub fn edge_distance(&self, p: Point) -> f64 {
        let (x0, y0, x1, y1) = self.bounds();
        (p[0] - x0).min(x1 - p[0]).min(p[1] - y0).min(y1 - p[1]).max(0.0)
    }

    /// Uniform point in the central `frac` of each side.
    pub fn sample_central<R: Rng>(&self, frac: f64, rng: &mut R) -> Point {
        let (x0, y0, x1, y1) = self.bounds();
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        [
            cx + (rng.random::<f64>() - 0.5) * frac * self.width,
            cy + (rng.random::<f64>() - 0.5) * frac * self.height,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub density: f64,
    pub min_spacing: f64,
    pub region: Region,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Realised intensity (count / area).
    pub fn empirical_density(&self) -> f64 {
        self.points.len() as f64 / self.region.area()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
    /// The query sits closer to the region edge than r_K, so the
    /// neighbourhood may be truncated.
    pub near_edge: bool,
}

impl KnnResult {
    pub fn r_k(&self) -> f64 {
        *self.distances.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Supercritical,
}

pub fn sample_hppp(density: f64, region: Region, seed: u64) -> PointSet {
    let mut rng = mc::stream(seed, 0);
    sample_hppp_with(density, region, &mut rng)
}

pub fn sample_hppp_with<R: Rng>(density: f64, region: Region, rng: &mut R) -> PointSet {
    let mean = density * region.area();
    let n = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    let (x0, y0, _, _) = region.bounds();
    let points = (0..n)
        .map(|_| {
            [
                x0 + rng.random::<f64>() * region.width,
                y0 + rng.random::<f64>() * region.height,
            ]
        })
        .collect();
    PointSet { points, density, min_spacing: 0.0, region }
}

/// Sequential hard-core thinning in a seed-randomised order.
///
/// The `density` of the result is the realised intensity after thinning.
pub fn apply_hardcore(points: &PointSet, min_spacing: f64, seed: u64) -> PointSet {
    if min_spacing <= 0.0 || points.is_empty() {
        return points.clone();
    }
    let mut rng = mc::stream(seed, 1);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut rng);
    let mut grid = DynamicGrid::new(min_spacing);
    let mut kept = Vec::new();
    for i in order {
        let p = points.points[i];
        if !grid.any_within(p, min_spacing) {
            grid.insert(p);
            kept.push(p);
        }
    }
    let area = points.region.area();
    PointSet {
        density: kept.len() as f64 / area,
        points: kept,
        min_spacing,
        region: points.region,
    }
}

/// Incremental hash grid, used by the hard-core thinning.
struct DynamicGrid {
    cell: f64,
    map: std::collections::HashMap<(i64, i64), Vec<Point>>,
}

impl DynamicGrid {
    fn new(cell: f64) -> Self {
        Self { cell, map: Default::default() }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(p);
    }

    fn any_within(&self, p: Point, r: f64) -> bool {
        let (kx, ky) = self.key(p);
        let r2 = r * r;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.map.get(&(kx + dx, ky + dy)) {
                    if v.iter().any(|q| dist2(*q, p) < r2) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[inline]
pub fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Static uniform-grid index over a point slice (CSR layout).
#[derive(Debug, Clone)]
pub struct GridIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl GridIndex {
    pub fn new(points: &[Point], cell: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        if points.is_empty() {
            (x0, y0, x1, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        let nx = (((x1 - x0) / cell).floor() as usize + 1).max(1);
        let ny = (((y1 - y0) / cell).floor() as usize + 1).max(1);
        let mut counts = vec![0u32; nx * ny + 1];
        let cell_of = |p: &Point| {
            let cx = (((p[0] - x0) / cell) as usize).min(nx - 1);
            let cy = (((p[1] - y0) / cell) as usize).min(ny - 1);
            cy * nx + cx
        };
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Self { x0, y0, cell, nx, ny, start: counts, items }
    }

    fn cell_coords(&self, p: Point) -> (i64, i64) {
        (((p[0] - self.x0) / self.cell).floor() as i64, ((p[1] - self.y0) / self.cell).floor() as i64)
    }

    fn cell_items(&self, cx: i64, cy: i64) -> &[u32] {
        if cx < 0 || cy < 0 || cx >= self.nx as i64 || cy >= self.ny as i64 {
            return &[];
        }
        let c = cy as usize * self.nx + cx as usize;
        &self.items[self.start[c] as usize..self.start[c + 1] as usize]
    }

    /// Call `f(index)` for every point in cells overlapping the disk B(p, r).
    pub fn for_each_candidate<F: FnMut(usize)>(&self, p: Point, r: f64, mut f: F) {
        let (cx, cy) = self.cell_coords(p);
        let reach = (r / self.cell).ceil() as i64;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                for &i in self.cell_items(cx + dx, cy + dy) {
                    f(i as usize);
                }
            }
        }
    }

    /// Any point strictly within distance r of p.
    pub fn any_within(&self, points: &[Point], p: Point, r: f64) -> bool {
        let (cx, cy) = self.cell_coords(p);
        let reach = (r / self.cell).ceil() as i64;
        let r2 = r * r;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if self.cell_items(cx + dx, cy + dy).iter().any(|&i| dist2(points[i as usize], p) < r2) {
                    return true;
                }
            }
        }
        false
    }

    /// Exact k nearest neighbours by ring expansion.
    fn knn(&self, points: &[Point], q: Point, k: usize) -> Vec<(f64, usize)> {
        let (cx, cy) = self.cell_coords(q);
        let last_ring = self.nx.max(self.ny) as i64 + cx.abs().max(cy.abs()) + 1;
        let mut best: Vec<(f64, usize)> = Vec::new();
        for ring in 0..=last_ring {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    for &i in self.cell_items(cx + dx, cy + dy) {
                        best.push((dist2(points[i as usize], q), i as usize));
                    }
                }
            }
            if best.len() >= k {
                best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                best.truncate(k);
                // anything not yet visited is at least ring*cell away
                let safe = ring as f64 * self.cell;
                if best[k - 1].0 < safe * safe {
                    break;
                }
            }
        }
        best
    }
}

const BRUTE_FORCE_LIMIT: usize = 10_000;

/// Exact K nearest points to `query`; ties go to the lower index.
pub fn knn(points: &PointSet, query: Point, k: usize) -> Result<KnnResult> {
    let index = (points.len() > BRUTE_FORCE_LIMIT).then(|| knn_index(points));
    knn_with(points, index.as_ref(), query, k)
}

/// Grid index sized for K-NN queries on `points`.
pub fn knn_index(points: &PointSet) -> GridIndex {
    let cell = (4.0 / points.empirical_density().max(1e-300)).sqrt();
    GridIndex::new(&points.points, cell)
}

pub fn knn_with(points: &PointSet, index: Option<&GridIndex>, query: Point, k: usize) -> Result<KnnResult> {
    if k > points.len() || k == 0 {
        return Err(Error::InsufficientPoints { need: k, have: points.len() });
    }
    let best = match index {
        Some(g) => g.knn(&points.points, query, k),
        None => {
            let mut all: Vec<(f64, usize)> =
                points.points.iter().enumerate().map(|(i, p)| (dist2(*p, query), i)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < all.len() {
                all.select_nth_unstable_by(k - 1, cmp);
                all.truncate(k);
            }
            all.sort_by(cmp);
            all
        }
    };
    let distances: Vec<f64> = best.iter().map(|b| b.0.sqrt()).collect();
    let r_k = *distances.last().unwrap();
    Ok(KnnResult {
        indices: best.iter().map(|b| b.1).collect(),
        near_edge: points.region.edge_distance(query) < r_k,
        distances,
    })
}

/// E[r_k^{-2s} | r_k > r_min] under the Gamma(k, 1/(πλ)) law of r_k².
pub fn knn_moment(k: usize, density: f64, s: f64, r_min: f64) -> Result<f64> {
    use crate::phy::special::{gamma, gamma_upper};
    if !(density > 0.0) || k == 0 || r_min < 0.0 {
        return Err(Error::InvalidParam(format!("k={k}, density={density}, r_min={r_min}")));
    }
    let pl = std::f64::consts::PI * density;
    if r_min == 0.0 {
        if (k as f64) <= s {
            return Err(Error::DivergentMoment { k, s });
        }
        return Ok(pl.powf(s) * gamma(k as f64 - s) / gamma(k as f64));
    }
    let x = pl * r_min * r_min;
    let num = gamma_upper(k as f64 - s, x)?;
    let den = gamma_upper(k as f64, x)?;
    Ok(pl.powf(s) * num / den)
}

/// Q = λπR² and its phase; Q exactly at the threshold counts as sub-critical.
pub fn percolation_parameter(density: f64, radius: f64) -> (f64, Regime) {
    let q = density * std::f64::consts::PI * radius * radius;
    (q, if q > C_STAR { Regime::Supercritical } else { Regime::Subcritical })
}

/// Disjoint-set forest with path halving and union by size.
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = self.parent[x] as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }
}

/// Component labels (0..n_components, numbered by first member) of the
/// Boolean model with disks of `radius` centred on `points`.
pub fn boolean_components(points: &[Point], radius: f64) -> (Vec<usize>, usize) {
    let n = points.len();
    let grid = GridIndex::new(points, 2.0 * radius);
    let mut uf = UnionFind::new(n);
    let r2 = 4.0 * radius * radius;
    for i in 0..n {
        grid.for_each_candidate(points[i], 2.0 * radius, |j| {
            if j > i && dist2(points[i], points[j]) < r2 {
                uf.union(i, j);
            }
        });
    }
    let mut label = vec![usize::MAX; n];
    let mut root_label = vec![usize::MAX; n];
    let mut count = 0;
    for i in 0..n {
        let r = uf.find(i);
        if root_label[r] == usize::MAX {
            root_label[r] = count;
            count += 1;
        }
        label[i] = root_label[r];
    }
    (label, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn set(points: Vec<Point>) -> PointSet {
        PointSet { points, density: 0.0, min_spacing: 0.0, region: Region::square(1e4) }
    }

    #[test]
    fn empty_at_zero_density() {
        assert!(sample_hppp(0.0, Region::square(100.0), 1).is_empty());
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let r = Region::square(3000.0);
        assert_eq!(sample_hppp(1e-5, r, 9), sample_hppp(1e-5, r, 9));
        assert_ne!(sample_hppp(1e-5, r, 9), sample_hppp(1e-5, r, 10));
    }

    #[test]
    fn hppp_count_mean() {
        let r = Region::new(1e4, 1e3, true).unwrap();
        let counts: Vec<f64> = (0..1000).map(|s| sample_hppp(1e-5, r, s).len() as f64).collect();
        let m = mc::mean(&counts);
        // 3σ of the mean of 1000 Poisson(100) draws
        assert!((m - 100.0).abs() < 3.0 * (100.0f64 / 1000.0).sqrt(), "{m}");
        assert!(counts.iter().all(|c| *c >= 0.0));
    }

    #[test]
    fn hardcore_forced_pair() {
        let s = set(vec![[0.0, 0.0], [10.0, 0.0]]);
        assert_eq!(apply_hardcore(&s, 50.0, 3).len(), 1);
        assert_eq!(apply_hardcore(&s, 0.0, 3), s);
    }

    #[test]
    fn hardcore_density_retention() {
        // retention of a random-order sequential thinning is 1 - x/2 + O(x²)
        // with x = λπd², the same leading order as Matérn II
        let r = Region::square(10_000.0);
        let x = 1e-5 * std::f64::consts::PI * 2500.0;
        let matern2 = (1.0 - (-x).exp()) / x;
        let mut kept = 0.0;
        let mut raw_n = 0.0;
        for seed in 0..20 {
            let raw = sample_hppp(1e-5, r, seed);
            let thin = apply_hardcore(&raw, 50.0, seed);
            kept += thin.len() as f64;
            raw_n += raw.len() as f64;
            for i in 0..thin.len() {
                for j in 0..i {
                    assert!(dist2(thin.points[i], thin.points[j]) >= 2500.0);
                }
            }
        }
        let retention = kept / raw_n;
        assert!((retention - matern2).abs() < 0.01, "{retention} vs {matern2}");
    }

    #[test]
    fn knn_pythagorean_and_errors() {
        let s = set(vec![[3.0, 4.0]]);
        let r = knn(&s, [0.0, 0.0], 1).unwrap();
        assert_eq!(r.distances, vec![5.0]);
        assert!(matches!(knn(&s, [0.0, 0.0], 2), Err(Error::InsufficientPoints { .. })));
    }

    #[test]
    fn knn_matches_sort_oracle() {
        for seed in 0..100 {
            let mut rng = mc::stream(seed, 99);
            let pts: Vec<Point> =
                (0..500).map(|_| [rng.random::<f64>() * 1e3, rng.random::<f64>() * 1e3]).collect();
            let s = set(pts.clone());
            let q = [rng.random::<f64>() * 1e3, rng.random::<f64>() * 1e3];
            let mut oracle: Vec<(f64, usize)> =
                pts.iter().enumerate().map(|(i, p)| (((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)), i)).collect();
            oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let want: Vec<usize> = oracle.iter().take(10).map(|o| o.1).collect();
            assert_eq!(knn(&s, q, 10).unwrap().indices, want);
            let g = GridIndex::new(&pts, 30.0);
            assert_eq!(knn_with(&s, Some(&g), q, 10).unwrap().indices, want);
            let all = knn(&s, q, 500).unwrap();
            assert!(all.distances.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn grid_knn_far_outside_query() {
        let pts: Vec<Point> = (0..50).map(|i| [i as f64, 0.0]).collect();
        let s = set(pts);
        let g = GridIndex::new(&s.points, 2.0);
        let r = knn_with(&s, Some(&g), [500.0, 300.0], 3).unwrap();
        assert_eq!(r.indices, vec![49, 48, 47]);
    }

    #[test]
    fn moment_closed_forms() {
        assert_eq!(knn_moment(4, 1e-5, 0.0, 0.0).unwrap(), 1.0);
        let pl = std::f64::consts::PI * 1e-5;
        let v = knn_moment(3, 1e-5, 2.0, 0.0).unwrap();
        assert!(((v - pl * pl / 2.0) / v).abs() < 1e-14);
        assert!(matches!(knn_moment(2, 1e-5, 2.0, 0.0), Err(Error::DivergentMoment { .. })));
        assert!(knn_moment(1, 1e-5, 2.0, 10.0).unwrap().is_finite());
    }

    #[test]
    fn guarded_moment_matches_monte_carlo() {
        use rand_distr::Gamma;
        // r_1² ~ Exp(πλ); conditional mean of r^-4 beyond r_min = 10 m
        let lam = 1e-5;
        let g = Gamma::new(1.0, 1.0 / (std::f64::consts::PI * lam)).unwrap();
        let mut rng = mc::stream(5, 0);
        let mut acc = Vec::new();
        for _ in 0..1_000_000 {
            let u: f64 = g.sample(&mut rng);
            if u > 100.0 {
                acc.push(1.0 / (u * u));
            }
        }
        let mc_v = mc::mean(&acc);
        let v = knn_moment(1, lam, 2.0, 10.0).unwrap();
        assert!(((mc_v - v) / v).abs() < 0.01, "{mc_v} {v}");
    }

    #[test]
    fn percolation_boundary() {
        let lam = 0.5e-6;
        let r = (0.67 / (std::f64::consts::PI * lam)).sqrt();
        assert_eq!(percolation_parameter(lam, r).1, Regime::Subcritical);
        let lam = 10e-6;
        let r = (2.98 / (std::f64::consts::PI * lam)).sqrt();
        assert_eq!(percolation_parameter(lam, r).1, Regime::Supercritical);
        let r = (C_STAR / std::f64::consts::PI).sqrt();
        let (q, regime) = percolation_parameter(1.0, r);
        assert!((q - C_STAR).abs() < 1e-12);
        if q <= C_STAR {
            assert_eq!(regime, Regime::Subcritical);
        }
        assert_eq!(percolation_parameter(1.0 / std::f64::consts::PI, C_STAR.sqrt()).1, Regime::Subcritical);
    }

    #[test]
    fn components_on_a_chain() {
        let pts = vec![[0.0, 0.0], [1.5, 0.0], [3.0, 0.0], [10.0, 0.0]];
        let (lab, n) = boolean_components(&pts, 1.0);
        assert_eq!(n, 2);
        assert_eq!(lab, vec![0, 0, 0, 1]);
    }

    proptest! {
        #[test]
        fn percolation_monotone(l in 1e-7f64..1e-3, r in 1.0f64..1e3, f in 1.0f64..4.0) {
            let (q, _) = percolation_parameter(l, r);
            prop_assert!(percolation_parameter(l * f, r).0 >= q);
            prop_assert!(percolation_parameter(l, r * f).0 >= q);
        }

        #[test]
        fn hardcore_spacing_holds(seed in 0u64..1000, d in 5.0f64..200.0) {
            let raw = sample_hppp(2e-5, Region::square(5000.0), seed);
            let thin = apply_hardcore(&raw, d, seed);
            for i in 0..thin.len() {
                for j in 0..i {
                    prop_assert!(dist2(thin.points[i], thin.points[j]) >= d * d);
                }
            }
        }
    }
}
