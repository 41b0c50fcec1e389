//! Finite metric-measure spaces of homogeneous type.
//!
//! A [`Space`] is a finite point set with a validated metric matrix and
//! strictly positive point masses. Balls are open, `B(x, t) = {y : d(x, y) < t}`,
//! and `V(x, t)` is the mass of that ball.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative slack used when checking metric axioms on floating-point input.
const METRIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    labels: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
    dist: DMatrix<f64>,
    weights: Vec<f64>,
    diameter: f64,
}

/// A point where the growth ratio `V(x, st) / (s^q V(x, t))` is maximal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingWitness {
    pub x: usize,
    pub t: f64,
    pub s: f64,
    pub ratio: f64,
}

/// Fitted growth constant `C0` for a candidate exponent `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingProfile {
    pub q: f64,
    pub c0: f64,
    pub samples: Vec<DoublingWitness>,
}

/// Growth exponent picked from a grid of [`DoublingProfile`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub q: f64,
    pub c0: f64,
    pub profiles: Vec<DoublingProfile>,
}

/// Power-law lower envelope `V(y, s) >= c s^kappa` over a range of radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerVolumeFit {
    pub c: f64,
    pub kappa: f64,
}

impl Space {
    /// Validates and builds a space from a distance matrix and point masses.
    pub fn new(dist: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::with_labels(dist, weights, labels)
    }

    pub fn with_labels(dist: DMatrix<f64>, weights: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("space needs at least one point".into()));
        }
        if dist.nrows() != n || dist.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "metric is {}x{} but {} weights were given",
                dist.nrows(),
                dist.ncols(),
                n
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!("{} labels for {} points", labels.len(), n)));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::MeasureViolation(format!("weight of point {i} is {w}")));
            }
        }
        let diameter = validate_metric(&dist)?;
        Ok(Space { labels, coords: None, dist, weights, diameter })
    }

    /// Builds the shortest-path metric of a weighted edge list, then validates it.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {} points", weights.len(), n)));
        }
        let dist = shortest_paths(n, edges)?;
        Self::new(dist, weights)
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.n() {
            return Err(Error::DimensionMismatch(format!("{} coordinates for {} points", coords.len(), self.n())));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[(x, y)]
    }

    pub fn dist_matrix(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Open ball `{y : d(center, y) < radius}`.
    pub fn ball(&self, center: usize, radius: f64) -> Result<Vec<usize>> {
        self.check_radius(center, radius)?;
        Ok(self.ball_members(center, radius))
    }

    /// `V(center, radius) = μ(B(center, radius))`.
    pub fn volume(&self, center: usize, radius: f64) -> Result<f64> {
        self.check_radius(center, radius)?;
        Ok(self.volume_of(center, radius))
    }

    fn check_radius(&self, center: usize, radius: f64) -> Result<()> {
        if center >= self.n() {
            return Err(Error::InvalidArgument(format!("point {center} out of range")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        Ok(())
    }

    /// Open-ball membership without argument checks; empty for `radius <= 0`.
    pub(crate) fn ball_members(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.n()).filter(|&y| self.dist[(center, y)] < radius).collect()
    }

    pub(crate) fn volume_of(&self, center: usize, radius: f64) -> f64 {
        (0..self.n())
            .filter(|&y| self.dist[(center, y)] < radius)
            .map(|y| self.weights[y])
            .sum()
    }

    /// Smallest distance between two point sets.
    pub fn set_distance(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for &x in a {
            for &y in b {
                best = best.min(self.dist[(x, y)]);
            }
        }
        best
    }

    /// Sorted distinct positive pairwise distances.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let n = self.n();
        let mut all: Vec<f64> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                all.push(self.dist[(i, j)]);
            }
        }
        dedup_sorted(all, self.diameter * METRIC_TOL)
    }

    /// Distances scaled by `tau^{-1/2}`; weights unchanged.
    pub fn rescale_metric(&self, tau: f64) -> Result<Space> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("rescale factor must be positive, got {tau}")));
        }
        let f = tau.powf(-0.5);
        Ok(Space {
            labels: self.labels.clone(),
            coords: self.coords.clone(),
            dist: self.dist.map(|d| d * f),
            weights: self.weights.clone(),
            diameter: self.diameter * f,
        })
    }

    /// Exhaustive growth constant `C0(q) = sup V(x, st) / (s^q V(x, t))` over
    /// every point and every pair of radii on the step grid of `V`.
    pub fn doubling_profile(&self, q_grid: &[f64]) -> Result<Vec<DoublingProfile>> {
        if q_grid.is_empty() {
            return Err(Error::InvalidArgument("empty q grid".into()));
        }
        if let Some(q) = q_grid.iter().find(|q| !(**q > 0.0)) {
            return Err(Error::InvalidArgument(format!("growth exponent must be positive, got {q}")));
        }
        let radii = self.radius_grid();
        // V(x, r) for every x and every grid radius, computed once.
        let volumes: Vec<Vec<f64>> = (0..self.n())
            .into_par_iter()
            .map(|x| self.volumes_on_grid(x, &radii))
            .collect();
        Ok(q_grid
            .iter()
            .map(|&q| doubling_for_q(q, &radii, &volumes))
            .collect())
    }

    /// Picks the smallest `q` on the grid whose `C0(q)` stays within twice the
    /// constant at the largest `q`; the growth constant always exists on a
    /// finite space, so the cap is what makes "smallest `q`" meaningful.
    pub fn fit_growth_exponent(&self, q_grid: &[f64]) -> Result<GrowthFit> {
        let mut profiles = self.doubling_profile(q_grid)?;
        profiles.sort_by(|a, b| a.q.partial_cmp(&b.q).unwrap_or(Ordering::Equal));
        let reference = profiles.last().map(|p| p.c0).unwrap_or(1.0);
        let chosen = profiles
            .iter()
            .find(|p| p.c0 <= 2.0 * reference)
            .cloned()
            .unwrap_or_else(|| profiles.last().cloned().unwrap());
        Ok(GrowthFit { q: chosen.q, c0: chosen.c0, profiles })
    }

    /// Lower power-law envelope `V(y, s) >= c s^kappa` on `s_range`, clipped
    /// at the diameter. Among `kappa` on a 1e-3 grid in [0, 8], the chosen
    /// envelope minimizes the total log-gap to the volume profile; ties go to
    /// the smaller exponent.
    pub fn check_lower_volume(&self, y: usize, s_range: (f64, f64)) -> Result<LowerVolumeFit> {
        if self.n() < 2 {
            return Err(Error::InvalidArgument("lower volume fit needs at least two points".into()));
        }
        if y >= self.n() {
            return Err(Error::InvalidArgument(format!("point {y} out of range")));
        }
        let lo = s_range.0.max(1.0);
        let hi = s_range.1.min(self.diameter);
        if !(hi > lo) {
            return Err(Error::DegenerateRange(format!(
                "s range ({}, {}] is empty after clipping to (1, {}]",
                s_range.0, s_range.1, self.diameter
            )));
        }
        // V is left-continuous and constant between consecutive distances from
        // y, so V/s^kappa is minimized at right ends of those intervals.
        let mut radii: Vec<f64> = (0..self.n())
            .map(|z| self.dist[(y, z)])
            .filter(|&d| d > lo && d <= hi)
            .collect();
        radii.push(hi);
        let radii = dedup_sorted(radii, 0.0);
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .map(|&s| (s.ln(), self.volume_of(y, s).ln()))
            .collect();

        let mut best = (f64::INFINITY, 0.0, 0.0);
        for step in 0..=8000 {
            let kappa = step as f64 * 1e-3;
            let log_c = pts.iter().map(|(ls, lv)| lv - kappa * ls).fold(f64::INFINITY, f64::min);
            let gap: f64 = pts.iter().map(|(ls, lv)| lv - log_c - kappa * ls).sum();
            if gap < best.0 - 1e-12 {
                best = (gap, kappa, log_c);
            }
        }
        Ok(LowerVolumeFit { c: best.2.exp(), kappa: best.1 })
    }

    /// Distinct distances, each also shifted by ±1e-9·diam, plus midpoints
    /// between neighbours: every value `V(x, ·)` takes, probed on both sides
    /// of each jump.
    pub(crate) fn radius_grid(&self) -> Vec<f64> {
        let d = self.distinct_distances();
        let eps = 1e-9 * self.diameter;
        let mut grid = Vec::with_capacity(4 * d.len());
        for (k, &r) in d.iter().enumerate() {
            grid.push(r);
            grid.push(r + eps);
            if r - eps > 0.0 {
                grid.push(r - eps);
            }
            if let Some(&next) = d.get(k + 1) {
                grid.push(0.5 * (r + next));
            }
        }
        dedup_sorted(grid, 0.0)
    }

    fn volumes_on_grid(&self, x: usize, radii: &[f64]) -> Vec<f64> {
        let mut by_dist: Vec<(f64, f64)> = (0..self.n()).map(|y| (self.dist[(x, y)], self.weights[y])).collect();
        by_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut out = Vec::with_capacity(radii.len());
        let mut k = 0;
        let mut acc = 0.0;
        for &r in radii {
            while k < by_dist.len() && by_dist[k].0 < r {
                acc += by_dist[k].1;
                k += 1;
            }
            out.push(acc);
        }
        out
    }

    /// Checks `(1+d(i,j))^β <= (1+d(i,k))^β (1+d(k,j))^β` on all triples.
    pub fn check_submultiplicative(&self, beta: f64) -> Result<()> {
        let n = self.n();
        let bad = (0..n).into_par_iter().find_map_first(|i| {
            for k in 0..n {
                for j in 0..n {
                    let lhs = (1.0 + self.dist[(i, j)]).powf(beta);
                    let rhs = (1.0 + self.dist[(i, k)]).powf(beta) * (1.0 + self.dist[(k, j)]).powf(beta);
                    if lhs > rhs * (1.0 + METRIC_TOL) {
                        return Some((i, j, k));
                    }
                }
            }
            None
        });
        match bad {
            Some((i, j, k)) => Err(Error::MetricViolation(format!(
                "weight (1+d)^{beta} not submultiplicative at ({i}, {j}) through {k}"
            ))),
            None => Ok(()),
        }
    }
}

fn doubling_for_q(q: f64, radii: &[f64], volumes: &[Vec<f64>]) -> DoublingProfile {
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    // s -> 1+ with V unchanged gives ratio 1, so C0 >= 1 always.
    let mut per_x: Vec<DoublingWitness> = Vec::with_capacity(volumes.len());
    for (x, vols) in volumes.iter().enumerate() {
        let mut best = DoublingWitness { x, t: radii.first().copied().unwrap_or(1.0), s: 1.0, ratio: 1.0 };
        let mut best_log = 0.0;
        // ratio(i<j) = [V_j / r_j^q] * [r_i^q / V_i]; keep a running max of the second factor.
        let mut prefix: Option<(f64, usize)> = None;
        for j in 0..radii.len() {
            if let Some((p, i)) = prefix {
                if vols[j] > 0.0 {
                    let l = vols[j].ln() - q * log_r[j] + p;
                    if l > best_log {
                        best_log = l;
                        best = DoublingWitness { x, t: radii[i], s: radii[j] / radii[i], ratio: l.exp() };
                    }
                }
            }
            if vols[j] > 0.0 {
                let cand = q * log_r[j] - vols[j].ln();
                if prefix.map_or(true, |(p, _)| cand > p) {
                    prefix = Some((cand, j));
                }
            }
        }
        per_x.push(best);
    }
    let c0 = per_x.iter().map(|w| w.ratio).fold(1.0, f64::max);
    let samples = per_x
        .into_iter()
        .filter(|w| w.ratio >= c0 * (1.0 - 1e-12))
        .collect();
    DoublingProfile { q, c0, samples }
}

fn validate_metric(dist: &DMatrix<f64>) -> Result<f64> {
    let n = dist.nrows();
    let mut diam: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = dist[(i, j)];
            if !d.is_finite() {
                return Err(Error::MetricViolation(format!("d({i}, {j}) = {d} is not finite")));
            }
            if i == j {
                if d != 0.0 {
                    return Err(Error::MetricViolation(format!("d({i}, {i}) = {d}, expected 0")));
                }
                continue;
            }
            if d < 0.0 {
                return Err(Error::MetricViolation(format!("d({i}, {j}) = {d} is negative")));
            }
            if d == 0.0 {
                return Err(Error::MetricViolation(format!("points {i} and {j} coincide")));
            }
            if (d - dist[(j, i)]).abs() > METRIC_TOL * d.max(1.0) {
                return Err(Error::MetricViolation(format!(
                    "asymmetric: d({i}, {j}) = {d} but d({j}, {i}) = {}",
                    dist[(j, i)]
                )));
            }
            diam = diam.max(d);
        }
    }
    let slack = METRIC_TOL * diam.max(1.0);
    let bad = (0..n).into_par_iter().find_map_first(|i| {
        for j in 0..n {
            let dij = dist[(i, j)];
            for k in 0..n {
                if dist[(i, k)] > dij + dist[(j, k)] + slack {
                    return Some((i, j, k));
                }
            }
        }
        None
    });
    if let Some((i, j, k)) = bad {
        return Err(Error::MetricViolation(format!(
            "triangle inequality fails: d({i}, {k}) = {} > d({i}, {j}) + d({j}, {k}) = {}",
            dist[(i, k)],
            dist[(i, j)] + dist[(j, k)]
        )));
    }
    Ok(diam)
}

/// Floyd–Warshall completion of a weighted edge list.
pub fn shortest_paths(n: usize, edges: &[(usize, usize, f64)]) -> Result<DMatrix<f64>> {
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for &(i, j, w) in edges {
        if i >= n || j >= n {
            return Err(Error::DimensionMismatch(format!("edge ({i}, {j}) out of range for {n} points")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::MetricViolation(format!("edge ({i}, {j}) has length {w}")));
        }
        if i == j {
            continue;
        }
        if w < d[(i, j)] {
            d[(i, j)] = w;
            d[(j, i)] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[(k, j)];
                if cand < d[(i, j)] {
                    d[(i, j)] = cand;
                }
            }
        }
    }
    if let Some(idx) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::MetricViolation(format!(
            "graph is disconnected (no path for entry {idx})"
        )));
    }
    Ok(d)
}

fn dedup_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if x - last <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> Space {
        let d = DMatrix::from_fn(3, 3, |i, j| (i as f64 - j as f64).abs());
        Space::new(d, vec![1.0; 3]).unwrap()
    }

    fn cycle(n: usize) -> Space {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Space::from_edges(n, &edges, vec![1.0; n]).unwrap()
    }

    #[test]
    fn collinear_points_are_valid() {
        let s = line3();
        assert_eq!(s.n(), 3);
        assert_eq!(s.diameter(), 2.0);
        s.check_submultiplicative(1.0).unwrap();
    }

    #[test]
    fn triangle_failure_is_rejected() {
        let mut d = DMatrix::from_fn(3, 3, |i, j| (i as f64 - j as f64).abs());
        d[(0, 2)] = 5.0;
        d[(2, 0)] = 5.0;
        assert!(matches!(Space::new(d, vec![1.0; 3]), Err(Error::MetricViolation(_))));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let d = DMatrix::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 1.0 });
        assert!(matches!(Space::new(d.clone(), vec![1.0, 0.0]), Err(Error::MeasureViolation(_))));
        assert!(matches!(Space::new(d.clone(), vec![1.0]), Err(Error::DimensionMismatch(_))));
        let mut asym = d.clone();
        asym[(0, 1)] = 2.0;
        assert!(matches!(Space::new(asym, vec![1.0; 2]), Err(Error::MetricViolation(_))));
        let dup = DMatrix::zeros(2, 2);
        assert!(matches!(Space::new(dup, vec![1.0; 2]), Err(Error::MetricViolation(_))));
        let mut neg = d;
        neg[(0, 1)] = -1.0;
        neg[(1, 0)] = -1.0;
        assert!(matches!(Space::new(neg, vec![1.0; 2]), Err(Error::MetricViolation(_))));
    }

    #[test]
    fn cycle_metric_matches_hop_count() {
        let s = cycle(8);
        for i in 0..8 {
            for j in 0..8 {
                let k = (i as i64 - j as i64).unsigned_abs() as usize;
                assert_eq!(s.dist(i, j), k.min(8 - k) as f64);
            }
        }
        s.check_submultiplicative(1.0).unwrap();
    }

    #[test]
    fn disconnected_edges_fail() {
        let r = Space::from_edges(3, &[(0, 1, 1.0)], vec![1.0; 3]);
        assert!(matches!(r, Err(Error::MetricViolation(_))));
    }

    #[test]
    fn balls_are_open() {
        let s = line3();
        assert_eq!(s.ball(1, 1.5).unwrap(), vec![0, 1, 2]);
        assert_eq!(s.ball(1, 0.5).unwrap(), vec![1]);
        assert_eq!(s.ball(1, 1.0).unwrap(), vec![1]);
        assert!(s.ball(1, 0.0).is_err());
        assert_eq!(s.volume(1, 1.5).unwrap(), 3.0);
        assert_eq!(s.volume(1, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn cycle_volume_excludes_boundary() {
        let s = cycle(8);
        for x in 0..8 {
            assert_eq!(s.volume(x, 2.0).unwrap(), 3.0);
        }
    }

    #[test]
    fn single_point_growth_constant_is_one() {
        let s = Space::new(DMatrix::zeros(1, 1), vec![2.5]).unwrap();
        for p in s.doubling_profile(&[0.5, 1.0, 3.0]).unwrap() {
            assert_eq!(p.c0, 1.0);
        }
    }

    #[test]
    fn collinear_growth_constant_is_three() {
        // V jumps from 1 to 3 just past t = 1 at the middle point.
        let p = &line3().doubling_profile(&[1.0]).unwrap()[0];
        assert!((p.c0 - 3.0).abs() < 1e-8, "c0 = {}", p.c0);
        let w = p.samples[0];
        assert_eq!(w.x, 1);
        assert!((w.t - 1.0).abs() < 1e-8);
        assert!((w.s - 1.0).abs() < 1e-8);
    }

    #[test]
    fn growth_constant_is_rescale_invariant() {
        let s = cycle(8);
        let a = s.doubling_profile(&[1.0]).unwrap()[0].c0;
        let b = s.rescale_metric(3.7).unwrap().doubling_profile(&[1.0]).unwrap()[0].c0;
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn rescale_scales_spacing() {
        let s = line3().rescale_metric(4.0).unwrap();
        assert_eq!(s.dist(0, 1), 0.5);
        assert_eq!(line3().rescale_metric(1.0).unwrap(), line3());
        assert!(line3().rescale_metric(0.0).is_err());
    }

    #[test]
    fn path_lower_volume_is_linear() {
        let n = 16;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let s = Space::from_edges(n, &edges, vec![1.0; n]).unwrap();
        let fit = s.check_lower_volume(0, (1.0, 8.0)).unwrap();
        assert!((fit.kappa - 1.0).abs() < 1e-9, "kappa = {}", fit.kappa);
        assert!((fit.c - 1.0).abs() < 1e-9, "c = {}", fit.c);
    }

    #[test]
    fn saturated_ball_gives_flat_envelope() {
        // Star: centre at distance 1 from three leaves, leaves 2 apart.
        let d = DMatrix::from_fn(4, 4, |i, j| match (i, j) {
            _ if i == j => 0.0,
            (0, _) | (_, 0) => 1.0,
            _ => 2.0,
        });
        let s = Space::new(d, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let fit = s.check_lower_volume(0, (1.5, 2.0)).unwrap();
        assert_eq!(fit.kappa, 0.0);
        assert!((fit.c - 10.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_antipode_is_invisible_inside_radius_four() {
        let base = cycle(8);
        let mut w = vec![1.0; 8];
        w[4] = 100.0;
        let heavy = Space::new(base.dist_matrix().clone(), w).unwrap();
        let a = base.check_lower_volume(0, (1.0, 4.0)).unwrap();
        let b = heavy.check_lower_volume(0, (1.0, 4.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_lower_range_is_degenerate() {
        assert!(matches!(line3().check_lower_volume(0, (3.0, 5.0)), Err(Error::DegenerateRange(_))));
    }
}
