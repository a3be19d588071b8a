//! Simultaneous root finding (Aberth–Ehrlich) with a numerical-multiplicity
//! clustering pass.
//!
//! Targets only expose the Newton ratio `f/f'`, so the same solver runs on
//! expanded coefficients (critical points) and on orbit-evaluated iterates
//! `P^n(z) - z` whose coefficients are too large to expand.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_MAX_ITER: usize = 4000;

/// Roots closer than this are numerically the same point.
pub const DEDUP_TOL: f64 = 1e-8;
/// Candidate distance for a multiple-root cluster.
const LINK_TOL: f64 = 1e-4;
/// A member is resolved when its rounding uncertainty is this small relative
/// to its distance from the nearest cluster mate.
const RESOLVED_RATIO: f64 = 1e-2;
/// Stragglers with a Newton step below this are accepted as converged.
const STALL_TOL: f64 = 1e-4;

pub trait NewtonTarget: Sync {
    fn degree(&self) -> usize;
    /// `f(z) / f'(z)`. May be infinite where `f'` vanishes.
    fn newton_ratio(&self, z: Complex64) -> Complex64;
    /// Radius of a disc expected to contain every root.
    fn root_radius(&self) -> f64;
    /// Rounding-error bound on `f(z)` together with `|f'(z)|`; their ratio
    /// is how far the computed root can sit from the true one.
    fn error_and_slope(&self, z: Complex64) -> (f64, f64);

    fn root_uncertainty(&self, z: Complex64) -> f64 {
        let (err, slope) = self.error_and_slope(z);
        if slope == 0.0 { f64::INFINITY } else { err / slope }
    }
}

/// A root with its numerical multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootCluster {
    pub point: Complex64,
    pub multiplicity: usize,
}

/// Mean of the roots inside the circle `|z - center| = radius` and their
/// count, by trapezoid quadrature of `f'/f`. Far from a multiple root `f` is
/// computed accurately, so the mean beats the centroid of stalled iterates.
fn contour_mean<T: NewtonTarget>(target: &T, center: Complex64, radius: f64) -> (Complex64, f64) {
    const NODES: usize = 256;
    let mut count = Complex64::new(0.0, 0.0);
    let mut first_moment = Complex64::new(0.0, 0.0);
    for k in 0..NODES {
        let offset = Complex64::from_polar(radius, std::f64::consts::TAU * (k as f64 + 0.5) / NODES as f64);
        let log_deriv = target.newton_ratio(center + offset).inv();
        count += log_deriv * offset;
        first_moment += log_deriv * offset * offset;
    }
    count /= NODES as f64;
    first_moment /= NODES as f64;
    (center + first_moment / count, count.re)
}

/// Polynomial given by coefficients, constant term first (any leading coefficient).
#[derive(Debug, Clone)]
pub struct CoefficientTarget {
    coeffs: Vec<Complex64>,
}

impl CoefficientTarget {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }
}

impl NewtonTarget for CoefficientTarget {
    fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn newton_ratio(&self, z: Complex64) -> Complex64 {
        let (p, dp) = super::horner_with_derivative(&self.coeffs, z);
        p / dp
    }

    fn root_radius(&self) -> f64 {
        // Fujiwara bound.
        let n = self.degree();
        let lead = self.coeffs[n];
        let mut bound: f64 = 0.0;
        for k in 1..=n {
            let ratio = (self.coeffs[n - k] / lead).norm();
            let term = if k == n { (ratio / 2.0).powf(1.0 / k as f64) } else { ratio.powf(1.0 / k as f64) };
            bound = bound.max(term);
        }
        (2.0 * bound).max(1e-3)
    }

    fn error_and_slope(&self, z: Complex64) -> (f64, f64) {
        let r = z.norm();
        let mass = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
        let (_, dp) = super::horner_with_derivative(&self.coeffs, z);
        (4.0 * f64::EPSILON * (self.degree() as f64 + 1.0) * mass, dp.norm())
    }
}

fn scale(z: Complex64) -> f64 {
    z.norm().max(1.0)
}

/// All `degree()` roots by Aberth iteration with Jacobi updates. Roots of
/// multiplicity `m` come back as `m` nearby approximations; see [`cluster`].
pub fn aberth<T: NewtonTarget>(target: &T, max_iter: usize) -> Result<Vec<Complex64>> {
    let n = target.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let radius = target.root_radius();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4))
        .collect();
    if n == 1 {
        let mut w = z[0];
        for _ in 0..200 {
            let step = target.newton_ratio(w);
            if !step.is_finite() {
                break;
            }
            w -= step;
            if step.norm() <= 1e-15 * scale(w) {
                break;
            }
        }
        return Ok(vec![w]);
    }

    let mut converged = vec![false; n];
    let mut last_steps = vec![f64::INFINITY; n];
    for _ in 0..max_iter {
        let snapshot = &z;
        let flags = &converged;
        let steps: Vec<Complex64> = par::map_range(n, |i| {
            if flags[i] {
                return Complex64::new(0.0, 0.0);
            }
            let zi = snapshot[i];
            let ratio = target.newton_ratio(zi);
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, &zj) in snapshot.iter().enumerate() {
                if j != i {
                    repulsion += (zi - zj).inv();
                }
            }
            if ratio == Complex64::new(0.0, 0.0) {
                return ratio;
            }
            let inv = if ratio.is_finite() { ratio.inv() } else { Complex64::new(0.0, 0.0) };
            let denom = inv - repulsion;
            if denom.norm() == 0.0 {
                Complex64::new(1e-8 * scale(zi), 0.0)
            } else {
                denom.inv()
            }
        });
        let mut all_done = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let step = steps[i];
            if !step.is_finite() {
                return Err(Error::RootFindingFailed { iterations: max_iter, residual: f64::NAN });
            }
            z[i] -= step;
            last_steps[i] = step.norm();
            if step.norm() <= 1e-14 * scale(z[i]) {
                converged[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Ok(z);
        }
    }
    // Approximations of a multiple root stall at the rounding floor; accept
    // them when the Newton step is already tiny.
    let mut worst: f64 = 0.0;
    for i in 0..n {
        if !converged[i] {
            let r = target.newton_ratio(z[i]).norm();
            worst = worst.max(r.min(last_steps[i]) / scale(z[i]));
        }
    }
    if worst <= STALL_TOL {
        Ok(z)
    } else {
        Err(Error::RootFindingFailed { iterations: max_iter, residual: worst })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut k = i;
        while self.parent[k] != r {
            let next = self.parent[k];
            self.parent[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups pairs of indices whose points are within `tol * max(1, |z|)`.
fn link_components(points: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].re.total_cmp(&points[b].re));
    let max_scale = points.iter().map(|&p| scale(p)).fold(1.0, f64::max);
    let mut uf = UnionFind::new(n);
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if points[j].re - points[i].re > tol * max_scale {
                break;
            }
            let limit = tol * scale(points[i]).max(scale(points[j]));
            if (points[i] - points[j]).norm() < limit {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn centroid(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

/// Splits raw roots into numerically resolved simple roots and unresolved
/// clusters (multiple roots), returned in a deterministic order.
pub fn cluster<T: NewtonTarget>(target: &T, roots: Vec<Complex64>) -> Vec<RootCluster> {
    let mut out: Vec<RootCluster> = Vec::with_capacity(roots.len());
    for group in link_components(&roots, LINK_TOL) {
        if group.len() == 1 {
            out.push(RootCluster { point: roots[group[0]], multiplicity: 1 });
            continue;
        }
        let mut unresolved = Vec::new();
        let mut unresolved_idx = Vec::new();
        for &i in &group {
            let nearest = group
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (roots[i] - roots[j]).norm())
                .fold(f64::INFINITY, f64::min);
            let uncertainty = target.root_uncertainty(roots[i]);
            if uncertainty < RESOLVED_RATIO * nearest && nearest > DEDUP_TOL * scale(roots[i]) {
                out.push(RootCluster { point: roots[i], multiplicity: 1 });
            } else {
                unresolved.push(roots[i]);
                unresolved_idx.push(i);
            }
        }
        if unresolved.len() == 1 {
            out.push(RootCluster { point: unresolved[0], multiplicity: 1 });
        } else if !unresolved.is_empty() {
            let center = centroid(&unresolved);
            let spread = unresolved.iter().map(|&z| (z - center).norm()).fold(0.0, f64::max);
            let clearance = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| !unresolved_idx.contains(j))
                .map(|(_, &z)| (z - center).norm())
                .fold(f64::INFINITY, f64::min);
            let radius = (50.0 * spread).max(1e-6 * scale(center)).min(0.5 * clearance);
            let mut point = center;
            if radius > 2.0 * spread {
                let (mean, count) = contour_mean(target, center, radius);
                if mean.is_finite() && (count - unresolved.len() as f64).abs() < 0.25 && (mean - center).norm() < radius {
                    point = mean;
                }
            }
            out.push(RootCluster { point, multiplicity: unresolved.len() });
        }
    }
    // Anything left within the dedup tolerance is one point.
    let pts: Vec<Complex64> = out.iter().map(|c| c.point).collect();
    let mut merged: Vec<RootCluster> = link_components(&pts, DEDUP_TOL)
        .into_iter()
        .map(|g| {
            let members: Vec<Complex64> = g.iter().map(|&i| out[i].point).collect();
            RootCluster {
                point: centroid(&members),
                multiplicity: g.iter().map(|&i| out[i].multiplicity).sum(),
            }
        })
        .collect();
    merged.sort_by(|a, b| a.point.re.total_cmp(&b.point.re).then(a.point.im.total_cmp(&b.point.im)));
    merged
}
