//! Polynomial-like restrictions `(P^n; D, D')` cut out by Green sublevel
//! components, their covering degree and critical-orbit evidence.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::poly::periodic::iterate_preimages;
use crate::poly::{classify, CycleClass, Polynomial};
use crate::potential::{critical_potentials, green, is_regular, sublevel_component, RegionMask, DEFAULT_BUDGET, REGULAR_TOL};

/// Candidate levels are halved at most this many times.
pub const MAX_HALVINGS: usize = 60;
pub const MIN_QUADRATURE: usize = 1 << 10;
const ROUNDING_TOL: f64 = 0.2;
const DOUBLINGS: usize = 3;

/// `f = P^{∘n}` restricted to `D`, a component of `{G <= r0/d^n}`, onto
/// `D'`, the component of `{G <= r0}` containing the same seed.
#[derive(Debug, Clone)]
pub struct PolynomialLikeMap {
    pub poly: Polynomial,
    pub n: u32,
    pub seed: Complex64,
    pub r0: f64,
    pub inner: RegionMask,
    pub outer: RegionMask,
    pub degree: usize,
    /// Test values used for the degree count and the unrounded integrals.
    pub degree_checks: Vec<(Complex64, f64)>,
}

impl PolynomialLikeMap {
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        self.poly.iterate_with_derivative(z, self.n)
    }

    pub fn summary(&self) -> PlmSummary {
        PlmSummary {
            n: self.n,
            seed: self.seed,
            r0: self.r0,
            inner_level: self.inner.level,
            outer_level: self.outer.level,
            inner_area: self.inner.area(),
            outer_area: self.outer.area(),
            resolution: self.inner.geometry.h,
            degree: self.degree,
            degree_checks: self.degree_checks.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlmSummary {
    pub n: u32,
    pub seed: Complex64,
    pub r0: f64,
    pub inner_level: f64,
    pub outer_level: f64,
    pub inner_area: f64,
    pub outer_area: f64,
    pub resolution: f64,
    pub degree: usize,
    pub degree_checks: Vec<(Complex64, f64)>,
}

/// Critical points of `P^{∘n}`: preimages of critical points of `P` under
/// `P^{∘k}`, `k < n`.
pub fn iterate_critical_points(poly: &Polynomial, n: u32) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for c in poly.critical_points() {
        for k in 0..n {
            for pre in iterate_preimages(poly, k, c.point)? {
                if !out.iter().any(|&q: &Complex64| (q - pre.point).norm() < 1e-9) {
                    out.push(pre.point);
                }
            }
        }
    }
    Ok(out)
}

fn level_scale(poly: &Polynomial, n: u32) -> f64 {
    (poly.degree() as f64).powi(n as i32)
}

fn regularize(r: f64, critical: &[f64]) -> Option<f64> {
    let mut r = r;
    for _ in 0..50 {
        if is_regular(r, critical, REGULAR_TOL) {
            return Some(r);
        }
        r *= 0.99;
    }
    None
}

fn first_candidate(poly: &Polynomial) -> f64 {
    let escaping = critical_potentials(poly, 0);
    let cap = poly.escape_radius().ln() + 1.0;
    escaping.last().map_or(0.5f64, |&g| 2.0 * g).min(cap)
}

/// First level `r0` of a halving sequence at which every critical point of
/// `P^{∘n}` in the seed's component has bounded orbit staying in that
/// component for `orbit_budget` steps. At least one such critical point is
/// required, since a component without one maps with degree one.
pub fn select_regular_value_iterate(poly: &Polynomial, n: u32, seed: Complex64, orbit_budget: u32, resolution: f64) -> Result<f64> {
    let g_seed = green(poly, seed, DEFAULT_BUDGET).value();
    if g_seed > 0.0 {
        return Err(Error::SeedEscapes(g_seed));
    }
    let critical = critical_potentials(poly, 64);
    let crit_points = iterate_critical_points(poly, n)?;
    let mut r = first_candidate(poly);
    for _ in 0..MAX_HALVINGS {
        if let Some(level) = regularize(r, &critical) {
            if let Ok(mask) = sublevel_component(poly, level, seed, resolution) {
                let inside: Vec<Complex64> = crit_points.iter().copied().filter(|&c| mask.contains(c)).collect();
                let admissible = !inside.is_empty()
                    && inside.iter().all(|&c| {
                        green(poly, c, DEFAULT_BUDGET).value() == 0.0 && orbit_stays(poly, n, c, &mask, orbit_budget).is_none()
                    });
                if admissible {
                    return Ok(level);
                }
            }
        }
        r /= 2.0;
    }
    Err(Error::NoAdmissibleValue(MAX_HALVINGS))
}

/// [`select_regular_value_iterate`] for `P` itself.
pub fn select_regular_value(poly: &Polynomial, seed: Complex64, orbit_budget: u32, resolution: f64) -> Result<f64> {
    select_regular_value_iterate(poly, 1, seed, orbit_budget, resolution)
}

/// First step at which the `f`-orbit of `z` leaves `mask`.
fn orbit_stays(poly: &Polynomial, n: u32, z: Complex64, mask: &RegionMask, budget: u32) -> Option<u32> {
    let mut w = z;
    for step in 0..budget {
        if !mask.contains(w) {
            return Some(step);
        }
        w = poly.iterate(w, n).point()?;
    }
    (!mask.contains(w)).then_some(budget)
}

/// Builds `D` and `D'`, checks `D̄ ⊂ D'` with a one-cell margin and counts
/// the covering degree at two test values.
pub fn extract_iterate(poly: &Polynomial, n: u32, seed: Complex64, r0: f64, resolution: f64) -> Result<PolynomialLikeMap> {
    let critical = critical_potentials(poly, 64);
    let r_inner = regularize(r0 / level_scale(poly, n), &critical).ok_or(Error::NotRegularValue(r0))?;
    let outer = sublevel_component(poly, r0, seed, resolution)?;
    let inner = sublevel_component(poly, r_inner, seed, resolution)?;
    if !inner.has_margin_in(&outer) {
        return Err(Error::ContainmentFailed);
    }
    let mut plm = PolynomialLikeMap { poly: poly.clone(), n, seed, r0, inner, outer, degree: 0, degree_checks: Vec::new() };
    let values = test_values(&plm, 2);
    if values.len() < 2 {
        return Err(Error::WTooCloseToImageBoundary);
    }
    let mut degrees = Vec::new();
    for &w in &values {
        let (deg, raw) = degree_with_raw(&plm, w, MIN_QUADRATURE)?;
        degrees.push(deg);
        plm.degree_checks.push((w, raw));
    }
    if degrees.windows(2).any(|p| p[0] != p[1]) {
        return Err(Error::QuadratureUnstable(plm.degree_checks[1].1));
    }
    plm.degree = degrees[0];
    if plm.degree == 1 {
        return Err(Error::DegreeOne);
    }
    if plm.degree == 0 {
        return Err(Error::ContainmentFailed);
    }
    Ok(plm)
}

pub fn extract(poly: &Polynomial, seed: Complex64, r0: f64, resolution: f64) -> Result<PolynomialLikeMap> {
    extract_iterate(poly, 1, seed, r0, resolution)
}

fn image_boundary(plm: &PolynomialLikeMap) -> Vec<Complex64> {
    par::map(&plm.inner.boundary, |&z| plm.eval(z).0)
}

fn distance_to_polyline(z: Complex64, line: &[Complex64]) -> f64 {
    line.windows(2)
        .map(|w| crate::geometry::point_segment_distance(z, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Admissible test values: the seed, then points of `D` spread out, each
/// inside `D'` and more than two cells from `f(∂D)`.
fn test_values(plm: &PolynomialLikeMap, count: usize) -> Vec<Complex64> {
    let h = plm.inner.geometry.h;
    let image = image_boundary(plm);
    let nodes: Vec<(i64, i64)> = plm.inner.lattice_nodes().collect();
    let stride = (nodes.len() / 97).max(1);
    let mut candidates = vec![plm.seed];
    candidates.extend(nodes.iter().step_by(stride).map(|&(i, j)| Complex64::new(i as f64 * h, j as f64 * h)));
    let mut chosen: Vec<Complex64> = Vec::new();
    for w in candidates {
        if chosen.len() == count {
            break;
        }
        if !plm.outer.contains(w) || distance_to_polyline(w, &image) <= 2.0 * h {
            continue;
        }
        if chosen.iter().any(|&c| (c - w).norm() < 10.0 * h) {
            continue;
        }
        chosen.push(w);
    }
    chosen
}

/// Zeros of `f - w` inside `D`, counted by the argument principle on `∂D`.
pub fn degree_by_argument_principle(plm: &PolynomialLikeMap, w: Complex64, quadrature_points: usize) -> Result<usize> {
    if quadrature_points < MIN_QUADRATURE {
        return Err(Error::InvalidArgument(format!("need at least {MIN_QUADRATURE} quadrature points")));
    }
    if !plm.outer.contains(w) {
        return Err(Error::WOutsideRegion(w));
    }
    if distance_to_polyline(w, &image_boundary(plm)) <= 2.0 * plm.inner.geometry.h {
        return Err(Error::WTooCloseToImageBoundary);
    }
    degree_with_raw(plm, w, quadrature_points).map(|(d, _)| d)
}

fn degree_with_raw(plm: &PolynomialLikeMap, w: Complex64, points: usize) -> Result<(usize, f64)> {
    let mut n = points.max(MIN_QUADRATURE);
    let mut last = f64::NAN;
    for _ in 0..=DOUBLINGS {
        let value = winding_integral(plm, w, n);
        last = value.re;
        let rounded = value.re.round();
        if (value.re - rounded).abs() <= ROUNDING_TOL && value.im.abs() <= ROUNDING_TOL && rounded >= 0.0 {
            return Ok((rounded as usize, value.re));
        }
        n *= 2;
    }
    Err(Error::QuadratureUnstable(last))
}

/// `(1/2πi) ∮ f'(z)/(f(z) - w) dz` by the trapezoid rule on `n` points
/// equally spaced in arc length along the closed boundary polyline.
fn winding_integral(plm: &PolynomialLikeMap, w: Complex64, n: usize) -> Complex64 {
    let nodes = resample_closed(&plm.inner.boundary, n);
    let values = par::map(&nodes, |&z| {
        let (f, df) = plm.eval(z);
        df / (f - w)
    });
    let m = nodes.len();
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let dz = (nodes[(k + 1) % m] - nodes[(k + m - 1) % m]) * 0.5;
        sum += values[k] * dz;
    }
    sum / Complex64::new(0.0, std::f64::consts::TAU)
}

fn resample_closed(line: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut cumulative = vec![0.0];
    for w in line.windows(2) {
        cumulative.push(cumulative.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cumulative.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < s {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 { (s - cumulative[seg]) / len } else { 0.0 };
        out.push(line[seg] + (line[seg + 1] - line[seg]) * t);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Connectivity {
    ConnectedEvidence,
    DisconnectedEvidence,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalOrbit {
    pub point: Complex64,
    /// Step at which the orbit left `D`, if it did.
    pub escape_step: Option<u32>,
    /// Step at which the orbit came within one cell of `∂D`.
    pub near_boundary_step: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectivityReport {
    pub verdict: Connectivity,
    pub budget: u32,
    pub orbits: Vec<CriticalOrbit>,
}

fn near_boundary(mask: &RegionMask, z: Complex64) -> bool {
    let h = mask.geometry.h;
    [Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, -h)]
        .iter()
        .any(|&o| !mask.contains(z + o))
}

/// Follows every critical point of `f` in `D` for `budget` steps of `f`.
pub fn connectivity_evidence(plm: &PolynomialLikeMap, orbit_budget: u32) -> Result<ConnectivityReport> {
    let crit: Vec<Complex64> =
        iterate_critical_points(&plm.poly, plm.n)?.into_iter().filter(|&c| plm.inner.contains(c)).collect();
    let orbits = par::map(&crit, |&c| {
        let mut z = c;
        let mut near = None;
        for step in 0..=orbit_budget {
            if !plm.inner.contains(z) {
                return CriticalOrbit { point: c, escape_step: Some(step), near_boundary_step: near };
            }
            if near.is_none() && near_boundary(&plm.inner, z) {
                near = Some(step);
            }
            match plm.poly.iterate(z, plm.n).point() {
                Some(w) => z = w,
                None => return CriticalOrbit { point: c, escape_step: Some(step + 1), near_boundary_step: near },
            }
        }
        CriticalOrbit { point: c, escape_step: None, near_boundary_step: near }
    });
    let verdict = if orbits.iter().any(|o| o.escape_step.is_some()) {
        Connectivity::DisconnectedEvidence
    } else if orbits.iter().any(|o| o.near_boundary_step.is_some()) {
        Connectivity::Undecided
    } else {
        Connectivity::ConnectedEvidence
    };
    Ok(ConnectivityReport { verdict, budget: orbit_budget, orbits })
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormReport {
    pub map: PlmSummary,
    pub connectivity: ConnectivityReport,
    /// Multiplier of `f` at the seed and its class.
    pub seed_multiplier: Complex64,
    pub seed_class: CycleClass,
}

/// Full pipeline on `P^{∘n}` around a period-`n` seed.
pub fn renormalize_iterate(
    poly: &Polynomial,
    n: u32,
    periodic_seed: Complex64,
    orbit_budget: u32,
    resolution: f64,
) -> Result<(PolynomialLikeMap, RenormReport)> {
    if n == 0 || level_scale(poly, n) > 256.0 {
        return Err(Error::InvalidArgument("need 1 <= n with d^n <= 256".into()));
    }
    let (image, multiplier) = poly.iterate_with_derivative(periodic_seed, n);
    let residual = (image - periodic_seed).norm();
    if !(residual < 1e-8 * periodic_seed.norm().max(1.0)) {
        return Err(Error::NotPeriodic { period: n, residual });
    }
    let r0 = select_regular_value_iterate(poly, n, periodic_seed, orbit_budget, resolution)?;
    let plm = extract_iterate(poly, n, periodic_seed, r0, resolution)?;
    let connectivity = connectivity_evidence(&plm, orbit_budget)?;
    let report = RenormReport {
        map: plm.summary(),
        connectivity,
        seed_multiplier: multiplier,
        seed_class: classify(multiplier, 1e-6),
    };
    Ok((plm, report))
}

/// A real cubic `z^3 - 3a^2 z + b` with critical points `±a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicCandidate {
    pub a: f64,
    pub b: f64,
    pub escaping_critical: f64,
    pub bounded_critical: f64,
    /// Attracting fixed point the bounded critical point converges to.
    pub fixed_point: Complex64,
    pub multiplier: f64,
}

impl CubicCandidate {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::from_real(&[self.b, -3.0 * self.a * self.a, 0.0, 1.0]).expect("monic cubic")
    }
}

/// Scans a `steps × steps` grid of `(a, b)` for cubics with one escaping
/// critical point and the other attracted to a fixed point; returns the one
/// with the smallest fixed-point multiplier.
pub fn scan_cubic(a_range: (f64, f64), b_range: (f64, f64), steps: usize) -> Option<CubicCandidate> {
    let cells: Vec<(f64, f64)> = (0..steps * steps)
        .map(|k| {
            let t = |lo: f64, hi: f64, i: usize| if steps == 1 { lo } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 };
            (t(a_range.0, a_range.1, k % steps), t(b_range.0, b_range.1, k / steps))
        })
        .collect();
    let found = par::map(&cells, |&(a, b)| cubic_candidate(a, b));
    found
        .into_iter()
        .flatten()
        .min_by(|x, y| x.multiplier.total_cmp(&y.multiplier).then(x.a.total_cmp(&y.a)).then(x.b.total_cmp(&y.b)))
}

fn cubic_candidate(a: f64, b: f64) -> Option<CubicCandidate> {
    if a <= 0.0 {
        return None;
    }
    let poly = Polynomial::from_real(&[b, -3.0 * a * a, 0.0, 1.0]).ok()?;
    for (esc, bnd) in [(a, -a), (-a, a)] {
        if green(&poly, Complex64::new(esc, 0.0), DEFAULT_BUDGET).value() <= 0.0 {
            continue;
        }
        let mut z = Complex64::new(bnd, 0.0);
        for _ in 0..2000 {
            z = poly.eval(z);
            if z.norm() > poly.escape_radius() {
                break;
            }
        }
        if z.norm() > poly.escape_radius() {
            continue;
        }
        let w = poly.eval(z);
        if (w - z).norm() > 1e-10 {
            continue;
        }
        let multiplier = poly.derivative(z).norm();
        if multiplier < 1.0 {
            return Some(CubicCandidate { a, b, escaping_critical: esc, bounded_critical: bnd, fixed_point: z, multiplier });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plm_of_disc() -> PolynomialLikeMap {
        let sq = Polynomial::quadratic(c(0.0, 0.0));
        extract(&sq, c(0.0, 0.0), 4f64.ln(), 0.02).unwrap()
    }

    #[test]
    fn z_squared_degree() {
        let plm = plm_of_disc();
        assert_eq!(plm.degree, 2);
        assert_eq!(degree_by_argument_principle(&plm, c(0.1, 0.0), 1024).unwrap(), 2);
        assert!(matches!(degree_by_argument_principle(&plm, c(30.0, 0.0), 1024), Err(Error::WOutsideRegion(_))));
    }

    #[test]
    fn scanned_cubic_is_quadratic_like() {
        let cand = scan_cubic((0.8, 1.2), (-3.4, -2.6), 9).unwrap();
        let p = cand.polynomial();
        let seed = cand.fixed_point;
        let r0 = select_regular_value(&p, seed, 10_000, 0.01).unwrap();
        let g_esc = green(&p, c(cand.escaping_critical, 0.0), DEFAULT_BUDGET).value();
        assert!(r0 < g_esc);
        let plm = extract(&p, seed, r0, 0.01).unwrap();
        assert_eq!(plm.degree, 2);
        assert!(plm.inner.has_margin_in(&plm.outer));
        assert_eq!(connectivity_evidence(&plm, 10_000).unwrap().verdict, Connectivity::ConnectedEvidence);
    }

    #[test]
    fn repelling_seed_has_degree_one() {
        let p = Polynomial::quadratic(c(-6.0, 0.0));
        let g0 = green(&p, c(0.0, 0.0), DEFAULT_BUDGET).value();
        assert!(matches!(extract(&p, c(3.0, 0.0), 0.45 * g0, 0.005), Err(Error::DegreeOne)));
        assert!(matches!(select_regular_value(&p, c(3.0, 0.0), 1000, 0.01), Err(Error::NoAdmissibleValue(_))));
    }

    #[test]
    fn basilica_whole_k() {
        let b = Polynomial::quadratic(c(-1.0, 0.0));
        let r0 = select_regular_value(&b, c(0.0, 0.0), 1000, 0.01).unwrap();
        let plm = extract(&b, c(0.0, 0.0), r0, 0.01).unwrap();
        assert_eq!(plm.degree, 2);
        assert_eq!(connectivity_evidence(&plm, 1000).unwrap().verdict, Connectivity::ConnectedEvidence);
        let (plm2, rep) = renormalize_iterate(&b, 2, c(0.0, 0.0), 1000, 0.01).unwrap();
        // Sublevel sets of a connected K are connected, so the iterate keeps full degree.
        assert_eq!(plm2.degree, 4);
        assert_eq!(rep.seed_class, CycleClass::Attracting);
        assert!(matches!(renormalize_iterate(&b, 2, c(0.5, 0.0), 100, 0.01), Err(Error::NotPeriodic { .. })));
    }
}
