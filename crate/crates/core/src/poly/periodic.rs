use num_complex::Complex64;
use serde::Serialize;

use super::roots::{self, NewtonTarget, RootCluster};
use super::Polynomial;
use crate::error::{Error, Result};

/// Orbit-closure tolerance for cycle records, relative to `max(1, |z|)`.
pub const CENSUS_TOL: f64 = 1e-6;
/// Largest `q` for which `λ^q = 1` is tested.
pub const PARABOLIC_MAX_Q: u32 = 64;
/// Upper bound on `d^n` for brute-force enumeration.
pub const MAX_PERIODIC_POINTS: u64 = 1 << 14;
/// Default indifference tolerance of [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Multiple roots of `P^n(z) - z` force `(P^n)' = 1`; their multipliers are
/// only known to the accuracy of the cluster centroid.
const CLUSTER_CLASSIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CycleClass {
    Attracting,
    Repelling,
    ParabolicCandidate,
    /// `|λ| = 1` with no root of unity of order ≤ 64 nearby. Cremer and
    /// Siegel cycles are not distinguished.
    IrrationallyIndifferent,
}

impl CycleClass {
    pub fn is_repelling(self) -> bool {
        self == CycleClass::Repelling
    }
}

/// Multiplier classification with indifference tolerance `tol`.
pub fn classify(multiplier: Complex64, tol: f64) -> CycleClass {
    let modulus = multiplier.norm();
    if modulus < 1.0 - tol {
        return CycleClass::Attracting;
    }
    if modulus > 1.0 + tol {
        return CycleClass::Repelling;
    }
    let one = Complex64::new(1.0, 0.0);
    let mut power = one;
    for _ in 0..PARABOLIC_MAX_Q {
        power *= multiplier;
        if (power - one).norm() < tol {
            return CycleClass::ParabolicCandidate;
        }
    }
    CycleClass::IrrationallyIndifferent
}

/// One periodic cycle in orbit order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    pub period: u32,
    pub points: Vec<Complex64>,
    pub multiplier: Complex64,
    pub class: CycleClass,
    /// Number of roots of `P^n(z) - z` absorbed by each cycle point.
    pub multiplicity: usize,
    /// True when `period` equals the `n` the record was enumerated for.
    pub exact: bool,
}

impl CycleRecord {
    /// Largest `|P(points[i]) - points[i+1]|`.
    pub fn closure_residual(&self, poly: &Polynomial) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (poly.eval(self.points[i]) - self.points[(i + 1) % n]).norm())
            .fold(0.0, f64::max)
    }

    pub fn recompute_multiplier(&self, poly: &Polynomial) -> Complex64 {
        self.points.iter().map(|&z| poly.derivative(z)).product()
    }

    pub fn contains_near(&self, z: Complex64, tol: f64) -> bool {
        self.points.iter().any(|&p| (p - z).norm() < tol)
    }
}

/// Complex number with a separate binary exponent, for derivatives of high
/// iterates that overflow `f64`.
#[derive(Clone, Copy)]
struct Scaled {
    mantissa: Complex64,
    exp: i32,
}

impl Scaled {
    fn one() -> Self {
        Self { mantissa: Complex64::new(1.0, 0.0), exp: 0 }
    }

    fn mul(self, z: Complex64) -> Self {
        let mut m = self.mantissa * z;
        let mut e = self.exp;
        let norm = m.norm();
        if norm > 0.0 && !(2f64.powi(-200)..=2f64.powi(200)).contains(&norm) {
            let shift = norm.log2().floor() as i32;
            m /= 2f64.powi(shift);
            e += shift;
        }
        Self { mantissa: m, exp: e }
    }

    /// `z / self` computed without overflow.
    fn divide_into(self, z: Complex64) -> Complex64 {
        z / self.mantissa * 2f64.powi(-self.exp)
    }

    fn to_complex(self) -> Option<Complex64> {
        if self.exp.abs() > 900 {
            None
        } else {
            Some(self.mantissa * 2f64.powi(self.exp))
        }
    }
}

/// `f(z) = P^{∘n}(z) - z` evaluated along the orbit.
pub(crate) struct IterateTarget<'a> {
    pub poly: &'a Polynomial,
    pub period: u32,
    /// Subtracted constant: roots of `P^n(z) - shift(z)`; `None` means `z`.
    pub offset: Option<Complex64>,
}

const ORBIT_BAILOUT: f64 = 1e30;

impl NewtonTarget for IterateTarget<'_> {
    fn degree(&self) -> usize {
        self.poly.degree().pow(self.period)
    }

    fn newton_ratio(&self, z: Complex64) -> Complex64 {
        let d = self.poly.degree() as f64;
        let mut w = z;
        let mut deriv = Scaled::one();
        for k in 0..self.period {
            if w.norm() > ORBIT_BAILOUT {
                // P^{n-k} ~ w^{d^{n-k}} far out.
                let remaining = d.powi((self.period - k) as i32);
                return deriv.divide_into(w) / remaining;
            }
            let (p, dp) = self.poly.eval_with_derivative(w);
            deriv = deriv.mul(dp);
            w = p;
        }
        let (value, slope_shift) = match self.offset {
            Some(c) => (w - c, 0.0),
            None => (w - z, 1.0),
        };
        match deriv.to_complex() {
            Some(dn) => value / (dn - slope_shift),
            None => deriv.divide_into(value),
        }
    }

    fn root_radius(&self) -> f64 {
        self.poly.escape_radius()
    }

    fn error_and_slope(&self, z: Complex64) -> (f64, f64) {
        let coeffs = self.poly.coefficients();
        let mut w = z;
        let mut deriv = Scaled::one();
        let mut err = 0.0;
        for _ in 0..self.period {
            let r = w.norm();
            if r > ORBIT_BAILOUT {
                return (1.0, 0.0);
            }
            let mass = coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
            let (p, dp) = self.poly.eval_with_derivative(w);
            err = err * dp.norm() + 4.0 * f64::EPSILON * coeffs.len() as f64 * mass;
            deriv = deriv.mul(dp);
            w = p;
        }
        let slope = match (deriv.to_complex(), self.offset) {
            (Some(dn), None) => (dn - 1.0).norm(),
            (Some(dn), Some(_)) => dn.norm(),
            (None, _) => f64::MAX,
        };
        (err + f64::EPSILON * z.norm(), slope)
    }
}

fn exact_period(poly: &Polynomial, z: Complex64, n: u32) -> u32 {
    let tol = CENSUS_TOL * z.norm().max(1.0);
    let mut w = z;
    for k in 1..=n {
        w = poly.eval(w);
        if n.is_multiple_of(k) && (w - z).norm() < tol {
            return k;
        }
    }
    n
}

/// Every cycle whose period divides `n`, grouped from the `d^n` roots of
/// `P^{∘n}(z) - z`.
pub fn periodic_points(poly: &Polynomial, n: u32) -> Result<Vec<CycleRecord>> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    let d = poly.degree() as u64;
    let count = d.checked_pow(n).unwrap_or(u64::MAX);
    if count > MAX_PERIODIC_POINTS {
        return Err(Error::PeriodTooLarge { degree: poly.degree(), period: n, limit: MAX_PERIODIC_POINTS });
    }
    let target = IterateTarget { poly, period: n, offset: None };
    let raw = roots::aberth(&target, roots::DEFAULT_MAX_ITER)?;
    let clusters = roots::cluster(&target, raw);
    Ok(group_cycles(poly, n, clusters))
}

fn group_cycles(poly: &Polynomial, n: u32, clusters: Vec<RootCluster>) -> Vec<CycleRecord> {
    let mut used = vec![false; clusters.len()];
    let mut cycles = Vec::new();
    for start in 0..clusters.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let z0 = clusters[start].point;
        let period = exact_period(poly, z0, n);
        let mut points = vec![z0];
        let mut current = z0;
        for _ in 1..period {
            let image = poly.eval(current);
            let tol = CENSUS_TOL * image.norm().max(1.0);
            let next = (0..clusters.len())
                .filter(|&j| !used[j])
                .map(|j| (j, (clusters[j].point - image).norm()))
                .filter(|&(_, dist)| dist < tol)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            current = match next {
                Some((j, _)) => {
                    used[j] = true;
                    clusters[j].point
                }
                None => image,
            };
            points.push(current);
        }
        let multiplier: Complex64 = points.iter().map(|&z| poly.derivative(z)).product();
        let multiplicity = clusters[start].multiplicity;
        let tol = if multiplicity > 1 { CLUSTER_CLASSIFY_TOL } else { CLASSIFY_TOL };
        cycles.push(CycleRecord {
            period,
            points,
            multiplier,
            class: classify(multiplier, tol),
            multiplicity,
            exact: period == n,
        });
    }
    cycles.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then(a.points[0].re.total_cmp(&b.points[0].re))
            .then(a.points[0].im.total_cmp(&b.points[0].im))
    });
    cycles
}

/// Roots of `P^{∘k}(z) = value` with multiplicity; used for critical points
/// of iterates and for preimages.
pub(crate) fn iterate_preimages(poly: &Polynomial, k: u32, value: Complex64) -> Result<Vec<RootCluster>> {
    if k == 0 {
        return Ok(vec![RootCluster { point: value, multiplicity: 1 }]);
    }
    let target = IterateTarget { poly, period: k, offset: Some(value) };
    let raw = roots::aberth(&target, roots::DEFAULT_MAX_ITER)?;
    Ok(roots::cluster(&target, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn total_points(cycles: &[CycleRecord]) -> usize {
        cycles.iter().map(|r| r.period as usize * r.multiplicity).sum()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(c(2.0, 0.0), CLASSIFY_TOL), CycleClass::Repelling);
        let third = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        assert_eq!(classify(third, CLASSIFY_TOL), CycleClass::ParabolicCandidate);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let lambda = Complex64::from_polar(1.0, std::f64::consts::TAU * golden);
        // Oracle: the closest approach of λ^q to 1 for q ≤ 64 is far above tol.
        let closest = (1..=64)
            .map(|q| (lambda.powu(q) - 1.0).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(closest > 1e-3);
        assert_eq!(classify(lambda, CLASSIFY_TOL), CycleClass::IrrationallyIndifferent);
        assert_eq!(classify(c(0.5, 0.0), CLASSIFY_TOL), CycleClass::Attracting);
    }

    #[test]
    fn fixed_points_of_square() {
        let p = Polynomial::from_real(&[0.0, 0.0, 1.0]).unwrap();
        let cycles = periodic_points(&p, 1).unwrap();
        assert_eq!(cycles.len(), 2);
        assert!(cycles[0].points[0].norm() < 1e-12);
        assert_eq!(cycles[0].class, CycleClass::Attracting);
        assert!(cycles[0].multiplier.norm() < 1e-12);
        assert!((cycles[1].points[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((cycles[1].multiplier - c(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(cycles[1].class, CycleClass::Repelling);
    }

    #[test]
    fn basilica_period_two() {
        // Oracle: P^2(z) - z = (z^2 - z - 1)(z^2 + z) for z^2 - 1, solved by radicals.
        let p = Polynomial::quadratic(c(-1.0, 0.0));
        let cycles = periodic_points(&p, 2).unwrap();
        assert_eq!(total_points(&cycles), 4);
        let alpha = (1.0 - 5f64.sqrt()) / 2.0;
        let beta = (1.0 + 5f64.sqrt()) / 2.0;
        let fixed: Vec<_> = cycles.iter().filter(|r| r.period == 1).collect();
        assert_eq!(fixed.len(), 2);
        assert!(fixed.iter().any(|r| (r.points[0] - c(alpha, 0.0)).norm() < 1e-12));
        assert!(fixed.iter().any(|r| (r.points[0] - c(beta, 0.0)).norm() < 1e-12));
        let two: Vec<_> = cycles.iter().filter(|r| r.period == 2).collect();
        assert_eq!(two.len(), 1);
        assert!(two[0].exact);
        assert!(two[0].contains_near(c(0.0, 0.0), 1e-12));
        assert!(two[0].contains_near(c(-1.0, 0.0), 1e-12));
        assert!(two[0].multiplier.norm() < 1e-12);
    }

    #[test]
    fn parabolic_double_fixed_point() {
        let p = Polynomial::quadratic(c(0.25, 0.0));
        let cycles = periodic_points(&p, 1).unwrap();
        assert_eq!(cycles.len(), 1, "{cycles:?}");
        assert_eq!(cycles[0].multiplicity, 2);
        assert!((cycles[0].points[0] - c(0.5, 0.0)).norm() < 1e-9);
        assert_eq!(cycles[0].class, CycleClass::ParabolicCandidate);
    }

    #[test]
    fn parabolic_triple_root_of_second_iterate() {
        // λ = -1 at z = -1/2 for z^2 - 3/4: the 2-cycle collides with the fixed point.
        let p = Polynomial::quadratic(c(-0.75, 0.0));
        let cycles = periodic_points(&p, 2).unwrap();
        assert_eq!(total_points(&cycles), 4, "{cycles:?}");
        let para = cycles.iter().find(|r| r.multiplicity == 3).expect("triple cluster");
        assert_eq!(para.period, 1);
        assert!((para.points[0] - c(-0.5, 0.0)).norm() < 1e-7);
        assert_eq!(para.class, CycleClass::ParabolicCandidate);
    }

    #[test]
    fn counts_match_degree_power() {
        let polys = [
            Polynomial::quadratic(c(0.0, 1.0)),
            Polynomial::quadratic(c(-0.12, 0.75)),
            Polynomial::from_real(&[0.0, -3.0, 0.0, 1.0]).unwrap(),
        ];
        for p in &polys {
            for n in 1..=4u32 {
                if p.degree().pow(n) > 100 {
                    continue;
                }
                let cycles = periodic_points(p, n).unwrap();
                assert_eq!(total_points(&cycles), p.degree().pow(n));
                for r in &cycles {
                    assert!(r.closure_residual(p) < CENSUS_TOL);
                    let m = r.recompute_multiplier(p);
                    assert!((m - r.multiplier).norm() <= 1e-8 * m.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn period_bound() {
        let p = Polynomial::quadratic(c(0.0, 0.0));
        assert!(matches!(periodic_points(&p, 15), Err(Error::PeriodTooLarge { .. })));
    }
}
