//! Monic complex polynomials: evaluation, iteration, critical points,
//! periodic points and multiplier classification.

pub(crate) mod periodic;
pub mod roots;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
pub use periodic::{classify, periodic_points, CycleClass, CycleRecord, CENSUS_TOL, PARABOLIC_MAX_Q};
use roots::{CoefficientTarget, RootCluster};

/// A monic polynomial of degree `d >= 2`, coefficients stored constant-term
/// first. Immutable after construction; critical points are found once.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
    deriv: Vec<Complex64>,
    escape_radius: f64,
    critical: Vec<RootCluster>,
}

/// Result of iterating a point a fixed number of times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Iterate {
    Point(Complex64),
    /// The orbit left the disc of radius `escape_radius * 2^10` after `step` iterations.
    Escaped { step: u32, value: Complex64 },
}

impl Iterate {
    pub fn point(self) -> Option<Complex64> {
        match self {
            Iterate::Point(z) => Some(z),
            Iterate::Escaped { .. } => None,
        }
    }
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Value and first derivative by a single Horner pass.
pub(crate) fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

impl Polynomial {
    /// Builds a polynomial from coefficients ordered constant term first.
    /// The leading coefficient must be exactly one.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::DegreeTooSmall(coeffs.len().saturating_sub(1)));
        }
        let lead = *coeffs.last().unwrap();
        if lead != Complex64::new(1.0, 0.0) {
            return Err(Error::NotMonic(lead));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let d = coeffs.len() - 1;
        let deriv: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        // |z| >= A + 2 gives |P(z)| >= |z|^{d-1} (|z| - A) >= 2|z|.
        let lower_mass: f64 = coeffs[..d].iter().map(|c| c.norm()).sum();
        let escape_radius = lower_mass + 2.0;

        let critical = if d == 2 {
            // P' = 2z + a1 has the single root -a1/2.
            vec![RootCluster { point: -coeffs[1] / 2.0, multiplicity: 1 }]
        } else {
            let target = CoefficientTarget::new(deriv.clone());
            let raw = roots::aberth(&target, roots::DEFAULT_MAX_ITER)?;
            roots::cluster(&target, raw)
        };
        Ok(Self { coeffs, deriv, escape_radius, critical })
    }

    /// `z^2 + c`.
    pub fn quadratic(c: Complex64) -> Self {
        Self::new(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            .expect("z^2 + c is monic")
    }

    /// Convenience constructor from real coefficients, constant term first.
    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        horner(&self.deriv, z)
    }

    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        horner_with_derivative(&self.coeffs, z)
    }

    /// `P(z) / z^d = 1 + a_{d-1}/z + ... + a_0/z^d`, evaluated without forming
    /// `z^d`. Used by the Green and Böttcher series far from the Julia set.
    pub(crate) fn normalized_ratio(&self, z: Complex64) -> Complex64 {
        let inv = z.inv();
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            acc = acc * inv + c;
        }
        acc
    }

    /// `P^{∘n}(z)`, short-circuiting once the orbit leaves radius `escape_radius * 2^10`.
    pub fn iterate(&self, z: Complex64, n: u32) -> Iterate {
        let bail = self.escape_radius * 1024.0;
        let mut w = z;
        for step in 0..n {
            if w.norm() > bail {
                return Iterate::Escaped { step, value: w };
            }
            w = self.eval(w);
        }
        if w.norm() > bail {
            return Iterate::Escaped { step: n, value: w };
        }
        Iterate::Point(w)
    }

    /// `P^{∘n}(z)` and its derivative by the chain rule, without escape checks.
    pub fn iterate_with_derivative(&self, z: Complex64, n: u32) -> (Complex64, Complex64) {
        let mut w = z;
        let mut dw = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            let (p, dp) = self.eval_with_derivative(w);
            dw *= dp;
            w = p;
        }
        (w, dw)
    }

    /// Roots of `P'` with multiplicities summing to `d - 1`.
    pub fn critical_points(&self) -> &[RootCluster] {
        &self.critical
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Polynomial", 3)?;
        s.serialize_field("degree", &self.degree())?;
        let coeffs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        s.serialize_field("coefficients", &coeffs)?;
        s.serialize_field("escape_radius", &self.escape_radius)?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_examples() {
        let sq = Polynomial::from_real(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(sq.eval(c(2.0, 0.0)), c(4.0, 0.0));
        let basilica = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(basilica.eval(c(0.0, 0.0)), c(-1.0, 0.0));
        let cheb = Polynomial::from_real(&[0.0, -3.0, 0.0, 1.0]).unwrap();
        assert_eq!(cheb.eval(c(1.0, 0.0)), c(-2.0, 0.0));
        assert_eq!(cheb.derivative(c(1.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn iterate_examples() {
        let sq = Polynomial::from_real(&[0.0, 0.0, 1.0]).unwrap();
        // 2 -> 4 -> 16 -> 256 with R = 2: 256 < 2048, no short-circuit.
        assert_eq!(sq.iterate(c(2.0, 0.0), 3), Iterate::Point(c(256.0, 0.0)));
        let b = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(b.iterate(c(0.0, 0.0), 2), Iterate::Point(c(0.0, 0.0)));
        assert_eq!(b.iterate(c(-1.0, 0.0), 1), Iterate::Point(c(0.0, 0.0)));
        assert!(matches!(sq.iterate(c(3.0, 0.0), 10), Iterate::Escaped { .. }));
    }

    #[test]
    fn rejects_non_monic_and_low_degree() {
        assert!(matches!(Polynomial::from_real(&[1.0, 2.0]), Err(Error::DegreeTooSmall(1))));
        assert!(matches!(Polynomial::from_real(&[0.0, 0.0, 2.0]), Err(Error::NotMonic(_))));
    }

    #[test]
    fn critical_point_examples() {
        let q = Polynomial::quadratic(c(0.3, -0.2));
        assert_eq!(q.critical_points(), &[RootCluster { point: c(0.0, 0.0), multiplicity: 1 }]);

        let cheb = Polynomial::from_real(&[0.0, -3.0, 0.0, 1.0]).unwrap();
        let mut pts: Vec<_> = cheb.critical_points().to_vec();
        pts.sort_by(|a, b| a.point.re.partial_cmp(&b.point.re).unwrap());
        assert_eq!(pts.len(), 2);
        assert!((pts[0].point - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((pts[1].point - c(1.0, 0.0)).norm() < 1e-12);

        let cube = Polynomial::from_real(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        let pts = cube.critical_points();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].multiplicity, 2);
        assert!(pts[0].point.norm() < 1e-10);
    }

    #[test]
    fn critical_residuals_and_multiplicities() {
        let polys = [
            Polynomial::new(vec![c(0.1, 0.3), c(-1.0, 0.5), c(0.0, 0.0), c(0.2, 0.0), c(1.0, 0.0)]).unwrap(),
            Polynomial::from_real(&[-3.0, -3.0, 0.0, 1.0]).unwrap(),
            Polynomial::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
        ];
        for p in &polys {
            let d = p.degree();
            let total: usize = p.critical_points().iter().map(|r| r.multiplicity).sum();
            assert_eq!(total, d - 1);
            for r in p.critical_points() {
                let bound = 1e-10 * r.point.norm().max(1.0).powi(d as i32 - 1);
                assert!(p.derivative(r.point).norm() < bound.max(1e-10), "{:?}", r);
            }
        }
    }

    #[test]
    fn escape_radius_doubles_modulus() {
        let polys = [
            Polynomial::quadratic(c(-1.0, 0.0)),
            Polynomial::quadratic(c(0.0, 1.0)),
            Polynomial::from_real(&[0.0, -3.0, 0.0, 1.0]).unwrap(),
            Polynomial::new(vec![c(2.0, -1.0), c(0.0, 3.0), c(-1.5, 0.0), c(1.0, 0.0)]).unwrap(),
        ];
        for p in &polys {
            let r = p.escape_radius();
            for k in 0..720 {
                let z = Complex64::from_polar(r, k as f64 * std::f64::consts::TAU / 720.0);
                assert!(p.eval(z).norm() >= 2.0 * r - 1e-9);
            }
        }
    }
}
