//! Green's function of the filled Julia set, the Böttcher coordinate near
//! infinity, critical potentials and sublevel-set components.

mod mask;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

pub use mask::{sublevel_component, GridGeometry, RegionMask, LEVEL_TOL, REGULAR_TOL};

/// Default iteration budget for [`green`].
pub const DEFAULT_BUDGET: u32 = 512;
/// Orbits are followed until this modulus before the one-term correction.
const GREEN_BAILOUT: f64 = 1e8;

/// Green potential in natural-log units; zero means "in K at this budget".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct PotentialValue(pub f64);

impl PotentialValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn in_filled_julia(self) -> bool {
        self.0 == 0.0
    }
}

/// `G(z) = lim log|P^n(z)| / d^n`, evaluated once the orbit passes `1e8` with
/// the first correction term `log|P(z_n)/z_n^d| / d^{n+1}`.
pub fn green(poly: &Polynomial, z: Complex64, budget: u32) -> PotentialValue {
    let bail = GREEN_BAILOUT.max(poly.escape_radius());
    let d = poly.degree() as f64;
    let mut w = z;
    let mut scale = 1.0;
    for _ in 0..=budget {
        let r = w.norm();
        if r > bail {
            let correction = poly.normalized_ratio(w).norm().ln() / d;
            let g = (r.ln() + correction) / scale;
            return PotentialValue(g.max(0.0));
        }
        if !r.is_finite() {
            break;
        }
        w = poly.eval(w);
        scale *= d;
        if !scale.is_finite() {
            break;
        }
    }
    PotentialValue(0.0)
}

/// Böttcher coordinate and its derivative, `w = φ^{-1}(z)` and `dw/dz`.
///
/// Uses `w = z · Π (P(z_k)/z_k^d)^{1/d^{k+1}}`, each factor taking the root
/// closest to one so the branch follows the previous partial product.
pub fn bottcher_with_derivative(poly: &Polynomial, z: Complex64) -> Result<(Complex64, Complex64)> {
    let g = green(poly, z, DEFAULT_BUDGET).value();
    let threshold = poly.escape_radius().ln() / 8.0;
    if !(g > threshold) {
        return Err(Error::TooCloseToJulia { potential: g });
    }
    let d = poly.degree() as f64;
    let mut log_w = z.ln();
    // r_k = (P^k)'(z) / (d^k z_k) tends to (log w)'.
    let mut log_deriv = z.inv();
    let mut zk = z;
    let mut power = 1.0;
    for _ in 0..200 {
        let (pz, dpz) = poly.eval_with_derivative(zk);
        // Beyond this every remaining factor is 1 to machine precision, and
        // complex division by P(z_k) would overflow in its squared norm.
        if !(pz.norm() < 1e150) {
            break;
        }
        power *= d;
        let term = poly.normalized_ratio(zk).ln() / power;
        let factor = zk * dpz / (pz * d);
        log_w += term;
        log_deriv *= factor;
        zk = pz;
        if term.norm() < 1e-18 * log_w.norm().max(1.0) && (factor - 1.0).norm() < 1e-17 {
            break;
        }
    }
    let w = log_w.exp();
    Ok((w, w * log_deriv))
}

/// `φ^{-1}(z)`, the Böttcher coordinate tangent to the identity at infinity.
pub fn bottcher_inverse(poly: &Polynomial, z: Complex64) -> Result<Complex64> {
    bottcher_with_derivative(poly, z).map(|(w, _)| w)
}

/// `φ(w)` for `|w|` large enough that `φ(w)` meets the Böttcher precondition,
/// by Newton iteration on [`bottcher_inverse`] from `z = w`.
pub fn bottcher(poly: &Polynomial, w: Complex64) -> Result<Complex64> {
    let mut z = w;
    for _ in 0..100 {
        let (b, db) = bottcher_with_derivative(poly, z)?;
        let step = (b - w) / db;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    let (b, _) = bottcher_with_derivative(poly, z)?;
    if (b - w).norm() <= 1e-10 * w.norm() {
        Ok(z)
    } else {
        Err(Error::TooCloseToJulia { potential: w.norm().ln() })
    }
}

/// `arg φ^{-1}(z) / 2π` in `[0, 1)`.
pub fn external_angle_of(poly: &Polynomial, z: Complex64) -> Result<f64> {
    let w = bottcher_inverse(poly, z)?;
    let t = (w.arg() / std::f64::consts::TAU).rem_euclid(1.0);
    Ok(if t >= 1.0 { 0.0 } else { t })
}

/// `{G(c)/d^k : c critical with G(c) > 0, 0 <= k <= depth}`, sorted ascending.
pub fn critical_potentials(poly: &Polynomial, depth: u32) -> Vec<f64> {
    let d = poly.degree() as f64;
    let mut values = Vec::new();
    for c in poly.critical_points() {
        let g = green(poly, c.point, DEFAULT_BUDGET).value();
        if g > 0.0 {
            for k in 0..=depth {
                values.push(g / d.powi(k as i32));
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    values
}

/// `r` is regular when it stays `tol` away from every critical potential.
pub fn is_regular(r: f64, critical: &[f64], tol: f64) -> bool {
    r > 0.0 && critical.iter().all(|&c| (c - r).abs() > tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn green_examples() {
        let sq = Polynomial::quadratic(c(0.0, 0.0));
        assert!((green(&sq, c(2.0, 0.0), DEFAULT_BUDGET).value() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(green(&sq, c(0.5, 0.0), DEFAULT_BUDGET).value(), 0.0);
        // Chebyshev oracle: φ(w) = w + 1/w conjugates w^2 to z^2 - 2.
        let cheb = Polynomial::quadratic(c(-2.0, 0.0));
        let expected = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((green(&cheb, c(3.0, 0.0), DEFAULT_BUDGET).value() - expected).abs() < 1e-12);
    }

    #[test]
    fn bottcher_examples() {
        let sq = Polynomial::quadratic(c(0.0, 0.0));
        let z = c(1.3, -0.7);
        assert!((bottcher_inverse(&sq, z).unwrap() - z).norm() < 1e-14);

        let cheb = Polynomial::quadratic(c(-2.0, 0.0));
        let w0 = c(3.0, 0.0);
        assert!((bottcher_inverse(&cheb, w0 + w0.inv()).unwrap() - w0).norm() < 1e-12);
        let expected = (5.0 + 21f64.sqrt()) / 2.0;
        assert!((bottcher_inverse(&cheb, c(5.0, 0.0)).unwrap() - c(expected, 0.0)).norm() < 1e-12);
        // Off-axis Chebyshev check.
        let w = Complex64::from_polar(2.5, 0.9);
        assert!((bottcher_inverse(&cheb, w + w.inv()).unwrap() - w).norm() < 1e-12);
        assert!((bottcher(&cheb, w).unwrap() - (w + w.inv())).norm() < 1e-12);
    }

    #[test]
    fn cubic_chebyshev_bottcher() {
        // T3(w + 1/w) = w^3 + 1/w^3, so φ(w) = w + 1/w again.
        let p = Polynomial::from_real(&[0.0, -3.0, 0.0, 1.0]).unwrap();
        for k in 0..16 {
            let w = Complex64::from_polar(4.0, 0.4 * k as f64);
            let (b, db) = bottcher_with_derivative(&p, w + w.inv()).unwrap();
            assert!((b - w).norm() < 1e-12);
            assert!((db - 1.0 / (1.0 - w.inv() * w.inv())).norm() < 1e-10);
            assert!((bottcher(&p, w).unwrap() - (w + w.inv())).norm() < 1e-12);
        }
    }

    #[test]
    fn bottcher_rejects_points_near_julia() {
        let b = Polynomial::quadratic(c(-1.0, 0.0));
        assert!(matches!(bottcher_inverse(&b, c(0.0, 0.0)), Err(Error::TooCloseToJulia { .. })));
    }

    #[test]
    fn external_angle_examples() {
        let sq = Polynomial::quadratic(c(0.0, 0.0));
        assert!(external_angle_of(&sq, c(2.0, 0.0)).unwrap().abs() < 1e-15);
        assert!((external_angle_of(&sq, c(-2.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        let cheb = Polynomial::quadratic(c(-2.0, 0.0));
        assert!(external_angle_of(&cheb, c(3.0, 0.0)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn critical_potential_examples() {
        assert!(critical_potentials(&Polynomial::quadratic(c(0.0, 0.0)), 8).is_empty());
        assert!(critical_potentials(&Polynomial::quadratic(c(-1.0, 0.0)), 8).is_empty());
        let p = Polynomial::quadratic(c(-6.0, 0.0));
        let g0 = green(&p, c(0.0, 0.0), DEFAULT_BUDGET).value();
        assert!(g0 > 0.0);
        // Functional equation at the critical value.
        assert!((green(&p, c(-6.0, 0.0), DEFAULT_BUDGET).value() - 2.0 * g0).abs() < 1e-10);
        let values = critical_potentials(&p, 3);
        let expected = [g0 / 8.0, g0 / 4.0, g0 / 2.0, g0];
        assert_eq!(values.len(), 4);
        for (v, e) in values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
        assert!(is_regular(g0 * 0.75, &values, REGULAR_TOL));
        assert!(!is_regular(g0 / 2.0, &values, REGULAR_TOL));
    }
}
