//! External rays of rational angle, traced by pulling back along the
//! forward orbit of the angle, and their landing points.

mod landing;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::Serialize;

use crate::angle::{orbit, Angle};
use crate::error::{Error, Result};
use crate::par;
use crate::poly::{CycleClass, Polynomial};
use crate::potential::bottcher;

pub use landing::{LANDING_POTENTIAL, LANDING_TOL, TAIL_LEN};

/// Default number of samples per division of the potential by `d`.
pub const DEFAULT_STEPS: u32 = 24;
/// Default lower potential used by [`land`].
pub const DEFAULT_POT_LO: f64 = 1e-8;
pub const MAX_ORBIT: usize = 1 << 16;
/// A pull-back step is split in two at most this many times.
const MAX_HALVINGS: u32 = 8;

/// Landing state of a traced ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RayStatus {
    Landed {
        point: Complex64,
        /// Multiplier and class of the landing cycle, for periodic angles.
        multiplier: Option<Complex64>,
        class: Option<CycleClass>,
        /// True when the tail diameter test alone decided the landing.
        by_tail: bool,
    },
    NotDecided { reason: String },
    TraceFailed { level: usize },
}

impl RayStatus {
    pub fn landing_point(&self) -> Option<Complex64> {
        match self {
            RayStatus::Landed { point, .. } => Some(*point),
            _ => None,
        }
    }
}

/// One traced ray: samples at strictly decreasing potentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalRay {
    pub angle: Angle,
    pub samples: Vec<(f64, Complex64)>,
    pub status: RayStatus,
}

impl ExternalRay {
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn last_point(&self) -> Option<Complex64> {
        self.samples.last().map(|s| s.1)
    }

    /// JSON-lines records: one per sample and a final status record.
    pub fn json_records(&self) -> Vec<serde_json::Value> {
        let angle = self.angle.to_string();
        let mut out: Vec<serde_json::Value> = self
            .samples
            .iter()
            .map(|&(r, z)| serde_json::json!({"angle": angle, "potential": r, "re": z.re, "im": z.im}))
            .collect();
        let mut status = serde_json::to_value(&self.status).expect("status serializes");
        status["angle"] = serde_json::Value::String(angle);
        out.push(status);
        out
    }
}

/// Potential grid `r_j = pot_hi · d^{-j/steps}` shared by every traced ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialGrid {
    pub pot_hi: f64,
    pub pot_lo: f64,
    pub steps: u32,
    pub degree: usize,
}

impl PotentialGrid {
    pub fn new(poly: &Polynomial, pot_hi: f64, pot_lo: f64, steps: u32) -> Result<Self> {
        if !(pot_lo > 0.0) || !(pot_hi > pot_lo) || !pot_hi.is_finite() {
            return Err(Error::InvalidPotentialRange(format!("need pot_hi > pot_lo > 0, got {pot_hi} and {pot_lo}")));
        }
        if pot_hi < poly.escape_radius().ln() {
            return Err(Error::InvalidPotentialRange(format!(
                "pot_hi {pot_hi} below log of escape radius {}",
                poly.escape_radius().ln()
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("steps_per_halving must be positive".into()));
        }
        Ok(Self { pot_hi, pot_lo, steps, degree: poly.degree() })
    }

    /// Defaults: start at `log R + 1`, stop at [`DEFAULT_POT_LO`].
    pub fn standard(poly: &Polynomial) -> Self {
        Self::new(poly, poly.escape_radius().ln() + 1.0, DEFAULT_POT_LO, DEFAULT_STEPS).expect("valid defaults")
    }

    pub fn level(&self, j: usize) -> f64 {
        self.pot_hi * (self.degree as f64).powf(-(j as f64) / self.steps as f64)
    }

    pub fn level_count(&self) -> usize {
        let span = (self.pot_hi / self.pot_lo).ln() / (self.degree as f64).ln();
        (span * self.steps as f64 + 1e-9).floor() as usize + 1
    }
}

/// Traces every ray in the forward orbit of `t`, returned in orbit order.
pub fn trace_ray(poly: &Polynomial, t: Angle, pot_hi: f64, pot_lo: f64, steps_per_halving: u32) -> Result<Vec<ExternalRay>> {
    let grid = PotentialGrid::new(poly, pot_hi, pot_lo, steps_per_halving)?;
    let o = orbit(t, poly.degree() as u64);
    if o.angles.len() > MAX_ORBIT {
        return Err(Error::AngleOrbitTooLarge(o.angles.len()));
    }
    Ok(trace_orbit(poly, &o.angles, o.preperiod, &grid))
}

/// Traces the union of the orbits of `angles`; distinct orbits run in
/// parallel. The result is keyed by angle.
pub fn trace_angle_set(poly: &Polynomial, angles: &BTreeSet<Angle>, grid: &PotentialGrid) -> Result<BTreeMap<Angle, ExternalRay>> {
    let d = poly.degree() as u64;
    let mut covered: BTreeSet<Angle> = BTreeSet::new();
    let mut orbits = Vec::new();
    for &t in angles {
        if covered.contains(&t) {
            continue;
        }
        let o = orbit(t, d);
        if o.angles.len() > MAX_ORBIT {
            return Err(Error::AngleOrbitTooLarge(o.angles.len()));
        }
        covered.extend(o.angles.iter().copied());
        orbits.push(o);
    }
    let traced = par::map(&orbits, |o| trace_orbit(poly, &o.angles, o.preperiod, grid));
    let mut out = BTreeMap::new();
    for rays in traced {
        for ray in rays {
            out.entry(ray.angle).or_insert(ray);
        }
    }
    Ok(out)
}

/// Landing point of `R_t` with default trace parameters.
pub fn land(poly: &Polynomial, t: Angle) -> Result<RayStatus> {
    let grid = PotentialGrid::standard(poly);
    let rays = trace_ray(poly, t, grid.pot_hi, grid.pot_lo, grid.steps)?;
    Ok(rays.into_iter().next().expect("orbit contains t").status)
}

/// Largest `|P(R_t(r)) - R_{dt}(d r)|` over the shared potential levels.
pub fn ray_functional_check(poly: &Polynomial, rays: &[ExternalRay], t: Angle) -> Result<f64> {
    let d = poly.degree();
    let image = t.mul_d(d as u64);
    let ray = rays.iter().find(|r| r.angle == t).ok_or(Error::MissingRay(t))?;
    let target = rays.iter().find(|r| r.angle == image).ok_or(Error::MissingRay(image))?;
    let mut by_level: Vec<(f64, Complex64)> = target.samples.clone();
    by_level.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut worst: f64 = 0.0;
    let mut shared = 0usize;
    for &(r, z) in &ray.samples {
        let want = r * d as f64;
        let found = by_level
            .binary_search_by(|s| s.0.total_cmp(&want))
            .map(|k| by_level[k])
            .or_else(|k| {
                let near = [k.wrapping_sub(1), k].into_iter().filter_map(|i| by_level.get(i).copied());
                near.min_by(|a, b| (a.0 - want).abs().total_cmp(&(b.0 - want).abs())).ok_or(())
            });
        let Ok((r2, w)) = found else { continue };
        if (r2 - want).abs() > 1e-9 * want {
            continue;
        }
        shared += 1;
        worst = worst.max((poly.eval(z) - w).norm());
    }
    if shared == 0 {
        return Err(Error::LevelMismatch);
    }
    Ok(worst)
}

/// Advances all rays of one orbit level by level. `angles[i]` maps to
/// `angles[i+1]`, except the last which maps back into the cycle.
pub(crate) fn trace_orbit(poly: &Polynomial, angles: &[Angle], preperiod: usize, grid: &PotentialGrid) -> Vec<ExternalRay> {
    let n = angles.len();
    let image_of = |i: usize| if i + 1 < n { i + 1 } else { preperiod };
    let steps = grid.steps as usize;
    let levels = grid.level_count();
    let mut samples: Vec<Vec<(f64, Complex64)>> = vec![Vec::with_capacity(levels); n];
    let mut failed: Vec<Option<usize>> = vec![None; n];

    for j in 0..levels {
        let r = grid.level(j);
        let step: Vec<Option<Complex64>> = if j < steps {
            par::map_range(n, |i| {
                let w = Complex64::from_polar(r.exp(), angles[i].to_f64() * std::f64::consts::TAU);
                bottcher(poly, w).ok()
            })
        } else {
            par::map_range(n, |i| {
                if failed[i].is_some() {
                    return None;
                }
                let k = image_of(i);
                if failed[k].is_some_and(|lvl| lvl <= j - steps) || samples[k].len() <= j - steps {
                    return None;
                }
                let seed = samples[i][j - 1].1;
                let target = samples[k][j - steps].1;
                pull_back(poly, seed, target)
            })
        };
        for (i, z) in step.into_iter().enumerate() {
            if failed[i].is_some() {
                continue;
            }
            match z {
                Some(z) => samples[i].push((r, z)),
                None => failed[i] = Some(j),
            }
        }
        if failed.iter().all(Option::is_some) {
            break;
        }
    }

    let mut rays: Vec<ExternalRay> = angles
        .iter()
        .zip(samples)
        .zip(&failed)
        .map(|((&angle, samples), f)| ExternalRay {
            angle,
            samples,
            status: match f {
                Some(level) => RayStatus::TraceFailed { level: *level },
                None => RayStatus::NotDecided { reason: "pending".into() },
            },
        })
        .collect();
    landing::decide(poly, &mut rays, preperiod);
    rays
}

/// Solves `P(z) = target` near `seed` by Newton continuation along the
/// segment from `P(seed)` to `target`, halving the sub-step when a Newton
/// solve fails or jumps further than the linear prediction allows.
fn pull_back(poly: &Polynomial, seed: Complex64, target: Complex64) -> Option<Complex64> {
    let start = poly.eval(seed);
    for halving in 0..=MAX_HALVINGS {
        let parts = 1u32 << halving;
        let mut z = seed;
        let mut ok = true;
        for s in 1..=parts {
            let w = start + (target - start) * (s as f64 / parts as f64);
            let (p, dp) = poly.eval_with_derivative(z);
            let predicted = ((w - p) / dp).norm();
            match newton_solve(poly, z, w) {
                Some(next) if (next - z).norm() <= 3.0 * predicted + 1e-13 * z.norm().max(1.0) => z = next,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(z);
        }
    }
    None
}

fn newton_solve(poly: &Polynomial, mut z: Complex64, w: Complex64) -> Option<Complex64> {
    for _ in 0..60 {
        let (p, dp) = poly.eval_with_derivative(z);
        if dp.norm() == 0.0 {
            return None;
        }
        let step = (p - w) / dp;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            return Some(z);
        }
    }
    let (p, dp) = poly.eval_with_derivative(z);
    (((p - w) / dp).norm() <= 1e-13 * z.norm().max(1.0)).then_some(z)
}
