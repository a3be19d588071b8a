//! Landing decisions for a traced orbit of rays.
//!
//! A ray lands by the tail test when its last samples below
//! [`LANDING_POTENTIAL`] fit in a disc of diameter [`LANDING_TOL`]. Slowly
//! converging tails (weakly repelling or parabolic landing points) are
//! accepted when the tail approaches a periodic point monotonically and that
//! point is clearly the nearest candidate.

use num_complex::Complex64;

use super::{ExternalRay, RayStatus};
use crate::poly::periodic::iterate_preimages;
use crate::poly::{classify, periodic_points, CycleClass, CycleRecord, Polynomial};

pub const LANDING_POTENTIAL: f64 = 1e-7;
pub const LANDING_TOL: f64 = 1e-6;
pub const TAIL_LEN: usize = 20;
/// Periodic points are enumerated directly up to this many roots.
const CENSUS_LIMIT: u64 = 4096;
const POLISH_CLASSIFY_TOL: f64 = 1e-6;

#[derive(Clone, Copy)]
struct Candidate {
    point: Complex64,
    multiplier: Complex64,
    class: CycleClass,
}

fn tail(ray: &ExternalRay) -> Option<Vec<Complex64>> {
    let below: Vec<Complex64> = ray.samples.iter().filter(|s| s.0 < LANDING_POTENTIAL).map(|s| s.1).collect();
    (below.len() >= TAIL_LEN).then(|| below[below.len() - TAIL_LEN..].to_vec())
}

fn diameter(points: &[Complex64]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            best = best.max((p - q).norm());
        }
    }
    best
}

fn centroid(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

fn approaches(tail: &[Complex64], p: Complex64) -> bool {
    let dist: Vec<f64> = tail.iter().map(|&z| (z - p).norm()).collect();
    dist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15) && dist[dist.len() - 1] < dist[0]
}

/// Index of the nearest point, provided it is at most half as far as the next.
fn clear_nearest(points: &[Complex64], z: Complex64) -> Option<usize> {
    let mut order: Vec<(usize, f64)> = points.iter().enumerate().map(|(k, &p)| (k, (p - z).norm())).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    match order.as_slice() {
        [] => None,
        [only] => Some(only.0),
        [first, second, ..] => (first.1 < 0.5 * second.1).then_some(first.0),
    }
}

fn smallest_period(poly: &Polynomial, p: Complex64, n: u32) -> u32 {
    let mut z = p;
    for k in 1..=n {
        z = poly.eval(z);
        if n.is_multiple_of(k) && (z - p).norm() < 1e-6 * p.norm().max(1.0) {
            return k;
        }
    }
    n
}

/// Newton on `P^n(z) = z`, tolerating multiple roots by slow convergence.
fn polish(poly: &Polynomial, start: Complex64, n: u32) -> Option<Candidate> {
    let mut z = start;
    for _ in 0..200 {
        let (w, dw) = poly.iterate_with_derivative(z, n);
        let denom = dw - 1.0;
        if denom.norm() == 0.0 || !w.is_finite() {
            break;
        }
        let step = (w - z) / denom;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let (w, _) = poly.iterate_with_derivative(z, n);
    if !((w - z).norm() < 1e-8 * z.norm().max(1.0)) {
        return None;
    }
    let k = smallest_period(poly, z, n);
    let (_, multiplier) = poly.iterate_with_derivative(z, k);
    Some(Candidate { point: z, multiplier, class: classify(multiplier, POLISH_CLASSIFY_TOL) })
}

fn census_candidates(poly: &Polynomial, n: u32) -> Option<Vec<Candidate>> {
    let count = (poly.degree() as u64).checked_pow(n)?;
    if count > CENSUS_LIMIT {
        return None;
    }
    let cycles: Vec<CycleRecord> = periodic_points(poly, n).ok()?;
    Some(
        cycles
            .iter()
            .flat_map(|c| c.points.iter().map(move |&p| Candidate { point: p, multiplier: c.multiplier, class: c.class }))
            .collect(),
    )
}

fn undecided(reason: &str) -> RayStatus {
    RayStatus::NotDecided { reason: reason.to_string() }
}

pub(super) fn decide(poly: &Polynomial, rays: &mut [ExternalRay], preperiod: usize) {
    let n = rays.len();
    let period = (n - preperiod) as u32;
    let mut candidates: Option<Option<Vec<Candidate>>> = None;

    for i in preperiod..n {
        if matches!(rays[i].status, RayStatus::TraceFailed { .. }) {
            continue;
        }
        let Some(tail) = tail(&rays[i]) else {
            rays[i].status = undecided("trace does not reach the landing potential");
            continue;
        };
        let mut by_tail = diameter(&tail) < LANDING_TOL;
        let start = if by_tail { centroid(&tail) } else { tail[TAIL_LEN - 1] };
        let census = candidates.get_or_insert_with(|| census_candidates(poly, period));
        let chosen = match census {
            Some(list) => {
                let points: Vec<Complex64> = list.iter().map(|c| c.point).collect();
                clear_nearest(&points, start).map(|k| list[k])
            }
            None => polish(poly, start, period),
        };
        let Some(cand) = chosen else {
            rays[i].status = undecided("no isolated periodic point near the tail");
            continue;
        };
        // A tight tail can still sit short of a weakly repelling point; such
        // tails go through the slow-landing test instead.
        if by_tail && (cand.point - start).norm() > LANDING_TOL {
            by_tail = false;
        }
        if !by_tail && !approaches(&tail, cand.point) {
            rays[i].status = undecided("tail does not approach a periodic point monotonically");
            continue;
        }
        if cand.class == CycleClass::Attracting {
            rays[i].status = undecided("candidate landing point is attracting");
            continue;
        }
        rays[i].status = RayStatus::Landed {
            point: cand.point,
            multiplier: Some(cand.multiplier),
            class: Some(cand.class),
            by_tail,
        };
    }

    // Rays of a cycle land on a cycle, permuted as the angles are.
    let consistent = (preperiod..n).all(|i| {
        let k = if i + 1 < n { i + 1 } else { preperiod };
        match (rays[i].status.landing_point(), rays[k].status.landing_point()) {
            (Some(p), Some(q)) => (poly.eval(p) - q).norm() < 1e-6 * q.norm().max(1.0),
            _ => true,
        }
    });
    if !consistent {
        for ray in &mut rays[preperiod..] {
            if ray.status.landing_point().is_some() {
                ray.status = undecided("landing points do not form a cycle");
            }
        }
    }

    for i in (0..preperiod).rev() {
        if matches!(rays[i].status, RayStatus::TraceFailed { .. }) {
            continue;
        }
        let Some(tail) = tail(&rays[i]) else {
            rays[i].status = undecided("trace does not reach the landing potential");
            continue;
        };
        let image = rays[i + 1].status.landing_point();
        if diameter(&tail) < LANDING_TOL {
            let c = centroid(&tail);
            // Snap to the exact preimage of the image landing point when it is that close.
            let point = image
                .and_then(|q| iterate_preimages(poly, 1, q).ok())
                .and_then(|pre| {
                    let pts: Vec<Complex64> = pre.iter().map(|r| r.point).collect();
                    pts.iter().copied().find(|p| (p - c).norm() < LANDING_TOL)
                })
                .unwrap_or(c);
            rays[i].status = RayStatus::Landed { point, multiplier: None, class: None, by_tail: true };
            continue;
        }
        let Some(q) = image else {
            rays[i].status = undecided("image ray did not land");
            continue;
        };
        let Ok(pre) = iterate_preimages(poly, 1, q) else {
            rays[i].status = undecided("preimage computation failed");
            continue;
        };
        let pts: Vec<Complex64> = pre.iter().map(|r| r.point).collect();
        let last = tail[TAIL_LEN - 1];
        match clear_nearest(&pts, last) {
            Some(k) if approaches(&tail, pts[k]) => {
                rays[i].status = RayStatus::Landed { point: pts[k], multiplier: None, class: None, by_tail: false };
            }
            _ => rays[i].status = undecided("tail does not approach a preimage of the image landing point"),
        }
    }
}
