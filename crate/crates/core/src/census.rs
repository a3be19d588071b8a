//! Cycle enumeration by period, filtered to discs or partition cells, and
//! the angle-side check on rays contained in a cell.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::angle::{common_period_report, is_cyclic_order_preserving, periodic_angles_up_to, Angle, CommonPeriodReport};
use crate::error::{Error, Result};
use crate::par;
use crate::poly::{periodic_points, CycleRecord, Polynomial};
use crate::ray::trace_angle_set;
use crate::separation::{Location, Partition, Verdict};

/// Match tolerance between the Newton-grid search and the census.
pub const CROSSCHECK_TOL: f64 = 1e-8;
pub const MAX_RAY_ANGLES: u64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    All,
    Disc { center: Complex64, radius: f64 },
    Cell { level: usize, id: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub coefficients: Vec<Complex64>,
    pub max_period: u32,
    pub region: Region,
    pub cycles: Vec<CycleRecord>,
    /// Cycles with a point on a ray, undecided, or spread over several cells.
    pub undecided_count: usize,
}

impl CensusReport {
    pub fn non_repelling(&self) -> impl Iterator<Item = &CycleRecord> {
        self.cycles.iter().filter(|c| !c.class.is_repelling())
    }

    pub fn count_with_period(&self, n: u32) -> usize {
        self.cycles.iter().filter(|c| c.period == n).count()
    }
}

/// All cycles of exact period `1..=max_period`.
pub fn census(poly: &Polynomial, max_period: u32) -> Result<CensusReport> {
    if max_period == 0 {
        return Err(Error::InvalidArgument("max_period must be at least 1".into()));
    }
    let periods: Vec<u32> = (1..=max_period).collect();
    let per_period = par::map(&periods, |&n| periodic_points(poly, n));
    let mut cycles = Vec::new();
    for records in per_period {
        cycles.extend(records?.into_iter().filter(|r| r.exact));
    }
    Ok(CensusReport {
        coefficients: poly.coefficients().to_vec(),
        max_period,
        region: Region::All,
        cycles,
        undecided_count: 0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscReport {
    pub census: CensusReport,
    /// Cycles inside the disc other than a fixed point at its centre.
    pub small_cycles: usize,
}

/// Cycles whose every point lies in the closed disc.
pub fn cycles_in_disc(poly: &Polynomial, center: Complex64, radius: f64, max_period: u32) -> Result<DiscReport> {
    let mut report = census(poly, max_period)?;
    report.cycles.retain(|c| c.points.iter().all(|p| (p - center).norm() <= radius));
    report.region = Region::Disc { center, radius };
    let small_cycles = report
        .cycles
        .iter()
        .filter(|c| !(c.period == 1 && (c.points[0] - center).norm() < 1e-6 * center.norm().max(1.0)))
        .count();
    Ok(DiscReport { census: report, small_cycles })
}

/// Cycles whose every point locates to `cell`.
pub fn cycles_in_cell(poly: &Polynomial, partition: &Partition, cell: usize, max_period: u32) -> Result<CensusReport> {
    let mut report = census(poly, max_period)?;
    let located: Vec<Vec<Location>> = par::map(&report.cycles, |c| c.points.iter().map(|&p| partition.locate(p)).collect());
    let mut kept = Vec::new();
    let mut undecided = 0;
    for (cycle, locs) in report.cycles.into_iter().zip(located) {
        if locs.iter().all(|&l| l == Location::Cell(cell)) {
            kept.push(cycle);
        } else if locs.contains(&Location::Cell(cell)) || locs.iter().any(|l| l.cell().is_none()) {
            undecided += 1;
        }
    }
    report.cycles = kept;
    report.undecided_count = undecided;
    report.region = Region::Cell { level: partition.collection.level, id: cell };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RayCellVerdict {
    Pass,
    Fail,
    /// The partition has a single cell, so the argument does not apply.
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayCellReport {
    pub cell: usize,
    pub max_period: u32,
    pub potential_threshold: f64,
    /// Periodic angles whose rays stay in the cell below the threshold.
    pub b_set: Vec<Angle>,
    /// Largest forward-invariant subset of `b_set`.
    pub invariant_subset: Vec<Angle>,
    pub order_preserving: bool,
    pub period_report: CommonPeriodReport,
    pub trace_failures: usize,
    pub verdict: RayCellVerdict,
}

/// Collects the periodic rays contained in `cell`, checks that `m_d` is
/// cyclic-order preserving on pairs inside the cell, and reports the cycle
/// periods of the invariant part.
pub fn cycles_of_rays_in_cell(poly: &Polynomial, partition: &Partition, cell: usize, max_period: u32) -> Result<RayCellReport> {
    let d = poly.degree() as u64;
    let count = d.checked_pow(max_period).unwrap_or(u64::MAX).saturating_sub(1);
    if count > MAX_RAY_ANGLES {
        return Err(Error::CollectionTooLarge(count as usize));
    }
    let grid = partition.collection.grid;
    let threshold = grid.pot_lo * 10.0;
    let angles: BTreeSet<Angle> = periodic_angles_up_to(d, max_period)?.into_iter().collect();
    let rays = trace_angle_set(poly, &angles, &grid)?;
    let candidates: Vec<&crate::ray::ExternalRay> = angles.iter().filter_map(|t| rays.get(t)).collect();
    let verdicts: Vec<Option<bool>> = par::map(&candidates, |ray| {
        ray.status.landing_point()?;
        let tail: Vec<Complex64> = ray.samples.iter().filter(|s| s.0 < threshold).map(|s| s.1).collect();
        Some(!tail.is_empty() && tail.iter().all(|&z| partition.locate(z) == Location::Cell(cell)))
    });
    let trace_failures = verdicts.iter().filter(|v| v.is_none()).count();
    let b_set: BTreeSet<Angle> =
        candidates.iter().zip(&verdicts).filter(|(_, v)| **v == Some(true)).map(|(r, _)| r.angle).collect();

    let pairs: Vec<(Angle, Angle)> = b_set.iter().map(|&t| (t, t.mul_d(d))).filter(|(_, s)| b_set.contains(s)).collect();
    let order_preserving = is_cyclic_order_preserving(&pairs)?;

    let mut invariant = b_set.clone();
    loop {
        let before = invariant.len();
        let keep: BTreeSet<Angle> = invariant.iter().copied().filter(|t| invariant.contains(&t.mul_d(d))).collect();
        invariant = keep;
        if invariant.len() == before {
            break;
        }
    }
    let period_report = common_period_report(&invariant, d)?;
    let verdict = if partition.cell_count() == 1 {
        RayCellVerdict::NotApplicable
    } else if order_preserving {
        RayCellVerdict::Pass
    } else {
        RayCellVerdict::Fail
    };
    Ok(RayCellReport {
        cell,
        max_period,
        potential_threshold: threshold,
        b_set: b_set.into_iter().collect(),
        invariant_subset: invariant.into_iter().collect(),
        order_preserving,
        period_report,
        trace_failures,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckReport {
    pub period: u32,
    pub grid: usize,
    /// Distinct converged Newton roots.
    pub found: usize,
    /// Converged roots with no census point within [`CROSSCHECK_TOL`].
    pub missing: Vec<Complex64>,
    pub verdict: Verdict,
}

/// Newton on `P^n(z) - z` from a `grid × grid` lattice over the escape
/// square; every converged root must already be in the census.
pub fn newton_grid_crosscheck(poly: &Polynomial, n: u32, grid: usize) -> Result<CrossCheckReport> {
    let reference: Vec<Complex64> = periodic_points(poly, n)?.into_iter().flat_map(|c| c.points).collect();
    let r = poly.escape_radius();
    let starts: Vec<Complex64> = (0..grid * grid)
        .map(|k| {
            let (i, j) = (k % grid, k / grid);
            let s = |v: usize| -r + 2.0 * r * (v as f64 + 0.5) / grid as f64;
            Complex64::new(s(i), s(j))
        })
        .collect();
    let roots: Vec<Option<Complex64>> = par::map(&starts, |&z0| newton_periodic(poly, z0, n));
    let mut distinct: Vec<Complex64> = Vec::new();
    for z in roots.into_iter().flatten() {
        if !distinct.iter().any(|&w| (w - z).norm() < CROSSCHECK_TOL) {
            distinct.push(z);
        }
    }
    let missing: Vec<Complex64> = distinct
        .iter()
        .copied()
        .filter(|&z| !reference.iter().any(|&w| (w - z).norm() < CROSSCHECK_TOL))
        .collect();
    Ok(CrossCheckReport { period: n, grid, found: distinct.len(), verdict: Verdict::from_bool(missing.is_empty()), missing })
}

fn newton_periodic(poly: &Polynomial, mut z: Complex64, n: u32) -> Option<Complex64> {
    for _ in 0..300 {
        let (w, dw) = poly.iterate_with_derivative(z, n);
        let step = (w - z) / (dw - 1.0);
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            let (w, _) = poly.iterate_with_derivative(z, n);
            return ((w - z).norm() < 1e-10 * z.norm().max(1.0)).then_some(z);
        }
    }
    None
}
