//! Finite-scale accessibility evidence: which sampled rays come close to a
//! target point, and whether they also come close to a distinguished point.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::Serialize;

use crate::angle::{orbit, periodic_angles_up_to, Angle};
use crate::census::census;
use crate::error::{Error, Result};
use crate::poly::{CycleClass, Polynomial};
use crate::ray::{trace_angle_set, PotentialGrid, RayStatus, DEFAULT_STEPS};

/// Default distance below which a ray is said to approach a point.
pub const DEFAULT_EPS_ACC: f64 = 1e-2;
/// Landing points match census points within this distance.
pub const MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct AccumulationRecord {
    pub angle: Angle,
    pub min_distance_to_target: f64,
    pub min_distance_to_fixed: f64,
    pub lowest_potential_reached: f64,
    pub approaches_target: bool,
    pub approaches_fixed: bool,
    pub status: RayStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub target: Complex64,
    pub fixed: Complex64,
    pub eps_acc: f64,
    pub pot_lo: f64,
    /// Every ray approaching the target also approaches the fixed point.
    pub implication_holds: bool,
    pub approaching: usize,
    pub statement: String,
    /// Sorted by distance to the target.
    pub records: Vec<AccumulationRecord>,
}

/// Traces every angle down to `pot_lo` and records the closest approach of
/// its samples to `target` and to `fixed`.
pub fn probe_accumulation(
    poly: &Polynomial,
    target: Complex64,
    fixed: Complex64,
    angles: &BTreeSet<Angle>,
    pot_lo: f64,
    eps_acc: f64,
) -> Result<ProbeReport> {
    if !(eps_acc > 0.0) {
        return Err(Error::InvalidArgument("eps_acc must be positive".into()));
    }
    let grid = PotentialGrid::new(poly, poly.escape_radius().ln() + 1.0, pot_lo, DEFAULT_STEPS)?;
    let rays = trace_angle_set(poly, angles, &grid)?;
    let mut records: Vec<AccumulationRecord> = angles
        .iter()
        .filter_map(|t| rays.get(t))
        .map(|ray| {
            let min_to = |p: Complex64| ray.points().map(|z| (z - p).norm()).fold(f64::INFINITY, f64::min);
            let dt = min_to(target);
            let df = min_to(fixed);
            AccumulationRecord {
                angle: ray.angle,
                min_distance_to_target: dt,
                min_distance_to_fixed: df,
                lowest_potential_reached: ray.samples.last().map_or(f64::NAN, |s| s.0),
                approaches_target: dt < eps_acc,
                approaches_fixed: df < eps_acc,
                status: ray.status.clone(),
            }
        })
        .collect();
    records.sort_by(|a, b| a.min_distance_to_target.total_cmp(&b.min_distance_to_target).then(a.angle.cmp(&b.angle)));
    let approaching = records.iter().filter(|r| r.approaches_target).count();
    let implication_holds = records.iter().filter(|r| r.approaches_target).all(|r| r.approaches_fixed);
    let statement = if approaching == 0 {
        format!("no sampled ray approached the target within {eps_acc:e} down to potential {pot_lo:e}")
    } else if implication_holds {
        format!("{approaching} sampled rays approached the target within {eps_acc:e}; all of them also approached the fixed point")
    } else {
        format!("{approaching} sampled rays approached the target within {eps_acc:e}; some of them stayed away from the fixed point")
    };
    Ok(ProbeReport { target, fixed, eps_acc, pot_lo, implication_holds, approaching, statement, records })
}

#[derive(Debug, Clone, Serialize)]
pub struct LandingRow {
    pub angle: Angle,
    pub period: usize,
    pub landing_point: Option<Complex64>,
    /// Index into `cycles` of the census cycle containing the landing point.
    pub cycle: Option<usize>,
    pub class: Option<CycleClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchStatus {
    Matched,
    Unmatched,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleMatch {
    pub period: u32,
    pub points: Vec<Complex64>,
    pub class: CycleClass,
    pub angles: Vec<Angle>,
    pub status: MatchStatus,
    /// For each ray period `n`, the number of period-`n` angles landing on
    /// this cycle is a multiple of `n`.
    pub multiplicity_consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccessibilityTable {
    pub max_period: u32,
    pub rows: Vec<LandingRow>,
    pub cycles: Vec<CycleMatch>,
    pub failed_rays: Vec<Angle>,
    /// Repelling cycles no traced ray landed on.
    pub unmatched_repelling: usize,
}

/// Landing point and cycle of every periodic ray up to `max_period`, cross
/// linked to the census.
pub fn landing_accessibility_table(poly: &Polynomial, max_period: u32) -> Result<AccessibilityTable> {
    let d = poly.degree() as u64;
    let count = d.checked_pow(max_period).unwrap_or(u64::MAX).saturating_sub(1);
    if count > crate::census::MAX_RAY_ANGLES {
        return Err(Error::CollectionTooLarge(count as usize));
    }
    let cen = census(poly, max_period)?;
    let angles: BTreeSet<Angle> = periodic_angles_up_to(d, max_period)?.into_iter().collect();
    let rays = trace_angle_set(poly, &angles, &PotentialGrid::standard(poly))?;
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    let mut by_cycle: BTreeMap<usize, Vec<(Angle, usize)>> = BTreeMap::new();
    for &t in &angles {
        let period = orbit(t, d).period;
        let ray = &rays[&t];
        let point = ray.status.landing_point();
        let cycle = point.and_then(|p| {
            cen.cycles.iter().position(|c| c.points.iter().any(|&q| (q - p).norm() < MATCH_TOL * q.norm().max(1.0)))
        });
        if point.is_none() {
            failed.push(t);
        }
        if let Some(k) = cycle {
            by_cycle.entry(k).or_default().push((t, period));
        }
        rows.push(LandingRow { angle: t, period, landing_point: point, cycle, class: cycle.map(|k| cen.cycles[k].class) });
    }
    let cycles: Vec<CycleMatch> = cen
        .cycles
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let hits = by_cycle.get(&k).cloned().unwrap_or_default();
            let mut per_period: BTreeMap<usize, usize> = BTreeMap::new();
            for &(_, n) in &hits {
                *per_period.entry(n).or_default() += 1;
            }
            CycleMatch {
                period: c.period,
                points: c.points.clone(),
                class: c.class,
                angles: hits.iter().map(|h| h.0).collect(),
                status: if hits.is_empty() { MatchStatus::Unmatched } else { MatchStatus::Matched },
                multiplicity_consistent: per_period.iter().all(|(&n, &m)| m % n == 0),
            }
        })
        .collect();
    let unmatched_repelling =
        cycles.iter().filter(|c| c.class == CycleClass::Repelling && c.status == MatchStatus::Unmatched).count();
    Ok(AccessibilityTable { max_period, rows, cycles, failed_rays: failed, unmatched_repelling })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn up_to(d: u64, n: u32) -> BTreeSet<Angle> {
        periodic_angles_up_to(d, n).unwrap().into_iter().collect()
    }

    #[test]
    fn probe_discriminates() {
        let sq = Polynomial::quadratic(c(0.0, 0.0));
        let r = probe_accumulation(&sq, c(1.0, 0.0), c(1.0, 0.0), &up_to(2, 4), 1e-8, DEFAULT_EPS_ACC).unwrap();
        assert!(r.implication_holds);
        assert_eq!(r.records[0].angle, Angle::ZERO);
        assert!(r.records[0].approaches_target);

        let b = Polynomial::quadratic(c(-1.0, 0.0));
        let beta = (1.0 + 5f64.sqrt()) / 2.0;
        let alpha = (1.0 - 5f64.sqrt()) / 2.0;
        let r = probe_accumulation(&b, c(beta, 0.0), c(alpha, 0.0), &up_to(2, 4), 1e-8, DEFAULT_EPS_ACC).unwrap();
        assert!(!r.implication_holds);
        let zero = r.records.iter().find(|x| x.angle == Angle::ZERO).unwrap();
        assert!(zero.approaches_target && !zero.approaches_fixed);
    }

    #[test]
    fn deeper_probe_is_closer() {
        let b = Polynomial::quadratic(c(-1.0, 0.0));
        let alpha = c((1.0 - 5f64.sqrt()) / 2.0, 0.0);
        let set: BTreeSet<Angle> = [Angle::new(1, 3).unwrap()].into_iter().collect();
        let shallow = probe_accumulation(&b, alpha, alpha, &set, 1e-4, DEFAULT_EPS_ACC).unwrap();
        let deep = probe_accumulation(&b, alpha, alpha, &set, 1e-8, DEFAULT_EPS_ACC).unwrap();
        assert!(deep.records[0].min_distance_to_target < shallow.records[0].min_distance_to_target);
    }

    #[test]
    fn accessibility_examples() {
        let b = Polynomial::quadratic(c(-1.0, 0.0));
        let t = landing_accessibility_table(&b, 2).unwrap();
        assert_eq!(t.unmatched_repelling, 0);
        let two = t.cycles.iter().find(|c| c.period == 2).unwrap();
        assert_eq!(two.status, MatchStatus::Unmatched);
        let alpha = t.cycles.iter().find(|c| c.period == 1 && c.points[0].re < 0.0).unwrap();
        assert_eq!(alpha.angles, vec![Angle::new(1, 3).unwrap(), Angle::new(2, 3).unwrap()]);
        assert!(t.cycles.iter().all(|c| c.multiplicity_consistent));

        let sq = Polynomial::quadratic(c(0.0, 0.0));
        let t = landing_accessibility_table(&sq, 3).unwrap();
        for cyc in &t.cycles {
            if cyc.class == CycleClass::Repelling {
                assert_eq!(cyc.status, MatchStatus::Matched);
            }
        }
    }
}
