//! Numerical checks of the separation statements on located markers.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Location, Partition};
use crate::error::{Error, Result};
use crate::par;
use crate::poly::{CycleClass, CycleRecord, Polynomial, PARABOLIC_MAX_Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// A point standing in for one periodic Fatou component or indifferent point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub label: String,
    pub point: Complex64,
    /// Index of the cycle in the census slice the marker came from.
    pub cycle: usize,
    pub class: CycleClass,
}

const PARABOLIC_ROOT_TOL: f64 = 1e-6;

fn rotation_order(multiplier: Complex64) -> u32 {
    let one = Complex64::new(1.0, 0.0);
    let mut power = one;
    for q in 1..=PARABOLIC_MAX_Q {
        power *= multiplier;
        if (power - one).norm() < PARABOLIC_ROOT_TOL {
            return q;
        }
    }
    1
}

/// Period of the Fatou components attached to a non-repelling cycle.
fn component_period(cycle: &CycleRecord) -> u32 {
    match cycle.class {
        CycleClass::ParabolicCandidate => cycle.period * rotation_order(cycle.multiplier),
        _ => cycle.period,
    }
}

/// Least common multiple of the component periods of all non-repelling
/// cycles; 1 when there are none.
pub fn stabilization_period(cycles: &[CycleRecord]) -> Result<u32> {
    if cycles.is_empty() {
        return Err(Error::CensusEmpty);
    }
    Ok(cycles
        .iter()
        .filter(|c| !c.class.is_repelling())
        .map(component_period)
        .fold(1, num_integer::lcm))
}

/// Markers for every non-repelling cycle. Attracting and indifferent cycles
/// mark themselves. A parabolic cycle lies on the Julia set, so its
/// components are marked by points of a critical orbit inside the petals.
pub fn fatou_markers(poly: &Polynomial, cycles: &[CycleRecord]) -> Vec<Marker> {
    let mut out = Vec::new();
    for (idx, cycle) in cycles.iter().enumerate() {
        match cycle.class {
            CycleClass::Repelling => {}
            CycleClass::ParabolicCandidate => {
                let q = component_period(cycle);
                match petal_orbit(poly, cycle, q) {
                    Some(points) => {
                        for (j, p) in points.into_iter().enumerate() {
                            out.push(Marker { label: format!("cycle{idx}-petal{j}"), point: p, cycle: idx, class: cycle.class });
                        }
                    }
                    None => {
                        for (j, &p) in cycle.points.iter().enumerate() {
                            out.push(Marker { label: format!("cycle{idx}-point{j}"), point: p, cycle: idx, class: cycle.class });
                        }
                    }
                }
            }
            _ => {
                for (j, &p) in cycle.points.iter().enumerate() {
                    out.push(Marker { label: format!("cycle{idx}-point{j}"), point: p, cycle: idx, class: cycle.class });
                }
            }
        }
    }
    out
}

/// `q` consecutive orbit points of a critical point once it is within 0.01
/// of the parabolic cycle.
fn petal_orbit(poly: &Polynomial, cycle: &CycleRecord, q: u32) -> Option<Vec<Complex64>> {
    let near = |z: Complex64| cycle.points.iter().map(|&p| (p - z).norm()).fold(f64::INFINITY, f64::min);
    for c in poly.critical_points() {
        let mut z = c.point;
        for _ in 0..2_000_000 {
            if near(z) < 1e-2 {
                let mut pts = Vec::with_capacity(q as usize);
                for _ in 0..q {
                    pts.push(z);
                    z = poly.eval(z);
                }
                return Some(pts);
            }
            z = poly.eval(z);
            if !(z.norm() < 1e6) {
                break;
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkerAssignment {
    pub label: String,
    pub point: Complex64,
    pub location: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub verdict: Verdict,
    pub assignments: Vec<MarkerAssignment>,
    /// Cells holding more than one marker, with the labels found there.
    pub violations: Vec<(usize, Vec<String>)>,
    pub warnings: Vec<String>,
}

/// PASS iff no cell holds more than one marked object.
pub fn verify_lemma_3_1(partition: &Partition, markers: &[Marker]) -> SeparationReport {
    let points: Vec<Complex64> = markers.iter().map(|m| m.point).collect();
    let locations = partition.locate_many(&points);
    let mut by_cell: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut warnings = Vec::new();
    let assignments: Vec<MarkerAssignment> = markers
        .iter()
        .zip(&locations)
        .map(|(m, &loc)| {
            match loc {
                Location::Cell(c) => by_cell.entry(c).or_default().push(m.label.clone()),
                other => warnings.push(format!("marker {} is {:?}", m.label, other)),
            }
            MarkerAssignment { label: m.label.clone(), point: m.point, location: loc }
        })
        .collect();
    let violations: Vec<(usize, Vec<String>)> = by_cell.into_iter().filter(|(_, v)| v.len() > 1).collect();
    SeparationReport { verdict: Verdict::from_bool(violations.is_empty()), assignments, violations, warnings }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub verdict: Verdict,
    pub levels: usize,
    pub samples: usize,
    /// Samples with an undecided location at some level.
    pub undecided: usize,
    /// Samples on a ray at some level.
    pub on_boundary: usize,
    /// Conflicting images of the induced maps `cell_{k+n} → cell_k`.
    pub violations: usize,
    /// Conflicts of the refinement map `cell_{k+1} → cell_k`.
    pub nesting_violations: usize,
    pub undecided_rate: f64,
}

/// Deterministic uniform samples in the square `|re|, |im| <= half_width`.
pub fn sample_square(count: usize, half_width: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Complex64::new(rng.random_range(-half_width..half_width), rng.random_range(-half_width..half_width)))
        .collect()
}

/// Checks that `P^n` induces a well-defined map from level-`(k+n)` cells to
/// level-`k` cells, and that level-`(k+1)` cells refine level-`k` cells.
/// `partitions[k]` must be the level-`k` partition.
pub fn verify_lemma_3_3_invariance(poly: &Polynomial, partitions: &[Partition], samples: &[Complex64]) -> InvarianceReport {
    let kmax = partitions.len().saturating_sub(1);
    // For each sample: locations of P^n(z) at every level, n = 0..=kmax.
    // Per sample: cell of P^n(z) at level k in table[n][k], or Err(true)
    // for an undecided location and Err(false) for a boundary hit.
    let located: Vec<std::result::Result<Vec<Vec<usize>>, bool>> = par::map(samples, |&z| {
        let mut table = vec![vec![usize::MAX; kmax + 1]; kmax + 1];
        let mut w = z;
        for n in 0..=kmax {
            for k in 0..=(kmax - n) {
                match partitions[k].locate(w) {
                    Location::Cell(c) => table[n][k] = c,
                    Location::OnBoundary => return Err(false),
                    Location::Undecided => return Err(true),
                }
            }
            w = poly.eval(w);
        }
        Ok(table)
    });
    let undecided = located.iter().filter(|r| matches!(r, Err(true))).count();
    let on_boundary = located.iter().filter(|r| matches!(r, Err(false))).count();

    let mut maps: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut nesting: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut violations = 0;
    let mut nesting_violations = 0;
    for table in located.iter().filter_map(|r| r.as_ref().ok()) {
        for n in 1..=kmax {
            for k in 0..=(kmax - n) {
                let key = (k, n, table[0][k + n]);
                let value = table[n][k];
                if *maps.entry(key).or_insert(value) != value {
                    violations += 1;
                }
            }
        }
        for k in 0..kmax {
            let value = table[0][k];
            if *nesting.entry((k, table[0][k + 1])).or_insert(value) != value {
                nesting_violations += 1;
            }
        }
    }
    let undecided_rate = if samples.is_empty() { 0.0 } else { undecided as f64 / samples.len() as f64 };
    InvarianceReport {
        verdict: Verdict::from_bool(violations == 0 && nesting_violations == 0),
        levels: partitions.len(),
        samples: samples.len(),
        undecided,
        on_boundary,
        violations,
        nesting_violations,
        undecided_rate,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleCorrespondence {
    pub cycle: usize,
    pub period: u32,
    pub class: CycleClass,
    pub cells: Vec<usize>,
    /// Critical points located in one of `cells`.
    pub critical_points: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub verdict: Verdict,
    pub non_repelling_cycles: usize,
    pub distinct_critical_points: usize,
    pub inequality_holds: bool,
    pub cycles: Vec<CycleCorrespondence>,
    pub warnings: Vec<String>,
}

/// Every non-repelling cycle must have a critical point in the union of its
/// markers' cells, and there can be no more such cycles than critical points.
pub fn critical_correspondence(
    poly: &Polynomial,
    partition: &Partition,
    cycles: &[CycleRecord],
    markers: &[Marker],
) -> CorrespondenceReport {
    let mut warnings = Vec::new();
    let critical: Vec<(Complex64, Location)> = poly
        .critical_points()
        .iter()
        .map(|c| (c.point, partition.locate(c.point)))
        .collect();
    for (p, loc) in &critical {
        if loc.cell().is_none() {
            warnings.push(format!("critical point {p} is {loc:?}"));
        }
    }
    let mut rows = Vec::new();
    for (idx, cycle) in cycles.iter().enumerate() {
        if cycle.class.is_repelling() {
            continue;
        }
        let cells: BTreeSet<usize> = markers
            .iter()
            .filter(|m| m.cycle == idx)
            .filter_map(|m| partition.locate(m.point).cell())
            .collect();
        if cells.is_empty() {
            warnings.push(format!("no marker of cycle {idx} could be located"));
        }
        let hits = critical
            .iter()
            .filter(|(_, loc)| loc.cell().is_some_and(|c| cells.contains(&c)))
            .map(|(p, _)| *p)
            .collect();
        rows.push(CycleCorrespondence {
            cycle: idx,
            period: cycle.period,
            class: cycle.class,
            cells: cells.into_iter().collect(),
            critical_points: hits,
        });
    }
    let non_repelling = rows.len();
    let distinct = critical.len();
    let inequality_holds = non_repelling <= distinct;
    let all_hit = rows.iter().all(|r| !r.critical_points.is_empty());
    CorrespondenceReport {
        verdict: Verdict::from_bool(inequality_holds && all_hit),
        non_repelling_cycles: non_repelling,
        distinct_critical_points: distinct,
        inequality_holds,
        cycles: rows,
        warnings,
    }
}
