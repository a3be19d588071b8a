//! Invariant ray collections, the plane partition they cut out, and point
//! location in that partition.
//!
//! Every ray runs from its landing point to infinity, so the collection is a
//! connected planar graph whose vertices are the landing clusters plus the
//! point at infinity. Cells are its faces. A cell is identified by its
//! parity signature against a cycle basis of the graph: for each landing
//! vertex with rays `r_1 < … < r_k`, the Jordan curves `R_{r_i} ∪ R_{r_{i+1}}`.

mod verify;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use crate::angle::{periodic_angles, Angle};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, segment_segment_distance, segments_cross};
use crate::par;
use crate::poly::{CycleClass, Polynomial};
use crate::potential::{bottcher, external_angle_of, green, DEFAULT_BUDGET};
use crate::ray::{trace_angle_set, ExternalRay, PotentialGrid, RayStatus};

pub use verify::{
    critical_correspondence, fatou_markers, stabilization_period, verify_lemma_3_1, verify_lemma_3_3_invariance,
    sample_square, CorrespondenceReport, CycleCorrespondence, InvarianceReport, Marker, MarkerAssignment,
    SeparationReport, Verdict,
};

/// Landing points closer than this are one vertex.
pub const MERGE_TOL: f64 = 1e-5;
/// Distance below which a point counts as lying on a ray.
pub const GUARD: f64 = 1e-7;
pub const MAX_FIXED_RAYS: u64 = 1 << 12;
pub const MAX_COLLECTION: usize = 1 << 14;
/// Rays are continued radially out to this modulus.
const FAR_RADIUS: f64 = 1e6;
const RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    FixedRays(u32),
    PreimageOf(usize),
}

/// Forward-invariant set of landed rays.
#[derive(Debug, Clone)]
pub struct RayCollection {
    pub level: usize,
    pub provenance: Provenance,
    pub degree: usize,
    pub grid: PotentialGrid,
    pub rays: BTreeMap<Angle, ExternalRay>,
}

impl RayCollection {
    pub fn angles(&self) -> BTreeSet<Angle> {
        self.rays.keys().copied().collect()
    }

    pub fn landing_point(&self, t: Angle) -> Option<Complex64> {
        self.rays.get(&t).and_then(|r| r.status.landing_point())
    }

    /// Exact check that the image of every angle is present.
    pub fn is_forward_invariant(&self) -> bool {
        self.rays.keys().all(|t| self.rays.contains_key(&t.mul_d(self.degree as u64)))
    }

    /// Landing classes recorded for periodic rays.
    pub fn landing_classes(&self) -> Vec<(Angle, Option<CycleClass>)> {
        self.rays
            .iter()
            .map(|(&t, r)| match &r.status {
                RayStatus::Landed { class, .. } => (t, *class),
                _ => (t, None),
            })
            .collect()
    }
}

fn collect_landed(poly: &Polynomial, angles: &BTreeSet<Angle>, grid: &PotentialGrid) -> Result<BTreeMap<Angle, ExternalRay>> {
    let traced = trace_angle_set(poly, angles, grid)?;
    let mut out = BTreeMap::new();
    for &t in angles {
        let ray = traced.get(&t).ok_or(Error::MissingRay(t))?;
        if ray.status.landing_point().is_none() {
            return Err(Error::LandingUndecided(t));
        }
        out.insert(t, ray.clone());
    }
    Ok(out)
}

/// The rays of angle `k/(d^m - 1)`, all traced and landed.
pub fn build_fixed_collection(poly: &Polynomial, m: u32) -> Result<RayCollection> {
    let d = poly.degree() as u64;
    let count = d.checked_pow(m).map(|x| x - 1).unwrap_or(u64::MAX);
    if m == 0 || count > MAX_FIXED_RAYS {
        return Err(Error::CollectionTooLarge(count.min(usize::MAX as u64) as usize));
    }
    let angles: BTreeSet<Angle> = periodic_angles(d, m)?.into_iter().collect();
    let grid = PotentialGrid::standard(poly);
    let rays = collect_landed(poly, &angles, &grid)?;
    Ok(RayCollection { level: 0, provenance: Provenance::FixedRays(m), degree: poly.degree(), grid, rays })
}

/// `k`-fold `m_d`-preimage of `base`, traced and landed. Contains `base`.
pub fn preimage_collection(poly: &Polynomial, base: &RayCollection, k: usize) -> Result<RayCollection> {
    if k == 0 {
        return Ok(base.clone());
    }
    let d = poly.degree() as u64;
    let mut angles = base.angles();
    for _ in 0..k {
        let mut next = BTreeSet::new();
        for t in &angles {
            next.extend(t.preimages(d)?);
        }
        if next.len() > MAX_COLLECTION {
            return Err(Error::CollectionTooLarge(next.len()));
        }
        angles = next;
    }
    let grid = base.grid;
    let mut rays = base.rays.clone();
    let missing: BTreeSet<Angle> = angles.iter().copied().filter(|t| !rays.contains_key(t)).collect();
    rays.extend(collect_landed(poly, &missing, &grid)?);
    Ok(RayCollection { level: base.level + k, provenance: Provenance::PreimageOf(base.level + k - 1), degree: poly.degree(), grid, rays })
}

/// One complementary component of the collection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub id: usize,
    /// Gaps `(a, b)` between consecutive angles through which the cell reaches infinity.
    pub gaps: Vec<(Angle, Angle)>,
    pub bounding_rays: Vec<Angle>,
    pub reference_point: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandingCluster {
    pub point: Complex64,
    pub angles: Vec<Angle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EulerCount {
    pub edges: usize,
    pub vertices: usize,
    pub faces: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "cell", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Location {
    Cell(usize),
    OnBoundary,
    Undecided,
}

impl Location {
    pub fn cell(self) -> Option<usize> {
        match self {
            Location::Cell(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Polyline {
    points: Vec<Complex64>,
    lo: Complex64,
    hi: Complex64,
}

impl Polyline {
    fn new(points: Vec<Complex64>) -> Self {
        let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        Self { points, lo, hi }
    }

    fn bbox_misses(&self, a: Complex64, b: Complex64, pad: f64) -> bool {
        a.re.max(b.re) < self.lo.re - pad
            || a.re.min(b.re) > self.hi.re + pad
            || a.im.max(b.im) < self.lo.im - pad
            || a.im.min(b.im) > self.hi.im + pad
    }

    fn crossings(&self, a: Complex64, b: Complex64) -> usize {
        if self.bbox_misses(a, b, 0.0) {
            return 0;
        }
        self.points.windows(2).filter(|w| segments_cross(a, b, w[0], w[1])).count()
    }

    fn distance(&self, z: Complex64) -> f64 {
        if self.bbox_misses(z, z, GUARD) {
            return f64::INFINITY;
        }
        self.points.windows(2).map(|w| point_segment_distance(z, w[0], w[1])).fold(f64::INFINITY, f64::min)
    }
}

/// Faces of a landed collection with a point-location structure.
#[derive(Debug, Clone)]
pub struct Partition {
    pub collection: RayCollection,
    pub cells: Vec<Cell>,
    pub clusters: Vec<LandingCluster>,
    pub euler: EulerCount,
    angles: Vec<Angle>,
    polylines: Vec<Polyline>,
    /// Cycle basis: pairs of ray indices sharing a landing vertex.
    curves: Vec<(usize, usize)>,
    signature_to_cell: HashMap<Vec<bool>, usize>,
    base_point: Complex64,
    poly: Polynomial,
}

fn gap_mid(a: Angle, b: Angle, single: bool) -> f64 {
    let width = if single { 1.0 } else { a.ccw_distance(b) };
    (a.to_f64() + width / 2.0).rem_euclid(1.0)
}

/// Builds the planar graph and its faces. Errors with `DEGENERATE_EMBEDDING`
/// when co-landing rays overlap or the face structure fails the Euler check.
pub fn build_partition(poly: &Polynomial, collection: &RayCollection) -> Result<Partition> {
    let angles: Vec<Angle> = collection.rays.keys().copied().collect();
    let e = angles.len();
    if e == 0 {
        return Err(Error::InvalidArgument("empty collection".into()));
    }
    let landing: Vec<Complex64> = angles
        .iter()
        .map(|t| collection.landing_point(*t).ok_or(Error::LandingUndecided(*t)))
        .collect::<Result<_>>()?;

    // Merge landing points into vertices.
    let mut vertex_of = vec![usize::MAX; e];
    let mut clusters: Vec<(Complex64, Vec<usize>)> = Vec::new();
    for i in 0..e {
        if let Some(v) = clusters.iter().position(|(p, _)| (*p - landing[i]).norm() < MERGE_TOL) {
            clusters[v].1.push(i);
            vertex_of[i] = v;
        } else {
            vertex_of[i] = clusters.len();
            clusters.push((landing[i], vec![i]));
        }
    }
    for (p, members) in &mut clusters {
        *p = members.iter().map(|&i| landing[i]).sum::<Complex64>() / members.len() as f64;
    }

    let polylines: Vec<Polyline> = angles
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let ray = &collection.rays[t];
            let top = ray.samples[0].1;
            let far = Complex64::from_polar(FAR_RADIUS.max(4.0 * top.norm()), top.arg());
            let mut pts = vec![far];
            pts.extend(ray.points());
            pts.push(clusters[vertex_of[i]].0);
            Polyline::new(pts)
        })
        .collect();

    let mut curves = Vec::new();
    for (_, members) in &clusters {
        // members are in increasing angle order already.
        for w in members.windows(2) {
            curves.push((w[0], w[1]));
        }
    }
    for &(a, b) in &curves {
        check_overlap(&collection.rays[&angles[a]], &collection.rays[&angles[b]])?;
    }

    // Face tracing: gap i runs from angles[i] to angles[i+1].
    let next_gap = |i: usize| -> usize {
        let ray = (i + 1) % e;
        let members = &clusters[vertex_of[ray]].1;
        let pos = members.iter().position(|&r| r == ray).unwrap();
        members[(pos + members.len() - 1) % members.len()]
    };
    let mut face_of_gap = vec![usize::MAX; e];
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for start in 0..e {
        if face_of_gap[start] != usize::MAX {
            continue;
        }
        let id = faces.len();
        let mut gaps = Vec::new();
        let mut g = start;
        while face_of_gap[g] == usize::MAX {
            face_of_gap[g] = id;
            gaps.push(g);
            g = next_gap(g);
        }
        faces.push(gaps);
    }
    let euler = EulerCount { edges: e, vertices: clusters.len() + 1, faces: faces.len() };
    if euler.faces + euler.vertices != euler.edges + 2 {
        return Err(Error::DegenerateEmbedding(angles[0], angles[e - 1]));
    }

    // Combinatorial signatures of the gaps: moving counter-clockwise near
    // infinity across ray i flips every basis curve containing it.
    let mut signatures: Vec<Vec<bool>> = Vec::with_capacity(e);
    let mut sig = vec![false; curves.len()];
    for i in 0..e {
        if i > 0 {
            for (c, &(a, b)) in curves.iter().enumerate() {
                if a == i || b == i {
                    sig[c] = !sig[c];
                }
            }
        }
        signatures.push(sig.clone());
    }
    let mut signature_to_cell = HashMap::new();
    for (id, gaps) in faces.iter().enumerate() {
        for &g in gaps {
            match signature_to_cell.insert(signatures[g].clone(), id) {
                Some(other) if other != id => return Err(Error::DegenerateEmbedding(angles[g], angles[(g + 1) % e])),
                _ => {}
            }
        }
    }

    let single = e == 1;
    let pot_hi = collection.grid.pot_hi;
    let reference = |g: usize| -> Result<Complex64> {
        let mid = gap_mid(angles[g], angles[(g + 1) % e], single);
        bottcher(poly, Complex64::from_polar(pot_hi.exp(), mid * std::f64::consts::TAU))
    };
    let base_point = reference(0)?;
    let mut cells = Vec::with_capacity(faces.len());
    for (id, gaps) in faces.iter().enumerate() {
        let mut bounding: BTreeSet<Angle> = BTreeSet::new();
        for &g in gaps {
            bounding.insert(angles[g]);
            bounding.insert(angles[(g + 1) % e]);
        }
        cells.push(Cell {
            id,
            gaps: gaps.iter().map(|&g| (angles[g], angles[(g + 1) % e])).collect(),
            bounding_rays: bounding.into_iter().collect(),
            reference_point: reference(gaps[0])?,
        });
    }
    let clusters = clusters
        .into_iter()
        .map(|(point, members)| LandingCluster { point, angles: members.iter().map(|&i| angles[i]).collect() })
        .collect();
    Ok(Partition {
        collection: collection.clone(),
        cells,
        clusters,
        euler,
        angles,
        polylines,
        curves,
        signature_to_cell,
        base_point,
        poly: poly.clone(),
    })
}

/// Two distinct rays may only meet at their landing point.
fn check_overlap(a: &ExternalRay, b: &ExternalRay) -> Result<()> {
    let mut run = 0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        if sa.0 < 1e-4 {
            break;
        }
        if (sa.1 - sb.1).norm() < GUARD {
            run += 1;
            if run >= 3 {
                return Err(Error::DegenerateEmbedding(a.angle, b.angle));
            }
        } else {
            run = 0;
        }
    }
    Ok(())
}

impl Partition {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Euler relation `faces = edges - vertices + 2`.
    pub fn euler_holds(&self) -> bool {
        self.euler.faces + self.euler.vertices == self.euler.edges + 2
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    /// Cell of `z`, or `ON_BOUNDARY` within [`GUARD`] of a ray, or
    /// `UNDECIDED` when every tried path grazes a landing point.
    pub fn locate(&self, z: Complex64) -> Location {
        if !z.is_finite() {
            return Location::Undecided;
        }
        let pot_hi = self.collection.grid.pot_hi;
        if green(&self.poly, z, DEFAULT_BUDGET).value() >= pot_hi {
            return self.locate_by_angle(z);
        }
        if self.polylines.iter().any(|p| p.distance(z) < GUARD) {
            return Location::OnBoundary;
        }
        let direct = [self.base_point, z];
        if let Some(loc) = self.locate_along(&direct) {
            return loc;
        }
        let span = (z - self.base_point).norm();
        let mid = (z + self.base_point) * 0.5;
        for k in 0..RETRIES {
            let theta = std::f64::consts::TAU * k as f64 / RETRIES as f64 + 0.3;
            let detour = mid + Complex64::from_polar(0.05 * span + 1e-3, theta);
            if let Some(loc) = self.locate_along(&[self.base_point, detour, z]) {
                return loc;
            }
        }
        Location::Undecided
    }

    pub fn locate_many(&self, points: &[Complex64]) -> Vec<Location> {
        par::map(points, |&z| self.locate(z))
    }

    fn locate_by_angle(&self, z: Complex64) -> Location {
        let Ok(t) = external_angle_of(&self.poly, z) else {
            return Location::Undecided;
        };
        let e = self.angles.len();
        let values: Vec<f64> = self.angles.iter().map(|a| a.to_f64()).collect();
        for &v in &values {
            let gap = (t - v).rem_euclid(1.0);
            if gap.min(1.0 - gap) < 1e-12 {
                return Location::OnBoundary;
            }
        }
        // Gap i covers (angles[i], angles[i+1]); the last one wraps through 0.
        let i = match values.iter().rposition(|&v| v < t) {
            Some(i) => i,
            None => e - 1,
        };
        let e_sig = self.gap_signature(i);
        self.signature_to_cell.get(&e_sig).map_or(Location::Undecided, |&c| Location::Cell(c))
    }

    fn gap_signature(&self, g: usize) -> Vec<bool> {
        let mut sig = vec![false; self.curves.len()];
        for i in 1..=g {
            for (c, &(a, b)) in self.curves.iter().enumerate() {
                if a == i || b == i {
                    sig[c] = !sig[c];
                }
            }
        }
        sig
    }

    fn locate_along(&self, path: &[Complex64]) -> Option<Location> {
        for w in path.windows(2) {
            for cl in &self.clusters {
                if point_segment_distance(cl.point, w[0], w[1]) < GUARD * 10.0 {
                    return None;
                }
            }
        }
        let parity: Vec<bool> = self
            .polylines
            .iter()
            .map(|pl| path.windows(2).map(|w| pl.crossings(w[0], w[1])).sum::<usize>() % 2 == 1)
            .collect();
        let sig: Vec<bool> = self.curves.iter().map(|&(a, b)| parity[a] ^ parity[b]).collect();
        Some(self.signature_to_cell.get(&sig).map_or(Location::Undecided, |&c| Location::Cell(c)))
    }

    /// Shortest distance between the ray polylines of two angles, ignoring
    /// their shared landing vertex.
    pub fn ray_separation(&self, a: Angle, b: Angle) -> Option<f64> {
        let ia = self.angles.binary_search(&a).ok()?;
        let ib = self.angles.binary_search(&b).ok()?;
        let pa = &self.polylines[ia].points;
        let pb = &self.polylines[ib].points;
        let mut best = f64::INFINITY;
        for wa in pa[..pa.len() - 1].windows(2) {
            for wb in pb[..pb.len() - 1].windows(2) {
                best = best.min(segment_segment_distance(wa[0], wa[1], wb[0], wb[1]));
            }
        }
        Some(best)
    }

    pub fn report(&self) -> PartitionReport {
        PartitionReport {
            level: self.collection.level,
            provenance: self.collection.provenance,
            angles: self.angles.clone(),
            clusters: self.clusters.clone(),
            euler: self.euler,
            euler_holds: self.euler_holds(),
            cells: self.cells.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub level: usize,
    pub provenance: Provenance,
    pub angles: Vec<Angle>,
    pub clusters: Vec<LandingCluster>,
    pub euler: EulerCount,
    pub euler_holds: bool,
    pub cells: Vec<Cell>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn a(p: u64, q: u64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    #[test]
    fn basilica_collections() {
        let b = Polynomial::quadratic(c(-1.0, 0.0));
        let alpha = (1.0 - 5f64.sqrt()) / 2.0;
        let col = build_fixed_collection(&b, 2).unwrap();
        assert_eq!(col.angles(), [Angle::ZERO, a(1, 3), a(2, 3)].into_iter().collect());
        assert!(col.is_forward_invariant());
        let p13 = col.landing_point(a(1, 3)).unwrap();
        let p23 = col.landing_point(a(2, 3)).unwrap();
        assert!((p13 - p23).norm() < 1e-5);
        assert!((p13 - c(alpha, 0.0)).norm() < 1e-6);

        let part = build_partition(&b, &col).unwrap();
        assert!(part.euler_holds());
        assert_eq!(part.euler, EulerCount { edges: 3, vertices: 3, faces: 2 });
        let l0 = part.locate(c(0.0, 0.0)).cell().unwrap();
        let l1 = part.locate(c(-1.0, 0.0)).cell().unwrap();
        assert_ne!(l0, l1);
        assert_eq!(part.locate(c(1.2, 0.0)).cell(), Some(l0));
        assert_eq!(part.locate(c(alpha, 0.0)), Location::OnBoundary);
        for cell in &part.cells {
            assert_eq!(part.locate(cell.reference_point), Location::Cell(cell.id));
        }

        let one = build_fixed_collection(&b, 1).unwrap();
        let part1 = build_partition(&b, &one).unwrap();
        assert_eq!(part1.cell_count(), 1);
        assert_eq!(part1.locate(c(0.0, 0.0)), part1.locate(c(-1.0, 0.0)));

        let pre = preimage_collection(&b, &col, 1).unwrap();
        let expected: BTreeSet<Angle> =
            [Angle::ZERO, a(1, 2), a(1, 6), a(2, 3), a(1, 3), a(5, 6)].into_iter().collect();
        assert_eq!(pre.angles(), expected);
        assert!(pre.is_forward_invariant());
    }

    #[test]
    fn single_ray_collections() {
        let sq = Polynomial::quadratic(c(0.0, 0.0));
        let col = build_fixed_collection(&sq, 1).unwrap();
        assert!((col.landing_point(Angle::ZERO).unwrap() - c(1.0, 0.0)).norm() < 1e-9);
        let part = build_partition(&sq, &col).unwrap();
        assert_eq!(part.cell_count(), 1);
        assert_eq!(part.locate(c(0.0, 0.0)), Location::Cell(0));
        assert_eq!(part.locate(c(1.5, 0.0)), Location::OnBoundary);

        let pre = preimage_collection(&sq, &col, 1).unwrap();
        assert!((pre.landing_point(a(1, 2)).unwrap() - c(-1.0, 0.0)).norm() < 1e-9);
        let p2 = build_partition(&sq, &pre).unwrap();
        assert_eq!(p2.cell_count(), 1);

        let cheb = Polynomial::quadratic(c(-2.0, 0.0));
        let col = build_fixed_collection(&cheb, 1).unwrap();
        assert!((col.landing_point(Angle::ZERO).unwrap() - c(2.0, 0.0)).norm() < 1e-6);
        assert_eq!(build_partition(&cheb, &col).unwrap().cell_count(), 1);
    }

    #[test]
    fn far_points_locate_by_angle() {
        let b = Polynomial::quadratic(c(-1.0, 0.0));
        let part = build_partition(&b, &build_fixed_collection(&b, 2).unwrap()).unwrap();
        let left = part.locate(c(-1e3, 1.0)).cell();
        assert_eq!(left, part.locate(c(-1.0, 0.0)).cell());
        assert_eq!(part.locate(c(1e3, 1.0)).cell(), part.locate(c(0.0, 0.0)).cell());
    }
}
