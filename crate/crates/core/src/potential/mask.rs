//! Grid flood fill of `{G <= r}` components and marching-squares boundaries.
//!
//! All masks live on the global lattice `h·ℤ²`, so two masks built with the
//! same resolution can be compared node by node.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use super::{critical_potentials, green, is_regular, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::par;
use crate::poly::Polynomial;

/// Boundary vertices satisfy `|G - r| < LEVEL_TOL`.
pub const LEVEL_TOL: f64 = 1e-6;
/// A level is regular when it is this far from every critical potential.
pub const REGULAR_TOL: f64 = 10.0 * LEVEL_TOL;
const CRITICAL_DEPTH: u32 = 64;

/// Index window `[i0, i0+nx) × [j0, j0+ny)` of the lattice `h·ℤ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridGeometry {
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
}

impl GridGeometry {
    /// Smallest window covering the square `|re|, |im| <= half_width`.
    pub fn centered(h: f64, half_width: f64) -> Self {
        let k = (half_width / h).ceil() as i64 + 1;
        Self { h, i0: -k, j0: -k, nx: (2 * k + 1) as usize, ny: (2 * k + 1) as usize }
    }

    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new((self.i0 + ix as i64) as f64 * self.h, (self.j0 + iy as i64) as f64 * self.h)
    }

    /// Nearest node, if inside the window.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, usize)> {
        let i = (z.re / self.h).round() as i64 - self.i0;
        let j = (z.im / self.h).round() as i64 - self.j0;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            None
        } else {
            Some((i as usize, j as usize))
        }
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn min_corner(&self) -> Complex64 {
        self.node(0, 0)
    }

    pub fn max_corner(&self) -> Complex64 {
        self.node(self.nx - 1, self.ny - 1)
    }
}

/// One component of `{G <= level}` on a lattice, with its boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub geometry: GridGeometry,
    pub level: f64,
    inside: Vec<bool>,
    /// Closed polyline (first vertex repeated at the end), counter-clockwise.
    pub boundary: Vec<Complex64>,
}

impl RegionMask {
    pub fn is_inside_node(&self, ix: usize, iy: usize) -> bool {
        self.inside[self.geometry.index(ix, iy)]
    }

    /// Membership of the lattice node nearest `z`.
    pub fn contains(&self, z: Complex64) -> bool {
        self.geometry.nearest(z).is_some_and(|(i, j)| self.is_inside_node(i, j))
    }

    /// Membership of the lattice node with global coordinates `(i, j)`.
    pub fn contains_lattice(&self, i: i64, j: i64) -> bool {
        let g = &self.geometry;
        let (x, y) = (i - g.i0, j - g.j0);
        x >= 0 && y >= 0 && (x as usize) < g.nx && (y as usize) < g.ny && self.inside[g.index(x as usize, y as usize)]
    }

    pub fn cell_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.cell_count() as f64 * self.geometry.h * self.geometry.h
    }

    /// Global lattice coordinates of every inside node.
    pub fn lattice_nodes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let g = self.geometry;
        self.inside
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (g.i0 + (k % g.nx) as i64, g.j0 + (k / g.nx) as i64))
    }

    /// Every inside node of `self` is an inside node of `other`.
    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.lattice_nodes().all(|(i, j)| other.contains_lattice(i, j))
    }

    /// Every inside node of `self` and its 8 neighbours are inside `other`.
    pub fn has_margin_in(&self, other: &RegionMask) -> bool {
        self.lattice_nodes()
            .all(|(i, j)| (-1..=1).all(|di| (-1..=1).all(|dj| other.contains_lattice(i + di, j + dj))))
    }

    /// Distance from `z` to the boundary polyline.
    pub fn distance_to_boundary(&self, z: Complex64) -> f64 {
        self.boundary
            .windows(2)
            .map(|w| crate::geometry::point_segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> MaskJson {
        let g = self.geometry;
        let rows = (0..g.ny)
            .map(|iy| {
                let mut runs = Vec::new();
                let mut current = false;
                let mut len = 0usize;
                for ix in 0..g.nx {
                    let v = self.is_inside_node(ix, iy);
                    if v != current {
                        runs.push(len);
                        current = v;
                        len = 0;
                    }
                    len += 1;
                }
                runs.push(len);
                runs
            })
            .collect();
        let min = g.min_corner();
        let max = g.max_corner();
        MaskJson {
            bounding_box: [min.re, min.im, max.re, max.im],
            resolution: g.h,
            nx: g.nx,
            ny: g.ny,
            level: self.level,
            rows,
            boundary: self.boundary.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// Serialized mask: rows are run lengths alternating outside/inside,
/// starting with an (possibly empty) outside run, bottom row first.
#[derive(Debug, Clone, Serialize)]
pub struct MaskJson {
    pub bounding_box: [f64; 4],
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    pub level: f64,
    pub rows: Vec<Vec<usize>>,
    pub boundary: Vec<[f64; 2]>,
}

/// Component of `{G <= r}` containing `seed`, flood-filled on the lattice of
/// step `resolution`.
pub fn sublevel_component(poly: &Polynomial, r: f64, seed: Complex64, resolution: f64) -> Result<RegionMask> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let critical = critical_potentials(poly, CRITICAL_DEPTH);
    if !is_regular(r, &critical, REGULAR_TOL) {
        return Err(Error::NotRegularValue(r));
    }
    let g_seed = green(poly, seed, DEFAULT_BUDGET).value();
    if g_seed >= r {
        return Err(Error::SeedOutside(g_seed));
    }
    let half_width = r.exp() + poly.escape_radius() + 4.0 * resolution;
    let geometry = GridGeometry::centered(resolution, half_width.max(seed.re.abs().max(seed.im.abs()) + 4.0 * resolution));
    component_on_grid(poly, r, seed, geometry)
}

/// Flood fill on a fixed window; frontier layers are evaluated in parallel.
fn component_on_grid(poly: &Polynomial, r: f64, seed: Complex64, geometry: GridGeometry) -> Result<RegionMask> {
    let field = |z: Complex64| green(poly, z, DEFAULT_BUDGET).value();
    let n = geometry.nx * geometry.ny;
    let mut values = vec![f64::NAN; n];
    let mut inside = vec![false; n];

    let (sx, sy) = geometry.nearest(seed).ok_or(Error::ResolutionTooCoarse)?;
    // The nearest node may fall outside a thin component; try its neighbours.
    let mut start = None;
    for (dx, dy) in [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)] {
        let (x, y) = (sx as i64 + dx, sy as i64 + dy);
        if x < 0 || y < 0 || x >= geometry.nx as i64 || y >= geometry.ny as i64 {
            continue;
        }
        let (x, y) = (x as usize, y as usize);
        let v = field(geometry.node(x, y));
        values[geometry.index(x, y)] = v;
        if v <= r {
            start = Some((x, y));
            break;
        }
    }
    let start = start.ok_or(Error::ResolutionTooCoarse)?;
    inside[geometry.index(start.0, start.1)] = true;
    let mut frontier = vec![start];
    while !frontier.is_empty() {
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for &(x, y) in &frontier {
            if x == 0 || y == 0 || x + 1 == geometry.nx || y + 1 == geometry.ny {
                return Err(Error::ResolutionTooCoarse);
            }
            for (nx_, ny_) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                let k = geometry.index(nx_, ny_);
                if values[k].is_nan() {
                    values[k] = f64::INFINITY; // claimed
                    candidates.push((nx_, ny_));
                }
            }
        }
        let evaluated = par::map(&candidates, |&(x, y)| field(geometry.node(x, y)));
        frontier.clear();
        for (&(x, y), v) in candidates.iter().zip(evaluated) {
            let k = geometry.index(x, y);
            values[k] = v;
            if v <= r {
                inside[k] = true;
                frontier.push((x, y));
            }
        }
    }
    let boundary = trace_boundary(&geometry, &inside, |a, b| refine_crossing(&field, r, a, b));
    Ok(RegionMask { geometry, level: r, inside, boundary })
}

/// Bisection along a lattice edge from an inside node `a` to an outside node `b`.
fn refine_crossing(field: &impl Fn(Complex64) -> f64, r: f64, a: Complex64, b: Complex64) -> Complex64 {
    let (mut lo, mut hi) = (a, b);
    for _ in 0..60 {
        let mid = (lo + hi) * 0.5;
        let v = field(mid);
        if (v - r).abs() < LEVEL_TOL * 1e-3 {
            return mid;
        }
        if v <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeKey {
    /// Edge from node (i, j) to (i+1, j).
    H(usize, usize),
    /// Edge from node (i, j) to (i, j+1).
    V(usize, usize),
}

/// Marching squares on the inside indicator. Diagonal-only contacts are
/// kept apart, matching the 4-connected flood fill. Returns the longest loop.
fn trace_boundary(
    g: &GridGeometry,
    inside: &[bool],
    mut crossing: impl FnMut(Complex64, Complex64) -> Complex64,
) -> Vec<Complex64> {
    let at = |x: usize, y: usize| inside[g.index(x, y)];
    let mut adjacency: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    let link = |a: EdgeKey, b: EdgeKey, adj: &mut BTreeMap<EdgeKey, Vec<EdgeKey>>| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for y in 0..g.ny - 1 {
        for x in 0..g.nx - 1 {
            let bl = at(x, y);
            let br = at(x + 1, y);
            let tr = at(x + 1, y + 1);
            let tl = at(x, y + 1);
            let bottom = EdgeKey::H(x, y);
            let right = EdgeKey::V(x + 1, y);
            let top = EdgeKey::H(x, y + 1);
            let left = EdgeKey::V(x, y);
            let mut crossings = Vec::with_capacity(4);
            if bl != br {
                crossings.push(bottom);
            }
            if br != tr {
                crossings.push(right);
            }
            if tr != tl {
                crossings.push(top);
            }
            if tl != bl {
                crossings.push(left);
            }
            match crossings.len() {
                2 => link(crossings[0], crossings[1], &mut adjacency),
                4 => {
                    if bl {
                        link(left, bottom, &mut adjacency);
                        link(right, top, &mut adjacency);
                    } else {
                        link(bottom, right, &mut adjacency);
                        link(top, left, &mut adjacency);
                    }
                }
                _ => {}
            }
        }
    }

    let mut visited: HashMap<EdgeKey, bool> = HashMap::new();
    let mut best: Vec<EdgeKey> = Vec::new();
    for &startk in adjacency.keys() {
        if visited.contains_key(&startk) {
            continue;
        }
        let mut loop_keys = vec![startk];
        visited.insert(startk, true);
        let mut prev = startk;
        let mut current = adjacency[&startk][0];
        while current != startk {
            if visited.contains_key(&current) {
                break;
            }
            visited.insert(current, true);
            loop_keys.push(current);
            let next = adjacency[&current].iter().copied().find(|&k| k != prev).unwrap_or(prev);
            prev = current;
            current = next;
        }
        if loop_keys.len() > best.len() {
            best = loop_keys;
        }
    }

    let mut pts: Vec<Complex64> = best
        .iter()
        .map(|&k| {
            let (a, b) = match k {
                EdgeKey::H(x, y) => ((x, y), (x + 1, y)),
                EdgeKey::V(x, y) => ((x, y), (x, y + 1)),
            };
            let (pa, pb) = (g.node(a.0, a.1), g.node(b.0, b.1));
            if at(a.0, a.1) {
                crossing(pa, pb)
            } else {
                crossing(pb, pa)
            }
        })
        .collect();
    // Orient counter-clockwise.
    let signed_area: f64 = (0..pts.len())
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            a.re * b.im - b.re * a.im
        })
        .sum();
    if signed_area < 0.0 {
        pts.reverse();
    }
    if let Some(&first) = pts.first() {
        pts.push(first);
    }
    pts
}
