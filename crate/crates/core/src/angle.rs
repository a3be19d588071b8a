//! Exact rational angles on ℝ/ℤ and the multiplication-by-`d` map.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Cap on `d^n - 1` for periodic-angle enumeration.
pub const MAX_PERIODIC_ANGLES: u64 = 1 << 20;

/// A reduced fraction `p/q` with `0 <= p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Angle {
    num: u64,
    den: u64,
}

impl Angle {
    pub const ZERO: Angle = Angle { num: 0, den: 1 };

    /// `p/q` taken modulo one and reduced.
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidAngle(format!("{p}/0")));
        }
        let p = p % q;
        let g = p.gcd(&q);
        Ok(Self { num: p / g, den: q / g })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `d·t mod 1`.
    pub fn mul_d(self, d: u64) -> Self {
        let p = (self.num as u128 * d as u128 % self.den as u128) as u64;
        Self::new(p, self.den).expect("nonzero denominator")
    }

    /// `(t + k)/d` for `k = 0..d`, increasing.
    pub fn preimages(self, d: u64) -> Result<Vec<Self>> {
        let den = self.den.checked_mul(d).ok_or(Error::AngleOverflow)?;
        (0..d)
            .map(|k| {
                let p = k.checked_mul(self.den).and_then(|v| v.checked_add(self.num)).ok_or(Error::AngleOverflow)?;
                Self::new(p, den)
            })
            .collect()
    }

    /// Counter-clockwise distance from `self` to `other`, in `[0, 1)`.
    pub fn ccw_distance(self, other: Angle) -> f64 {
        (other.to_f64() - self.to_f64()).rem_euclid(1.0)
    }

    /// Exact test for `self` lying strictly inside the ccw arc `(a, b)`.
    pub fn in_open_arc(self, a: Angle, b: Angle) -> bool {
        match a.cmp(&b) {
            Ordering::Less => a < self && self < b,
            Ordering::Greater => self > a || self < b,
            Ordering::Equal => self != a,
        }
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidAngle(s.to_string());
        match s.split_once('/') {
            None => {
                let p: u64 = s.parse().map_err(|_| bad())?;
                if p == 0 {
                    Ok(Angle::ZERO)
                } else {
                    Err(bad())
                }
            }
            Some((p, q)) => {
                let p: u64 = p.trim().parse().map_err(|_| bad())?;
                let q: u64 = q.trim().parse().map_err(|_| bad())?;
                if q == 0 || p >= q {
                    return Err(bad());
                }
                Angle::new(p, q)
            }
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `m_d(t) = d·t mod 1`.
pub fn m_d(t: Angle, d: u64) -> Angle {
    t.mul_d(d)
}

/// All `t` with `m_d^n(t) = t`: the fractions `k/(d^n - 1)`.
pub fn periodic_angles(d: u64, n: u32) -> Result<Vec<Angle>> {
    let q = d
        .checked_pow(n)
        .map(|v| v - 1)
        .filter(|&v| v <= MAX_PERIODIC_ANGLES)
        .ok_or(Error::PeriodTooLarge { degree: d as usize, period: n, limit: MAX_PERIODIC_ANGLES })?;
    (0..q).map(|k| Angle::new(k, q)).collect()
}

/// Every angle whose exact period divides one of `1..=max_period`, sorted.
pub fn periodic_angles_up_to(d: u64, max_period: u32) -> Result<Vec<Angle>> {
    let mut set = BTreeSet::new();
    for n in 1..=max_period {
        set.extend(periodic_angles(d, n)?);
    }
    Ok(set.into_iter().collect())
}

/// Forward orbit of a rational angle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AngleOrbit {
    pub angles: Vec<Angle>,
    pub preperiod: usize,
    pub period: usize,
}

impl AngleOrbit {
    pub fn is_periodic(&self) -> bool {
        self.preperiod == 0
    }
}

pub fn orbit(t: Angle, d: u64) -> AngleOrbit {
    let mut seen: BTreeMap<Angle, usize> = BTreeMap::new();
    let mut angles = Vec::new();
    let mut current = t;
    loop {
        if let Some(&first) = seen.get(&current) {
            let period = angles.len() - first;
            return AngleOrbit { angles, preperiod: first, period };
        }
        seen.insert(current, angles.len());
        angles.push(current);
        current = current.mul_d(d);
    }
}

/// Whether `first ↦ second` weakly preserves cyclic order: after sorting by
/// source, the targets wind around the circle at most once.
pub fn is_cyclic_order_preserving(pairs: &[(Angle, Angle)]) -> Result<bool> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by_key(|a| a.0);
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateSourceAngle(w[0].0));
        }
    }
    if sorted.len() < 3 {
        return Ok(true);
    }
    let n = sorted.len();
    let descents = (0..n).filter(|&i| sorted[(i + 1) % n].1 < sorted[i].1).count();
    Ok(descents <= 1)
}

/// A cycle of `m_d` inside an invariant angle set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AngleCycle {
    pub angles: Vec<Angle>,
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PeriodVerdict {
    ConsistentWithOrderPreserving,
    NotConsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommonPeriodReport {
    pub cycles: Vec<AngleCycle>,
    pub periods: Vec<usize>,
    pub verdict: PeriodVerdict,
}

/// Cycles of `m_d` inside a forward-invariant set, with the verdict that all
/// of them share one period (necessary for an order-preserving extension).
pub fn common_period_report(angles: &BTreeSet<Angle>, d: u64) -> Result<CommonPeriodReport> {
    for &t in angles {
        if !angles.contains(&t.mul_d(d)) {
            return Err(Error::NotInvariant(t));
        }
    }
    let mut in_cycle: BTreeSet<Angle> = BTreeSet::new();
    let mut cycles = Vec::new();
    for &t in angles {
        let o = orbit(t, d);
        let cyc = &o.angles[o.preperiod..];
        if in_cycle.contains(&cyc[0]) {
            continue;
        }
        in_cycle.extend(cyc.iter().copied());
        let start = *cyc.iter().min().unwrap();
        let pos = cyc.iter().position(|&a| a == start).unwrap();
        let mut ordered: Vec<Angle> = cyc[pos..].to_vec();
        ordered.extend_from_slice(&cyc[..pos]);
        cycles.push(AngleCycle { period: ordered.len(), angles: ordered });
    }
    cycles.sort_by(|a, b| a.angles[0].cmp(&b.angles[0]));
    let periods: Vec<usize> = cycles.iter().map(|c| c.period).collect();
    let consistent = periods.windows(2).all(|w| w[0] == w[1]);
    Ok(CommonPeriodReport {
        cycles,
        periods,
        verdict: if consistent {
            PeriodVerdict::ConsistentWithOrderPreserving
        } else {
            PeriodVerdict::NotConsistent
        },
    })
}
