//! `key = value` run configuration. Every knob has a default; the text form
//! written by [`RunConfig::to_text`] reads back to an identical config.

use std::collections::BTreeMap;

use cremer_core::{Angle, Complex64};

use crate::parse::{format_complex, parse_complex, parse_points, parse_reals, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub poly: String,
    pub out: Option<String>,
    /// Mask lattice step.
    pub resolution: f64,
    pub max_period: u32,
    /// Preimage level of ray collections.
    pub depth: usize,
    pub pot_lo: f64,
    /// Orbit budget for renormalization and connectivity checks.
    pub budget: u32,
    /// Samples per division of the potential by the degree.
    pub steps: u32,
    /// Sample count for the invariance check.
    pub samples: usize,
    pub rng_seed: u64,
    pub eps_acc: f64,
    pub width: usize,
    pub height: usize,
    /// `[xmin, xmax, ymin, ymax]`; `None` picks a square from the escape radius.
    pub bounds: Option<[f64; 4]>,
    pub rays: Vec<Angle>,
    pub levels: Vec<f64>,
    pub markers: Vec<Complex64>,
    pub angle: Option<Angle>,
    /// Ray period `m` for fixed collections, iterate `n` for renormalization.
    pub period: Option<u32>,
    pub center: Option<Complex64>,
    pub radius: f64,
    pub target: Option<Complex64>,
    pub fixed: Option<Complex64>,
    pub seed: Option<Complex64>,
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            poly: String::new(),
            out: None,
            resolution: 0.01,
            max_period: 4,
            depth: 2,
            pot_lo: 1e-8,
            budget: 10_000,
            steps: 24,
            samples: 1000,
            rng_seed: 1,
            eps_acc: 1e-2,
            width: 512,
            height: 512,
            bounds: None,
            rays: Vec::new(),
            levels: Vec::new(),
            markers: Vec::new(),
            angle: None,
            period: None,
            center: None,
            radius: 0.2,
            target: None,
            fixed: None,
            seed: None,
            format: "json".into(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "command", "poly", "out", "resolution", "max_period", "depth", "pot_lo", "budget", "steps", "samples", "rng_seed",
    "eps_acc", "width", "height", "bounds", "rays", "levels", "markers", "angle", "period", "center", "radius",
    "target", "fixed", "seed", "format",
];

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> ParseError {
    ParseError::Invalid(format!("invalid value '{value}' for '{key}': {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ParseError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| bad(key, value, e))
}

fn opt<T>(value: &str, f: impl FnOnce(&str) -> Result<T, ParseError>) -> Result<Option<T>, ParseError> {
    let v = value.trim();
    if v.is_empty() || v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn angle(key: &str, value: &str) -> Result<Angle, ParseError> {
    value.trim().parse::<Angle>().map_err(|e| bad(key, value, e))
}

/// Shortest round-trip text, in exponent form for very small or large values.
fn real(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn join<T>(items: &[T], sep: &str, f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(sep)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ParseError> {
        let v = value.trim();
        match key {
            "command" => self.command = v.to_string(),
            "poly" => self.poly = v.to_string(),
            "out" => self.out = opt(v, |s| Ok(s.to_string()))?,
            "resolution" => self.resolution = num(key, v)?,
            "max_period" => self.max_period = num(key, v)?,
            "depth" => self.depth = num(key, v)?,
            "pot_lo" => self.pot_lo = num(key, v)?,
            "budget" => self.budget = num(key, v)?,
            "steps" => self.steps = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "rng_seed" => self.rng_seed = num(key, v)?,
            "eps_acc" => self.eps_acc = num(key, v)?,
            "width" => self.width = num(key, v)?,
            "height" => self.height = num(key, v)?,
            "bounds" => {
                self.bounds = opt(v, |s| {
                    let xs = parse_reals(s)?;
                    <[f64; 4]>::try_from(xs.as_slice()).map_err(|_| bad(key, s, "need xmin,xmax,ymin,ymax"))
                })?
            }
            "rays" => {
                self.rays = if v.is_empty() { Vec::new() } else { v.split(',').map(|s| angle(key, s)).collect::<Result<_, _>>()? }
            }
            "levels" => self.levels = parse_reals(v)?,
            "markers" => self.markers = parse_points(v)?,
            "angle" => self.angle = opt(v, |s| angle(key, s))?,
            "period" => self.period = opt(v, |s| num(key, s))?,
            "center" => self.center = opt(v, parse_complex)?,
            "radius" => self.radius = num(key, v)?,
            "target" => self.target = opt(v, parse_complex)?,
            "fixed" => self.fixed = opt(v, parse_complex)?,
            "seed" => self.seed = opt(v, parse_complex)?,
            "format" => match v {
                "json" | "table" => self.format = v.to_string(),
                _ => return Err(bad(key, v, "expected json or table")),
            },
            _ => return Err(ParseError::Invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ParseError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ParseError::Invalid(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Every key with its current value, in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let o = |x: &Option<String>| x.clone().unwrap_or_default();
        let oc = |x: &Option<Complex64>| x.map(format_complex).unwrap_or_default();
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "command" => self.command.clone(),
                    "poly" => self.poly.clone(),
                    "out" => o(&self.out),
                    "resolution" => real(self.resolution),
                    "max_period" => self.max_period.to_string(),
                    "depth" => self.depth.to_string(),
                    "pot_lo" => real(self.pot_lo),
                    "budget" => self.budget.to_string(),
                    "steps" => self.steps.to_string(),
                    "samples" => self.samples.to_string(),
                    "rng_seed" => self.rng_seed.to_string(),
                    "eps_acc" => real(self.eps_acc),
                    "width" => self.width.to_string(),
                    "height" => self.height.to_string(),
                    "bounds" => self.bounds.map(|b| join(&b, ",", |x| real(*x))).unwrap_or_else(|| "auto".into()),
                    "rays" => join(&self.rays, ",", |a| a.to_string()),
                    "levels" => join(&self.levels, ",", |x| real(*x)),
                    "markers" => join(&self.markers, ";", |z| format_complex(*z)),
                    "angle" => self.angle.map(|a| a.to_string()).unwrap_or_default(),
                    "period" => self.period.map(|p| p.to_string()).unwrap_or_default(),
                    "center" => oc(&self.center),
                    "radius" => real(self.radius),
                    "target" => oc(&self.target),
                    "fixed" => oc(&self.fixed),
                    "seed" => oc(&self.seed),
                    "format" => self.format.clone(),
                    _ => unreachable!("every key is listed"),
                };
                (k, v)
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
