//! Subcommand bodies. Each returns what goes to stdout and, for verifying
//! commands, the overall verdict; files are written here.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use cremer_core::angle::periodic_angles_up_to;
use cremer_core::census::{census, cycles_in_cell, cycles_in_disc, cycles_of_rays_in_cell, CensusReport, RayCellVerdict};
use cremer_core::poly::CycleRecord;
use cremer_core::probe::{landing_accessibility_table, probe_accumulation, ProbeReport};
use cremer_core::ray::{trace_angle_set, trace_ray, PotentialGrid};
use cremer_core::renorm::{renormalize_iterate, Connectivity};
use cremer_core::separation::{
    build_fixed_collection, build_partition, critical_correspondence, fatou_markers, preimage_collection, sample_square,
    stabilization_period, verify_lemma_3_1, verify_lemma_3_3_invariance, Partition, RayCollection,
};
use cremer_core::{Angle, Complex64, Polynomial};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::RunConfig;
use crate::json::{canonical, document, to_value};
use crate::parse::{parse_polynomial, ParseError};
use crate::render::{auto_bounds, render, RenderSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Core(#[from] cremer_core::Error),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: cremer_core::Error },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    /// `Some(false)` when a verification failed.
    pub passed: Option<bool>,
}

pub const COMMANDS: &[&str] = &["render", "ray", "fixed-rays", "partition", "cycles", "renorm", "probe", "pipeline"];

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.poly.is_empty() {
        return Err(CliError::Usage("no polynomial given (--poly)".into()));
    }
    let poly = parse_polynomial(&cfg.poly)?;
    match cfg.command.as_str() {
        "render" => cmd_render(cfg, &poly),
        "ray" => cmd_ray(cfg, &poly),
        "fixed-rays" => cmd_fixed_rays(cfg, &poly),
        "partition" => cmd_partition(cfg, &poly),
        "cycles" => cmd_cycles(cfg, &poly),
        "renorm" => cmd_renorm(cfg, &poly),
        "probe" => cmd_probe(cfg, &poly),
        "pipeline" => cmd_pipeline(cfg, &poly),
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// `dir/name.json` → `dir/name.<suffix>`.
fn sibling(out: &str, suffix: &str) -> PathBuf {
    let p = Path::new(out);
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    p.with_file_name(format!("{stem}.{suffix}"))
}

fn verdict_str(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn envelope(cfg: &RunConfig, poly: &Polynomial, result: Value, passed: Option<bool>, artifacts: Vec<String>) -> Value {
    json!({
        "command": cfg.command,
        "config": cfg.to_map(),
        "polynomial": to_value(&poly.coefficients()),
        "degree": poly.degree(),
        "result": result,
        "verdict": passed.map(verdict_str),
        "artifacts": artifacts,
    })
}

/// Writes the report to `--out` or returns it for stdout.
fn emit(cfg: &RunConfig, report: &Value, table: Option<String>, passed: Option<bool>) -> Result<Outcome, CliError> {
    let text = document(report);
    let stdout = match &cfg.out {
        Some(out) => {
            write_file(Path::new(out), text.as_bytes())?;
            table.unwrap_or_default()
        }
        None if cfg.format == "table" => table.unwrap_or(text),
        None => text,
    };
    Ok(Outcome { stdout, passed })
}

fn grid(cfg: &RunConfig, poly: &Polynomial) -> Result<PotentialGrid, CliError> {
    Ok(PotentialGrid::new(poly, poly.escape_radius().ln() + 1.0, cfg.pot_lo, cfg.steps)?)
}

fn cmd_render(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    if cfg.width == 0 || cfg.height == 0 {
        return Err(CliError::Usage("width and height must be positive".into()));
    }
    let rays = if cfg.rays.is_empty() {
        Vec::new()
    } else {
        let set: BTreeSet<Angle> = cfg.rays.iter().copied().collect();
        let traced = trace_angle_set(poly, &set, &grid(cfg, poly)?)?;
        set.iter().filter_map(|t| traced.get(t).cloned()).collect()
    };
    let spec = RenderSpec {
        width: cfg.width,
        height: cfg.height,
        bounds: cfg.bounds.unwrap_or_else(|| auto_bounds(poly, cfg.width, cfg.height)),
        rays,
        levels: cfg.levels.clone(),
        markers: cfg.markers.clone(),
    };
    let image = render(poly, &spec);
    let out = cfg.out.clone().unwrap_or_else(|| "render.ppm".into());
    write_file(Path::new(&out), &image.to_ppm())?;
    Ok(Outcome { stdout: format!("wrote {out} ({}x{})\n", cfg.width, cfg.height), passed: None })
}

fn cmd_ray(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let t = cfg.angle.ok_or_else(|| CliError::Usage("ray needs --angle".into()))?;
    let g = grid(cfg, poly)?;
    let rays = trace_ray(poly, t, g.pot_hi, g.pot_lo, g.steps)?;
    let mut text = String::new();
    for ray in &rays {
        for record in ray.json_records() {
            text.push_str(&canonical(&record));
            text.push('\n');
        }
    }
    match &cfg.out {
        Some(out) => {
            write_file(Path::new(out), text.as_bytes())?;
            Ok(Outcome { stdout: String::new(), passed: None })
        }
        None => Ok(Outcome { stdout: text, passed: None }),
    }
}

/// Ray period from the config, else the stabilization period of the census.
fn ray_period(cfg: &RunConfig, cycles: &[CycleRecord]) -> Result<u32, CliError> {
    match cfg.period {
        Some(m) => Ok(m),
        None => Ok(stabilization_period(cycles)?),
    }
}

fn collection_json(c: &RayCollection) -> Value {
    let rays: Vec<Value> = c
        .rays
        .values()
        .map(|r| json!({"angle": r.angle.to_string(), "status": to_value(&r.status), "samples": r.samples.len()}))
        .collect();
    json!({"level": c.level, "provenance": to_value(&c.provenance), "grid": to_value(&c.grid), "rays": rays,
           "forward_invariant": c.is_forward_invariant()})
}

fn cmd_fixed_rays(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let cen = census(poly, cfg.max_period)?;
    let m = ray_period(cfg, &cen.cycles)?;
    let collection = build_fixed_collection(poly, m)?;
    let report = envelope(cfg, poly, json!({"period": m, "collection": collection_json(&collection)}), None, vec![]);
    emit(cfg, &report, None, None)
}

fn partitions(poly: &Polynomial, base: RayCollection, depth: usize) -> Result<Vec<Partition>, cremer_core::Error> {
    let mut out = vec![build_partition(poly, &base)?];
    for k in 1..=depth {
        out.push(build_partition(poly, &preimage_collection(poly, &base, k)?)?);
    }
    Ok(out)
}

fn cmd_partition(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let cen = census(poly, cfg.max_period)?;
    let m = ray_period(cfg, &cen.cycles)?;
    let base = build_fixed_collection(poly, m)?;
    let collection = if cfg.depth == 0 { base } else { preimage_collection(poly, &base, cfg.depth)? };
    let partition = build_partition(poly, &collection)?;
    let markers = fatou_markers(poly, &cen.cycles);
    let separation = verify_lemma_3_1(&partition, &markers);
    let correspondence = critical_correspondence(poly, &partition, &cen.cycles, &markers);
    let passed = separation.verdict.passed() && correspondence.verdict.passed() && partition.euler_holds();
    let result = json!({
        "period": m,
        "partition": to_value(&partition.report()),
        "markers": to_value(&markers),
        "separation": to_value(&separation),
        "critical_correspondence": to_value(&correspondence),
    });
    emit(cfg, &envelope(cfg, poly, result, Some(passed), vec![]), None, Some(passed))
}

/// Ten decimals, with rounding noise below 1e-12 shown as zero.
fn short_complex(z: Complex64) -> String {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        format!("{re:.10}")
    } else {
        format!("{re:.10}{im:+.10}i")
    }
}

fn cycle_table(report: &CensusReport) -> String {
    let mut s = format!("{:>6}  {:<18}  {:>12}  {:<28}  points\n", "period", "class", "|multiplier|", "multiplier");
    for c in &report.cycles {
        let pts: Vec<String> = c.points.iter().map(|&z| short_complex(z)).collect();
        s.push_str(&format!(
            "{:>6}  {:<18}  {:>12.6}  {:<28}  {}\n",
            c.period,
            format!("{:?}", c.class),
            c.multiplier.norm(),
            short_complex(c.multiplier),
            pts.join("  ")
        ));
    }
    s
}

fn cmd_cycles(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let (result, table) = match cfg.center {
        Some(center) => {
            let disc = cycles_in_disc(poly, center, cfg.radius, cfg.max_period)?;
            let table = cycle_table(&disc.census);
            (to_value(&disc), table)
        }
        None => {
            let cen = census(poly, cfg.max_period)?;
            let table = cycle_table(&cen);
            (to_value(&cen), table)
        }
    };
    emit(cfg, &envelope(cfg, poly, result, None, vec![]), Some(table), None)
}

/// A non-repelling cycle point of period dividing `n`.
fn default_renorm_seed(poly: &Polynomial, n: u32) -> Result<Complex64, CliError> {
    let cen = census(poly, n)?;
    cen.cycles
        .iter()
        .filter(|c| n.is_multiple_of(c.period) && !c.class.is_repelling())
        .min_by(|a, b| a.multiplier.norm().total_cmp(&b.multiplier.norm()))
        .map(|c| c.points[0])
        .ok_or_else(|| CliError::Usage(format!("no non-repelling cycle of period dividing {n}; pass --seed")))
}

fn cmd_renorm(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let n = cfg.period.unwrap_or(1);
    let seed = match cfg.seed {
        Some(s) => s,
        None => default_renorm_seed(poly, n)?,
    };
    let (plm, report) = renormalize_iterate(poly, n, seed, cfg.budget, cfg.resolution)?;
    let mut artifacts = Vec::new();
    if let Some(out) = &cfg.out {
        for (name, mask) in [("inner", &plm.inner), ("outer", &plm.outer)] {
            let path = sibling(out, &format!("{name}.json"));
            write_file(&path, document(&to_value(&mask.to_json())).as_bytes())?;
            artifacts.push(path.display().to_string());
        }
    }
    let passed = match report.connectivity.verdict {
        Connectivity::ConnectedEvidence | Connectivity::Undecided => None,
        Connectivity::DisconnectedEvidence => Some(false),
    };
    let margin = plm.inner.has_margin_in(&plm.outer);
    let result = json!({"renormalization": to_value(&report), "margin": margin});
    emit(cfg, &envelope(cfg, poly, result, passed, artifacts), None, passed)
}

/// Critical value of the first critical point.
fn default_target(poly: &Polynomial) -> Complex64 {
    poly.eval(poly.critical_points()[0].point)
}

/// Fixed point of smallest multiplier modulus.
fn default_fixed(cen: &CensusReport) -> Result<Complex64, CliError> {
    cen.cycles
        .iter()
        .filter(|c| c.period == 1)
        .min_by(|a, b| a.multiplier.norm().total_cmp(&b.multiplier.norm()))
        .map(|c| c.points[0])
        .ok_or_else(|| CliError::Usage("census found no fixed point".into()))
}

fn probe_angles(cfg: &RunConfig, poly: &Polynomial) -> Result<BTreeSet<Angle>, CliError> {
    if cfg.rays.is_empty() {
        Ok(periodic_angles_up_to(poly.degree() as u64, cfg.max_period)?.into_iter().collect())
    } else {
        Ok(cfg.rays.iter().copied().collect())
    }
}

fn probe_table(report: &ProbeReport) -> String {
    let mut s = format!("{}\n{:<16}  {:>14}  {:>14}  {:>6}  {:>6}\n", report.statement, "angle", "d(target)", "d(fixed)", "target", "fixed");
    for r in &report.records {
        s.push_str(&format!(
            "{:<16}  {:>14.6e}  {:>14.6e}  {:>6}  {:>6}\n",
            r.angle.to_string(),
            r.min_distance_to_target,
            r.min_distance_to_fixed,
            r.approaches_target,
            r.approaches_fixed
        ));
    }
    s
}

fn run_probe(cfg: &RunConfig, poly: &Polynomial, cen: &CensusReport) -> Result<ProbeReport, CliError> {
    let target = cfg.target.unwrap_or_else(|| default_target(poly));
    let fixed = match cfg.fixed {
        Some(f) => f,
        None => default_fixed(cen)?,
    };
    Ok(probe_accumulation(poly, target, fixed, &probe_angles(cfg, poly)?, cfg.pot_lo, cfg.eps_acc)?)
}

fn cmd_probe(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let cen = census(poly, 1)?;
    let report = run_probe(cfg, poly, &cen)?;
    let table = probe_table(&report);
    emit(cfg, &envelope(cfg, poly, to_value(&report), None, vec![]), Some(table), None)
}

/// Accumulates stage results so a failing stage still leaves a report.
struct Stages<'a> {
    cfg: &'a RunConfig,
    poly: &'a Polynomial,
    done: Map<String, Value>,
    artifacts: Vec<String>,
}

impl Stages<'_> {
    fn record(&mut self, name: &str, value: Value) {
        self.done.insert(name.to_string(), value);
    }

    fn fail<T>(&mut self, stage: &'static str, err: cremer_core::Error) -> Result<T, CliError> {
        if let Some(out) = &self.cfg.out {
            let mut result = Value::Object(std::mem::take(&mut self.done));
            result["error"] = json!({"stage": stage, "message": err.to_string()});
            let report = envelope(self.cfg, self.poly, result, None, self.artifacts.clone());
            write_file(Path::new(out), document(&report).as_bytes())?;
        }
        Err(CliError::Stage { stage, source: err })
    }
}

macro_rules! stage {
    ($stages:expr, $name:literal, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return $stages.fail($name, err),
        }
    };
}

fn cmd_pipeline(cfg: &RunConfig, poly: &Polynomial) -> Result<Outcome, CliError> {
    let mut st = Stages { cfg, poly, done: Map::new(), artifacts: Vec::new() };

    let cen = stage!(st, "census", census(poly, cfg.max_period));
    st.record("census", to_value(&cen));

    let m = match cfg.period {
        Some(m) => m,
        None => stage!(st, "stabilization_period", stabilization_period(&cen.cycles)),
    };
    st.record("stabilization_period", json!(m));

    let base = stage!(st, "fixed_collection", build_fixed_collection(poly, m));
    st.record("fixed_collection", collection_json(&base));
    if let Some(out) = &cfg.out {
        let path = sibling(out, "rays.jsonl");
        let mut text = String::new();
        for ray in base.rays.values() {
            for record in ray.json_records() {
                text.push_str(&canonical(&record));
                text.push('\n');
            }
        }
        write_file(&path, text.as_bytes())?;
        st.artifacts.push(path.display().to_string());
    }

    let parts = stage!(st, "partition", partitions(poly, base, cfg.depth));
    st.record("partitions", Value::Array(parts.iter().map(|p| to_value(&p.report())).collect()));

    let markers = fatou_markers(poly, &cen.cycles);
    st.record("markers", to_value(&markers));
    let separation = verify_lemma_3_1(&parts[0], &markers);
    st.record("separation", to_value(&separation));

    let half = 0.75 * poly.escape_radius();
    let samples = sample_square(cfg.samples, half, cfg.rng_seed);
    let invariance = verify_lemma_3_3_invariance(poly, &parts, &samples);
    st.record("invariance", to_value(&invariance));

    let correspondence = critical_correspondence(poly, &parts[0], &cen.cycles, &markers);
    st.record("critical_correspondence", to_value(&correspondence));

    let mut cells = Vec::new();
    for cell in 0..parts[0].cell_count() {
        let cycles = stage!(st, "cell_cycles", cycles_in_cell(poly, &parts[0], cell, cfg.max_period));
        let rays = stage!(st, "cell_rays", cycles_of_rays_in_cell(poly, &parts[0], cell, cfg.max_period));
        let cycle_periods: Vec<u32> = cycles.cycles.iter().map(|c| c.period).collect();
        cells.push(json!({
            "cell": cell,
            "cycle_periods": cycle_periods,
            "undecided_cycles": cycles.undecided_count,
            "rays": to_value(&rays),
        }));
    }
    st.record("cells", Value::Array(cells));

    let probe = match run_probe(cfg, poly, &cen) {
        Ok(p) => p,
        Err(CliError::Core(e)) => return st.fail("probe", e),
        Err(e) => return Err(e),
    };
    st.record("probe", to_value(&probe));
    let table = stage!(st, "accessibility", landing_accessibility_table(poly, cfg.max_period));
    st.record("accessibility", to_value(&table));

    let ray_cells_ok = st.done["cells"]
        .as_array()
        .map(|cs| cs.iter().all(|c| c["rays"]["verdict"] != json!(RayCellVerdict::Fail)))
        .unwrap_or(true);
    let verdicts = json!({
        "separation": separation.verdict,
        "invariance": invariance.verdict,
        "critical_correspondence": correspondence.verdict,
        "cell_rays": verdict_str(ray_cells_ok),
    });
    st.record("verdicts", verdicts);
    let passed =
        separation.verdict.passed() && invariance.verdict.passed() && correspondence.verdict.passed() && ray_cells_ok;
    let result = Value::Object(std::mem::take(&mut st.done));
    let report = envelope(cfg, poly, result, Some(passed), st.artifacts.clone());
    let summary = format!(
        "separation {}  invariance {}  critical correspondence {}  cell rays {}\n",
        verdict_str(separation.verdict.passed()),
        verdict_str(invariance.verdict.passed()),
        verdict_str(correspondence.verdict.passed()),
        verdict_str(ray_cells_ok)
    );
    emit(cfg, &report, Some(summary), Some(passed))
}
