use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cremer_cli::{run, RunConfig};

#[derive(Parser)]
#[command(name = "cremer", version, about = "External rays, ray partitions, cycle censuses and polynomial-like maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Coefficients constant-first ("-1,0,1") or "q:c" for z^2 + c.
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    /// Output file; reports go to stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    /// Lattice step for sublevel-set masks.
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    max_period: Option<String>,
    /// Preimage level of the ray collection.
    #[arg(long)]
    depth: Option<String>,
    /// Lowest traced potential.
    #[arg(long)]
    pot_lo: Option<String>,
    /// Orbit budget for renormalization checks.
    #[arg(long)]
    budget: Option<String>,
    /// `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<String>,
    /// Any other knob, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
    /// json or table.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    /// xmin,xmax,ymin,ymax
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Comma-separated angles p/q to overlay.
    #[arg(long)]
    rays: Option<String>,
    /// Comma-separated Green levels to overlay.
    #[arg(long)]
    levels: Option<String>,
    /// Semicolon-separated points to mark.
    #[arg(long, allow_hyphen_values = true)]
    markers: Option<String>,
}

#[derive(Args)]
struct RayArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    angle: Option<String>,
    /// Samples per division of the potential by the degree.
    #[arg(long)]
    steps: Option<String>,
}

#[derive(Args)]
struct PeriodArgs {
    #[command(flatten)]
    common: Common,
    /// Ray period m; defaults to the stabilization period of the census.
    #[arg(long)]
    period: Option<String>,
}

#[derive(Args)]
struct CyclesArgs {
    #[command(flatten)]
    common: Common,
    /// Restrict to cycles inside the disc around this point.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    radius: Option<String>,
}

#[derive(Args)]
struct RenormArgs {
    #[command(flatten)]
    common: Common,
    /// Periodic point to renormalize around; defaults to a non-repelling one.
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Iterate n.
    #[arg(long)]
    period: Option<String>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    /// Defaults to the first critical value.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    /// Defaults to the fixed point of smallest multiplier.
    #[arg(long, allow_hyphen_values = true)]
    fixed: Option<String>,
    #[arg(long)]
    eps_acc: Option<String>,
    /// Angles to trace; defaults to all periodic angles up to max-period.
    #[arg(long)]
    rays: Option<String>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    period: Option<String>,
    /// Sample count for the invariance check.
    #[arg(long)]
    samples: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a PPM image of the filled Julia set with overlays.
    Render(RenderArgs),
    /// Trace the rays of an angle orbit as JSON lines.
    Ray(RayArgs),
    /// Trace and land the fixed rays of P^m.
    FixedRays(PeriodArgs),
    /// Build the ray partition and check marker separation.
    Partition(PeriodArgs),
    /// Periodic cycle census, optionally within a disc.
    Cycles(CyclesArgs),
    /// Extract a polynomial-like restriction of P^n.
    Renorm(RenormArgs),
    /// Closest approach of rays to a target and a fixed point.
    Probe(ProbeArgs),
    /// All stages end to end with one consolidated report.
    Pipeline(PipelineArgs),
}

type Pairs = Vec<(&'static str, Option<String>)>;

fn common_pairs(c: Common) -> (Option<String>, Vec<String>, Pairs) {
    let pairs = vec![
        ("poly", c.poly),
        ("out", c.out),
        ("resolution", c.resolution),
        ("max_period", c.max_period),
        ("depth", c.depth),
        ("pot_lo", c.pot_lo),
        ("budget", c.budget),
        ("format", c.format),
    ];
    (c.config, c.set, pairs)
}

fn split(command: Command) -> (&'static str, Common, Pairs) {
    match command {
        Command::Render(a) => (
            "render",
            a.common,
            vec![
                ("width", a.width),
                ("height", a.height),
                ("bounds", a.bounds),
                ("rays", a.rays),
                ("levels", a.levels),
                ("markers", a.markers),
            ],
        ),
        Command::Ray(a) => ("ray", a.common, vec![("angle", a.angle), ("steps", a.steps)]),
        Command::FixedRays(a) => ("fixed-rays", a.common, vec![("period", a.period)]),
        Command::Partition(a) => ("partition", a.common, vec![("period", a.period)]),
        Command::Cycles(a) => ("cycles", a.common, vec![("center", a.center), ("radius", a.radius)]),
        Command::Renorm(a) => ("renorm", a.common, vec![("seed", a.seed), ("period", a.period)]),
        Command::Probe(a) => (
            "probe",
            a.common,
            vec![("target", a.target), ("fixed", a.fixed), ("eps_acc", a.eps_acc), ("rays", a.rays)],
        ),
        Command::Pipeline(a) => ("pipeline", a.common, vec![("period", a.period), ("samples", a.samples)]),
    }
}

fn build_config(cli: Cli) -> Result<RunConfig, String> {
    let (name, common, specific) = split(cli.command);
    let (config_path, sets, mut pairs) = common_pairs(common);
    pairs.extend(specific);
    let mut cfg = RunConfig::default();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
        cfg.apply_text(&text).map_err(|e| e.to_string())?;
    }
    cfg.command = name.to_string();
    for kv in sets {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects key=value, got '{kv}'"))?;
        cfg.set(k.trim(), v).map_err(|e| e.to_string())?;
    }
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, &v).map_err(|e| e.to_string())?;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for failed verifications.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match build_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            match outcome.passed {
                Some(false) => ExitCode::from(2),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
