mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cornerflow::geometry::Slope;
use cornerflow::invariants::{self, CornerFlowOptions, SolverChoice};
use cornerflow::spectra;
use cornerflow::symbol::{self, ChiralGrading, HamiltonianSymbol, ProductFactors};
use cornerflow::workflows::{self, EdgeGapReport, FlowSummary, PipelineConfig};
use cornerflow::{Error, ErrorCategory};

use svg::Plot;

/// Bulk, edge and corner invariants of lattice Hamiltonians.
#[derive(Parser)]
#[command(name = "cornerflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bloch eigenvalues along one angle, the others held at zero.
    BulkSpectrum(Options),
    /// Smallest edge eigenvalues of both edges over a (k_edge, t) grid.
    EdgeGap(Options),
    /// Spectral flow of corner-localised states over t.
    CornerFlow(Options),
    /// Corner flow of H1 ⊗ Π + 1 ⊗ H2 against the product of the factor invariants.
    VerifyProduct(Options),
    /// Every applicable invariant of one model.
    Report(Options),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BulkSpectrum(_) => "bulk-spectrum",
            Command::EdgeGap(_) => "edge-gap",
            Command::CornerFlow(_) => "corner-flow",
            Command::VerifyProduct(_) => "verify-product",
            Command::Report(_) => "report",
        }
    }

    fn options(&self) -> &Options {
        match self {
            Command::BulkSpectrum(o)
            | Command::EdgeGap(o)
            | Command::CornerFlow(o)
            | Command::VerifyProduct(o)
            | Command::Report(o) => o,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Solver {
    Auto,
    Dense,
    Window,
}

#[derive(Args, Debug, Serialize)]
struct Options {
    /// JSON model file.
    #[arg(long, conflicts_with = "builtin")]
    model: Option<PathBuf>,
    /// Built-in model name.
    #[arg(long)]
    builtin: Option<String>,
    /// First factor for verify-product: built-in name or model file.
    #[arg(long)]
    h1: Option<String>,
    /// Second (chiral) factor for verify-product: built-in name or model file.
    #[arg(long)]
    h2: Option<String>,
    /// Slope of the first edge: integer, p/q, inf or -inf.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    alpha: String,
    /// Slope of the second edge.
    #[arg(long, default_value = "inf", allow_hyphen_values = true)]
    beta: String,
    /// Corner truncation size (max-norm radius).
    #[arg(long = "L", default_value_t = 24)]
    #[serde(rename = "L")]
    l: usize,
    /// Strip width for edge scans and half-line kernels.
    #[arg(long = "W", default_value_t = 40)]
    #[serde(rename = "W")]
    w: usize,
    /// Points on the parameter circle (also the sweep length of bulk-spectrum).
    #[arg(long, default_value_t = 64)]
    t_grid: usize,
    /// Side of the (k_edge, t) grid of edge scans.
    #[arg(long, default_value_t = 16)]
    k_grid: usize,
    /// Half-width of the corner eigenvalue window; half the smallest edge gap if absent.
    #[arg(long)]
    window: Option<f64>,
    /// Corner-mask weight needed for a crossing to count.
    #[arg(long, default_value_t = 0.6)]
    mask_threshold: f64,
    /// Edge gaps below this value fail the gap check.
    #[arg(long, default_value_t = 0.1)]
    gap_threshold: f64,
    /// Eigensolver for corner operators.
    #[arg(long, value_enum, default_value_t = Solver::Auto)]
    solver: Solver,
    /// Swept axis of bulk-spectrum, 0-based; the last axis if absent.
    #[arg(long)]
    axis: Option<usize>,
    /// Norm of a random Hermitian on-site term added to the model.
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    /// Seed of the on-site perturbation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Leave the generation time out of SVG files.
    #[arg(long)]
    no_timestamps: bool,
}

struct Failure {
    code: u8,
    category: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, category) = match e.category() {
            ErrorCategory::Input => (2, "input"),
            ErrorCategory::Numerical => (3, "numerical"),
            ErrorCategory::Assumption => (4, "assumption"),
        };
        Failure {
            code,
            category,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        category: "input",
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let opts = cli.command.options();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let doc = json!({
                "tool": "cornerflow",
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "config": opts,
                "error": { "category": f.category, "message": f.message },
                "exit_code": f.code,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("plain JSON")
            );
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: &Command) -> Result<(), Failure> {
    let opts = cmd.options();
    let cfg = pipeline_config(opts)?;
    std::fs::create_dir_all(&opts.out)?;
    let result = match cmd {
        Command::BulkSpectrum(_) => bulk_spectrum(opts)?,
        Command::EdgeGap(_) => edge_gap(opts, &cfg)?,
        Command::CornerFlow(_) => corner_flow(opts, &cfg)?,
        Command::VerifyProduct(_) => verify_product(opts, &cfg)?,
        Command::Report(_) => report(opts, &cfg)?,
    };
    let doc = json!({
        "tool": "cornerflow",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "config": opts,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc).expect("plain JSON") + "\n";
    std::fs::write(
        opts.out
            .join(format!("{}.json", cmd.name().replace('-', "_"))),
        &text,
    )?;
    print!("{text}");
    Ok(())
}

fn pipeline_config(opts: &Options) -> Result<PipelineConfig, Failure> {
    let slope = |s: &str| s.parse::<Slope>().map_err(Failure::from);
    let (alpha, beta) = (slope(&opts.alpha)?, slope(&opts.beta)?);
    if opts.l < 2 {
        return Err(config_error("--L must be at least 2"));
    }
    if opts.w < 2 {
        return Err(config_error("--W must be at least 2"));
    }
    if opts.t_grid < 4 {
        return Err(config_error("--t-grid must be at least 4"));
    }
    if opts.k_grid < 2 {
        return Err(config_error("--k-grid must be at least 2"));
    }
    if let Some(w) = opts.window {
        if !(w.is_finite() && w > 0.0) {
            return Err(config_error("--window must be positive"));
        }
    }
    if !(opts.mask_threshold > 0.0 && opts.mask_threshold < 1.0) {
        return Err(config_error("--mask-threshold must lie in (0, 1)"));
    }
    if !(opts.gap_threshold.is_finite() && opts.gap_threshold >= 0.0) {
        return Err(config_error("--gap-threshold must be non-negative"));
    }
    if !(opts.perturb.is_finite() && opts.perturb >= 0.0) {
        return Err(config_error("--perturb must be non-negative"));
    }
    let solver = match opts.solver {
        Solver::Auto => SolverChoice::Auto,
        Solver::Dense => SolverChoice::Dense,
        Solver::Window => SolverChoice::Window,
    };
    Ok(PipelineConfig {
        alpha,
        beta,
        corner: CornerFlowOptions {
            l: opts.l,
            t_points: opts.t_grid,
            window: opts.window,
            mask_threshold: opts.mask_threshold,
            edge_width: opts.w,
            edge_grid: opts.k_grid,
            solver,
        },
        kernel_width: opts.w,
        gap_threshold: opts.gap_threshold,
        ..PipelineConfig::default()
    })
}

struct Model {
    symbol: HamiltonianSymbol,
    grading: Option<ChiralGrading>,
    factors: Option<ProductFactors>,
}

fn builtin_names() -> String {
    symbol::builtin_models()
        .iter()
        .map(|m| m.name)
        .collect::<Vec<_>>()
        .join(", ")
}

/// A built-in name, or else a model file path.
fn resolve(spec: &str) -> Result<Model, Failure> {
    if let Some(m) = symbol::builtin(spec) {
        return Ok(Model {
            symbol: m.symbol,
            grading: m.grading,
            factors: m.factors,
        });
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(config_error(format!(
            "{spec:?} is neither a model file nor a built-in model ({})",
            builtin_names()
        )));
    }
    let (symbol, grading) = symbol::load_model(path)?;
    Ok(Model {
        symbol,
        grading,
        factors: None,
    })
}

fn load(opts: &Options) -> Result<Model, Failure> {
    let mut model = match (&opts.model, &opts.builtin) {
        (Some(path), _) => {
            let (symbol, grading) = symbol::load_model(path)?;
            Model {
                symbol,
                grading,
                factors: None,
            }
        }
        (None, Some(name)) => {
            let m = symbol::builtin(name).ok_or_else(|| {
                config_error(format!(
                    "unknown built-in model {name:?}; available: {}",
                    builtin_names()
                ))
            })?;
            Model {
                symbol: m.symbol,
                grading: m.grading,
                factors: m.factors,
            }
        }
        (None, None) => return Err(config_error("one of --model or --builtin is required")),
    };
    if opts.perturb > 0.0 {
        let v = workflows::random_onsite(model.symbol.norb(), opts.perturb, opts.seed);
        model.symbol = model.symbol.with_onsite(&v)?;
        model.factors = None;
    }
    Ok(model)
}

fn require_dim(model: &Model, dim: usize) -> Result<(), Failure> {
    if model.symbol.dim() != dim {
        return Err(Error::Dimension {
            what: "model lattice dimension",
            expected: dim,
            got: model.symbol.dim(),
        }
        .into());
    }
    Ok(())
}

fn timestamp(opts: &Options) -> Option<u64> {
    if opts.no_timestamps {
        return None;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = 0.05 * (hi - lo).max(1e-3);
    (lo - pad, hi + pad)
}

fn bulk_spectrum(opts: &Options) -> Result<Value, Failure> {
    let model = load(opts)?;
    let d = model.symbol.dim();
    let axis = opts.axis.unwrap_or(d - 1);
    let slices = workflows::bulk_sweep(&model.symbol, axis, opts.t_grid, &vec![0.0; d - 1])?;

    let mut csv = Vec::new();
    spectra::write_slices_csv(&slices, &mut csv)?;
    std::fs::write(opts.out.join("bulk_spectrum.csv"), csv)?;

    let all = slices.iter().flat_map(|s| s.eigenvalues.iter().copied());
    let (lo, hi) = all
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    let min_abs = all.fold(f64::INFINITY, |g, v| g.min(v.abs()));

    let mut plot = Plot::new(
        "bulk spectrum",
        &format!("angle along axis {axis}"),
        "eigenvalue",
        (0.0, std::f64::consts::TAU),
        padded(lo, hi),
    );
    plot.guides.push((0.0, "gray", true));
    let nb = slices.first().map_or(0, |s| s.eigenvalues.len());
    for b in 0..nb {
        let pts: Vec<(f64, f64)> = slices.iter().map(|s| (s.t, s.eigenvalues[b])).collect();
        plot.polyline(&pts, "navy", 1.5);
    }
    std::fs::write(
        opts.out.join("bulk_spectrum.svg"),
        plot.render(timestamp(opts)),
    )?;

    Ok(json!({
        "axis": axis,
        "points": opts.t_grid,
        "bands": nb,
        "min_eigenvalue": lo,
        "max_eigenvalue": hi,
        "min_abs_eigenvalue": min_abs,
    }))
}

fn edge_gap(opts: &Options, cfg: &PipelineConfig) -> Result<Value, Failure> {
    let model = load(opts)?;
    require_dim(&model, 3)?;
    let gaps = invariants::edge_gap_scan(&model.symbol, &cfg.pair()?, opts.w, opts.k_grid)?;
    let report = EdgeGapReport::new(&gaps, cfg.gap_threshold);
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    Ok(json!({ "verdict": verdict, "gaps": report }))
}

fn corner_flow(opts: &Options, cfg: &PipelineConfig) -> Result<Value, Failure> {
    let model = load(opts)?;
    require_dim(&model, 3)?;
    let pair = cfg.pair()?;
    let gaps = invariants::edge_gap_scan(&model.symbol, &pair, opts.w, opts.k_grid)?;
    let gap_report = EdgeGapReport::new(&gaps, cfg.gap_threshold);
    if !gap_report.pass {
        return Err(Error::GapClosed {
            context: format!("edge gap below threshold {}", cfg.gap_threshold),
            min_gap: gaps.min(),
        }
        .into());
    }
    let (sf, detail, _) =
        invariants::corner_spectral_flow(&model.symbol, &pair, &cfg.corner, Some(gaps))?;

    let mut csv = String::from("t,k_edge,eigenvalue,localization_weight,branch\n");
    for (id, b) in detail.track.branches.iter().enumerate() {
        for p in &b.points {
            csv.push_str(&format!("{},,{},{},{id}\n", p.t, p.value, p.weight));
        }
    }
    std::fs::write(opts.out.join("corner_flow.csv"), csv)?;

    let w = detail.window;
    let mut plot = Plot::new(
        "corner spectral flow",
        "t",
        "eigenvalue",
        (0.0, std::f64::consts::TAU),
        (-1.1 * w, 1.1 * w),
    );
    plot.guides.push((0.0, "gray", true));
    plot.guides.push((w, "silver", false));
    plot.guides.push((-w, "silver", false));
    for b in &detail.track.branches {
        for p in b.points.windows(2) {
            if p[1].t < p[0].t {
                continue;
            }
            let corner = 0.5 * (p[0].weight + p[1].weight) >= detail.threshold;
            plot.segments.push(svg::Segment {
                from: (p[0].t, p[0].value),
                to: (p[1].t, p[1].value),
                color: if corner { "crimson" } else { "gray" },
                stroke: if corner { 2.0 } else { 1.0 },
            });
        }
    }
    std::fs::write(
        opts.out.join("corner_flow.svg"),
        plot.render(timestamp(opts)),
    )?;

    Ok(json!({
        "corner_sf": sf,
        "edge_gaps": gap_report,
        "flow": FlowSummary::from(&detail),
    }))
}

fn verify_product(opts: &Options, cfg: &PipelineConfig) -> Result<Value, Failure> {
    let factors = match (&opts.h1, &opts.h2) {
        (Some(a), Some(b)) => {
            let h1 = resolve(a)?;
            let h2 = resolve(b)?;
            let grading = h2.grading.ok_or_else(|| {
                config_error(format!("second factor {b:?} carries no chiral grading"))
            })?;
            ProductFactors {
                h1: h1.symbol,
                h2: h2.symbol,
                grading,
            }
        }
        (None, None) => load(opts)?.factors.ok_or_else(|| {
            config_error("verify-product needs --h1 and --h2, or a built-in product model")
        })?,
        _ => return Err(config_error("--h1 and --h2 must be given together")),
    };
    let verdict = workflows::verify_product(&factors, cfg)?;
    Ok(serde_json::to_value(verdict).expect("plain data"))
}

fn report(opts: &Options, cfg: &PipelineConfig) -> Result<Value, Failure> {
    let model = load(opts)?;
    let r = workflows::report(
        &model.symbol,
        model.grading.as_ref(),
        model.factors.as_ref(),
        cfg,
    )?;
    Ok(serde_json::to_value(r).expect("plain data"))
}
