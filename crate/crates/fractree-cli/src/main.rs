//! `fractree` — emits displacement profiles, limit curves, special-function
//! samples, fractal-dimension reports and oracle cross-checks for a loaded
//! self-similar binary-tree frame, as CSV/JSON an ordinary plotting stack
//! can consume.
//!
//! Exit codes: 0 success, 1 validation error, 2 divergent parameters,
//! 3 verification failure.

mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fractree::closedform::outward;
use fractree::dimension::{
    box_count_graph, box_count_image, cantor_inverse_dimension, default_scales, dimension_relation,
    takagi_dimension, DimensionReport,
};
use fractree::limits::CancellationRegime;
use fractree::model::{
    end_node_position_horizontal, end_node_position_vertical, node_coordinates, ExactPos, NodeRef,
};
use fractree::verify::{run as run_verify, VerifyConfig};
use fractree::{displacement_at_level, sample_curve, CurveKind, DisplacementKind, LimitResult};

use emit::{fmt, level_path, write_output, Table};

#[derive(Parser)]
#[command(name = "fractree", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vertical displacement of every node of a level (default: end nodes)
    Vertical(ProfileArgs),
    /// Horizontal displacement of every node of a level (outward positive)
    Horizontal(ProfileArgs),
    /// Infinite-level displacement profile on a uniform abscissa grid
    Limit(LimitArgs),
    /// Sampled special-function and displacement curves
    Curve(CurveArgs),
    /// Analytic fractal dimensions and box-counting estimates
    Dimension(DimensionArgs),
    /// Randomized cross-validation of the three displacement routes
    Verify(VerifyArgs),
    /// Undeformed node coordinates with their displacement vectors
    Geometry(GeometryArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Parameter file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Evaluate the nodes of this level instead of the end nodes
    #[arg(long)]
    level: Option<u32>,
    /// Output file (stdout when omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    kind: ProfileKind,
    /// Grid size
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    /// Absolute output tolerance (m)
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Exact term-cancellation regime (horizontal only)
    #[arg(long, value_enum, default_value_t = CancellationArg::None)]
    cancellation: CancellationArg,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum)]
    kind: CurveKindArg,
    /// Geometric weight of the sawtooth series (takagi kinds)
    #[arg(long)]
    ratio: Option<f64>,
    /// Geometric weight of the digit series (c kinds)
    #[arg(long)]
    weight: Option<f64>,
    /// Term count for partial-sum kinds
    #[arg(long)]
    terms: Option<u32>,
    /// Absolute tolerance for limit kinds
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Sample count for uniform-grid kinds
    #[arg(long, default_value_t = 1025)]
    samples: usize,
    /// Parameter file (iteration and displacement-limit kinds)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Levels to emit for iteration kinds (one file per level)
    #[arg(long, value_delimiter = ',')]
    levels: Vec<u32>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DimensionArgs {
    /// Inertia reduction ratio `a` (analytic and graph modes)
    #[arg(long)]
    a: Option<f64>,
    /// Digit-series weight `t` (image mode)
    #[arg(long)]
    weight: Option<f64>,
    #[arg(long, value_enum, default_value_t = DimensionMode::Analytic)]
    mode: DimensionMode,
    /// Sample count for empirical modes
    #[arg(long, default_value_t = 1 << 18)]
    samples: usize,
    /// Box sizes (default 2^-4 .. 2^-12)
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random draws per closed-form case key
    #[arg(long, default_value_t = 50)]
    draws: u32,
    #[arg(long, default_value_t = 10)]
    max_levels: u32,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ProfileKind {
    Vertical,
    Horizontal,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CancellationArg {
    None,
    BendingAxial,
    AxialShear,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CurveKindArg {
    TakagiPartial,
    TakagiLimit,
    CPartial,
    CLimit,
    VerticalIteration,
    HorizontalIteration,
    VerticalLimit,
    HorizontalLimit,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum DimensionMode {
    Analytic,
    Graph,
    Image,
}

#[derive(Serialize)]
struct DivergenceDoc {
    status: &'static str,
    reasons: Vec<fractree::limits::DivergentParam>,
}

#[derive(Serialize)]
struct DimensionDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "D_psi")]
    d_psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "D_c")]
    d_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relation_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    box_count: Option<DimensionReport>,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

/// FRACTREE_THREADS caps the worker pool; default is all cores.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("FRACTREE_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Vertical(args) => profile(args, DisplacementKind::Vertical),
        Command::Horizontal(args) => profile(args, DisplacementKind::Horizontal),
        Command::Limit(args) => limit(args),
        Command::Curve(args) => curve(args),
        Command::Dimension(args) => dimension(args),
        Command::Verify(args) => verify(args),
        Command::Geometry(args) => geometry(args),
    }
}

fn profile(args: ProfileArgs, kind: DisplacementKind) -> Result<ExitCode, String> {
    let params = config::load_params(&args.config)?;
    let level = args.level.unwrap_or(params.levels);
    let header = match kind {
        DisplacementKind::Vertical => "w,z,total,bending,axial,shear",
        DisplacementKind::Horizontal => "w,zstar,total,bending,axial,shear",
    };
    let mut table = Table::new(header);
    for w in 1..=(1u64 << level) {
        let d = displacement_at_level(&params, level, w, kind).map_err(|e| e.to_string())?;
        let (abscissa, values) = match kind {
            DisplacementKind::Vertical => {
                let z = end_node_position_vertical(w, level).map_err(|e| e.to_string())?;
                (z.to_f64(), [d.total, d.bending, d.axial, d.shear])
            }
            DisplacementKind::Horizontal => {
                let zs = end_node_position_horizontal(w, level).map_err(|e| e.to_string())?;
                let z = zs.to_f64();
                (
                    z,
                    [
                        outward(d.total, z),
                        outward(d.bending, z),
                        outward(d.axial, z),
                        outward(d.shear, z),
                    ],
                )
            }
        };
        table.row(&[
            w.to_string(),
            fmt(abscissa),
            fmt(values[0]),
            fmt(values[1]),
            fmt(values[2]),
            fmt(values[3]),
        ]);
    }
    write_output(args.out.as_deref(), &table.into_string())?;
    Ok(ExitCode::SUCCESS)
}

fn limit(args: LimitArgs) -> Result<ExitCode, String> {
    let params = config::load_params(&args.config)?;
    if args.samples < 2 {
        return Err("need at least two samples".into());
    }
    let regime = match args.cancellation {
        CancellationArg::None => CancellationRegime::None,
        CancellationArg::BendingAxial => CancellationRegime::BendingAxial,
        CancellationArg::AxialShear => CancellationRegime::AxialShear,
    };
    if matches!(args.kind, ProfileKind::Vertical) && args.cancellation != CancellationArg::None {
        return Err("cancellation regimes apply to the horizontal profile only".into());
    }

    let n = args.samples as u64;
    let mut table = Table::new("abscissa,value");
    for j in 0..n {
        let x = ExactPos::new(j, n - 1).expect("grid point in range");
        let result = match args.kind {
            ProfileKind::Vertical => {
                fractree::vertical_limit(&params, &x, args.tol).map_err(|e| e.to_string())?
            }
            ProfileKind::Horizontal => fractree::horizontal_limit(&params, &x, args.tol, regime)
                .map_err(|e| e.to_string())?,
        };
        match result {
            LimitResult::Convergent(value) => {
                let emitted = match args.kind {
                    ProfileKind::Vertical => value,
                    ProfileKind::Horizontal => outward(value, x.to_f64()),
                };
                table.row(&[fmt(x.to_f64()), fmt(emitted)]);
            }
            LimitResult::Divergent(reasons) => {
                let doc = DivergenceDoc {
                    status: "divergent",
                    reasons,
                };
                let json = serde_json::to_string(&doc).expect("serializable") + "\n";
                write_output(args.out.as_deref(), &json)?;
                return Ok(ExitCode::from(2));
            }
        }
    }
    write_output(args.out.as_deref(), &table.into_string())?;
    Ok(ExitCode::SUCCESS)
}

fn curve(args: CurveArgs) -> Result<ExitCode, String> {
    let need = |opt: Option<f64>, name: &str| {
        opt.ok_or_else(|| format!("--{name} is required for this curve kind"))
    };
    let need_terms = || {
        args.terms
            .ok_or_else(|| "--terms is required for partial-sum kinds".to_string())
    };
    let load = || {
        args.config
            .as_deref()
            .ok_or_else(|| "--config is required for displacement kinds".to_string())
            .and_then(config::load_params)
    };

    let kinds: Vec<CurveKind> = match args.kind {
        CurveKindArg::TakagiPartial => vec![CurveKind::TakagiPartial {
            ratio: need(args.ratio, "ratio")?,
            terms: need_terms()?,
        }],
        CurveKindArg::TakagiLimit => vec![CurveKind::TakagiLimit {
            ratio: need(args.ratio, "ratio")?,
            tol: args.tol,
        }],
        CurveKindArg::CPartial => vec![CurveKind::CPartial {
            weight: need(args.weight, "weight")?,
            terms: need_terms()?,
        }],
        CurveKindArg::CLimit => vec![CurveKind::CLimit {
            weight: need(args.weight, "weight")?,
            tol: args.tol,
        }],
        CurveKindArg::VerticalIteration | CurveKindArg::HorizontalIteration => {
            let params = load()?;
            let levels = if args.levels.is_empty() {
                vec![params.levels]
            } else {
                args.levels.clone()
            };
            levels
                .into_iter()
                .map(|level| match args.kind {
                    CurveKindArg::VerticalIteration => {
                        CurveKind::VerticalIteration { params, level }
                    }
                    _ => CurveKind::HorizontalIteration { params, level },
                })
                .collect()
        }
        CurveKindArg::VerticalLimit => vec![CurveKind::VerticalLimit {
            params: load()?,
            tol: args.tol,
        }],
        CurveKindArg::HorizontalLimit => vec![CurveKind::HorizontalLimit {
            params: load()?,
            tol: args.tol,
        }],
    };

    if kinds.len() > 1 && args.out.is_none() {
        return Err("emitting several levels needs --out as a filename prefix".into());
    }
    for kind in &kinds {
        let samples = sample_curve(kind, args.samples).map_err(|e| e.to_string())?;
        let mut table = Table::new("abscissa,value");
        for (x, v) in samples.abscissae.iter().zip(&samples.values) {
            table.row(&[fmt(*x), fmt(*v)]);
        }
        let out = match (kinds.len(), args.out.as_deref()) {
            (1, out) => out.map(PathBuf::from),
            (_, Some(base)) => {
                let level = match kind {
                    CurveKind::VerticalIteration { level, .. }
                    | CurveKind::HorizontalIteration { level, .. } => *level,
                    _ => unreachable!("only iteration kinds emit several files"),
                };
                Some(level_path(base, level))
            }
            (_, None) => unreachable!("checked above"),
        };
        write_output(out.as_deref(), &table.into_string())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn dimension(args: DimensionArgs) -> Result<ExitCode, String> {
    let scales = if args.scales.is_empty() {
        default_scales()
    } else {
        args.scales.clone()
    };
    let doc = match args.mode {
        DimensionMode::Analytic => {
            let a = args.a.ok_or("--a is required in analytic mode")?;
            analytic_doc(a, None).map_err(|e| e.to_string())?
        }
        DimensionMode::Graph => {
            let a = args.a.ok_or("--a is required in graph mode")?;
            let curve = sample_curve(
                &CurveKind::TakagiLimit {
                    ratio: a / 16.0,
                    tol: 1e-10,
                },
                args.samples,
            )
            .map_err(|e| e.to_string())?;
            let analytic = takagi_dimension(a).map_err(|e| e.to_string())?;
            let report =
                box_count_graph(&curve, &scales, Some(analytic)).map_err(|e| e.to_string())?;
            analytic_doc(a, Some(report)).map_err(|e| e.to_string())?
        }
        DimensionMode::Image => {
            let t = args.weight.ok_or("--weight is required in image mode")?;
            let curve = sample_curve(
                &CurveKind::CLimit {
                    weight: t,
                    tol: 1e-13,
                },
                args.samples,
            )
            .map_err(|e| e.to_string())?;
            let analytic = cantor_inverse_dimension(t).map_err(|e| e.to_string())?;
            let report = box_count_image(&curve.values, &scales, Some(analytic))
                .map_err(|e| e.to_string())?;
            DimensionDoc {
                d_psi: None,
                d_c: Some(analytic),
                relation: None,
                relation_residual: None,
                box_count: Some(report),
            }
        }
    };
    let json = serde_json::to_string(&doc).expect("serializable") + "\n";
    write_output(args.out.as_deref(), &json)?;
    Ok(ExitCode::SUCCESS)
}

fn analytic_doc(
    a: f64,
    box_count: Option<DimensionReport>,
) -> Result<DimensionDoc, fractree::dimension::DimensionError> {
    let relation = dimension_relation(a)?;
    Ok(DimensionDoc {
        d_psi: Some(takagi_dimension(a)?),
        d_c: Some(cantor_inverse_dimension(a / 16.0)?),
        relation: Some(relation),
        relation_residual: Some(relation - 2.0),
        box_count,
    })
}

fn verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let report = run_verify(&VerifyConfig {
        seed: args.seed,
        draws_per_case: args.draws,
        max_levels: args.max_levels,
        ..VerifyConfig::default()
    });
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_output(args.out.as_deref(), &json)?;
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "verification failed in {} of {} cases",
            report.cases.iter().filter(|c| !c.pass).count(),
            report.cases.len()
        );
        Ok(ExitCode::from(3))
    }
}

fn geometry(args: GeometryArgs) -> Result<ExitCode, String> {
    let params = config::load_params(&args.config)?;
    let mut table = Table::new("level,index,x,y,ux,uy");
    for level in 1..=params.levels {
        for index in 1..=(1u64 << level) {
            let node = NodeRef::new(level, index).map_err(|e| e.to_string())?;
            let (x, y) = node_coordinates(&params, node);
            let h = displacement_at_level(&params, level, index, DisplacementKind::Horizontal)
                .map_err(|e| e.to_string())?;
            let v = displacement_at_level(&params, level, index, DisplacementKind::Vertical)
                .map_err(|e| e.to_string())?;
            table.row(&[
                level.to_string(),
                index.to_string(),
                fmt(x),
                fmt(y),
                fmt(h.total),
                fmt(-v.total),
            ]);
        }
    }
    write_output(args.out.as_deref(), &table.into_string())?;
    Ok(ExitCode::SUCCESS)
}
