//! `latkern` — construct rank-1 lattice generating vectors, evaluate the
//! two quality criteria, and drive the convergence / dimension studies.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use latkern::cbc::{cbc_p, cbc_s};
use latkern::criteria::{p_star, s_star, CriterionKind};
use latkern::interpolant::{l2_error_estimate, random_unit_function, Interpolant};
use latkern::lattice::{parse_vector, serialize_vector, VectorMetadata};
use latkern::{PrecisionContext, ProductWeights, SpaceParams};

use latkern_cli::config::{self, resolve_precision, FileConfig};
use latkern_cli::experiments::{run_convergence, run_dimension, CriteriaSet, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "latkern",
    about = "Rank-1 lattice construction and kernel-approximation experiments",
    version
)]
struct Cli {
    /// Optional TOML config file (flags take precedence over its values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a generating vector and save it to a file.
    Cbc(CbcArgs),
    /// Evaluate a criterion on a saved generating vector.
    Eval(EvalArgs),
    /// Convergence study over n = 2^m with cross-evaluation.
    Convergence(ConvergenceArgs),
    /// Criterion growth across prefix dimensions at fixed n.
    Dimension(DimensionArgs),
    /// Fit a random unit-norm function and compare the measured L2 error
    /// against both worst-case bounds.
    InterpDemo(InterpDemoArgs),
}

#[derive(Args)]
struct CbcArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    alpha: u32,
    /// Weight scheme: poly3a | poly2 | geo09 | equal | list:v1,v2,...
    #[arg(long, default_value = "poly3a")]
    weights: String,
    /// S or P.
    #[arg(long)]
    criterion: CriterionKind,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    vector_out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    vector_in: PathBuf,
    /// S or P; defaults to the criterion recorded in the vector file.
    #[arg(long)]
    criterion: Option<CriterionKind>,
    /// Defaults to the value recorded in the vector file.
    #[arg(long)]
    alpha: Option<u32>,
    /// Defaults to the scheme recorded in the vector file.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    precision_bits: Option<u32>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    m_from: u32,
    #[arg(long)]
    m_to: u32,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    alpha: u32,
    #[arg(long, default_value = "poly3a")]
    weights: String,
    /// S, P, or both.
    #[arg(long, default_value = "both")]
    criteria: String,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock columns (makes outputs non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct DimensionArgs {
    /// Point count exponent: n = 2^m.
    #[arg(long)]
    m: u32,
    #[arg(long)]
    d_max: usize,
    #[arg(long, default_value_t = 1)]
    alpha: u32,
    #[arg(long, default_value = "poly3a")]
    weights: String,
    #[arg(long, default_value = "both")]
    criteria: String,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct InterpDemoArgs {
    #[arg(long, default_value_t = 128)]
    n: u64,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    alpha: u32,
    #[arg(long, default_value = "poly3a")]
    weights: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 24)]
    n_terms: usize,
    #[arg(long, default_value_t = 10)]
    max_freq: i64,
    #[arg(long)]
    precision_bits: Option<u32>,
}

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    let file_cfg = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(anyhow::Error::msg)?,
        None => FileConfig::default(),
    };
    match cli.cmd {
        Cmd::Cbc(args) => cmd_cbc(args, &file_cfg),
        Cmd::Eval(args) => cmd_eval(args, &file_cfg),
        Cmd::Convergence(args) => cmd_convergence(args, &file_cfg),
        Cmd::Dimension(args) => cmd_dimension(args, &file_cfg),
        Cmd::InterpDemo(args) => cmd_interp_demo(args, &file_cfg),
    }
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> anyhow::Result<PathBuf> {
    match flag.or_else(|| file.out_dir.clone()) {
        Some(dir) => Ok(dir),
        None => bail!("--out-dir is required (or set out_dir in the config file)"),
    }
}

fn cmd_cbc(args: CbcArgs, file_cfg: &FileConfig) -> anyhow::Result<()> {
    let weights = ProductWeights::parse(&args.weights)?;
    let params = SpaceParams::new(args.d, args.alpha, weights.clone())?;
    let bits = resolve_precision(args.precision_bits, file_cfg.precision_bits);
    let (gv, value, seconds, bits_used) = match args.criterion {
        CriterionKind::S => {
            let r = cbc_s(args.n, args.d, &params)?;
            let v = *r.s_star_values.last().expect("d >= 1");
            (r.gv, v, r.seconds, 53)
        }
        CriterionKind::P => {
            let ctx = PrecisionContext::new(bits)?;
            let r = cbc_p(args.n, args.d, &params, ctx)?;
            for s in &r.skipped {
                log::warn!(
                    "dimension {}: candidate z = {} skipped (eigenvalue {} ~ {:e})",
                    s.dim,
                    s.z,
                    s.eigenvalue_index,
                    s.magnitude
                );
            }
            (r.gv, r.p_star_value, r.seconds, bits)
        }
    };
    let meta = VectorMetadata {
        criterion: args.criterion.to_string(),
        alpha: args.alpha,
        weights: weights.descriptor(),
        precision_bits: bits_used,
    };
    let text = serialize_vector(&gv, Some(&meta));
    std::fs::write(&args.vector_out, text)
        .with_context(|| format!("cannot write {}", args.vector_out.display()))?;
    println!(
        "criterion={} n={} z={} value={:.12e} seconds={:.3}",
        args.criterion,
        gv.n(),
        gv.components()
            .iter()
            .map(|z| z.to_string())
            .collect::<Vec<_>>()
            .join(","),
        value,
        seconds
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, file_cfg: &FileConfig) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.vector_in)
        .with_context(|| format!("cannot read {}", args.vector_in.display()))?;
    let (gv, meta) = parse_vector(&text)?;
    let criterion = match args.criterion.or_else(|| {
        meta.as_ref()
            .and_then(|m| m.criterion.parse::<CriterionKind>().ok())
    }) {
        Some(c) => c,
        None => bail!("--criterion is required (vector file carries no usable metadata)"),
    };
    let alpha = match args.alpha.or_else(|| meta.as_ref().map(|m| m.alpha)) {
        Some(a) => a,
        None => bail!("--alpha is required (vector file carries no metadata)"),
    };
    let weights_text = match args
        .weights
        .or_else(|| meta.as_ref().map(|m| m.weights.clone()))
    {
        Some(w) => w,
        None => bail!("--weights is required (vector file carries no metadata)"),
    };
    let params = SpaceParams::new(gv.dim(), alpha, ProductWeights::parse(&weights_text)?)?;
    let cv = match criterion {
        CriterionKind::S => s_star(&gv, &params)?,
        CriterionKind::P => {
            // The sidecar's precision describes how the stored value was
            // computed, so it only serves as a default when re-evaluating
            // that same criterion — and never overrides an explicit flag,
            // config entry, or environment setting.
            let sidecar_bits = meta
                .as_ref()
                .filter(|m| m.criterion.parse::<CriterionKind>().ok() == Some(criterion))
                .map(|m| m.precision_bits)
                .filter(|&b| b >= 53);
            let bits = args
                .precision_bits
                .or(file_cfg.precision_bits)
                .or_else(config::env_precision)
                .or(sidecar_bits)
                .unwrap_or(config::DEFAULT_PRECISION_BITS);
            p_star(&gv, &params, PrecisionContext::new(bits)?)?
        }
    };
    println!(
        "criterion={} n={} d={} alpha={} weights={} precision_bits={} value={:.12e}",
        cv.kind, cv.n, cv.d, cv.alpha, cv.weights, cv.precision_bits, cv.value
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn experiment_config(
    criteria: &str,
    m_from: u32,
    m_to: u32,
    d: usize,
    alpha: u32,
    weights: &str,
    out: Option<PathBuf>,
    precision: Option<u32>,
    seed: Option<u64>,
    timings: bool,
    file_cfg: &FileConfig,
) -> anyhow::Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        criteria: CriteriaSet::parse(criteria)?,
        m_from,
        m_to,
        d,
        alpha,
        weights: ProductWeights::parse(weights)?,
        precision_bits: resolve_precision(precision, file_cfg.precision_bits),
        out_dir: out_dir(out, file_cfg)?,
        seed: seed.or(file_cfg.seed).unwrap_or(0),
        timings: timings || file_cfg.timings.unwrap_or(false),
    })
}

fn cmd_convergence(args: ConvergenceArgs, file_cfg: &FileConfig) -> anyhow::Result<()> {
    let cfg = experiment_config(
        &args.criteria,
        args.m_from,
        args.m_to,
        args.d,
        args.alpha,
        &args.weights,
        args.out_dir,
        args.precision_bits,
        args.seed,
        args.timings,
        file_cfg,
    )?;
    let records = run_convergence(&cfg)?;
    println!(
        "wrote {} records for m = {}..={} to {}",
        records.len(),
        cfg.m_from,
        cfg.m_to,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_dimension(args: DimensionArgs, file_cfg: &FileConfig) -> anyhow::Result<()> {
    let cfg = experiment_config(
        &args.criteria,
        args.m,
        args.m,
        args.d_max,
        args.alpha,
        &args.weights,
        args.out_dir,
        args.precision_bits,
        args.seed,
        args.timings,
        file_cfg,
    )?;
    let records = run_dimension(&cfg)?;
    println!(
        "wrote {} records for d = 1..={} at n = {} to {}",
        records.len(),
        cfg.d,
        1u64 << cfg.m_from,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_interp_demo(args: InterpDemoArgs, file_cfg: &FileConfig) -> anyhow::Result<()> {
    let weights = ProductWeights::parse(&args.weights)?;
    let params = SpaceParams::new(args.d, args.alpha, weights)?;
    let bits = resolve_precision(args.precision_bits, file_cfg.precision_bits);
    let gv = cbc_s(args.n, args.d, &params)?.gv;
    let f = random_unit_function(&params, args.n_terms, args.max_freq, args.seed)?;
    let values: Vec<f64> = (0..args.n)
        .map(|k| f.evaluate(&gv.point(k)))
        .collect::<Result<_, _>>()?;
    let ip = Interpolant::fit(&gv, &params, &values)?;
    let estimate = l2_error_estimate(&ip, &f, 2048, args.seed)?;
    let s = s_star(&gv, &params)?;
    let p = p_star(&gv, &params, PrecisionContext::new(bits)?)?;
    println!("lattice: n={} z={:?}", gv.n(), gv.components());
    println!("measured L2 error (unit-norm random function): {estimate:.6e}");
    println!("S-criterion bound: {:.6e}", s.value);
    println!("P-criterion bound: {:.6e} ({} bits)", p.value, bits);
    println!(
        "headroom: estimate/min(bound) = {:.4}",
        estimate / s.value.min(p.value)
    );
    Ok(())
}
