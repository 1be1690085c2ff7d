//! Convergence and dimension studies with cross-evaluation.
//!
//! A convergence run constructs, for every `n = 2^m` in the configured
//! range, one vector per enabled criterion, then scores each constructed
//! vector under both criteria. The four resulting series — the S value of
//! the S-constructed vector, the S value of the P-constructed vector, and
//! the two P counterparts — are written as two-column plot files plus one
//! combined CSV. A dimension run constructs once at the largest dimension
//! and evaluates both criteria on every prefix.
//!
//! Output is deterministic byte-for-byte for a fixed config: records are
//! re-sorted before emission and wall-clock columns are zeroed unless
//! timings are explicitly requested.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use latkern::cbc::{cbc_p, cbc_s, CbcError};
use latkern::criteria::{p_star, s_star, CriteriaError, CriterionKind};
use latkern::korobov::KorobovError;
use latkern::lattice::LatticeError;
use latkern::{GeneratingVector, PrecisionContext, ProductWeights, SpaceParams};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{criterion} construction failed at n = {n}: {source}")]
    Construction {
        criterion: CriterionKind,
        n: u64,
        source: CbcError,
    },
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Korobov(#[from] KorobovError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("slope fit needs at least two points, got {got}")]
    SlopeNeedsTwoPoints { got: usize },
    #[error("slope fit needs positive coordinates, got {value}")]
    SlopeNonpositive { value: f64 },
}

/// Which of the four cross-evaluation series a record belongs to: the
/// criterion being evaluated, on the vector produced by one of the two
/// constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EvalKind {
    SOnSVector,
    SOnPVector,
    POnSVector,
    POnPVector,
}

impl EvalKind {
    pub const ALL: [EvalKind; 4] = [
        EvalKind::SOnSVector,
        EvalKind::SOnPVector,
        EvalKind::POnSVector,
        EvalKind::POnPVector,
    ];

    /// Stable label used in CSV rows and plot-file names.
    pub fn label(&self) -> &'static str {
        match self {
            EvalKind::SOnSVector => "S_zS",
            EvalKind::SOnPVector => "S_zP",
            EvalKind::POnSVector => "P_zS",
            EvalKind::POnPVector => "P_zP",
        }
    }
}

impl fmt::Display for EvalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which constructions a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriteriaSet {
    pub s: bool,
    pub p: bool,
}

impl CriteriaSet {
    pub const BOTH: CriteriaSet = CriteriaSet { s: true, p: true };

    /// Accepts "S", "P", "S,P"/"P,S", or "both" (case-insensitive).
    pub fn parse(text: &str) -> Result<CriteriaSet, ExperimentError> {
        let mut set = CriteriaSet { s: false, p: false };
        if text.trim().eq_ignore_ascii_case("both") {
            return Ok(CriteriaSet::BOTH);
        }
        for tok in text.split(',') {
            match tok.trim() {
                "S" | "s" => set.s = true,
                "P" | "p" => set.p = true,
                other => {
                    return Err(ExperimentError::Config(format!(
                        "unknown criterion '{other}' (expected S, P, or both)"
                    )))
                }
            }
        }
        if !set.s && !set.p {
            return Err(ExperimentError::Config(
                "criterion set is empty".to_string(),
            ));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub criteria: CriteriaSet,
    /// Point counts run over `n = 2^m` for `m = m_from ..= m_to`; a
    /// dimension study uses `m_from` alone.
    pub m_from: u32,
    pub m_to: u32,
    /// Number of coordinates (the largest prefix in a dimension study).
    pub d: usize,
    pub alpha: u32,
    pub weights: ProductWeights,
    /// Mantissa bits for P-criterion work; S work runs in doubles.
    pub precision_bits: u32,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Record wall-clock columns. Off by default so rerunning a config
    /// reproduces outputs byte-identically.
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.m_from < 1 || self.m_from > self.m_to {
            return Err(ExperimentError::Config(format!(
                "m range {}..={} is empty or starts below 1",
                self.m_from, self.m_to
            )));
        }
        if self.d < 1 {
            return Err(ExperimentError::Config("d must be at least 1".into()));
        }
        if self.precision_bits < 53 {
            return Err(ExperimentError::Config(format!(
                "precision must be at least 53 bits, got {}",
                self.precision_bits
            )));
        }
        Ok(())
    }

    fn params(&self) -> Result<SpaceParams, ExperimentError> {
        Ok(SpaceParams::new(self.d, self.alpha, self.weights.clone())?)
    }

    fn context(&self) -> Result<PrecisionContext, ExperimentError> {
        PrecisionContext::new(self.precision_bits)
            .map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

/// One evaluated point of a study.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub kind: EvalKind,
    pub n: u64,
    pub d: usize,
    pub alpha: u32,
    pub weights: String,
    pub precision_bits: u32,
    pub value: f64,
    /// Construction seconds (zero when timings are off).
    pub construct_s: f64,
    /// Evaluation seconds (zero when timings are off).
    pub eval_s: f64,
}

fn timed<T>(
    enabled: bool,
    f: impl FnOnce() -> Result<T, ExperimentError>,
) -> Result<(T, f64), ExperimentError> {
    let start = Instant::now();
    let v = f()?;
    let dt = if enabled {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok((v, dt))
}

/// Constructed vectors for one point count, with construction timings.
struct ConstructionPair {
    z_s: Option<(GeneratingVector, f64)>,
    z_p: Option<(GeneratingVector, f64)>,
}

fn construct(
    cfg: &ExperimentConfig,
    params: &SpaceParams,
    n: u64,
    dmax: usize,
) -> Result<ConstructionPair, ExperimentError> {
    let z_s = if cfg.criteria.s {
        let r = cbc_s(n, dmax, params).map_err(|source| ExperimentError::Construction {
            criterion: CriterionKind::S,
            n,
            source,
        })?;
        let secs = if cfg.timings { r.seconds } else { 0.0 };
        Some((r.gv, secs))
    } else {
        None
    };
    let z_p = if cfg.criteria.p {
        let ctx = cfg.context()?;
        let r = cbc_p(n, dmax, params, ctx).map_err(|source| ExperimentError::Construction {
            criterion: CriterionKind::P,
            n,
            source,
        })?;
        let secs = if cfg.timings { r.seconds } else { 0.0 };
        Some((r.gv, secs))
    } else {
        None
    };
    Ok(ConstructionPair { z_s, z_p })
}

/// Scores `gv` under the criterion `kind` belongs to, at the prefix
/// dimension `d`.
fn evaluate_kind(
    cfg: &ExperimentConfig,
    kind: EvalKind,
    gv: &GeneratingVector,
    d: usize,
    construct_s: f64,
) -> Result<ExperimentRecord, ExperimentError> {
    let params = cfg.params()?.with_dimension(d)?;
    let prefix = gv.prefix(d)?;
    let is_s = matches!(kind, EvalKind::SOnSVector | EvalKind::SOnPVector);
    let (cv, eval_s) = timed(cfg.timings, || {
        if is_s {
            Ok(s_star(&prefix, &params)?)
        } else {
            Ok(p_star(&prefix, &params, cfg.context()?)?)
        }
    })?;
    Ok(ExperimentRecord {
        kind,
        n: gv.n(),
        d,
        alpha: cfg.alpha,
        weights: cfg.weights.descriptor(),
        precision_bits: if is_s { 53 } else { cfg.precision_bits },
        value: cv.value,
        construct_s,
        eval_s,
    })
}

/// Kinds applicable to the enabled criteria set: cross-evaluations exist
/// only when both constructions ran.
fn active_kinds(set: CriteriaSet) -> Vec<EvalKind> {
    match (set.s, set.p) {
        (true, true) => EvalKind::ALL.to_vec(),
        (true, false) => vec![EvalKind::SOnSVector],
        (false, true) => vec![EvalKind::POnPVector],
        (false, false) => Vec::new(),
    }
}

fn record_for(
    cfg: &ExperimentConfig,
    kind: EvalKind,
    pair: &ConstructionPair,
    d: usize,
) -> Result<ExperimentRecord, ExperimentError> {
    let (gv, secs) = match kind {
        EvalKind::SOnSVector | EvalKind::POnSVector => pair.z_s.as_ref().expect("S enabled"),
        EvalKind::SOnPVector | EvalKind::POnPVector => pair.z_p.as_ref().expect("P enabled"),
    };
    evaluate_kind(cfg, kind, gv, d, *secs)
}

/// Convergence study: for every `n = 2^m` in the range, construct per the
/// criteria set and evaluate all active cross-combinations. Writes the
/// combined CSV plus one `(n, value)` plot file per kind, and returns the
/// records sorted by (kind, n, d).
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    cfg.validate()?;
    let params = cfg.params()?;
    let mut records = Vec::new();
    for m in cfg.m_from..=cfg.m_to {
        let n = 1u64 << m;
        let pair = construct(cfg, &params, n, cfg.d)?;
        for kind in active_kinds(cfg.criteria) {
            records.push(record_for(cfg, kind, &pair, cfg.d)?);
        }
    }
    sort_records(&mut records);
    emit(&records, cfg)?;
    Ok(records)
}

/// Dimension study at fixed `n = 2^m_from`: construct once at dimension
/// `d` and evaluate every prefix `1 ..= d`. Writes the combined CSV plus
/// one `(d, value)` file per kind.
pub fn run_dimension(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    cfg.validate()?;
    let params = cfg.params()?;
    let n = 1u64 << cfg.m_from;
    let pair = construct(cfg, &params, n, cfg.d)?;
    let mut records = Vec::new();
    for d in 1..=cfg.d {
        for kind in active_kinds(cfg.criteria) {
            records.push(record_for(cfg, kind, &pair, d)?);
        }
    }
    sort_records(&mut records);
    write_csv(&records, &cfg.out_dir)?;
    for kind in active_kinds(cfg.criteria) {
        let name = format!(
            "dim_{}_{}_n{}_{}.txt",
            kind.label(),
            cfg.alpha,
            n,
            cfg.weights.file_token()
        );
        let path = cfg.out_dir.join(name);
        let mut text = String::new();
        for r in records.iter().filter(|r| r.kind == kind) {
            text.push_str(&format!("{} {}\n", r.d, r.value));
        }
        write_file(&path, text.as_bytes())?;
    }
    Ok(records)
}

/// Least-squares slope of `log(value)` against `log(n)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64, ExperimentError> {
    if points.len() < 2 {
        return Err(ExperimentError::SlopeNeedsTwoPoints { got: points.len() });
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if n <= 0.0 || v <= 0.0 {
            return Err(ExperimentError::SlopeNonpositive {
                value: if n <= 0.0 { n } else { v },
            });
        }
        logs.push((n.ln(), v.ln()));
    }
    let len = logs.len() as f64;
    let mean_x: f64 = logs.iter().map(|(x, _)| x).sum::<f64>() / len;
    let mean_y: f64 = logs.iter().map(|(_, y)| y).sum::<f64>() / len;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in logs {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    if den == 0.0 {
        return Err(ExperimentError::Config(
            "slope fit needs at least two distinct n values".into(),
        ));
    }
    Ok(num / den)
}

fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| {
        (a.kind, a.n, a.d)
            .partial_cmp(&(b.kind, b.n, b.d))
            .expect("record keys are totally ordered")
    });
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let io_err = |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)
}

fn write_csv(records: &[ExperimentRecord], out_dir: &Path) -> Result<(), ExperimentError> {
    let mut text = String::from("kind,n,d,alpha,weights,precision_bits,value,construct_s,eval_s\n");
    for r in records {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.kind.label(),
            r.n,
            r.d,
            r.alpha,
            r.weights,
            r.precision_bits,
            r.value,
            r.construct_s,
            r.eval_s
        ));
    }
    write_file(&out_dir.join("records.csv"), text.as_bytes())
}

/// Writes the combined CSV plus per-kind two-column `(n, value)` plot
/// files, deterministically ordered by (kind, n, d).
pub fn emit(records: &[ExperimentRecord], cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::Config(
            "nothing to emit: record set is empty".into(),
        ));
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    write_csv(&sorted, &cfg.out_dir)?;
    for kind in EvalKind::ALL {
        let rows: Vec<&ExperimentRecord> = sorted.iter().filter(|r| r.kind == kind).collect();
        if rows.is_empty() {
            continue;
        }
        let name = format!(
            "{}_{}_{}_{}.txt",
            kind.label(),
            cfg.alpha,
            cfg.d,
            cfg.weights.file_token()
        );
        let mut text = String::new();
        for r in rows {
            text.push_str(&format!("{} {}\n", r.n, r.value));
        }
        write_file(&cfg.out_dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            criteria: CriteriaSet::BOTH,
            m_from: 3,
            m_to: 4,
            d: 2,
            alpha: 1,
            weights: ProductWeights::Poly3A,
            precision_bits: 128,
            out_dir: dir.to_path_buf(),
            seed: 0,
            timings: false,
        }
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let pts: Vec<(f64, f64)> = (1..=5)
            .map(|k| {
                let n = (8 * k) as f64;
                (n, 3.0 / n)
            })
            .collect();
        assert!((fit_slope(&pts).unwrap() + 1.0).abs() < 1e-12);

        let e = std::f64::consts::E;
        let two = [(1.0, 1.0), (e, (-0.5f64).exp())];
        assert!((fit_slope(&two).unwrap() + 0.5).abs() < 1e-12);

        let flat = [(2.0, 0.7), (4.0, 0.7), (8.0, 0.7)];
        assert!(fit_slope(&flat).unwrap().abs() < 1e-12);
    }

    #[test]
    fn slope_rejects_degenerate_input() {
        assert!(matches!(
            fit_slope(&[(2.0, 1.0)]),
            Err(ExperimentError::SlopeNeedsTwoPoints { got: 1 })
        ));
        assert!(matches!(
            fit_slope(&[(2.0, 1.0), (4.0, -0.1)]),
            Err(ExperimentError::SlopeNonpositive { .. })
        ));
        assert!(matches!(
            fit_slope(&[(2.0, 1.0), (2.0, 2.0)]),
            Err(ExperimentError::Config(_))
        ));
    }

    #[test]
    fn criteria_set_parsing() {
        assert_eq!(
            CriteriaSet::parse("S").unwrap(),
            CriteriaSet { s: true, p: false }
        );
        assert_eq!(
            CriteriaSet::parse("p").unwrap(),
            CriteriaSet { s: false, p: true }
        );
        assert_eq!(CriteriaSet::parse("S,P").unwrap(), CriteriaSet::BOTH);
        assert_eq!(CriteriaSet::parse("both").unwrap(), CriteriaSet::BOTH);
        assert!(CriteriaSet::parse("Q").is_err());
        assert!(CriteriaSet::parse("").is_err());
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.m_from = 5;
        cfg.m_to = 4;
        assert!(matches!(cfg.validate(), Err(ExperimentError::Config(_))));
        let mut cfg = base_config(dir.path());
        cfg.precision_bits = 52;
        assert!(matches!(cfg.validate(), Err(ExperimentError::Config(_))));
        assert!(base_config(dir.path()).validate().is_ok());
    }

    #[test]
    fn s_only_config_produces_only_s_records_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.criteria = CriteriaSet { s: true, p: false };
        let records = run_convergence(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.kind == EvalKind::SOnSVector));
        assert!(dir.path().join("S_zS_1_2_poly3a.txt").exists());
        assert!(!dir.path().join("P_zP_1_2_poly3a.txt").exists());
        assert!(!dir.path().join("S_zP_1_2_poly3a.txt").exists());
        assert!(dir.path().join("records.csv").exists());
    }

    #[test]
    fn convergence_produces_all_four_kinds_and_consistent_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(dir.path());
        let records = run_convergence(&cfg).unwrap();
        assert_eq!(records.len(), 8); // 2 point counts x 4 kinds
        for kind in EvalKind::ALL {
            assert_eq!(records.iter().filter(|r| r.kind == kind).count(), 2);
        }
        // Construction values are positive and S values do not increase
        // with n on this small grid.
        for r in &records {
            assert!(r.value > 0.0, "{:?}", r);
        }
        let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "kind,n,d,alpha,weights,precision_bits,value,construct_s,eval_s"
        );
        assert_eq!(lines.count(), 8);
        // Timings are off: the timing columns are exactly zero.
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",0,0")));
    }

    #[test]
    fn rerunning_a_config_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut cfg_a = base_config(dir_a.path());
        let mut cfg_b = base_config(dir_b.path());
        for cfg in [&mut cfg_a, &mut cfg_b] {
            cfg.m_to = 4;
        }
        run_convergence(&cfg_a).unwrap();
        run_convergence(&cfg_b).unwrap();
        for name in [
            "records.csv",
            "S_zS_1_2_poly3a.txt",
            "S_zP_1_2_poly3a.txt",
            "P_zS_1_2_poly3a.txt",
            "P_zP_1_2_poly3a.txt",
        ] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn dimension_study_prefixes_and_monotonicity() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.criteria = CriteriaSet { s: true, p: false };
        cfg.m_from = 5;
        cfg.m_to = 5;
        cfg.d = 4;
        cfg.weights = ProductWeights::Equal;
        let records = run_dimension(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        // Equal weights: the criterion grows with dimension.
        for w in records.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
        assert!(dir.path().join("dim_S_zS_1_n32_equal.txt").exists());

        // d-range 1..1 equals the plain single-dimension evaluation.
        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg1 = base_config(dir2.path());
        cfg1.criteria = CriteriaSet { s: true, p: false };
        cfg1.m_from = 5;
        cfg1.m_to = 5;
        cfg1.d = 1;
        let one = run_dimension(&cfg1).unwrap();
        assert_eq!(one.len(), 1);
        let params = SpaceParams::new(1, 1, ProductWeights::Poly3A).unwrap();
        let gv = latkern::cbc::cbc_s(32, 1, &params).unwrap().gv;
        let direct = s_star(&gv, &params).unwrap().value;
        assert_eq!(one[0].value.to_bits(), direct.to_bits());
    }

    #[test]
    fn emit_rejects_empty_record_sets_and_reports_io_paths() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(dir.path());
        assert!(matches!(emit(&[], &cfg), Err(ExperimentError::Config(_))));

        let rec = ExperimentRecord {
            kind: EvalKind::SOnSVector,
            n: 8,
            d: 2,
            alpha: 1,
            weights: "poly3a".into(),
            precision_bits: 53,
            value: 0.5,
            construct_s: 0.0,
            eval_s: 0.0,
        };
        let mut bad = base_config(dir.path());
        // A file where the directory should be.
        let blocker = dir.path().join("blocked");
        std::fs::write(&blocker, b"x").unwrap();
        bad.out_dir = blocker.join("sub");
        match emit(&[rec], &bad) {
            Err(ExperimentError::Io { path, .. }) => {
                assert!(path.starts_with(&bad.out_dir) || path == bad.out_dir.join("records.csv"));
            }
            other => panic!("expected Io error, got {other:?}"),
        }
    }
}
