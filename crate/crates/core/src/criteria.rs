//! Lattice quality criteria: the worst-case bound `S*` and the average
//! power-function bound `P*`, plus slow independent oracles.
//!
//! Both criteria certify kernel interpolation on a rank-1 lattice in a
//! weighted Korobov space, and both are computable from closed forms:
//!
//! * the **S criterion** is a single pass over the nodes,
//!
//!   ```text
//!   S(z) = -prod_j (1 + 2 gamma_j^2 zeta(4 alpha))
//!          + (1/n) prod_j (1 + 2 gamma_j zeta(2 alpha))^2
//!          + (1/n) sum_{k=1}^{n-1} prod_j (1 + gamma_j omega(alpha, {k z_j / n}))^2,
//!   S*(z) = sqrt(2) * S(z)^(1/4),
//!   ```
//!
//!   numerically benign and evaluated in doubles by default;
//!
//! * the **P criterion** is spectral,
//!
//!   ```text
//!   P*(z)^2 = prod_j (1 + 2 gamma_j zeta(2 alpha)) - trace(K^{-1} M),
//!   ```
//!
//!   where `K` and `M` are symmetric circulants whose first columns are
//!   products of `omega` factors at smoothness `alpha` and `2 alpha`
//!   respectively. The bracketed difference cancels catastrophically as
//!   `n` grows, so `P` computations default to 256-bit floats while `S`
//!   defaults to 53-bit.
//!
//! Negative values that should be nonnegative are clamped to zero only
//! within `2^-(bits - 20)` of the dominant term's magnitude; anything more
//! negative is reported as a precision failure rather than silently
//! clamped, to keep round-off distinguishable from logic errors.
//!
//! The oracles recompute the same quantities by routes that share no code
//! with the fast paths: a truncated double sum over frequency space for
//! `S`, a dense LU factorization for `P`, and tensor Gauss–Legendre
//! integration of the squared pointwise power function for the identity
//! behind `P`.

use crate::korobov::{kernel_diagonal_in, omega_in, zeta_even_in, KorobovError, SpaceParams};
use crate::lattice::GeneratingVector;
use crate::precision::{PrecisionContext, Real};
use crate::quad::{self, QuadError};
use crate::spectral::{self, dense, CirculantOperator, SpectralError};

/// Cell budget for the truncated-sum oracle; `(2H+1)^d` must stay below.
pub const DEFAULT_ORACLE_CELL_BUDGET: u128 = 1 << 27;

/// Node budget for the quadrature oracle; `(panels * degree)^d` must stay
/// below.
pub const DEFAULT_QUADRATURE_NODE_BUDGET: u128 = 1 << 21;

/// Largest `n` accepted by the dense oracle.
pub const DENSE_ORACLE_MAX_N: u64 = 128;

/// Errors from criterion evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Korobov(#[from] KorobovError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("generating vector has {got} components but the space has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "{context}: value {value:.6e} is below -{tolerance:.3e}; this exceeds \
         round-off at the working precision — rerun with more mantissa bits"
    )]
    PrecisionFailure {
        context: &'static str,
        value: f64,
        tolerance: f64,
    },
    #[error("{what} = {got} exceeds the supported maximum {max}")]
    SizeLimit {
        what: &'static str,
        got: u64,
        max: u64,
    },
    #[error("work estimate {required} cells exceeds the budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
}

/// Which criterion a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    S,
    P,
}

impl std::fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CriterionKind::S => f.write_str("S"),
            CriterionKind::P => f.write_str("P"),
        }
    }
}

impl std::str::FromStr for CriterionKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "S" | "s" => Ok(CriterionKind::S),
            "P" | "p" => Ok(CriterionKind::P),
            other => Err(format!("unknown criterion {other:?} (expected S or P)")),
        }
    }
}

/// A computed criterion value together with the instance it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionValue {
    pub kind: CriterionKind,
    /// The criterion value; always >= 0.
    pub value: f64,
    pub n: u64,
    pub d: usize,
    pub alpha: u32,
    /// Weight-scheme descriptor string.
    pub weights: String,
    /// Mantissa bits the value was computed at.
    pub precision_bits: u32,
}

impl CriterionValue {
    fn describe(
        kind: CriterionKind,
        value: f64,
        gv: &GeneratingVector,
        params: &SpaceParams,
        precision_bits: u32,
    ) -> Self {
        CriterionValue {
            kind,
            value,
            n: gv.n(),
            d: params.d(),
            alpha: params.alpha(),
            weights: params.weights().descriptor(),
            precision_bits,
        }
    }
}

fn check_dims(gv: &GeneratingVector, params: &SpaceParams) -> Result<(), CriteriaError> {
    if gv.dim() != params.d() {
        return Err(CriteriaError::DimensionMismatch {
            expected: params.d(),
            got: gv.dim(),
        });
    }
    Ok(())
}

/// Clamp a should-be-nonnegative value: tiny negatives (within
/// `2^-(bits-20) * scale`) become 0, larger ones are precision failures.
pub(crate) fn clamp_nonneg<R: Real>(
    v: R,
    scale: &R,
    context: &'static str,
) -> Result<R, CriteriaError> {
    if v >= v.zero_like() {
        return Ok(v);
    }
    let tol = spectral::width_tolerance(&scale.abs());
    if v.clone() + tol.clone() >= v.zero_like() {
        Ok(v.zero_like())
    } else {
        Err(CriteriaError::PrecisionFailure {
            context,
            value: v.to_f64(),
            tolerance: tol.to_f64(),
        })
    }
}

/// All weights `gamma_1 ..= gamma_d` at the seed's precision.
pub(crate) fn gammas_in<R: Real>(params: &SpaceParams, seed: &R) -> Vec<R> {
    (1..=params.d()).map(|j| params.gamma_in(j, seed)).collect()
}

/// Table of `omega(smoothness, r/n)` for `r = 0..n`, built symmetrically:
/// entries for `r` and `n - r` are the same memory value, so downstream
/// products are bitwise invariant under the reflection `z -> n - z`.
pub(crate) fn omega_table_in<R: Real>(
    n: u64,
    smoothness: u32,
    seed: &R,
) -> Result<Vec<R>, KorobovError> {
    let n_us = n as usize;
    let mut tab = vec![seed.zero_like(); n_us];
    for r in 0..=(n_us / 2) {
        let x = seed.from_i64_like(r as i64) / seed.from_i64_like(n as i64);
        let v = omega_in(smoothness, &x)?;
        if r != 0 {
            tab[n_us - r] = v.clone();
        }
        tab[r] = v;
    }
    Ok(tab)
}

// ---------------------------------------------------------------------------
// S criterion
// ---------------------------------------------------------------------------

/// The S quantity at the seed's precision. See the module docs for the
/// closed form; `S >= 0` up to round-off, with the clamping policy above.
pub fn s_quantity_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    seed: &R,
) -> Result<R, CriteriaError> {
    check_dims(gv, params)?;
    let n = gv.n();
    let alpha = params.alpha();
    let one = seed.one_like();
    let zeta2a = zeta_even_in(2 * alpha, seed)?;
    let zeta4a = zeta_even_in(4 * alpha, seed)?;
    let gammas = gammas_in(params, seed);

    // Affine terms: a = prod (1 + 2 g^2 zeta(4a)), b = [prod (1 + 2 g zeta(2a))]^2.
    let mut a = one.clone();
    let mut b_root = one.clone();
    for g in &gammas {
        let (fa, fb) = s_affine_factors(g, &zeta2a, &zeta4a, seed);
        a = a * fa;
        b_root = b_root * fb;
    }

    // Node sum over k = 1..n-1 of prod_j (1 + g_j omega({k z_j / n}))^2.
    let tab = omega_table_in(n, alpha, seed)?;
    let mut t = seed.zero_like();
    for k in 1..n {
        let mut prod = one.clone();
        for (j, g) in gammas.iter().enumerate() {
            let f = one.clone() + g.clone() * tab[gv.residue(k, j) as usize].clone();
            prod = prod * (f.clone() * f);
        }
        t = t + prod;
    }

    s_combine(&a, &b_root, &t, n, seed)
}

/// Per-coordinate factors of the z-independent S terms:
/// `(1 + 2 g^2 zeta(4 alpha), 1 + 2 g zeta(2 alpha))`. Shared with the
/// component-by-component construction so that incremental products are
/// bitwise identical to [`s_quantity_in`]'s.
pub(crate) fn s_affine_factors<R: Real>(g: &R, zeta2a: &R, zeta4a: &R, seed: &R) -> (R, R) {
    let one = seed.one_like();
    let two = seed.from_i64_like(2);
    let fa = one.clone() + two.clone() * g.clone() * g.clone() * zeta4a.clone();
    let fb = one + two * g.clone() * zeta2a.clone();
    (fa, fb)
}

/// Combine the affine parts and the node sum into the S quantity,
/// clamping per module policy. Shared with the construction code.
pub(crate) fn s_combine<R: Real>(
    a: &R,
    b_root: &R,
    t: &R,
    n: u64,
    seed: &R,
) -> Result<R, CriteriaError> {
    let b = b_root.clone() * b_root.clone();
    let n_r = seed.from_i64_like(n as i64);
    let pos = (b + t.clone()) / n_r;
    let scale = if *a > pos { a.clone() } else { pos.clone() };
    clamp_nonneg(pos - a.clone(), &scale, "S quantity")
}

/// The S quantity in double precision (its default working width).
pub fn s_quantity(gv: &GeneratingVector, params: &SpaceParams) -> Result<f64, CriteriaError> {
    s_quantity_in(gv, params, &0.0f64)
}

/// The S criterion `S*(z) = sqrt(2) * S(z)^(1/4)`, in double precision.
pub fn s_star(
    gv: &GeneratingVector,
    params: &SpaceParams,
) -> Result<CriterionValue, CriteriaError> {
    let s = s_quantity(gv, params)?;
    let value = 2f64.sqrt() * s.sqrt().sqrt();
    Ok(CriterionValue::describe(
        CriterionKind::S,
        value,
        gv,
        params,
        53,
    ))
}

// ---------------------------------------------------------------------------
// S oracle: truncated double sum over frequency space
// ---------------------------------------------------------------------------

/// Brute-force S oracle: the truncated frequency-space double sum
///
/// ```text
/// sum_{|h_j| <= H} (1/r(h)) sum_{l != 0, l.z = 0 mod n, |l_j| <= H} 1/r(h + l)
/// ```
///
/// with the dual condition tested in exact integer arithmetic. Monotone
/// nondecreasing in `H` and approaching the S quantity from below.
///
/// Because `1/r` factorizes over coordinates, the `h` sum is carried out
/// per coordinate: the oracle computes
/// `sum_l prod_j sigma_j(l_j)` with
/// `sigma_j(m) = sum_{|t| <= H} (1/rho_j(t)) (1/rho_j(t + m))`,
/// which is term-for-term the same sum in a different order.
pub fn s_oracle(
    gv: &GeneratingVector,
    params: &SpaceParams,
    h_radius: u32,
) -> Result<f64, CriteriaError> {
    s_oracle_with_budget(gv, params, h_radius, DEFAULT_ORACLE_CELL_BUDGET)
}

/// [`s_oracle`] with an explicit cell budget; the enumeration size
/// `(2H+1)^d` is checked against it before any work happens, and a
/// cooperative counter aborts mid-enumeration if the estimate was wrong.
pub fn s_oracle_with_budget(
    gv: &GeneratingVector,
    params: &SpaceParams,
    h_radius: u32,
    max_cells: u128,
) -> Result<f64, CriteriaError> {
    check_dims(gv, params)?;
    let d = params.d();
    let h = h_radius as i64;
    let cells = (2u128 * h_radius as u128 + 1).pow(d as u32);
    if cells > max_cells {
        return Err(CriteriaError::BudgetExceeded {
            required: cells,
            budget: max_cells,
        });
    }

    // Per-coordinate inverse decay: 1/rho_j(t) = gamma_j / |t|^(2 alpha),
    // with 1/rho_j(0) = 1.
    let two_alpha = 2 * params.alpha() as i32;
    let inv_rho = |j: usize, t: i64| -> f64 {
        if t == 0 {
            1.0
        } else {
            params.gamma(j + 1) / (t.unsigned_abs() as f64).powi(two_alpha)
        }
    };

    // sigma_j(m) for m = 0..=H (sigma is even in m).
    let mut sigma: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut col = Vec::with_capacity(h as usize + 1);
        for m in 0..=h {
            let mut s = 0.0;
            for t in -h..=h {
                s += inv_rho(j, t) * inv_rho(j, t + m);
            }
            col.push(s);
        }
        sigma.push(col);
    }

    // Enumerate l in the box, keep dual vectors (l . z = 0 mod n, l != 0).
    let n = gv.n() as i128;
    let z: Vec<i128> = gv.components().iter().map(|&zj| zj as i128).collect();
    let mut l = vec![-h; d];
    let mut total = 0.0;
    let mut visited: u128 = 0;
    'outer: loop {
        visited += 1;
        if visited > max_cells {
            return Err(CriteriaError::BudgetExceeded {
                required: visited,
                budget: max_cells,
            });
        }
        let mut dot: i128 = 0;
        let mut all_zero = true;
        for j in 0..d {
            dot += l[j] as i128 * z[j];
            all_zero &= l[j] == 0;
        }
        if !all_zero && dot.rem_euclid(n) == 0 {
            let mut prod = 1.0;
            for j in 0..d {
                prod *= sigma[j][l[j].unsigned_abs() as usize];
            }
            total += prod;
        }
        // Odometer increment.
        for lj in &mut l {
            *lj += 1;
            if *lj <= h {
                continue 'outer;
            }
            *lj = -h;
        }
        break;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Gram matrix entries and first columns
// ---------------------------------------------------------------------------

/// Entry of the kernel Gram circulant for a node-index difference `shift`:
/// `prod_j (1 + gamma_j omega(alpha, {shift z_j / n}))`.
pub fn k_entry_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    shift: u64,
    seed: &R,
) -> Result<R, CriteriaError> {
    check_dims(gv, params)?;
    let k = shift % gv.n();
    let one = seed.one_like();
    let mut prod = one.clone();
    for j in 0..params.d() {
        let x = seed.from_i64_like(gv.residue(k, j) as i64) / seed.from_i64_like(gv.n() as i64);
        let w = omega_in(params.alpha(), &x)?;
        prod = prod * (one.clone() + params.gamma_in(j + 1, seed) * w);
    }
    Ok(prod)
}

/// Double-precision [`k_entry_in`].
pub fn k_entry(
    gv: &GeneratingVector,
    params: &SpaceParams,
    shift: u64,
) -> Result<f64, CriteriaError> {
    k_entry_in(gv, params, shift, &0.0f64)
}

/// Entry of the squared-kernel moment circulant for a node-index
/// difference `shift`: `prod_j (1 + gamma_j^2 omega(2 alpha, {shift z_j / n}))`
/// — the same shape as [`k_entry_in`] at doubled smoothness and squared
/// weights.
pub fn m_entry_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    shift: u64,
    seed: &R,
) -> Result<R, CriteriaError> {
    check_dims(gv, params)?;
    let k = shift % gv.n();
    let one = seed.one_like();
    let mut prod = one.clone();
    for j in 0..params.d() {
        let x = seed.from_i64_like(gv.residue(k, j) as i64) / seed.from_i64_like(gv.n() as i64);
        let w = omega_in(2 * params.alpha(), &x)?;
        let g = params.gamma_in(j + 1, seed);
        prod = prod * (one.clone() + g.clone() * g * w);
    }
    Ok(prod)
}

/// Double-precision [`m_entry_in`].
pub fn m_entry(
    gv: &GeneratingVector,
    params: &SpaceParams,
    shift: u64,
) -> Result<f64, CriteriaError> {
    m_entry_in(gv, params, shift, &0.0f64)
}

/// First column of the Gram circulant `K`, built from shared symmetric
/// omega tables (hence bitwise reflection-invariant).
pub fn k_first_column_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    seed: &R,
) -> Result<Vec<R>, CriteriaError> {
    check_dims(gv, params)?;
    let tab = omega_table_in(gv.n(), params.alpha(), seed)?;
    let gammas = gammas_in(params, seed);
    Ok(column_from_table(gv, &gammas, &tab, seed))
}

/// First column of the moment circulant `M` (omega at smoothness
/// `2 alpha`, squared weights).
pub fn m_first_column_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    seed: &R,
) -> Result<Vec<R>, CriteriaError> {
    check_dims(gv, params)?;
    let tab = omega_table_in(gv.n(), 2 * params.alpha(), seed)?;
    let g2: Vec<R> = gammas_in(params, seed)
        .into_iter()
        .map(|g| g.clone() * g)
        .collect();
    Ok(column_from_table(gv, &g2, &tab, seed))
}

/// `col[k] = prod_j (1 + coeff_j * tab[k z_j mod n])`.
fn column_from_table<R: Real>(gv: &GeneratingVector, coeffs: &[R], tab: &[R], seed: &R) -> Vec<R> {
    let one = seed.one_like();
    (0..gv.n())
        .map(|k| {
            let mut prod = one.clone();
            for (j, c) in coeffs.iter().enumerate() {
                prod = prod * (one.clone() + c.clone() * tab[gv.residue(k, j) as usize].clone());
            }
            prod
        })
        .collect()
}

// ---------------------------------------------------------------------------
// P criterion
// ---------------------------------------------------------------------------

/// The squared P criterion at the seed's precision:
/// `P*^2 = kernel_diagonal - trace(K^{-1} M)`, clamped per module policy.
pub fn p_star_squared_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    seed: &R,
) -> Result<R, CriteriaError> {
    let k_col = k_first_column_in(gv, params, seed)?;
    let m_col = m_first_column_in(gv, params, seed)?;
    let trace = spectral::ratio_trace(&m_col, &k_col)?;
    let diag = kernel_diagonal_in(params, seed)?;
    clamp_nonneg(diag.clone() - trace, &diag, "P* squared")
}

/// The P criterion at the seed's precision.
pub fn p_star_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    seed: &R,
) -> Result<R, CriteriaError> {
    Ok(p_star_squared_in(gv, params, seed)?.sqrt())
}

/// The P criterion `P*(z)` at the context's precision (256-bit is the
/// recommended default; the bracketed difference underlying `P*^2` loses
/// roughly `2 alpha log2(n)` bits to cancellation).
pub fn p_star(
    gv: &GeneratingVector,
    params: &SpaceParams,
    ctx: PrecisionContext,
) -> Result<CriterionValue, CriteriaError> {
    let value = if ctx.is_native() {
        p_star_in(gv, params, &ctx.seed_f64())?
    } else {
        p_star_in(gv, params, &ctx.seed_mp())?.to_f64()
    };
    Ok(CriterionValue::describe(
        CriterionKind::P,
        value,
        gv,
        params,
        ctx.mantissa_bits(),
    ))
}

// ---------------------------------------------------------------------------
// Pointwise power function
// ---------------------------------------------------------------------------

/// Squared pointwise power function at `y`:
/// `P(y)^2 = K(y, y) - k(y)^T K^{-1} k(y)`, where `k(y)` is the vector of
/// kernel values between `y` and the lattice nodes.
///
/// Evaluated through the residual quadratic form: with `mu` the computed
/// solve of `K mu = k(y)`,
///
/// ```text
/// E(mu) = K(y, y) - 2 mu^T k(y) + mu^T K mu
///       = P(y)^2 + (mu - K^{-1} k)^T K (mu - K^{-1} k),
/// ```
///
/// an identity that makes the result second order in the solve error and
/// never an underestimate. Builds the Gram operator internally; see
/// [`power_pointwise_sq_with`] to amortize it over many `y`.
pub fn power_pointwise_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    y: &[f64],
    seed: &R,
) -> Result<R, CriteriaError> {
    let k_col = k_first_column_in(gv, params, seed)?;
    let op = CirculantOperator::new(k_col)?;
    let p2 = power_pointwise_sq_with(&op, gv, params, y, seed)?;
    Ok(p2.sqrt())
}

/// Pointwise power function at the context's precision. The native path
/// additionally accumulates the quadratic form with error-free transforms,
/// so values at interpolation nodes land at ~1e-13 instead of the ~1e-7
/// round-off floor of a plain double evaluation.
pub fn power_pointwise(
    gv: &GeneratingVector,
    params: &SpaceParams,
    y: &[f64],
    ctx: PrecisionContext,
) -> Result<f64, CriteriaError> {
    if ctx.is_native() {
        let k_col = k_first_column_in(gv, params, &0.0f64)?;
        let op = CirculantOperator::new(k_col)?;
        Ok(power_sq_compensated(&op, gv, params, y)?.sqrt())
    } else {
        Ok(power_pointwise_in(gv, params, y, &ctx.seed_mp())?.to_f64())
    }
}

/// Squared power function against a prebuilt Gram operator (whose first
/// column must be `k_first_column_in` for the same `gv`, `params`),
/// via the residual quadratic form with plain accumulation.
pub fn power_pointwise_sq_with<R: Real>(
    op: &CirculantOperator<R>,
    gv: &GeneratingVector,
    params: &SpaceParams,
    y: &[f64],
    seed: &R,
) -> Result<R, CriteriaError> {
    let kvec = power_solve_inputs(op, gv, params, y, seed)?;
    let mu = op.solve(&kvec)?;
    let kmu = op.apply(&mu)?;
    let diag = kernel_diagonal_in(params, seed)?;
    let two = seed.from_i64_like(2);
    let mut e = diag.clone();
    for i in 0..kvec.len() {
        e = e + mu[i].clone() * (kmu[i].clone() - two.clone() * kvec[i].clone());
    }
    clamp_nonneg(e, &diag, "pointwise power squared")
}

/// Double-precision squared power via the residual quadratic form with
/// compensated accumulation: the whole expression
/// `diag - 2 mu^T k + mu^T K mu` is gathered as one long dot product whose
/// rounding errors are carried exactly, leaving only the (nonnegative)
/// second-order solve-error term.
pub fn power_sq_compensated(
    op: &CirculantOperator<f64>,
    gv: &GeneratingVector,
    params: &SpaceParams,
    y: &[f64],
) -> Result<f64, CriteriaError> {
    let seed = 0.0f64;
    let kvec = power_solve_inputs(op, gv, params, y, &seed)?;
    let mu = op.solve(&kvec)?;
    let n = kvec.len();
    let col = op.first_column();
    let diag = kernel_diagonal_in(params, &seed)?;
    let mut acc = spectral::eft::Accumulator::new();
    acc.add(diag);
    for i in 0..n {
        acc.add_prod(-2.0 * mu[i], kvec[i]);
        for (j, mu_j) in mu.iter().enumerate() {
            acc.add_prod3(mu[i], *mu_j, col[(i + n - j) % n]);
        }
    }
    clamp_nonneg(acc.value(), &diag, "pointwise power squared")
}

/// Shared validation + kernel-vector construction for the power paths.
fn power_solve_inputs<R: Real>(
    op: &CirculantOperator<R>,
    gv: &GeneratingVector,
    params: &SpaceParams,
    y: &[f64],
    seed: &R,
) -> Result<Vec<R>, CriteriaError> {
    check_dims(gv, params)?;
    if y.len() != params.d() {
        return Err(CriteriaError::DimensionMismatch {
            expected: params.d(),
            got: y.len(),
        });
    }
    if op.len() != gv.n() as usize {
        return Err(CriteriaError::DimensionMismatch {
            expected: gv.n() as usize,
            got: op.len(),
        });
    }
    node_kernel_vector(gv, params, y, seed)
}

/// `k(y)_k = K(t_k, y)` for all nodes, with node coordinates kept as exact
/// rationals until the subtraction.
fn node_kernel_vector<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    y: &[f64],
    seed: &R,
) -> Result<Vec<R>, CriteriaError> {
    let one = seed.one_like();
    let n_r = seed.from_i64_like(gv.n() as i64);
    let gammas = gammas_in(params, seed);
    let y_r: Vec<R> = y.iter().map(|&v| seed.from_f64_like(v)).collect();
    let mut out = Vec::with_capacity(gv.n() as usize);
    for k in 0..gv.n() {
        let mut prod = one.clone();
        for (j, g) in gammas.iter().enumerate() {
            let tkj = seed.from_i64_like(gv.residue(k, j) as i64) / n_r.clone();
            let x = (tkj - y_r[j].clone()).fract01();
            let w = omega_in(params.alpha(), &x)?;
            prod = prod * (one.clone() + g.clone() * w);
        }
        out.push(prod);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// P oracles
// ---------------------------------------------------------------------------

/// Dense-route P oracle: builds the full `n x n` Gram and moment matrices
/// entry by entry, factors the Gram densely, and reads the trace from `n`
/// solves. Shares no spectral code with [`p_star`].
pub fn p_oracle_dense_in<R: Real>(
    gv: &GeneratingVector,
    params: &SpaceParams,
    seed: &R,
) -> Result<R, CriteriaError> {
    check_dims(gv, params)?;
    if gv.n() > DENSE_ORACLE_MAX_N {
        return Err(CriteriaError::SizeLimit {
            what: "dense oracle n",
            got: gv.n(),
            max: DENSE_ORACLE_MAX_N,
        });
    }
    let n = gv.n() as usize;
    let k_shift: Vec<R> = (0..n)
        .map(|s| k_entry_in(gv, params, s as u64, seed))
        .collect::<Result<_, _>>()?;
    let m_shift: Vec<R> = (0..n)
        .map(|s| m_entry_in(gv, params, s as u64, seed))
        .collect::<Result<_, _>>()?;
    let kmat: Vec<Vec<R>> = (0..n)
        .map(|r| (0..n).map(|c| k_shift[(r + n - c) % n].clone()).collect())
        .collect();
    let lu = dense::lu_factor(kmat)?;
    let mut trace = seed.zero_like();
    for c in 0..n {
        let m_col_c: Vec<R> = (0..n).map(|r| m_shift[(r + n - c) % n].clone()).collect();
        let x = lu.solve(&m_col_c)?;
        trace = trace + x[c].clone();
    }
    let diag = kernel_diagonal_in(params, seed)?;
    Ok(clamp_nonneg(diag.clone() - trace, &diag, "dense oracle P* squared")?.sqrt())
}

/// Dense-route P oracle at the context's precision.
pub fn p_oracle_dense(
    gv: &GeneratingVector,
    params: &SpaceParams,
    ctx: PrecisionContext,
) -> Result<f64, CriteriaError> {
    if ctx.is_native() {
        p_oracle_dense_in(gv, params, &ctx.seed_f64())
    } else {
        Ok(p_oracle_dense_in(gv, params, &ctx.seed_mp())?.to_f64())
    }
}

/// Quadrature-route P oracle: integrates the squared pointwise power
/// function over the cube with a tensor composite Gauss–Legendre rule and
/// takes the square root — the definition that [`p_star`] computes in
/// closed form. Supports `d <= 2`; choose `panels` divisible by `n` so the
/// integrand's kinks (at node spacing) land on panel boundaries.
pub fn p_integral_oracle(
    gv: &GeneratingVector,
    params: &SpaceParams,
    panels: usize,
    degree: usize,
) -> Result<f64, CriteriaError> {
    check_dims(gv, params)?;
    let d = params.d();
    if d > 2 {
        return Err(CriteriaError::SizeLimit {
            what: "quadrature oracle dimension",
            got: d as u64,
            max: 2,
        });
    }
    let nodes_1d = (panels * degree) as u128;
    let total_nodes = nodes_1d.pow(d as u32);
    if total_nodes > DEFAULT_QUADRATURE_NODE_BUDGET {
        return Err(CriteriaError::BudgetExceeded {
            required: total_nodes,
            budget: DEFAULT_QUADRATURE_NODE_BUDGET,
        });
    }
    let rule = quad::composite_unit(panels, degree)?;
    let seed = 0.0f64;
    let k_col = k_first_column_in(gv, params, &seed)?;
    let op = CirculantOperator::new(k_col)?;
    let mut acc = 0.0;
    match d {
        1 => {
            for &(x, w) in &rule {
                let p2 = power_pointwise_sq_with(&op, gv, params, &[x], &seed)?;
                acc += w * p2;
            }
        }
        2 => {
            for &(x0, w0) in &rule {
                for &(x1, w1) in &rule {
                    let p2 = power_pointwise_sq_with(&op, gv, params, &[x0, x1], &seed)?;
                    acc += w0 * w1 * p2;
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(acc.max(0.0).sqrt())
}
