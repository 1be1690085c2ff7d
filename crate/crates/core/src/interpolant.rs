//! The kernel interpolant: coefficient fitting through the circulant node
//! Gram system, pointwise evaluation, test functions, norms, and a
//! deterministic L2-error estimator.
//!
//! Fitting solves `K a = f` where `K[k][l] = K(t_k, t_l)` is the kernel
//! Gram matrix of the lattice nodes. On a rank-1 lattice the Gram matrix
//! is circulant, so the solve is a forward transform, a spectral divide,
//! and an inverse transform. The fitted interpolant `sum_k a_k K(t_k, .)`
//! reproduces the node data and is the minimum-norm interpolant of the
//! space; its pointwise error is bounded by `norm(f) * P(y)` with `P` the
//! power function from the criteria module.
//!
//! Test functions are finite Fourier series with enforced conjugate
//! symmetry, so they are real-valued members of the space with an exactly
//! computable norm `(sum_h |c_h|^2 r(h))^(1/2)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criteria::{k_first_column_in, CriteriaError};
use crate::korobov::{decay_r, kernel_eval, FrequencyVector, KorobovError, SpaceParams};
use crate::lattice::{GeneratingVector, LatticeError};
use crate::spectral::{CirculantOperator, SpectralError};

/// Errors from fitting, evaluation, and test-function construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpolantError {
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Korobov(#[from] KorobovError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("expected {expected} node values, got {got}")]
    NodeCount { expected: usize, got: usize },
    #[error("frequency vector has {got} components, expected {expected}")]
    FrequencyDimension { expected: usize, got: usize },
    #[error("duplicate frequency {0:?} in term list")]
    DuplicateFrequency(Vec<i64>),
    #[error(
        "term list is not conjugate-symmetric: frequency {0:?} needs a \
         mirror term with the conjugated coefficient"
    )]
    ConjugateAsymmetry(Vec<i64>),
    #[error("a test function needs at least one term")]
    EmptyTerms,
    #[error("evaluation point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
}

/// A finite Fourier series `f(x) = sum_h c_h exp(2 pi i h . x)` with
/// conjugate-symmetric coefficients, hence real-valued.
#[derive(Debug, Clone)]
pub struct TestFunction {
    d: usize,
    /// `(h, re(c_h), im(c_h))`, frequencies pairwise distinct.
    terms: Vec<(FrequencyVector, f64, f64)>,
}

impl TestFunction {
    /// Builds a test function from explicit terms, validating dimension,
    /// distinctness, and conjugate symmetry `c_{-h} = conj(c_h)` (which
    /// forces a real coefficient at `h = 0`).
    pub fn new(
        d: usize,
        terms: Vec<(FrequencyVector, f64, f64)>,
    ) -> Result<Self, InterpolantError> {
        if terms.is_empty() {
            return Err(InterpolantError::EmptyTerms);
        }
        for (h, _, _) in &terms {
            if h.dim() != d {
                return Err(InterpolantError::FrequencyDimension {
                    expected: d,
                    got: h.dim(),
                });
            }
        }
        for (i, (h, _, _)) in terms.iter().enumerate() {
            if terms[..i].iter().any(|(g, _, _)| g.0 == h.0) {
                return Err(InterpolantError::DuplicateFrequency(h.0.clone()));
            }
        }
        // Conjugate symmetry: every h must have -h present with the
        // conjugated coefficient (exactly; callers construct pairs).
        for (h, re, im) in &terms {
            let neg: Vec<i64> = h.0.iter().map(|&v| -v).collect();
            let mirror = terms.iter().find(|(g, _, _)| g.0 == neg);
            let ok = match mirror {
                Some((_, mre, mim)) => mre == re && *mim == -*im,
                None => false,
            };
            if !ok {
                return Err(InterpolantError::ConjugateAsymmetry(h.0.clone()));
            }
        }
        Ok(TestFunction { d, terms })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[(FrequencyVector, f64, f64)] {
        &self.terms
    }

    /// Direct evaluation of the series; real by conjugate symmetry, so the
    /// imaginary parts are never materialized:
    /// `sum_h [re(c_h) cos(2 pi h.y) - im(c_h) sin(2 pi h.y)]`.
    pub fn evaluate(&self, y: &[f64]) -> Result<f64, InterpolantError> {
        if y.len() != self.d {
            return Err(InterpolantError::PointDimension {
                expected: self.d,
                got: y.len(),
            });
        }
        let mut acc = 0.0;
        for (h, re, im) in &self.terms {
            let phase: f64 =
                h.0.iter()
                    .zip(y.iter())
                    .map(|(&hj, &yj)| hj as f64 * yj)
                    .sum();
            let t = 2.0 * std::f64::consts::PI * phase;
            acc += re * t.cos() - im * t.sin();
        }
        Ok(acc)
    }

    /// Uniform scaling of all coefficients.
    pub fn scaled(&self, factor: f64) -> TestFunction {
        TestFunction {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(h, re, im)| (h.clone(), re * factor, im * factor))
                .collect(),
        }
    }
}

/// Norm of a test function in the space:
/// `(sum_h |c_h|^2 r(h))^(1/2)` with `r` the per-frequency decay
/// coefficient.
pub fn function_norm(f: &TestFunction, params: &SpaceParams) -> Result<f64, InterpolantError> {
    if f.d != params.d() {
        return Err(InterpolantError::FrequencyDimension {
            expected: params.d(),
            got: f.d,
        });
    }
    let mut sq = 0.0;
    for (h, re, im) in &f.terms {
        sq += (re * re + im * im) * decay_r(params, h);
    }
    Ok(sq.sqrt())
}

/// Draws a random test function with unit norm: `n_terms` distinct
/// frequency orbits `{h, -h}` with components in `[-max_freq, max_freq]`,
/// random coefficients (the `h = 0` coefficient, if drawn, is positive
/// real), rescaled so [`function_norm`] is 1 to round-off. Deterministic
/// in `seed`.
pub fn random_unit_function(
    params: &SpaceParams,
    n_terms: usize,
    max_freq: i64,
    seed: u64,
) -> Result<TestFunction, InterpolantError> {
    if n_terms == 0 {
        return Err(InterpolantError::EmptyTerms);
    }
    let d = params.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(n_terms);
    let mut terms: Vec<(FrequencyVector, f64, f64)> = Vec::new();
    while chosen.len() < n_terms {
        let h: Vec<i64> = (0..d)
            .map(|_| rng.gen_range(-max_freq..=max_freq))
            .collect();
        let neg: Vec<i64> = h.iter().map(|&v| -v).collect();
        if chosen.iter().any(|g| *g == h || *g == neg) {
            continue;
        }
        if h.iter().all(|&v| v == 0) {
            let c: f64 = rng.gen_range(0.1..=1.0);
            terms.push((FrequencyVector(h.clone()), c, 0.0));
        } else {
            let re: f64 = rng.gen_range(-1.0..=1.0);
            let im: f64 = rng.gen_range(-1.0..=1.0);
            terms.push((FrequencyVector(h.clone()), re, im));
            terms.push((FrequencyVector(neg), re, -im));
        }
        chosen.push(h);
    }
    let f = TestFunction::new(d, terms)?;
    let norm = function_norm(&f, params)?;
    Ok(f.scaled(1.0 / norm))
}

/// A fitted kernel interpolant `A(f) = sum_k a_k K(t_k, .)`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    gv: GeneratingVector,
    params: SpaceParams,
    coefficients: Vec<f64>,
    kernel_column: Vec<f64>,
}

impl Interpolant {
    /// Solves the circulant node Gram system `K a = node_values`.
    pub fn fit(
        gv: &GeneratingVector,
        params: &SpaceParams,
        node_values: &[f64],
    ) -> Result<Interpolant, InterpolantError> {
        let n = gv.n() as usize;
        if node_values.len() != n {
            return Err(InterpolantError::NodeCount {
                expected: n,
                got: node_values.len(),
            });
        }
        let column = k_first_column_in(gv, params, &0.0f64)?;
        let op = CirculantOperator::new(column.clone())?;
        let coefficients = op.solve(node_values)?;
        Ok(Interpolant {
            gv: gv.clone(),
            params: params.clone(),
            coefficients,
            kernel_column: column,
        })
    }

    pub fn generating_vector(&self) -> &GeneratingVector {
        &self.gv
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// First column of the node Gram matrix the fit solved against.
    pub fn kernel_column(&self) -> &[f64] {
        &self.kernel_column
    }

    /// Pointwise evaluation `sum_k a_k K(t_k, y)` by direct summation
    /// over the nodes.
    pub fn evaluate(&self, y: &[f64]) -> Result<f64, InterpolantError> {
        if y.len() != self.params.d() {
            return Err(InterpolantError::PointDimension {
                expected: self.params.d(),
                got: y.len(),
            });
        }
        let mut acc = 0.0;
        for (k, a) in self.coefficients.iter().enumerate() {
            let t_k = self.gv.point(k as u64);
            acc += a * kernel_eval(&self.params, &t_k, y)?;
        }
        Ok(acc)
    }

    /// Evaluates many points, in parallel over the points. Output order
    /// matches input order.
    pub fn evaluate_many(&self, ys: &[Vec<f64>]) -> Result<Vec<f64>, InterpolantError> {
        ys.par_iter().map(|y| self.evaluate(y)).collect()
    }
}

/// Fixed multiplier seeding the evaluation lattice of
/// [`l2_error_estimate`]; chosen away from small powers of two so the
/// evaluation lattice never aliases the interpolation lattices used at
/// desk scale.
const EVAL_LATTICE_MULTIPLIER: u64 = 76543;

/// Deterministic L2-error estimator: root mean square of
/// `f(y) - A(f)(y)` over a shifted rank-1 evaluation lattice with
/// `n_eval` points. The evaluation lattice uses the fixed multiplier
/// [`EVAL_LATTICE_MULTIPLIER`] (bumped to the next unit mod `n_eval`),
/// components `a^(j-1) mod n_eval`; the shift is drawn from `seed`, so
/// equal seeds give equal estimates.
pub fn l2_error_estimate(
    ip: &Interpolant,
    f: &TestFunction,
    n_eval: u64,
    seed: u64,
) -> Result<f64, InterpolantError> {
    if f.d != ip.params.d() {
        return Err(InterpolantError::FrequencyDimension {
            expected: ip.params.d(),
            got: f.d,
        });
    }
    let d = ip.params.d();
    let n_eval = n_eval.max(1);
    let mut a = EVAL_LATTICE_MULTIPLIER % n_eval;
    fn gcd(mut x: u64, mut y: u64) -> u64 {
        while y != 0 {
            let t = x % y;
            x = y;
            y = t;
        }
        x
    }
    while n_eval > 1 && gcd(a.max(1), n_eval) != 1 {
        a = (a + 1) % n_eval;
    }
    a = a.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();

    // Components a^(j-1) mod n_eval of the evaluation lattice.
    let mut comps = Vec::with_capacity(d);
    let mut power = 1u64 % n_eval;
    for _ in 0..d {
        comps.push(power);
        power = ((power as u128 * a as u128) % n_eval as u128) as u64;
    }

    let points: Vec<Vec<f64>> = (0..n_eval)
        .map(|k| {
            (0..d)
                .map(|j| {
                    let frac =
                        ((k as u128 * comps[j] as u128) % n_eval as u128) as f64 / n_eval as f64;
                    (frac + shift[j]).fract()
                })
                .collect()
        })
        .collect();

    let sq_sum: f64 = points
        .par_iter()
        .map(|y| {
            let err = f.evaluate(y)? - ip.evaluate(y)?;
            Ok(err * err)
        })
        .collect::<Result<Vec<f64>, InterpolantError>>()?
        .into_iter()
        .sum();
    Ok((sq_sum / n_eval as f64).sqrt())
}
