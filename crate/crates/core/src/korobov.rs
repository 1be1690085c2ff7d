//! Weighted Korobov spaces of periodic functions on the unit cube.
//!
//! The space is determined by a dimension `d`, a smoothness order `alpha`
//! (number of square-integrable mixed derivatives), and positive product
//! weights `gamma_j` moderating the importance of each coordinate. Its
//! reproducing kernel is a product over coordinates,
//!
//! ```text
//! K(x, y) = prod_j ( 1 + gamma_j * omega(alpha, {x_j - y_j}) ),
//! omega(alpha, t) = (-1)^(alpha+1) (2 pi)^(2 alpha) / (2 alpha)! * B_{2 alpha}(t),
//! ```
//!
//! where `B_q` is the degree-`q` Bernoulli polynomial and `{.}` the
//! fractional part. `omega(alpha, .)` is the closed form of the Fourier
//! series `sum_{h != 0} e^{2 pi i h t} / |h|^{2 alpha}`, so in particular
//! `omega(alpha, 0) = 2 zeta(2 alpha)`.
//!
//! Everything here is generic over the scalar (see [`crate::precision`]);
//! plain-`f64` convenience wrappers are provided for each operation.

use crate::precision::Real;

/// Errors raised by space construction and kernel evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KorobovError {
    /// A closed form (Bernoulli polynomial or even zeta value) is required
    /// at an order this crate does not carry coefficients for.
    #[error("no closed form of order {q} is available (supported: 2, 4, 6, 8)")]
    UnsupportedOrder { q: u32 },
    #[error("smoothness alpha = {alpha} is out of the supported range 1..=4")]
    UnsupportedSmoothness { alpha: u32 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weight gamma_{index} = {value} is not strictly positive and finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("explicit weight list has {got} entries but dimension is {need}")]
    WeightListTooShort { need: usize, got: usize },
    #[error(
        "unknown weight scheme {got:?} (expected poly3a, poly2, geo09, equal, or list:v1,v2,...)"
    )]
    UnknownScheme { got: String },
}

/// Product weight sequences `gamma_1 >= gamma_2 >= ...` used by the space.
///
/// The named schemes build in a `pi^(-2 alpha)` normalization so that the
/// first weight times `omega`'s leading constant stays O(1); explicit lists
/// are taken verbatim.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductWeights {
    /// `gamma_j = j^(-3 alpha) / pi^(2 alpha)`
    Poly3A,
    /// `gamma_j = j^(-2) / pi^(2 alpha)`
    Poly2,
    /// `gamma_j = 0.9^(j-1) / pi^(2 alpha)`
    Geo09,
    /// `gamma_j = pi^(-2 alpha)`
    Equal,
    /// Explicit positive values, one per coordinate.
    List(Vec<f64>),
}

impl ProductWeights {
    /// Parse a scheme descriptor: `poly3a`, `poly2`, `geo09`, `equal`, or
    /// `list:<comma-separated floats>`.
    pub fn parse(s: &str) -> Result<Self, KorobovError> {
        match s {
            "poly3a" => Ok(ProductWeights::Poly3A),
            "poly2" => Ok(ProductWeights::Poly2),
            "geo09" => Ok(ProductWeights::Geo09),
            "equal" => Ok(ProductWeights::Equal),
            _ => {
                if let Some(rest) = s.strip_prefix("list:") {
                    let mut vals = Vec::new();
                    for (i, tok) in rest.split(',').enumerate() {
                        let v: f64 = tok
                            .trim()
                            .parse()
                            .map_err(|_| KorobovError::UnknownScheme { got: s.to_string() })?;
                        if !(v.is_finite() && v > 0.0) {
                            return Err(KorobovError::InvalidWeight {
                                index: i + 1,
                                value: v,
                            });
                        }
                        vals.push(v);
                    }
                    if vals.is_empty() {
                        return Err(KorobovError::UnknownScheme { got: s.to_string() });
                    }
                    Ok(ProductWeights::List(vals))
                } else {
                    Err(KorobovError::UnknownScheme { got: s.to_string() })
                }
            }
        }
    }

    /// Canonical descriptor string; inverse of [`ProductWeights::parse`].
    pub fn descriptor(&self) -> String {
        match self {
            ProductWeights::Poly3A => "poly3a".to_string(),
            ProductWeights::Poly2 => "poly2".to_string(),
            ProductWeights::Geo09 => "geo09".to_string(),
            ProductWeights::Equal => "equal".to_string(),
            ProductWeights::List(v) => {
                let vals: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                format!("list:{}", vals.join(","))
            }
        }
    }

    /// Short filesystem-safe token for output file names.
    pub fn file_token(&self) -> &'static str {
        match self {
            ProductWeights::Poly3A => "poly3a",
            ProductWeights::Poly2 => "poly2",
            ProductWeights::Geo09 => "geo09",
            ProductWeights::Equal => "equal",
            ProductWeights::List(_) => "list",
        }
    }
}

impl std::fmt::Display for ProductWeights {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// Parameters of a weighted Korobov space: dimension, smoothness, weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceParams {
    d: usize,
    alpha: u32,
    weights: ProductWeights,
}

impl SpaceParams {
    pub fn new(d: usize, alpha: u32, weights: ProductWeights) -> Result<Self, KorobovError> {
        if d == 0 {
            return Err(KorobovError::ZeroDimension);
        }
        if !(1..=4).contains(&alpha) {
            return Err(KorobovError::UnsupportedSmoothness { alpha });
        }
        if let ProductWeights::List(v) = &weights {
            if v.len() < d {
                return Err(KorobovError::WeightListTooShort {
                    need: d,
                    got: v.len(),
                });
            }
            for (i, &w) in v.iter().enumerate() {
                if !(w.is_finite() && w > 0.0) {
                    return Err(KorobovError::InvalidWeight {
                        index: i + 1,
                        value: w,
                    });
                }
            }
        }
        Ok(SpaceParams { d, alpha, weights })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn weights(&self) -> &ProductWeights {
        &self.weights
    }

    /// Same space over a different dimension (weights are a sequence, so
    /// truncation and extension are well defined; explicit lists must be
    /// long enough).
    pub fn with_dimension(&self, d: usize) -> Result<Self, KorobovError> {
        SpaceParams::new(d, self.alpha, self.weights.clone())
    }

    /// Weight `gamma_j` (1-based `j <= d`) at the seed's precision.
    pub fn gamma_in<R: Real>(&self, j: usize, seed: &R) -> R {
        assert!(
            (1..=self.d).contains(&j),
            "weight index {j} out of range 1..={}",
            self.d
        );
        let pi2a = seed.pi_like().powi(2 * self.alpha as i32);
        match &self.weights {
            ProductWeights::Poly3A => {
                seed.from_i64_like(j as i64).powi(-3 * self.alpha as i32) / pi2a
            }
            ProductWeights::Poly2 => seed.from_i64_like(j as i64).powi(-2) / pi2a,
            ProductWeights::Geo09 => seed.from_ratio_like(9, 10).powi(j as i32 - 1) / pi2a,
            ProductWeights::Equal => seed.one_like() / pi2a,
            ProductWeights::List(v) => seed.from_f64_like(v[j - 1]),
        }
    }

    /// Weight `gamma_j` in double precision.
    pub fn gamma(&self, j: usize) -> f64 {
        self.gamma_in(j, &0.0f64)
    }
}

/// Integer frequency vector `h` indexing a Fourier coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrequencyVector(pub Vec<i64>);

impl FrequencyVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Indices (0-based) of nonzero components.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &h)| h != 0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Negated frequency `-h`.
    pub fn negated(&self) -> Self {
        FrequencyVector(self.0.iter().map(|&h| -h).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&h| h == 0)
    }
}

/// Bernoulli polynomial coefficients in descending powers, as exact
/// rationals. Only the even degrees needed by the kernel closed forms.
const B2_COEFFS: [(i64, i64); 3] = [(1, 1), (-1, 1), (1, 6)];
const B4_COEFFS: [(i64, i64); 5] = [(1, 1), (-2, 1), (1, 1), (0, 1), (-1, 30)];
const B6_COEFFS: [(i64, i64); 7] = [(1, 1), (-3, 1), (5, 2), (0, 1), (-1, 2), (0, 1), (1, 42)];
const B8_COEFFS: [(i64, i64); 9] = [
    (1, 1),
    (-4, 1),
    (14, 3),
    (0, 1),
    (-7, 3),
    (0, 1),
    (2, 3),
    (0, 1),
    (-1, 30),
];

fn bernoulli_coeffs(q: u32) -> Result<&'static [(i64, i64)], KorobovError> {
    match q {
        2 => Ok(&B2_COEFFS),
        4 => Ok(&B4_COEFFS),
        6 => Ok(&B6_COEFFS),
        8 => Ok(&B8_COEFFS),
        _ => Err(KorobovError::UnsupportedOrder { q }),
    }
}

/// Degree-`q` Bernoulli polynomial `B_q(x)` for `x in [0, 1)`, `q` even in
/// `{2, 4, 6, 8}`. Evaluated by Horner's rule on exact rational
/// coefficients; callers handle periodic extension via the fractional part.
pub fn bernoulli_poly_in<R: Real>(q: u32, x: &R) -> Result<R, KorobovError> {
    let coeffs = bernoulli_coeffs(q)?;
    debug_assert!(
        *x >= x.zero_like() && *x < x.one_like(),
        "bernoulli_poly argument must lie in [0, 1)"
    );
    let mut acc = x.zero_like();
    for &(num, den) in coeffs {
        acc = acc * x.clone() + x.from_ratio_like(num, den);
    }
    Ok(acc)
}

/// Double-precision [`bernoulli_poly_in`].
pub fn bernoulli_poly(q: u32, x: f64) -> Result<f64, KorobovError> {
    bernoulli_poly_in(q, &x)
}

/// Riemann zeta at even integers `q in {2, 4, 6, 8}`:
/// `zeta(q) = pi^q / c_q` with `c_2 = 6`, `c_4 = 90`, `c_6 = 945`,
/// `c_8 = 9450`.
pub fn zeta_even_in<R: Real>(q: u32, seed: &R) -> Result<R, KorobovError> {
    let den: i64 = match q {
        2 => 6,
        4 => 90,
        6 => 945,
        8 => 9450,
        _ => return Err(KorobovError::UnsupportedOrder { q }),
    };
    Ok(seed.pi_like().powi(q as i32) / seed.from_i64_like(den))
}

/// Double-precision [`zeta_even_in`].
pub fn zeta_even(q: u32) -> Result<f64, KorobovError> {
    zeta_even_in(q, &0.0f64)
}

/// Factorial of the small even orders used in the kernel constants.
fn factorial_i64(m: u32) -> i64 {
    (1..=m as i64).product::<i64>().max(1)
}

/// Kernel shape function
/// `omega(alpha, x) = (-1)^(alpha+1) (2 pi)^(2 alpha) / (2 alpha)! * B_{2 alpha}(x)`
/// for `x in [0, 1)`; equals the lattice-friendly Fourier series
/// `sum_{h != 0} e^{2 pi i h x} / |h|^{2 alpha}`.
pub fn omega_in<R: Real>(alpha: u32, x: &R) -> Result<R, KorobovError> {
    if !(1..=4).contains(&alpha) {
        return Err(KorobovError::UnsupportedSmoothness { alpha });
    }
    let b = bernoulli_poly_in(2 * alpha, x)?;
    Ok(omega_scale(alpha, x) * b)
}

/// The constant `(-1)^(alpha+1) (2 pi)^(2 alpha) / (2 alpha)!`.
fn omega_scale<R: Real>(alpha: u32, seed: &R) -> R {
    let two_pi = seed.from_i64_like(2) * seed.pi_like();
    let mag = two_pi.powi(2 * alpha as i32) / seed.from_i64_like(factorial_i64(2 * alpha));
    if alpha % 2 == 1 {
        mag
    } else {
        -mag
    }
}

/// Double-precision [`omega_in`].
pub fn omega(alpha: u32, x: f64) -> Result<f64, KorobovError> {
    omega_in(alpha, &x)
}

/// Reproducing kernel `K(x, y) = prod_j (1 + gamma_j omega(alpha, {x_j - y_j}))`.
pub fn kernel_eval_in<R: Real>(params: &SpaceParams, x: &[R], y: &[R]) -> Result<R, KorobovError> {
    if x.len() != params.d() {
        return Err(KorobovError::DimensionMismatch {
            expected: params.d(),
            got: x.len(),
        });
    }
    if y.len() != params.d() {
        return Err(KorobovError::DimensionMismatch {
            expected: params.d(),
            got: y.len(),
        });
    }
    let seed = &x[0];
    let mut prod = seed.one_like();
    for j in 0..params.d() {
        let t = (x[j].clone() - y[j].clone()).fract01();
        let w = omega_in(params.alpha(), &t)?;
        let gamma = params.gamma_in(j + 1, seed);
        prod = prod * (seed.one_like() + gamma * w);
    }
    Ok(prod)
}

/// Double-precision [`kernel_eval_in`].
pub fn kernel_eval(params: &SpaceParams, x: &[f64], y: &[f64]) -> Result<f64, KorobovError> {
    kernel_eval_in(params, x, y)
}

/// Kernel diagonal `K(x, x) = prod_j (1 + 2 gamma_j zeta(2 alpha))`,
/// independent of `x`.
pub fn kernel_diagonal_in<R: Real>(params: &SpaceParams, seed: &R) -> Result<R, KorobovError> {
    let two_zeta = seed.from_i64_like(2) * zeta_even_in(2 * params.alpha(), seed)?;
    let mut prod = seed.one_like();
    for j in 1..=params.d() {
        prod = prod * (seed.one_like() + params.gamma_in(j, seed) * two_zeta.clone());
    }
    Ok(prod)
}

/// Double-precision [`kernel_diagonal_in`].
pub fn kernel_diagonal(params: &SpaceParams) -> Result<f64, KorobovError> {
    kernel_diagonal_in(params, &0.0f64)
}

/// Norm-decay coefficient
/// `r(h) = prod_{j: h_j != 0} |h_j|^(2 alpha) / gamma_j`, with `r(0) = 1`.
/// The squared norm of a trigonometric polynomial is
/// `sum_h |c_h|^2 r(h)`.
pub fn decay_r(params: &SpaceParams, h: &FrequencyVector) -> f64 {
    assert_eq!(
        h.dim(),
        params.d(),
        "frequency vector length {} does not match dimension {}",
        h.dim(),
        params.d()
    );
    let mut r = 1.0;
    for (j, &hj) in h.0.iter().enumerate() {
        if hj != 0 {
            r *= (hj.unsigned_abs() as f64).powi(2 * params.alpha() as i32) / params.gamma(j + 1);
        }
    }
    r
}
