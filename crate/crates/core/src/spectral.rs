//! Spectral linear algebra for symmetric circulant systems.
//!
//! The Gram matrix of a rank-1 lattice under a shift-invariant kernel is
//! circulant: entry `(l, k)` depends only on `(l - k) mod n`. A circulant
//! is diagonalized by the discrete Fourier transform, so its eigenvalues
//! are the DFT of its first column and solves cost `O(n log n)`.
//!
//! This module provides:
//!
//! * [`Cplx`] — a minimal complex scalar over any [`Real`];
//! * [`FftPlan`] — a transform plan holding precision-correct twiddle
//!   factors: an iterative radix-2 FFT for powers of two and a direct
//!   `O(n^2)` DFT for other sizes (desk-scale `n` keeps the direct path
//!   affordable; no chirp-transform embedding is attempted);
//! * [`CirculantOperator`] — a symmetric circulant with lazily computed,
//!   residue-checked real eigenvalues and a spectral solver;
//! * [`ratio_trace`] — `trace(K^{-1} M)` for two symmetric circulants, the
//!   inner loop of the spectral criterion;
//! * [`dense`] — an independent LU factorization used by test oracles.
//!
//! Sign convention: `dft(x)_l = sum_j x_j e^(-2 pi i l j / n)`, and the
//! eigenvalues of the circulant with first column `c` are exactly `dft(c)`.
//!
//! Tolerances follow the working width: a symmetric column must transform
//! to real eigenvalues, and the imaginary residue is required to stay
//! below `2^-(bits - 20) * ||c||_1`. The same scale separates "singular"
//! from "invertible" in the solvers.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::precision::Real;

/// Errors from transforms and circulant solves.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("operand is empty")]
    Empty,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(
        "imaginary residue {residue:.3e} exceeds tolerance {tolerance:.3e}; \
         the first column is not symmetric at this precision"
    )]
    PrecisionLoss { residue: f64, tolerance: f64 },
    #[error(
        "operator is numerically singular: eigenvalue {index} has magnitude \
         {magnitude:.3e} (tolerance {tolerance:.3e})"
    )]
    Singular {
        index: usize,
        magnitude: f64,
        tolerance: f64,
    },
    #[error("non-finite value encountered")]
    NonFinite,
}

/// Complex number over a precision-parametric real scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Cplx<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cplx<R> {
    pub fn new(re: R, im: R) -> Self {
        Cplx { re, im }
    }

    /// Purely real value.
    pub fn from_re(re: R) -> Self {
        let im = re.zero_like();
        Cplx { re, im }
    }

    pub fn zero_like(seed: &R) -> Self {
        Cplx {
            re: seed.zero_like(),
            im: seed.zero_like(),
        }
    }

    pub fn conj(&self) -> Self {
        Cplx {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Multiply by a real scalar.
    pub fn scale(&self, s: &R) -> Self {
        Cplx {
            re: self.re.clone() * s.clone(),
            im: self.im.clone() * s.clone(),
        }
    }

    /// Squared modulus `re^2 + im^2`.
    pub fn abs_sq(&self) -> R {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }
}

impl<R: Real> Add for Cplx<R> {
    type Output = Cplx<R>;
    fn add(self, rhs: Cplx<R>) -> Cplx<R> {
        Cplx {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<R: Real> Sub for Cplx<R> {
    type Output = Cplx<R>;
    fn sub(self, rhs: Cplx<R>) -> Cplx<R> {
        Cplx {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl<R: Real> Mul for Cplx<R> {
    type Output = Cplx<R>;
    fn mul(self, rhs: Cplx<R>) -> Cplx<R> {
        Cplx {
            re: self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone(),
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl<R: Real> Neg for Cplx<R> {
    type Output = Cplx<R>;
    fn neg(self) -> Cplx<R> {
        Cplx {
            re: -self.re,
            im: -self.im,
        }
    }
}

/// L1 norm of a real vector.
pub fn l1_norm<R: Real>(col: &[R]) -> R {
    let mut s = col[0].zero_like();
    for c in col {
        s = s + c.abs();
    }
    s
}

/// The residue/singularity tolerance at a given width and column scale:
/// `2^-(bits - 20) * scale`.
pub fn width_tolerance<R: Real>(scale: &R) -> R {
    scale.clone() * scale.exp2i_like(-(scale.mantissa_bits() as i32 - 20))
}

/// A transform plan for fixed size `n` at a fixed precision: twiddle
/// factors `e^(-2 pi i j / n)` minted once from the working-width value of
/// pi and reused across transforms of that size.
#[derive(Debug, Clone)]
pub struct FftPlan<R: Real> {
    n: usize,
    pow2: bool,
    twiddle: Vec<Cplx<R>>,
}

impl<R: Real> FftPlan<R> {
    /// Build a plan for size `n >= 1` at the seed's precision.
    pub fn new(n: usize, seed: &R) -> Self {
        assert!(n >= 1, "transform size must be positive");
        let pow2 = n.is_power_of_two();
        let table_len = if pow2 { n / 2 } else { n };
        let two_pi = seed.from_i64_like(2) * seed.pi_like();
        let n_r = seed.from_i64_like(n as i64);
        let mut twiddle = Vec::with_capacity(table_len);
        for j in 0..table_len {
            let theta = two_pi.clone() * seed.from_i64_like(j as i64) / n_r.clone();
            twiddle.push(Cplx::new(theta.cos(), -theta.sin()));
        }
        FftPlan { n, pow2, twiddle }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Forward transform, out of place.
    pub fn forward(&self, x: &[Cplx<R>]) -> Result<Vec<Cplx<R>>, SpectralError> {
        self.check_len(x)?;
        let mut data = x.to_vec();
        if self.pow2 {
            self.radix2(&mut data, false);
        } else {
            data = self.direct(x, false);
        }
        Ok(data)
    }

    /// Inverse transform (including the `1/n` normalization), out of place.
    pub fn inverse(&self, x: &[Cplx<R>]) -> Result<Vec<Cplx<R>>, SpectralError> {
        self.check_len(x)?;
        let seed = &x[0].re;
        let mut data;
        if self.pow2 {
            data = x.to_vec();
            self.radix2(&mut data, true);
        } else {
            data = self.direct(x, true);
        }
        let inv_n = seed.one_like() / seed.from_i64_like(self.n as i64);
        for v in &mut data {
            *v = v.scale(&inv_n);
        }
        Ok(data)
    }

    fn check_len(&self, x: &[Cplx<R>]) -> Result<(), SpectralError> {
        if x.is_empty() {
            return Err(SpectralError::Empty);
        }
        if x.len() != self.n {
            return Err(SpectralError::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Iterative radix-2 butterflies. `inverse` conjugates the twiddles;
    /// the caller applies the `1/n` scale.
    fn radix2(&self, data: &mut [Cplx<R>], inverse: bool) {
        let n = self.n;
        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2usize;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = if inverse {
                        self.twiddle[k * step].conj()
                    } else {
                        self.twiddle[k * step].clone()
                    };
                    let a = data[start + k].clone();
                    let b = data[start + half + k].clone() * w;
                    data[start + k] = a.clone() + b.clone();
                    data[start + half + k] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// Direct summation for non-power-of-two sizes.
    fn direct(&self, x: &[Cplx<R>], inverse: bool) -> Vec<Cplx<R>> {
        let n = self.n;
        let seed = &x[0].re;
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            let mut acc = Cplx::zero_like(seed);
            for (j, xj) in x.iter().enumerate() {
                let idx = (l * j) % n;
                let w = if inverse {
                    self.twiddle[idx].conj()
                } else {
                    self.twiddle[idx].clone()
                };
                acc = acc + xj.clone() * w;
            }
            out.push(acc);
        }
        out
    }
}

/// Forward DFT of a complex vector (one-shot; builds a plan internally).
pub fn dft<R: Real>(x: &[Cplx<R>]) -> Result<Vec<Cplx<R>>, SpectralError> {
    if x.is_empty() {
        return Err(SpectralError::Empty);
    }
    FftPlan::new(x.len(), &x[0].re).forward(x)
}

/// Inverse DFT of a complex vector (one-shot; builds a plan internally).
pub fn idft<R: Real>(x: &[Cplx<R>]) -> Result<Vec<Cplx<R>>, SpectralError> {
    if x.is_empty() {
        return Err(SpectralError::Empty);
    }
    FftPlan::new(x.len(), &x[0].re).inverse(x)
}

/// A symmetric circulant operator, represented by its first column.
///
/// Symmetric means `c[j] = c[(n - j) mod n]`; equivalently the operator is
/// a symmetric matrix. Its eigenvalues are real and equal the DFT of the
/// first column; they are computed lazily, cached, and checked: the
/// imaginary parts left over by rounding must stay below
/// `2^-(bits - 20) * ||c||_1`, otherwise [`SpectralError::PrecisionLoss`]
/// is returned (which is also what a genuinely asymmetric column produces).
#[derive(Debug)]
pub struct CirculantOperator<R: Real> {
    first_column: Vec<R>,
    spectrum: OnceLock<Result<Vec<R>, SpectralError>>,
}

impl<R: Real> CirculantOperator<R> {
    pub fn new(first_column: Vec<R>) -> Result<Self, SpectralError> {
        if first_column.is_empty() {
            return Err(SpectralError::Empty);
        }
        if first_column.iter().any(|c| !c.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        Ok(CirculantOperator {
            first_column,
            spectrum: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.first_column.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn first_column(&self) -> &[R] {
        &self.first_column
    }

    /// Matrix entry `(l, k) = c[(l - k) mod n]`.
    pub fn entry(&self, l: usize, k: usize) -> &R {
        let n = self.len();
        &self.first_column[(l % n + n - k % n) % n]
    }

    /// Real eigenvalues (the DFT of the first column), cached after the
    /// first call.
    pub fn eigenvalues(&self) -> Result<&[R], SpectralError> {
        let r = self
            .spectrum
            .get_or_init(|| compute_real_spectrum(&self.first_column));
        match r {
            Ok(v) => Ok(v.as_slice()),
            Err(e) => Err(e.clone()),
        }
    }

    /// Solve `C x = b` spectrally. Fails with [`SpectralError::Singular`]
    /// if any eigenvalue magnitude falls below `2^-(bits - 20) * ||c||_1`.
    pub fn solve(&self, b: &[R]) -> Result<Vec<R>, SpectralError> {
        let n = self.len();
        if b.len() != n {
            return Err(SpectralError::LengthMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let eig = self.eigenvalues()?;
        let tol = width_tolerance(&l1_norm(&self.first_column));
        for (i, lam) in eig.iter().enumerate() {
            if lam.abs() <= tol {
                return Err(SpectralError::Singular {
                    index: i,
                    magnitude: lam.abs().to_f64(),
                    tolerance: tol.to_f64(),
                });
            }
        }
        let seed = &b[0];
        let plan = FftPlan::new(n, seed);
        let b_hat = plan.forward(&b.iter().cloned().map(Cplx::from_re).collect::<Vec<_>>())?;
        let x_hat: Vec<Cplx<R>> = b_hat
            .into_iter()
            .zip(eig.iter())
            .map(|(bh, lam)| Cplx::new(bh.re / lam.clone(), bh.im / lam.clone()))
            .collect();
        let x = plan.inverse(&x_hat)?;
        Ok(x.into_iter().map(|c| c.re).collect())
    }

    /// Apply `C x` directly in `O(n^2)`. Used where a deterministic,
    /// transform-free product matters more than speed (residual
    /// corrections, small cross-checks).
    pub fn apply(&self, x: &[R]) -> Result<Vec<R>, SpectralError> {
        let n = self.len();
        if x.len() != n {
            return Err(SpectralError::LengthMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let c = &self.first_column;
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            let mut acc = c[0].zero_like();
            for (k, xv) in x.iter().enumerate() {
                acc = acc + c[(l + n - k) % n].clone() * xv.clone();
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// DFT of a real symmetric column, validated to have negligible imaginary
/// residue; returns the real parts.
fn compute_real_spectrum<R: Real>(col: &[R]) -> Result<Vec<R>, SpectralError> {
    let seed = &col[0];
    let plan = FftPlan::new(col.len(), seed);
    let x: Vec<Cplx<R>> = col.iter().cloned().map(Cplx::from_re).collect();
    let x_hat = plan.forward(&x)?;
    let tol = width_tolerance(&l1_norm(col));
    let mut max_residue = seed.zero_like();
    for v in &x_hat {
        let a = v.im.abs();
        if a > max_residue {
            max_residue = a;
        }
    }
    if max_residue > tol {
        return Err(SpectralError::PrecisionLoss {
            residue: max_residue.to_f64(),
            tolerance: tol.to_f64(),
        });
    }
    Ok(x_hat.into_iter().map(|c| c.re).collect())
}

/// `trace(K^{-1} M)` for symmetric circulants given by first columns
/// `k_col` (invertible) and `m_col`: with eigenvalues `k_hat`, `m_hat`,
/// the trace is `sum_l m_hat_l / k_hat_l`.
pub fn ratio_trace<R: Real>(m_col: &[R], k_col: &[R]) -> Result<R, SpectralError> {
    if m_col.is_empty() || k_col.is_empty() {
        return Err(SpectralError::Empty);
    }
    if m_col.len() != k_col.len() {
        return Err(SpectralError::LengthMismatch {
            expected: k_col.len(),
            got: m_col.len(),
        });
    }
    let k_hat = compute_real_spectrum(k_col)?;
    let m_hat = compute_real_spectrum(m_col)?;
    let tol = width_tolerance(&l1_norm(k_col));
    let mut acc = k_col[0].zero_like();
    for (i, (m, k)) in m_hat.iter().zip(k_hat.iter()).enumerate() {
        if k.abs() <= tol {
            return Err(SpectralError::Singular {
                index: i,
                magnitude: k.abs().to_f64(),
                tolerance: tol.to_f64(),
            });
        }
        acc = acc + m.clone() / k.clone();
    }
    Ok(acc)
}

pub mod dense {
    //! Dense LU with partial pivoting, generic over the scalar.
    //!
    //! Deliberately simple `O(n^3)` code: this is the independent route
    //! used to cross-check the spectral fast path at small sizes, so it
    //! shares none of the transform machinery.

    use super::SpectralError;
    use crate::precision::Real;

    /// LU factorization `P A = L U` of a square matrix.
    #[derive(Debug, Clone)]
    pub struct DenseLu<R> {
        lu: Vec<Vec<R>>,
        perm: Vec<usize>,
    }

    /// Factor a square matrix (consumed). Fails if a pivot falls below
    /// `2^-(bits - 14) * max |a_ij|`.
    pub fn lu_factor<R: Real>(mut a: Vec<Vec<R>>) -> Result<DenseLu<R>, SpectralError> {
        let n = a.len();
        if n == 0 {
            return Err(SpectralError::Empty);
        }
        for row in &a {
            if row.len() != n {
                return Err(SpectralError::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let seed = a[0][0].zero_like();
        let mut amax = seed.zero_like();
        for row in &a {
            for v in row {
                if v.abs() > amax {
                    amax = v.abs();
                }
            }
        }
        let tol = amax.clone() * amax.exp2i_like(-(amax.mantissa_bits() as i32 - 14));
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            // Partial pivot: largest magnitude in the column at or below
            // the diagonal.
            let mut p = col;
            let mut best = a[col][col].abs();
            for (r, row) in a.iter().enumerate().skip(col + 1) {
                let mag = row[col].abs();
                if mag > best {
                    best = mag;
                    p = r;
                }
            }
            if best <= tol {
                return Err(SpectralError::Singular {
                    index: col,
                    magnitude: best.to_f64(),
                    tolerance: tol.to_f64(),
                });
            }
            if p != col {
                a.swap(p, col);
                perm.swap(p, col);
            }
            let pivot = a[col][col].clone();
            let (top, rest) = a.split_at_mut(col + 1);
            let pivot_row = &top[col];
            for row in rest.iter_mut() {
                let factor = row[col].clone() / pivot.clone();
                row[col] = factor.clone();
                for (cell, pc) in row[col + 1..].iter_mut().zip(&pivot_row[col + 1..]) {
                    let sub = factor.clone() * pc.clone();
                    *cell = cell.clone() - sub;
                }
            }
        }
        Ok(DenseLu { lu: a, perm })
    }

    impl<R: Real> DenseLu<R> {
        pub fn len(&self) -> usize {
            self.lu.len()
        }

        pub fn is_empty(&self) -> bool {
            self.lu.is_empty()
        }

        /// Solve `A x = b` using the stored factorization.
        pub fn solve(&self, b: &[R]) -> Result<Vec<R>, SpectralError> {
            let n = self.len();
            if b.len() != n {
                return Err(SpectralError::LengthMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
            // Apply the row permutation, then forward/back substitution.
            let mut y: Vec<R> = self.perm.iter().map(|&p| b[p].clone()).collect();
            for r in 1..n {
                for c in 0..r {
                    let sub = self.lu[r][c].clone() * y[c].clone();
                    y[r] = y[r].clone() - sub;
                }
            }
            for r in (0..n).rev() {
                for c in r + 1..n {
                    let sub = self.lu[r][c].clone() * y[c].clone();
                    y[r] = y[r].clone() - sub;
                }
                y[r] = y[r].clone() / self.lu[r][r].clone();
            }
            Ok(y)
        }
    }
}

pub mod eft {
    //! Error-free transforms for double precision: each rounding error of
    //! an addition or multiplication is recovered exactly and carried in a
    //! low-order companion word, so short quadratic forms can be evaluated
    //! to roughly twice working precision. Used where a result that
    //! should cancel to ~0 must actually land near 0 (pointwise power at
    //! interpolation nodes).

    /// `a + b` as an exact unevaluated pair `(sum, error)` (Knuth).
    #[inline]
    pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    /// `a * b` as an exact pair `(product, error)` via fused multiply-add.
    #[inline]
    pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    /// Compensated accumulator: a running high word plus the accumulated
    /// low-order corrections.
    #[derive(Debug, Clone, Copy, Default)]
    pub struct Accumulator {
        hi: f64,
        lo: f64,
    }

    impl Accumulator {
        pub fn new() -> Self {
            Accumulator::default()
        }

        /// Add a term exactly (its rounding error flows into the low word).
        #[inline]
        pub fn add(&mut self, x: f64) {
            let (s, e) = two_sum(self.hi, x);
            self.hi = s;
            self.lo += e;
        }

        /// Add `a * b` exactly.
        #[inline]
        pub fn add_prod(&mut self, a: f64, b: f64) {
            let (p, e) = two_prod(a, b);
            self.add(p);
            self.lo += e;
        }

        /// Add `a * b * c` with the two product errors carried over
        /// (the second-order error `e1 * e2`-style terms are dropped).
        #[inline]
        pub fn add_prod3(&mut self, a: f64, b: f64, c: f64) {
            let (p, e1) = two_prod(a, b);
            let (q, e2) = two_prod(p, c);
            self.add(q);
            self.lo += e2 + e1 * c;
        }

        /// Collapse to a double.
        #[inline]
        pub fn value(&self) -> f64 {
            self.hi + self.lo
        }
    }
}
