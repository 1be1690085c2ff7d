//! Precision-parametric real scalars.
//!
//! Every numerical routine in this crate is generic over a scalar type
//! implementing [`Real`]. Two implementations are provided:
//!
//! * `f64` — the native 53-bit path, used wherever double precision is
//!   known to be adequate;
//! * [`MpReal`] — an arbitrary-precision float backed by MPFR (via the
//!   `rug` crate), used for the spectral quantities whose bracketed
//!   differences suffer catastrophic cancellation in doubles.
//!
//! A [`PrecisionContext`] names the working mantissa width at run time and
//! is the unit of dispatch: 53 bits selects the native path, anything wider
//! selects `MpReal` at that width. Values carry their own precision, so
//! generic code needs a *seed* value of the right width to mint constants
//! from — hence the `*_like` constructor methods on the trait.
//!
//! Tolerances downstream are expressed as `2^-(mantissa_bits - k)` for small
//! fixed `k`, so they tighten automatically as the context widens.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Minimum supported mantissa width: anything narrower than an IEEE double
/// has no implementation here.
pub const MIN_MANTISSA_BITS: u32 = 53;

/// Widest mantissa this crate will agree to run at. Purely a sanity bound;
/// MPFR itself goes far higher.
pub const MAX_MANTISSA_BITS: u32 = 8192;

/// Error raised when constructing an out-of-range [`PrecisionContext`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrecisionError {
    #[error("mantissa width {requested} bits is below the minimum of {MIN_MANTISSA_BITS}")]
    TooNarrow { requested: u32 },
    #[error("mantissa width {requested} bits exceeds the maximum of {MAX_MANTISSA_BITS}")]
    TooWide { requested: u32 },
}

/// Runtime selection of the working mantissa width.
///
/// `PrecisionContext::DOUBLE` (53 bits) routes computations through native
/// `f64`; wider contexts route through MPFR floats of exactly that width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    mantissa_bits: u32,
}

impl PrecisionContext {
    /// Native IEEE double precision.
    pub const DOUBLE: PrecisionContext = PrecisionContext { mantissa_bits: 53 };

    /// Context with the given mantissa width in bits (53 ..= 8192).
    pub fn new(mantissa_bits: u32) -> Result<Self, PrecisionError> {
        if mantissa_bits < MIN_MANTISSA_BITS {
            return Err(PrecisionError::TooNarrow {
                requested: mantissa_bits,
            });
        }
        if mantissa_bits > MAX_MANTISSA_BITS {
            return Err(PrecisionError::TooWide {
                requested: mantissa_bits,
            });
        }
        Ok(PrecisionContext { mantissa_bits })
    }

    /// Working mantissa width in bits.
    pub fn mantissa_bits(self) -> u32 {
        self.mantissa_bits
    }

    /// Whether this context is served by native `f64`.
    pub fn is_native(self) -> bool {
        self.mantissa_bits == MIN_MANTISSA_BITS
    }

    /// A zero `f64` seed; only meaningful when `is_native()`.
    pub fn seed_f64(self) -> f64 {
        debug_assert!(self.is_native());
        0.0
    }

    /// A zero [`MpReal`] seed of this context's width.
    pub fn seed_mp(self) -> MpReal {
        MpReal::zero(self.mantissa_bits)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::DOUBLE
    }
}

impl fmt::Display for PrecisionContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-bit", self.mantissa_bits)
    }
}

/// Real scalar abstraction over `f64` and MPFR floats.
///
/// Constructors are spelled `*_like` because arbitrary-precision values
/// carry their width with them: a new constant must be minted at the width
/// of an existing value. For `f64` the receiver is ignored.
///
/// All operators consume owned values; callers clone explicitly where an
/// operand is reused. This keeps the trait object-safe-free and simple, at
/// the cost of some allocator traffic on the MPFR path, which profiling of
/// the construction loops shows is dominated by the arithmetic itself.
#[allow(clippy::wrong_self_convention)]
pub trait Real:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Mantissa width of this value in bits.
    fn mantissa_bits(&self) -> u32;
    /// Zero at the receiver's width.
    fn zero_like(&self) -> Self;
    /// One at the receiver's width.
    fn one_like(&self) -> Self;
    /// Exact embed of an `f64` at the receiver's width.
    fn from_f64_like(&self, v: f64) -> Self;
    /// Exact embed of an integer at the receiver's width.
    fn from_i64_like(&self, v: i64) -> Self;
    /// Correctly rounded rational `num / den` at the receiver's width.
    fn from_ratio_like(&self, num: i64, den: i64) -> Self {
        self.from_i64_like(num) / self.from_i64_like(den)
    }
    /// π correctly rounded at the receiver's width.
    fn pi_like(&self) -> Self;
    /// Exact power of two `2^e` at the receiver's width.
    fn exp2i_like(&self, e: i32) -> Self;
    /// Nearest `f64` (used for reporting; may lose precision by design).
    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn floor(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    /// Integer power with correct rounding per step.
    fn powi(&self, e: i32) -> Self;
    fn is_finite(&self) -> bool;

    /// Fractional part in `[0, 1)`; the periodic wrap used throughout.
    ///
    /// Distinct from `f64::fract`, which truncates toward zero and so maps
    /// negative inputs to negative outputs.
    fn fract01(&self) -> Self {
        let f = self.clone() - self.floor();
        // Guard the half-open interval: rounding in `self - floor(self)` can
        // land exactly on 1 when `self` is a hair below an integer.
        if f >= self.one_like() {
            self.zero_like()
        } else {
            f
        }
    }
}

impl Real for f64 {
    fn mantissa_bits(&self) -> u32 {
        53
    }
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn from_f64_like(&self, v: f64) -> Self {
        v
    }
    fn from_i64_like(&self, v: i64) -> Self {
        v as f64
    }
    fn pi_like(&self) -> Self {
        std::f64::consts::PI
    }
    fn exp2i_like(&self, e: i32) -> Self {
        (2.0f64).powi(e)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn powi(&self, e: i32) -> Self {
        f64::powi(*self, e)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Arbitrary-precision real backed by an MPFR float.
///
/// Binary operations round to the wider of the two operand widths; in
/// practice all values in one computation share the width of the seeding
/// [`PrecisionContext`].
#[derive(Debug, Clone)]
pub struct MpReal(Float);

impl MpReal {
    /// Zero at the given mantissa width.
    pub fn zero(bits: u32) -> Self {
        MpReal(Float::new(bits))
    }

    /// Exact embed of an `f64` at the given width (widths >= 53 are exact).
    pub fn from_f64(bits: u32, v: f64) -> Self {
        MpReal(Float::with_val(bits, v))
    }

    /// Borrow the underlying MPFR float.
    pub fn as_float(&self) -> &Float {
        &self.0
    }

    fn prec(&self) -> u32 {
        self.0.prec()
    }

    fn join_prec(&self, other: &Self) -> u32 {
        self.prec().max(other.prec())
    }
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl PartialEq for MpReal {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for MpReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for MpReal {
    type Output = MpReal;
    fn add(self, rhs: MpReal) -> MpReal {
        let p = self.join_prec(&rhs);
        MpReal(Float::with_val(p, &self.0 + &rhs.0))
    }
}

impl Sub for MpReal {
    type Output = MpReal;
    fn sub(self, rhs: MpReal) -> MpReal {
        let p = self.join_prec(&rhs);
        MpReal(Float::with_val(p, &self.0 - &rhs.0))
    }
}

impl Mul for MpReal {
    type Output = MpReal;
    fn mul(self, rhs: MpReal) -> MpReal {
        let p = self.join_prec(&rhs);
        MpReal(Float::with_val(p, &self.0 * &rhs.0))
    }
}

impl Div for MpReal {
    type Output = MpReal;
    fn div(self, rhs: MpReal) -> MpReal {
        let p = self.join_prec(&rhs);
        MpReal(Float::with_val(p, &self.0 / &rhs.0))
    }
}

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal(-self.0)
    }
}

impl Real for MpReal {
    fn mantissa_bits(&self) -> u32 {
        self.prec()
    }
    fn zero_like(&self) -> Self {
        MpReal(Float::new(self.prec()))
    }
    fn one_like(&self) -> Self {
        MpReal(Float::with_val(self.prec(), 1))
    }
    fn from_f64_like(&self, v: f64) -> Self {
        MpReal(Float::with_val(self.prec(), v))
    }
    fn from_i64_like(&self, v: i64) -> Self {
        MpReal(Float::with_val(self.prec(), v))
    }
    fn pi_like(&self) -> Self {
        MpReal(Float::with_val(self.prec(), Constant::Pi))
    }
    fn exp2i_like(&self, e: i32) -> Self {
        let one = Float::with_val(self.prec(), 1);
        MpReal(one << e)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn abs(&self) -> Self {
        MpReal(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        MpReal(self.0.clone().sqrt())
    }
    fn floor(&self) -> Self {
        MpReal(self.0.clone().floor())
    }
    fn sin(&self) -> Self {
        MpReal(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        MpReal(self.0.clone().cos())
    }
    fn powi(&self, e: i32) -> Self {
        MpReal(Float::with_val(self.prec(), (&self.0).pow(e)))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}
