//! Composite Gauss–Legendre quadrature on the unit interval.
//!
//! Used by the slow integral oracle that recomputes the projection-based
//! criterion as an actual integral of the squared pointwise error. Panels
//! matter there: the integrand has kinks at the lattice spacing, and
//! Gauss rules converge fast only on smooth pieces, so the oracle
//! subdivides `[0, 1]` into enough panels that every kink lands on a panel
//! boundary.

/// Errors from quadrature-rule construction.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuadError {
    #[error("rule degree {degree} is outside 1..=64")]
    BadDegree { degree: usize },
    #[error("panel count {panels} must be at least 1")]
    BadPanels { panels: usize },
}

/// Nodes and weights of the `degree`-point Gauss–Legendre rule on
/// `[-1, 1]`, computed by Newton iteration on the Legendre recurrence.
/// Exact for polynomials of degree `2 * degree - 1`.
pub fn gauss_legendre(degree: usize) -> Result<Vec<(f64, f64)>, QuadError> {
    if degree == 0 || degree > 64 {
        return Err(QuadError::BadDegree { degree });
    }
    let n = degree;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-flavored initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(rule)
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the composite rule on `[0, 1]`: `panels` equal
/// subintervals, each carrying the mapped `degree`-point Gauss rule.
/// Weights sum to 1.
pub fn composite_unit(panels: usize, degree: usize) -> Result<Vec<(f64, f64)>, QuadError> {
    if panels == 0 {
        return Err(QuadError::BadPanels { panels });
    }
    let base = gauss_legendre(degree)?;
    let h = 1.0 / panels as f64;
    let mut rule = Vec::with_capacity(panels * degree);
    for p in 0..panels {
        let left = p as f64 * h;
        for &(x, w) in &base {
            // Map [-1, 1] to [left, left + h].
            rule.push((left + (x + 1.0) * 0.5 * h, w * 0.5 * h));
        }
    }
    Ok(rule)
}
