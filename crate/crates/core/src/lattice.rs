//! Rank-1 lattice point sets on the unit cube.
//!
//! A rank-1 lattice with `n` points and generating vector
//! `z = (z_1, ..., z_d)` consists of the nodes
//!
//! ```text
//! t_k = ( {k z_1 / n}, ..., {k z_d / n} ),   k = 0, ..., n-1.
//! ```
//!
//! Components are required to be units modulo `n` so that every
//! one-dimensional projection visits all `n` distinct values — the
//! group structure the fast constructions rely on. Node coordinates are
//! produced by exact integer arithmetic (`k * z_j mod n`) followed by a
//! single division, so each coordinate is the correctly rounded value of
//! the exact rational `(k z_j mod n) / n`.

use crate::precision::Real;

/// Errors from lattice construction and the vector text format.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("point count n = {n} must be at least 2")]
    InvalidPointCount { n: u64 },
    #[error("generating vector must have at least one component")]
    EmptyVector,
    #[error("component z_{j} = {z} is outside the range 1..{n}")]
    ComponentOutOfRange { j: usize, z: u64, n: u64 },
    #[error("component z_{j} = {z} shares a factor with n = {n}")]
    NotCoprime { j: usize, z: u64, n: u64 },
    #[error("prefix dimension {d} is outside 1..={dim}")]
    BadPrefix { d: usize, dim: usize },
    #[error("vector file: missing field {field:?}")]
    MissingField { field: &'static str },
    #[error("vector file: field {field:?} is malformed: {detail}")]
    MalformedField { field: &'static str, detail: String },
    #[error("vector file: more than one data line")]
    MultipleDataLines,
    #[error("vector file: no data line found")]
    NoDataLine,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// The multiplicative units modulo `n`, ascending: all `z in 1..n` with
/// `gcd(z, n) = 1`. This is the candidate set of the component-by-component
/// constructions.
pub fn units(n: u64) -> Result<Vec<u64>, LatticeError> {
    if n < 2 {
        return Err(LatticeError::InvalidPointCount { n });
    }
    Ok((1..n).filter(|&z| gcd(z, n) == 1).collect())
}

/// A validated generating vector: point count `n >= 2` and components that
/// are units modulo `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratingVector {
    n: u64,
    z: Vec<u64>,
}

impl GeneratingVector {
    pub fn new(n: u64, z: Vec<u64>) -> Result<Self, LatticeError> {
        if n < 2 {
            return Err(LatticeError::InvalidPointCount { n });
        }
        if z.is_empty() {
            return Err(LatticeError::EmptyVector);
        }
        for (idx, &zj) in z.iter().enumerate() {
            let j = idx + 1;
            if zj == 0 || zj >= n {
                return Err(LatticeError::ComponentOutOfRange { j, z: zj, n });
            }
            if gcd(zj, n) != 1 {
                return Err(LatticeError::NotCoprime { j, z: zj, n });
            }
        }
        Ok(GeneratingVector { n, z })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn components(&self) -> &[u64] {
        &self.z
    }

    /// Truncation to the first `d` components (same `n`).
    pub fn prefix(&self, d: usize) -> Result<GeneratingVector, LatticeError> {
        if d == 0 || d > self.dim() {
            return Err(LatticeError::BadPrefix { d, dim: self.dim() });
        }
        Ok(GeneratingVector {
            n: self.n,
            z: self.z[..d].to_vec(),
        })
    }

    /// Extension by one more component (validated against `n`).
    pub fn extended(&self, z_next: u64) -> Result<GeneratingVector, LatticeError> {
        let mut z = self.z.clone();
        z.push(z_next);
        GeneratingVector::new(self.n, z)
    }

    /// The reflected vector with every component `z_j` replaced by
    /// `n - z_j` (also a vector of units). Node sets coincide up to
    /// relabeling `k -> n - k`, so all shift-invariant quantities agree.
    pub fn reflected(&self) -> GeneratingVector {
        GeneratingVector {
            n: self.n,
            z: self.z.iter().map(|&zj| self.n - zj).collect(),
        }
    }

    /// Exact residue `k * z_j mod n` for node `k`, coordinate `j`
    /// (0-based `j`).
    pub fn residue(&self, k: u64, j: usize) -> u64 {
        ((k as u128 * self.z[j] as u128) % self.n as u128) as u64
    }

    /// All residues of node `k`.
    pub fn residues(&self, k: u64) -> Vec<u64> {
        (0..self.dim()).map(|j| self.residue(k, j)).collect()
    }

    /// Node `t_k` in double precision.
    pub fn point(&self, k: u64) -> Vec<f64> {
        self.point_in(k, &0.0f64)
    }

    /// Node `t_k` at the seed's precision: each coordinate is the correctly
    /// rounded value of the exact rational `(k z_j mod n) / n`.
    pub fn point_in<R: Real>(&self, k: u64, seed: &R) -> Vec<R> {
        (0..self.dim())
            .map(|j| {
                seed.from_i64_like(self.residue(k, j) as i64) / seed.from_i64_like(self.n as i64)
            })
            .collect()
    }
}

/// The full node set of a rank-1 lattice, generated on demand.
#[derive(Debug, Clone)]
pub struct LatticePointSet {
    gv: GeneratingVector,
}

impl LatticePointSet {
    pub fn new(gv: GeneratingVector) -> Self {
        LatticePointSet { gv }
    }

    pub fn generating_vector(&self) -> &GeneratingVector {
        &self.gv
    }

    pub fn len(&self) -> usize {
        self.gv.n() as usize
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 2 by construction
    }

    pub fn point(&self, k: u64) -> Vec<f64> {
        self.gv.point(k)
    }

    /// Iterate nodes `t_0, t_1, ..., t_{n-1}` in order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.gv.n()).map(move |k| self.gv.point(k))
    }
}

/// Optional provenance line attached to a serialized vector, recording how
/// it was constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorMetadata {
    /// Which construction objective produced the vector: "S" or "P".
    pub criterion: String,
    pub alpha: u32,
    /// Weight-scheme descriptor string.
    pub weights: String,
    pub precision_bits: u32,
}

impl VectorMetadata {
    fn to_comment(&self) -> String {
        format!(
            "# criterion={} alpha={} weights={} precision={}",
            self.criterion, self.alpha, self.weights, self.precision_bits
        )
    }

    fn parse_comment(line: &str) -> Option<VectorMetadata> {
        let body = line.trim_start_matches('#').trim();
        let mut criterion = None;
        let mut alpha = None;
        let mut weights = None;
        let mut precision = None;
        for tok in body.split_whitespace() {
            let (key, val) = tok.split_once('=')?;
            match key {
                "criterion" => criterion = Some(val.to_string()),
                "alpha" => alpha = val.parse().ok(),
                "weights" => weights = Some(val.to_string()),
                "precision" => precision = val.parse().ok(),
                _ => return None,
            }
        }
        Some(VectorMetadata {
            criterion: criterion?,
            alpha: alpha?,
            weights: weights?,
            precision_bits: precision?,
        })
    }
}

/// Render a generating vector in the one-line text format
/// `n=<int> z=<comma-separated ints>`, preceded by an optional metadata
/// comment.
pub fn serialize_vector(gv: &GeneratingVector, meta: Option<&VectorMetadata>) -> String {
    let z: Vec<String> = gv.components().iter().map(|z| z.to_string()).collect();
    let mut out = String::new();
    if let Some(m) = meta {
        out.push_str(&m.to_comment());
        out.push('\n');
    }
    out.push_str(&format!("n={} z={}\n", gv.n(), z.join(",")));
    out
}

/// Parse the vector text format. Lines starting with `#` are comments; a
/// comment of the form `# criterion=.. alpha=.. weights=.. precision=..`
/// is returned as metadata. Exactly one data line `n=<int> z=<ints>` must
/// be present.
pub fn parse_vector(
    text: &str,
) -> Result<(GeneratingVector, Option<VectorMetadata>), LatticeError> {
    let mut meta = None;
    let mut data: Option<(u64, Vec<u64>)> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('#') {
            if meta.is_none() {
                meta = VectorMetadata::parse_comment(stripped);
            }
            continue;
        }
        if data.is_some() {
            return Err(LatticeError::MultipleDataLines);
        }
        let mut n: Option<u64> = None;
        let mut z: Option<Vec<u64>> = None;
        for tok in line.split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                n = Some(v.parse().map_err(|e| LatticeError::MalformedField {
                    field: "n",
                    detail: format!("{v:?}: {e}"),
                })?);
            } else if let Some(v) = tok.strip_prefix("z=") {
                let mut parts = Vec::new();
                for p in v.split(',') {
                    parts.push(p.parse().map_err(|e| LatticeError::MalformedField {
                        field: "z",
                        detail: format!("{p:?}: {e}"),
                    })?);
                }
                z = Some(parts);
            } else {
                return Err(LatticeError::MalformedField {
                    field: "line",
                    detail: format!("unrecognized token {tok:?}"),
                });
            }
        }
        let n = n.ok_or(LatticeError::MissingField { field: "n" })?;
        let z = z.ok_or(LatticeError::MissingField { field: "z" })?;
        data = Some((n, z));
    }
    let (n, z) = data.ok_or(LatticeError::NoDataLine)?;
    Ok((GeneratingVector::new(n, z)?, meta))
}
