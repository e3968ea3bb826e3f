//! Curvature input for the local free-fall frame.
//!
//! The only curvature that drives the dynamics is the electric part of the
//! Riemann tensor, `R_0i0j`, stored as a symmetric [`TidalMatrix`]. The full
//! four-index tensor is accepted by [`metric_at`] for diagnostics.
//!
//! Everything is in geometric units (c = G = 1), so tidal entries carry
//! units of 1/length².

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Entries that differ from their transpose by more than this are rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-14;

/// Default bound on `max|R| · L²` for the weak-field expansion to hold.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;

/// Tolerance for the algebraic identities of [`RiemannComponents`].
pub const RIEMANN_TOLERANCE: f64 = 1e-12;

/// Symmetric d×d tidal matrix `R_0i0j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TidalMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl TidalMatrix {
    /// Builds a tidal matrix from row-major entries.
    ///
    /// Entries must be symmetric to within [`SYMMETRY_TOLERANCE`]; the stored
    /// matrix is then made exactly symmetric by averaging each pair.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SimError::InvalidParameter(format!(
                "tidal matrix dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(SimError::SizeMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { index: i });
        }
        let mut sym = entries.to_vec();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                let delta = (a - b).abs();
                if delta > SYMMETRY_TOLERANCE {
                    return Err(SimError::AsymmetricInput { i, j, delta });
                }
                let mean = 0.5 * (a + b);
                sym[i * dim + j] = mean;
                sym[j * dim + i] = mean;
            }
        }
        Ok(Self { dim, entries: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(SimError::InvalidParameter(
                "tidal matrix rows must be square".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(dim, &flat)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut flat = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            flat[i * dim + i] = d;
        }
        Self::from_row_major(dim, &flat)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_row_major(dim, &vec![0.0; dim * dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    /// `x · R · x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "position has wrong dimension");
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.get(i, j) * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `R · x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "position has wrong dimension");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Outcome of [`validate_tidal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// `max|R_ij| · L²`, roughly the squared ratio of domain size to
    /// curvature radius.
    pub epsilon: f64,
    pub ok: bool,
    pub messages: Vec<String>,
}

/// Checks that a domain of linear size `domain_extent` sits well inside the
/// weak-field regime of `tidal`, using [`DEFAULT_VALIDITY_THRESHOLD`].
pub fn validate_tidal(
    tidal: &TidalMatrix,
    domain_extent: f64,
    vacuum: bool,
) -> Result<ValidityReport> {
    validate_tidal_with(tidal, domain_extent, vacuum, DEFAULT_VALIDITY_THRESHOLD)
}

pub fn validate_tidal_with(
    tidal: &TidalMatrix,
    domain_extent: f64,
    vacuum: bool,
    threshold: f64,
) -> Result<ValidityReport> {
    if !(domain_extent > 0.0) || !domain_extent.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "domain extent must be positive, got {domain_extent}"
        )));
    }
    if !(threshold > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "validity threshold must be positive, got {threshold}"
        )));
    }
    let max_abs = tidal.max_abs();
    if vacuum {
        let trace = tidal.trace();
        if trace.abs() > 1e-12 * max_abs.max(1.0) {
            return Err(SimError::TraceNotZero { trace });
        }
    }
    let epsilon = max_abs * domain_extent * domain_extent;
    let ok = epsilon < threshold;
    let mut messages = Vec::new();
    if !ok {
        messages.push(format!(
            "curvature scale ratio {epsilon:e} is not below the threshold {threshold:e}"
        ));
    }
    Ok(ValidityReport {
        epsilon,
        ok,
        messages,
    })
}

/// Exact clock rate `dτ/dt = sqrt(1 + x·R·x)` at position `x`.
pub fn proper_time_rate(x: &[f64], tidal: &TidalMatrix) -> Result<f64> {
    let arg = 1.0 + tidal.quadratic_form(x);
    if arg <= 0.0 {
        return Err(SimError::OutsideValidity(format!(
            "1 + x·R·x = {arg} is not positive"
        )));
    }
    Ok(arg.sqrt())
}

/// Clock rate truncated at first order in curvature, `1 + ½ x·R·x`.
///
/// This is the rate the propagator imprints.
pub fn first_order_rate(x: &[f64], tidal: &TidalMatrix) -> f64 {
    1.0 + 0.5 * tidal.quadratic_form(x)
}

/// Full Riemann tensor `R_{μνλρ}` in the local frame, index 0 being time.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannComponents {
    entries: [f64; 256],
}

#[inline]
fn idx(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

impl RiemannComponents {
    /// Validates pair antisymmetry, pair exchange and the first Bianchi
    /// identity, each to [`RIEMANN_TOLERANCE`].
    pub fn new(entries: [f64; 256]) -> Result<Self> {
        let r = Self { entries };
        r.check()?;
        Ok(r)
    }

    /// Builds a tensor from a closure over index quadruples.
    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut entries = [0.0; 256];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        entries[idx(a, b, c, d)] = f(a, b, c, d);
                    }
                }
            }
        }
        Self::new(entries)
    }

    pub fn zero() -> Self {
        Self {
            entries: [0.0; 256],
        }
    }

    /// Tensor whose only nonzero components are the electric part
    /// `R_0i0j = E_ij` and the partners the symmetries demand.
    pub fn from_electric(tidal: &TidalMatrix) -> Self {
        let mut entries = [0.0; 256];
        let d = tidal.dim();
        for i in 0..d {
            for j in 0..d {
                let e = tidal.get(i, j);
                let (a, b) = (i + 1, j + 1);
                entries[idx(0, a, 0, b)] = e;
                entries[idx(a, 0, b, 0)] = e;
                entries[idx(a, 0, 0, b)] = -e;
                entries[idx(0, a, b, 0)] = -e;
            }
        }
        Self { entries }
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.entries[idx(a, b, c, d)]
    }

    pub fn entries(&self) -> &[f64; 256] {
        &self.entries
    }

    /// The electric part `R_0i0j` restricted to the first `dim` spatial axes.
    pub fn electric_part(&self, dim: usize) -> Result<TidalMatrix> {
        let mut flat = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                flat[i * dim + j] = self.get(0, i + 1, 0, j + 1);
            }
        }
        TidalMatrix::from_row_major(dim, &flat)
    }

    fn check(&self) -> Result<()> {
        let tol = RIEMANN_TOLERANCE;
        if let Some(i) = self.entries.iter().position(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { index: i });
        }
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let r = self.get(a, b, c, d);
                        if (r + self.get(b, a, c, d)).abs() > tol {
                            return Err(SimError::SymmetryViolation(format!(
                                "R[{a}{b}{c}{d}] is not antisymmetric in its first pair"
                            )));
                        }
                        if (r + self.get(a, b, d, c)).abs() > tol {
                            return Err(SimError::SymmetryViolation(format!(
                                "R[{a}{b}{c}{d}] is not antisymmetric in its second pair"
                            )));
                        }
                        if (r - self.get(c, d, a, b)).abs() > tol {
                            return Err(SimError::SymmetryViolation(format!(
                                "R[{a}{b}{c}{d}] breaks pair exchange"
                            )));
                        }
                        let cyclic = r + self.get(a, c, d, b) + self.get(a, d, b, c);
                        if cyclic.abs() > tol {
                            return Err(SimError::SymmetryViolation(format!(
                                "first Bianchi identity fails at R[{a}{b}{c}{d}] by {cyclic:e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Spacetime metric in Fermi normal coordinates, accurate to second order
/// in distance from the reference worldline.
///
/// `x` holds up to three spatial coordinates; missing ones are zero. The
/// time-space block uses `g_0i = -(2/3) R_0jik x^j x^k`, so that the line
/// element cross term `2 g_0i dt dx^i` carries the `-(4/3)` coefficient.
pub fn metric_at(x: &[f64], riemann: &RiemannComponents) -> Result<[[f64; 4]; 4]> {
    if x.len() > 3 {
        return Err(SimError::SizeMismatch {
            expected: 3,
            actual: x.len(),
        });
    }
    let mut pos = [0.0; 3];
    pos[..x.len()].copy_from_slice(x);

    let mut g = [[0.0; 4]; 4];
    let mut g00 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            g00 += riemann.get(0, i + 1, 0, j + 1) * pos[i] * pos[j];
        }
    }
    g[0][0] = -(1.0 + g00);

    for i in 0..3 {
        let mut acc = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                acc += riemann.get(0, j + 1, i + 1, k + 1) * pos[j] * pos[k];
            }
        }
        g[0][i + 1] = -(2.0 / 3.0) * acc;
        g[i + 1][0] = g[0][i + 1];
    }

    for i in 0..3 {
        for j in i..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    acc += riemann.get(i + 1, k + 1, j + 1, l + 1) * pos[k] * pos[l];
                }
            }
            let delta = if i == j { 1.0 } else { 0.0 };
            g[i + 1][j + 1] = delta - acc / 3.0;
            g[j + 1][i + 1] = g[i + 1][j + 1];
        }
    }
    Ok(g)
}
