//! Uniform periodic lattice, its conjugate wavenumber lattice, and unitary
//! discrete Fourier transforms over it.
//!
//! Layout is row-major: the last axis varies fastest. Wavenumbers follow the
//! standard DFT order `[0, 1, …, N/2-1, -N/2, …, -1] · 2π/L`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SimError};

/// Complex samples on a [`SpectralGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if let Some(index) = values
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(SimError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// Uniform periodic Cartesian grid on `[-L/2, L/2)^d` with `N` points per axis.
#[derive(Clone)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    extent: f64,
    positions: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("extent", &self.extent)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.extent == other.extent
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SimError::InvalidParameter(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SimError::InvalidParameter(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "extent must be positive, got {extent}"
            )));
        }
        let dx = extent / n as f64;
        let positions = (0..n).map(|i| -0.5 * extent + i as f64 * dx).collect();
        let dk = 2.0 * PI / extent;
        let wavenumbers = (0..n).map(|i| dk * mode_index(i, n) as f64).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            dim,
            n,
            extent,
            positions,
            wavenumbers,
            forward,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Total number of nodes, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn k_max(&self) -> f64 {
        PI * self.n as f64 / self.extent
    }

    /// Node coordinates along one axis.
    pub fn axis_positions(&self) -> &[f64] {
        &self.positions
    }

    /// Wavenumbers along one axis, in DFT order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Per-axis node indices of a flat index.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index
            .iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.n + i)
    }

    /// Position of a flat node, padded with zeros beyond `dim`.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let ix = self.unravel(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.positions[ix[a]];
        }
        x
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let ix = self.unravel(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumbers[ix[a]];
        }
        k
    }

    pub fn empty_field(&self) -> ComplexField {
        ComplexField::zeros(self.len())
    }

    /// Unitary forward transform: `F_m = N^{-d/2} Σ_n f_n e^{-2πi n·m/N}`.
    pub fn forward_transform(&self, f: &ComplexField) -> Result<ComplexField> {
        self.check_len(f.len())?;
        let mut out = f.clone();
        self.forward_in_place(out.values_mut());
        Ok(out)
    }

    /// Inverse of [`forward_transform`](Self::forward_transform).
    pub fn inverse_transform(&self, f: &ComplexField) -> Result<ComplexField> {
        self.check_len(f.len())?;
        let mut out = f.clone();
        self.inverse_in_place(out.values_mut());
        Ok(out)
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform_in_place(data, &self.forward);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform_in_place(data, &self.inverse);
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(SimError::SizeMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }

    fn transform_in_place(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "field size does not match grid");
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
        let norm = (self.len() as f64).sqrt().recip();
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

/// Signed mode number for DFT index `i` on `n` points.
pub fn mode_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SpectralGrid::new(1, 7, 1.0).is_err());
        assert!(SpectralGrid::new(1, 6, 1.0).is_err());
        assert!(SpectralGrid::new(4, 8, 1.0).is_err());
        assert!(SpectralGrid::new(1, 8, 0.0).is_err());
    }

    #[test]
    fn lattice_properties() {
        let g = SpectralGrid::new(2, 16, 4.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.cell_volume(), 0.0625);
        assert_eq!(g.k_max(), PI * 4.0);
        let msum: i64 = (0..16).map(|i| mode_index(i, 16)).sum();
        assert_eq!(msum, -8);
        assert_eq!(g.axis_positions()[0], -2.0);
        assert_eq!(g.axis_wavenumbers()[8], -g.k_max());
        for flat in [0, 17, 255] {
            let ix = g.unravel(flat);
            assert_eq!(g.ravel(&ix[..2]), flat);
        }
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let g = SpectralGrid::new(1, 8, 1.0).unwrap();
        let mut f = g.empty_field();
        f.values_mut()[0] = c(1.0, 0.0);
        let spec = g.forward_transform(&f).unwrap();
        for v in spec.values() {
            assert!((v.norm() - 8f64.powf(-0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn plane_wave_is_single_mode() {
        let g = SpectralGrid::new(1, 16, 3.0).unwrap();
        let k1 = g.axis_wavenumbers()[3];
        let vals = g
            .axis_positions()
            .iter()
            .map(|&x| Complex64::from_polar(1.0, k1 * x))
            .collect();
        let spec = g
            .forward_transform(&ComplexField::new(vals).unwrap())
            .unwrap();
        for (i, v) in spec.values().iter().enumerate() {
            if i == 3 {
                assert!((v.norm() - 4.0).abs() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12, "mode {i}: {v}");
            }
        }
    }

    #[test]
    fn zero_and_single_mode_inverse() {
        let g = SpectralGrid::new(2, 8, 1.0).unwrap();
        let zero = g.inverse_transform(&g.empty_field()).unwrap();
        assert!(zero.values().iter().all(|v| *v == c(0.0, 0.0)));

        let mut spec = g.empty_field();
        spec.values_mut()[g.ravel(&[1, 2])] = c(1.0, 0.0);
        let wave = g.inverse_transform(&spec).unwrap();
        for v in wave.values() {
            assert!((v.norm() - 1.0 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn size_mismatch() {
        let g = SpectralGrid::new(1, 8, 1.0).unwrap();
        let f = ComplexField::zeros(9);
        assert!(matches!(
            g.forward_transform(&f),
            Err(SimError::SizeMismatch {
                expected: 8,
                actual: 9
            })
        ));
        assert!(matches!(
            g.inverse_transform(&f),
            Err(SimError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(ComplexField::new(vec![c(f64::NAN, 0.0)]).is_err());
    }
}
