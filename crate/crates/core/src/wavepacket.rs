//! Wave-function state and its de Broglie observables.
//!
//! The stored field is the slow part `ψ` of `Ψ = e^{-2πiμt} ψ`. The rest-mass
//! factor is a global phase; it is tracked through [`WaveFunction::time`] and
//! only applied on request by [`WaveFunction::full_wave`].
//!
//! Momentum follows `p = k/2π`, so a packet moving at velocity `v` carries
//! wavenumber `2πμv` and the mean velocity is `⟨k⟩/(2πμ)`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::spectral_grid::{ComplexField, SpectralGrid};

/// Largest initial speed accepted by [`make_packet`].
pub const MAX_INITIAL_SPEED: f64 = 0.05;

/// Envelope family for [`make_packet`].
///
/// Widths are the standard deviation of `|ψ|²`. Skew and double-peak
/// structure lie along the first axis; other axes are Gaussian with the
/// same width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PacketShape {
    /// One width per axis, or a single width used on every axis.
    Gaussian { sigma: Vec<f64> },
    /// Skew-normal density `2 φ(z) Φ(skew·z)` with `z = (x-c)/σ`, recentred so
    /// that its mean sits at the requested position.
    SkewedGaussian { sigma: f64, skew: f64 },
    /// Two in-phase Gaussians at `x0 ± separation/2`.
    DoublePeak { sigma: f64, separation: f64 },
    /// Tabulated 1D amplitude `(x, re, im)`, sampled onto the grid by nearest
    /// node. Table positions are taken relative to the packet centre.
    CustomTable { samples: Vec<(f64, f64, f64)> },
}

impl PacketShape {
    pub fn gaussian(sigma: f64) -> Self {
        PacketShape::Gaussian { sigma: vec![sigma] }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PacketShape::Gaussian { .. } => "gaussian",
            PacketShape::SkewedGaussian { .. } => "skewed_gaussian",
            PacketShape::DoublePeak { .. } => "double_peak",
            PacketShape::CustomTable { .. } => "custom_table",
        }
    }

    /// Reads a `position,re,im` table. Lines starting with `#` and a
    /// non-numeric header row are skipped.
    pub fn from_table_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut samples = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SimError::Table(e.to_string()))?;
            if rec.len() != 3 {
                return Err(SimError::Table(format!(
                    "row {} has {} columns, expected position,re,im",
                    line + 1,
                    rec.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) => samples.push((v[0], v[1], v[2])),
                Err(_) if line == 0 && samples.is_empty() => continue,
                Err(e) => return Err(SimError::Table(format!("row {}: {e}", line + 1))),
            }
        }
        if samples.is_empty() {
            return Err(SimError::Table("table has no samples".into()));
        }
        if samples
            .iter()
            .any(|s| !(s.0.is_finite() && s.1.is_finite() && s.2.is_finite()))
        {
            return Err(SimError::Table("table contains non-finite values".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(PacketShape::CustomTable { samples })
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| SimError::Table(format!("{}: {e}", path.display())))?;
        Self::from_table_reader(file)
    }

    /// Widths per axis, or `None` for tabulated shapes.
    fn widths(&self, dim: usize) -> Result<Option<Vec<f64>>> {
        let w = match self {
            PacketShape::Gaussian { sigma } => match sigma.len() {
                1 => vec![sigma[0]; dim],
                n if n == dim => sigma.clone(),
                n => {
                    return Err(SimError::InvalidParameter(format!(
                        "gaussian needs 1 or {dim} widths, got {n}"
                    )))
                }
            },
            PacketShape::SkewedGaussian { sigma, .. } | PacketShape::DoublePeak { sigma, .. } => {
                vec![*sigma; dim]
            }
            PacketShape::CustomTable { .. } => return Ok(None),
        };
        Ok(Some(w))
    }
}

/// Wave function on a spectral grid, with the rest-mass phase carried
/// analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: SpectralGrid,
    psi: ComplexField,
    mass: f64,
    time: f64,
}

impl WaveFunction {
    /// Wraps an existing field. No normalization is applied.
    pub fn new(grid: SpectralGrid, psi: ComplexField, mass: f64, time: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(SimError::SizeMismatch {
                expected: grid.len(),
                actual: psi.len(),
            });
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        Ok(Self {
            grid,
            psi,
            mass,
            time,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    pub(crate) fn psi_mut(&mut self) -> &mut [Complex64] {
        self.psi.values_mut()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Proper time of the frame origin.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.time += dt;
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Phase of the factored rest-mass term, `-2πμt`.
    pub fn rest_mass_phase(&self) -> f64 {
        -2.0 * PI * self.mass * self.time
    }

    /// The full field `Ψ = e^{-2πiμt} ψ`.
    pub fn full_wave(&self) -> ComplexField {
        let phase = Complex64::from_polar(1.0, self.rest_mass_phase());
        let values = self.psi.values().iter().map(|v| v * phase).collect();
        ComplexField::new(values).expect("unit phase keeps values finite")
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.psi.clone(), mass, self.time)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(SimError::InvalidParameter(
                "cannot normalize a zero field".into(),
            ));
        }
        self.psi.scale(n.sqrt().recip());
        Ok(())
    }

    /// Multiplies the field by `e^{i q·x}`.
    pub fn boosted(&self, q: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, v) in out.psi.values_mut().iter_mut().enumerate() {
            let x = self.grid.position(i);
            let phase: f64 = q.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            *v *= Complex64::from_polar(1.0, phase);
        }
        out
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let mut out = self.clone();
        out.psi
            .values_mut()
            .iter_mut()
            .for_each(|v| *v *= Complex64::from_polar(1.0, theta));
        out
    }

    /// `Σ |ψ|² dV`.
    pub fn norm(&self) -> f64 {
        self.psi.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `Σ x |ψ|² dV`.
    pub fn mean_position(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let mut acc = vec![0.0; d];
        for (i, v) in self.psi.values().iter().enumerate() {
            let p = v.norm_sqr();
            let x = self.grid.position(i);
            for a in 0..d {
                acc[a] += x[a] * p;
            }
        }
        let dv = self.grid.cell_volume();
        acc.iter_mut().for_each(|a| *a *= dv);
        acc
    }

    /// Unitary spectrum `A(k)` of the slow field.
    pub fn spectrum(&self) -> ComplexField {
        let mut spec = self.psi.clone();
        self.grid.forward_in_place(spec.values_mut());
        spec
    }

    /// Spectral centroid `dV Σ |A(k)|² k`.
    pub fn mean_wavevector(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let spec = self.spectrum();
        let mut acc = vec![0.0; d];
        for (i, v) in spec.values().iter().enumerate() {
            let p = v.norm_sqr();
            let k = self.grid.wavevector(i);
            for a in 0..d {
                acc[a] += k[a] * p;
            }
        }
        let dv = self.grid.cell_volume();
        acc.iter_mut().for_each(|a| *a *= dv);
        acc
    }

    /// Mean velocity from the spectrum, `⟨k⟩/(2πμ)`.
    pub fn mean_velocity_spectral(&self) -> Vec<f64> {
        let scale = (2.0 * PI * self.mass).recip();
        self.mean_wavevector()
            .into_iter()
            .map(|k| k * scale)
            .collect()
    }

    /// Mean velocity from the real-space velocity density
    /// `Im(ψ* ∇ψ)/(2πμ)`, with `∇` taken spectrally.
    pub fn mean_velocity_realspace(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let spec = self.spectrum();
        let dv = self.grid.cell_volume();
        let mut out = vec![0.0; d];
        let mut deriv = vec![Complex64::new(0.0, 0.0); spec.len()];
        for (a, slot) in out.iter_mut().enumerate() {
            for (i, (dst, src)) in deriv.iter_mut().zip(spec.values()).enumerate() {
                *dst = Complex64::new(0.0, self.grid.wavevector(i)[a]) * src;
            }
            self.grid.inverse_in_place(&mut deriv);
            let flux: f64 = self
                .psi
                .values()
                .iter()
                .zip(&deriv)
                .map(|(p, g)| (p.conj() * g).im)
                .sum();
            *slot = flux * dv / (2.0 * PI * self.mass);
        }
        out
    }

    /// `Σ (x-⟨x⟩)(x-⟨x⟩)ᵀ |ψ|² dV`, as rows.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.grid.dim();
        let mean = self.mean_position();
        let mut cov = vec![vec![0.0; d]; d];
        for (i, v) in self.psi.values().iter().enumerate() {
            let p = v.norm_sqr();
            let x = self.grid.position(i);
            for a in 0..d {
                let da = x[a] - mean[a];
                for b in a..d {
                    cov[a][b] += da * (x[b] - mean[b]) * p;
                }
            }
        }
        let dv = self.grid.cell_volume();
        for a in 0..d {
            for b in a..d {
                cov[a][b] *= dv;
                cov[b][a] = cov[a][b];
            }
        }
        cov
    }

    /// Probability inside the band of width `fraction · L` along every
    /// domain face.
    pub fn boundary_mass(&self, fraction: f64) -> f64 {
        let limit = 0.5 * self.grid.extent() - fraction * self.grid.extent();
        let d = self.grid.dim();
        let mut acc = 0.0;
        for (i, v) in self.psi.values().iter().enumerate() {
            let x = self.grid.position(i);
            if x[..d].iter().any(|c| c.abs() > limit) {
                acc += v.norm_sqr();
            }
        }
        acc * self.grid.cell_volume()
    }
}

fn gaussian_amp(x: f64, center: f64, sigma: f64) -> f64 {
    let z = (x - center) / sigma;
    (-0.25 * z * z).exp()
}

fn skewed_amp(x: f64, center: f64, sigma: f64, skew: f64) -> f64 {
    let z = (x - center) / sigma;
    let cdf2 = 1.0 + libm::erf(skew * z / std::f64::consts::SQRT_2);
    (-0.25 * z * z).exp() * cdf2.max(0.0).sqrt()
}

/// Builds a normalized packet centred at `x0` and moving at `v0`.
///
/// The envelope is multiplied by `e^{i 2πμ v0·x}`. Preconditions keep the
/// packet away from the periodic boundary and its spectrum away from the
/// lattice edge.
pub fn make_packet(
    grid: &SpectralGrid,
    shape: &PacketShape,
    x0: &[f64],
    v0: &[f64],
    mass: f64,
) -> Result<WaveFunction> {
    let d = grid.dim();
    for v in [x0, v0] {
        if v.len() != d {
            return Err(SimError::SizeMismatch {
                expected: d,
                actual: v.len(),
            });
        }
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let speed = v0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if speed > MAX_INITIAL_SPEED {
        return Err(SimError::VelocityTooHigh {
            speed,
            limit: MAX_INITIAL_SPEED,
        });
    }
    let extent = grid.extent();
    if let Some(a) = x0.iter().position(|c| c.abs() > 0.25 * extent) {
        return Err(SimError::PacketTooWide(format!(
            "centre {} on axis {a} lies outside the central half of the domain",
            x0[a]
        )));
    }

    let widths = shape.widths(d)?;
    if let Some(w) = &widths {
        if let Some(s) = w.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(SimError::InvalidParameter(format!(
                "width must be positive, got {s}"
            )));
        }
        if let Some(s) = w.iter().find(|s| **s > extent / 8.0) {
            return Err(SimError::PacketTooWide(format!(
                "width {s} exceeds L/8 = {}",
                extent / 8.0
            )));
        }
    }
    match shape {
        PacketShape::DoublePeak { separation, .. } => {
            if !(*separation >= 0.0) || *separation >= extent / 4.0 {
                return Err(SimError::PacketTooWide(format!(
                    "peak separation {separation} must lie in [0, L/4 = {})",
                    extent / 4.0
                )));
            }
        }
        PacketShape::SkewedGaussian { skew, .. } if !skew.is_finite() => {
            return Err(SimError::InvalidParameter("skew must be finite".into()));
        }
        PacketShape::CustomTable { .. } if d != 1 => {
            return Err(SimError::InvalidParameter(
                "tabulated packets are one-dimensional".into(),
            ));
        }
        _ => {}
    }

    let k0 = 2.0 * PI * mass * speed;
    let k_max = grid.k_max();
    if k0 > 0.5 * k_max {
        return Err(SimError::AliasRisk(format!(
            "boost wavenumber {k0} exceeds k_max/2 = {}",
            0.5 * k_max
        )));
    }
    if let Some(w) = &widths {
        let narrowest = w.iter().cloned().fold(f64::INFINITY, f64::min);
        if k0 + 4.0 / narrowest > k_max {
            return Err(SimError::AliasRisk(format!(
                "boost wavenumber {k0} plus spectral width 4/σ = {} exceeds k_max = {k_max}",
                4.0 / narrowest
            )));
        }
    }

    let axis = grid.axis_positions();
    // per-axis envelope profiles; the full envelope is their product
    let mut profiles: Vec<Vec<f64>> = Vec::with_capacity(d);
    for a in 0..d {
        let profile: Vec<f64> = match (shape, a) {
            (PacketShape::SkewedGaussian { sigma, skew }, 0) => {
                recentred_profile(axis, x0[0], |x, c| skewed_amp(x, c, *sigma, *skew))
            }
            (PacketShape::DoublePeak { sigma, separation }, 0) => {
                let h = 0.5 * separation;
                axis.iter()
                    .map(|&x| {
                        gaussian_amp(x, x0[0] - h, *sigma) + gaussian_amp(x, x0[0] + h, *sigma)
                    })
                    .collect()
            }
            (PacketShape::CustomTable { samples }, _) => resample_nearest(axis, samples, x0[0]).0,
            _ => {
                let w = widths.as_ref().expect("analytic shape has widths");
                axis.iter().map(|&x| gaussian_amp(x, x0[a], w[a])).collect()
            }
        };
        profiles.push(profile);
    }
    let imag_profile = match shape {
        PacketShape::CustomTable { samples } => Some(resample_nearest(axis, samples, x0[0]).1),
        _ => None,
    };

    let q: Vec<f64> = v0.iter().map(|v| 2.0 * PI * mass * v).collect();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let ix = grid.unravel(i);
        let x = grid.position(i);
        let mut amp = Complex64::new(1.0, 0.0);
        for a in 0..d {
            amp *= profiles[a][ix[a]];
        }
        if let Some(im) = &imag_profile {
            amp = Complex64::new(profiles[0][ix[0]], im[ix[0]]);
        }
        let phase: f64 = (0..d).map(|a| q[a] * x[a]).sum();
        values.push(amp * Complex64::from_polar(1.0, phase));
    }
    let mut wf = WaveFunction::new(grid.clone(), ComplexField::new(values)?, mass, 0.0)?;
    wf.normalize()?;
    Ok(wf)
}

/// Shifts the profile centre until the discrete mean of `|f|²` equals `target`.
fn recentred_profile(axis: &[f64], target: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut centre = target;
    let mut profile: Vec<f64> = axis.iter().map(|&x| f(x, centre)).collect();
    for _ in 0..50 {
        let (mut w, mut m) = (0.0, 0.0);
        for (x, p) in axis.iter().zip(&profile) {
            w += p * p;
            m += x * p * p;
        }
        let shift = target - m / w;
        if shift.abs() < 1e-15 * (1.0 + target.abs()) {
            break;
        }
        centre += shift;
        profile = axis.iter().map(|&x| f(x, centre)).collect();
    }
    profile
}

/// Nearest-sample lookup of `(re, im)` at each node; nodes outside the
/// table span get zero. Table positions are offsets from `centre`.
fn resample_nearest(
    axis: &[f64],
    samples: &[(f64, f64, f64)],
    centre: f64,
) -> (Vec<f64>, Vec<f64>) {
    let lo = samples.first().map(|s| s.0).unwrap_or(0.0) + centre;
    let hi = samples.last().map(|s| s.0).unwrap_or(0.0) + centre;
    let mut re = Vec::with_capacity(axis.len());
    let mut im = Vec::with_capacity(axis.len());
    for &x in axis {
        if x < lo || x > hi {
            re.push(0.0);
            im.push(0.0);
            continue;
        }
        let rel = x - centre;
        let pos = samples.partition_point(|s| s.0 < rel);
        let best = if pos == 0 {
            0
        } else if pos == samples.len() {
            samples.len() - 1
        } else if (samples[pos].0 - rel).abs() < (rel - samples[pos - 1].0).abs() {
            pos
        } else {
            pos - 1
        };
        re.push(samples[best].1);
        im.push(samples[best].2);
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(1, 256, 20.0).unwrap()
    }

    #[test]
    fn centred_gaussian_at_rest() {
        let wf = make_packet(&grid(), &PacketShape::gaussian(1.0), &[0.0], &[0.0], 100.0).unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-10);
        assert!(wf.mean_position()[0].abs() < 1e-10);
        assert!(wf.mean_velocity_spectral()[0].abs() < 1e-10);
        assert_eq!(wf.time(), 0.0);
    }

    #[test]
    fn boosted_gaussian_velocity() {
        let wf = make_packet(&grid(), &PacketShape::gaussian(1.0), &[0.0], &[0.01], 100.0).unwrap();
        // independent centroid: Σ|A|²k / Σ|A|² over the raw FFT of the samples
        let spec = wf.spectrum();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, a) in spec.values().iter().enumerate() {
            num += a.norm_sqr() * wf.grid().axis_wavenumbers()[i];
            den += a.norm_sqr();
        }
        let oracle = num / den / (2.0 * PI * 100.0);
        assert!((oracle - 0.01).abs() < 1e-8);
        assert!((wf.mean_velocity_spectral()[0] - 0.01).abs() < 1e-8);
        assert!((wf.mean_velocity_realspace()[0] - 0.01).abs() < 1e-8);
    }

    #[test]
    fn double_peak_is_mirror_symmetric() {
        let shape = PacketShape::DoublePeak {
            sigma: 0.5,
            separation: 4.0,
        };
        let wf = make_packet(&grid(), &shape, &[0.0], &[0.0], 100.0).unwrap();
        assert!(wf.mean_position()[0].abs() < 1e-10);
        // a² + σ², up to the e^{-a²/2σ²} peak overlap
        let var = wf.covariance()[0][0];
        assert!((var - (4.0 + 0.25)).abs() < 5e-3, "{var}");
    }

    #[test]
    fn skewed_gaussian_mean_is_recentred() {
        let shape = PacketShape::SkewedGaussian {
            sigma: 1.0,
            skew: 3.0,
        };
        let wf = make_packet(&grid(), &shape, &[1.5], &[0.0], 100.0).unwrap();
        assert!((wf.mean_position()[0] - 1.5).abs() < 1e-10);
        let sk: f64 = {
            let m = wf.mean_position()[0];
            let dv = wf.grid().cell_volume();
            wf.psi()
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| (wf.grid().position(i)[0] - m).powi(3) * v.norm_sqr())
                .sum::<f64>()
                * dv
        };
        assert!(sk > 0.0, "positive skew expected, got {sk}");
    }

    #[test]
    fn norm_scales_quadratically() {
        let wf = make_packet(&grid(), &PacketShape::gaussian(1.0), &[1.0], &[0.0], 100.0).unwrap();
        let mut doubled = wf.clone();
        doubled.psi_mut().iter_mut().for_each(|v| *v *= 2.0);
        assert!((doubled.norm() - 4.0 * wf.norm()).abs() < 1e-12);
    }

    #[test]
    fn shift_by_one_cell_moves_mean_by_spacing() {
        let g = grid();
        let wf = make_packet(&g, &PacketShape::gaussian(1.0), &[1.0], &[0.0], 100.0).unwrap();
        let mut shifted = wf.clone();
        let vals = wf.psi().values();
        let n = vals.len();
        for i in 0..n {
            shifted.psi_mut()[(i + 1) % n] = vals[i];
        }
        let delta = shifted.mean_position()[0] - wf.mean_position()[0];
        assert!((delta - g.spacing()).abs() < 1e-12);
    }

    #[test]
    fn real_field_has_no_velocity() {
        let wf = make_packet(&grid(), &PacketShape::gaussian(0.7), &[1.0], &[0.0], 50.0).unwrap();
        assert!(wf.mean_velocity_spectral()[0].abs() < 1e-12);
        assert!(wf.mean_velocity_realspace()[0].abs() < 1e-12);
    }

    #[test]
    fn plane_wave_velocity_is_exact() {
        let g = SpectralGrid::new(1, 32, 4.0).unwrap();
        let k1 = g.axis_wavenumbers()[5];
        let vals = g
            .axis_positions()
            .iter()
            .map(|&x| Complex64::from_polar(0.5, k1 * x))
            .collect();
        let wf = WaveFunction::new(g, ComplexField::new(vals).unwrap(), 3.0, 0.0).unwrap();
        let expected = k1 / (2.0 * PI * 3.0);
        assert!((wf.mean_velocity_spectral()[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn construction_guards() {
        let g = grid();
        let err = |shape: PacketShape, x0: f64, v0: f64, mu: f64| {
            make_packet(&g, &shape, &[x0], &[v0], mu).unwrap_err()
        };
        assert!(matches!(
            err(PacketShape::gaussian(3.0), 0.0, 0.0, 100.0),
            SimError::PacketTooWide(_)
        ));
        assert!(matches!(
            err(PacketShape::gaussian(1.0), 6.0, 0.0, 100.0),
            SimError::PacketTooWide(_)
        ));
        assert!(matches!(
            err(
                PacketShape::DoublePeak {
                    sigma: 0.5,
                    separation: 5.0
                },
                0.0,
                0.0,
                100.0
            ),
            SimError::PacketTooWide(_)
        ));
        assert!(matches!(
            err(PacketShape::gaussian(1.0), 0.0, 0.06, 100.0),
            SimError::VelocityTooHigh { .. }
        ));
        // k0 = 2π·100·0.05 ≈ 31.4 > k_max/2 ≈ 20.1
        assert!(matches!(
            err(PacketShape::gaussian(1.0), 0.0, 0.05, 100.0),
            SimError::AliasRisk(_)
        ));
        // k0 ≈ 12.6 fine, but 4/σ = 40 pushes past k_max
        assert!(matches!(
            err(PacketShape::gaussian(0.1), 0.0, 0.02, 100.0),
            SimError::AliasRisk(_)
        ));
        assert!(matches!(
            err(PacketShape::gaussian(-1.0), 0.0, 0.0, 100.0),
            SimError::InvalidParameter(_)
        ));
        assert!(matches!(
            err(PacketShape::gaussian(1.0), 0.0, 0.0, 0.0),
            SimError::InvalidParameter(_)
        ));
    }

    #[test]
    fn rest_phase_is_metadata_only() {
        let mut wf =
            make_packet(&grid(), &PacketShape::gaussian(1.0), &[0.0], &[0.0], 100.0).unwrap();
        let before = wf.psi().clone();
        wf.advance_time(0.25);
        assert_eq!(wf.psi(), &before);
        assert!((wf.rest_mass_phase() + 2.0 * PI * 25.0).abs() < 1e-12);
        let full = wf.full_wave();
        let expected = before.values()[100] * Complex64::from_polar(1.0, -50.0 * PI);
        assert!((full.values()[100] - expected).norm() < 1e-12);
    }

    #[test]
    fn table_reader() {
        let text = "x,re,im\n# comment\n-1.0,0.5,0.0\n0.0,1.0,0.0\n1.0,0.5,0.0\n";
        let shape = PacketShape::from_table_reader(text.as_bytes()).unwrap();
        let g = SpectralGrid::new(1, 16, 8.0).unwrap();
        let wf = make_packet(&g, &shape, &[0.0], &[0.0], 10.0).unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-12);
        // nodes at -1.0, -0.5, 0.0, 0.5, 1.0 are covered by the table
        let nonzero = wf.psi().values().iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzero, 5);
        assert!(PacketShape::from_table_reader("1,2\n".as_bytes()).is_err());
        assert!(PacketShape::from_table_reader("".as_bytes()).is_err());
    }
}
