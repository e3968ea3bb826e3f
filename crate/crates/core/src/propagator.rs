//! Split-step evolution: free dispersion in the spectral domain, interleaved
//! with the phase imprinted by position-dependent clock rates.
//!
//! Over a step `δt` the clock at `x` runs `½ x·R·x δt` ahead of the origin, so
//! the rest-mass phase `2πμτ` picks up `-πμ (x·R·x) δt` there. Both substeps
//! are pointwise unit-modulus multiplications and therefore exactly unitary.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curvature::{validate_tidal_with, TidalMatrix, DEFAULT_VALIDITY_THRESHOLD};
use crate::error::{Result, SimError};
use crate::spectral_grid::SpectralGrid;
use crate::wavepacket::WaveFunction;

/// Operator-splitting composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScheme {
    /// Kinetic then tidal; first order.
    Lie,
    /// Half tidal, kinetic, half tidal; second order.
    Strang,
}

impl StepScheme {
    pub fn name(self) -> &'static str {
        match self {
            StepScheme::Lie => "lie",
            StepScheme::Strang => "strang",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    /// Width of the monitored band along each face, as a fraction of `L`.
    pub boundary_margin_fraction: f64,
    /// Largest probability tolerated inside the band.
    pub boundary_mass_tol: f64,
    /// Imprint `2πμ(sqrt(1+x·R·x) - 1)δt` instead of the first-order phase.
    pub exact_rate: bool,
    pub validity_threshold: f64,
}

impl EvolveConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            record_every: 1,
            boundary_margin_fraction: 0.1,
            boundary_mass_tol: 1e-8,
            exact_rate: false,
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
        }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.n_steps == 0 || self.record_every == 0 {
            return Err(SimError::InvalidParameter(
                "steps and record_every must be positive".into(),
            ));
        }
        if !(self.boundary_margin_fraction > 0.0 && self.boundary_margin_fraction < 0.5) {
            return Err(SimError::InvalidParameter(format!(
                "boundary margin fraction must lie in (0, 0.5), got {}",
                self.boundary_margin_fraction
            )));
        }
        if !(self.boundary_mass_tol > 0.0) {
            return Err(SimError::InvalidParameter(
                "boundary mass tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_kinetic_step(grid: &SpectralGrid, mass: f64, dt: f64) -> Result<()> {
    let phase = dt * grid.k_max().powi(2) / (4.0 * PI * mass);
    if phase >= PI {
        return Err(SimError::StepTooLarge(format!(
            "kinetic phase per step at k_max is {phase}, must stay below pi"
        )));
    }
    Ok(())
}

fn check_tidal_step(
    grid: &SpectralGrid,
    tidal: &TidalMatrix,
    mass: f64,
    dt: f64,
    threshold: f64,
) -> Result<()> {
    if tidal.dim() != grid.dim() {
        return Err(SimError::SizeMismatch {
            expected: grid.dim(),
            actual: tidal.dim(),
        });
    }
    let half = 0.5 * grid.extent();
    let phase = dt * tidal.max_abs() * half * half * PI * mass;
    if phase >= PI {
        return Err(SimError::StepTooLarge(format!(
            "tidal phase per step at the domain edge is {phase}, must stay below pi"
        )));
    }
    let report = validate_tidal_with(tidal, grid.extent(), false, threshold)?;
    if !report.ok {
        return Err(SimError::OutsideValidity(report.messages.join("; ")));
    }
    Ok(())
}

/// Imprinted phase at every node for a lapse `dt`.
pub fn tidal_phase(
    grid: &SpectralGrid,
    tidal: &TidalMatrix,
    mass: f64,
    dt: f64,
    exact_rate: bool,
) -> Result<Vec<f64>> {
    let d = grid.dim();
    (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let q = tidal.quadratic_form(&x[..d]);
            if exact_rate {
                let arg = 1.0 + q;
                if arg <= 0.0 {
                    return Err(SimError::OutsideValidity(format!(
                        "1 + x·R·x = {arg} at node {i}"
                    )));
                }
                Ok(-2.0 * PI * mass * (arg.sqrt() - 1.0) * dt)
            } else {
                Ok(-PI * mass * q * dt)
            }
        })
        .collect()
}

fn kinetic_factors(grid: &SpectralGrid, mass: f64, dt: f64) -> Vec<Complex64> {
    let d = grid.dim();
    (0..grid.len())
        .map(|i| {
            let k = grid.wavevector(i);
            let k2: f64 = k[..d].iter().map(|c| c * c).sum();
            Complex64::from_polar(1.0, -k2 * dt / (4.0 * PI * mass))
        })
        .collect()
}

fn apply_kinetic(wf: &mut WaveFunction, factors: &[Complex64], dt: f64) {
    let grid = wf.grid().clone();
    let data = wf.psi_mut();
    grid.forward_in_place(data);
    for (v, f) in data.iter_mut().zip(factors) {
        *v *= f;
    }
    grid.inverse_in_place(data);
    wf.advance_time(dt);
}

fn apply_pointwise(wf: &mut WaveFunction, factors: &[Complex64]) {
    for (v, f) in wf.psi_mut().iter_mut().zip(factors) {
        *v *= f;
    }
}

/// Free evolution over `dt`: each mode picks up `e^{-i k² dt/(4πμ)}`.
/// Advances the frame time.
pub fn kinetic_step(wf: &WaveFunction, dt: f64) -> Result<WaveFunction> {
    check_kinetic_step(wf.grid(), wf.mass(), dt)?;
    let factors = kinetic_factors(wf.grid(), wf.mass(), dt);
    let mut out = wf.clone();
    apply_kinetic(&mut out, &factors, dt);
    Ok(out)
}

/// Time-dilation imprint over `dt`: `ψ → e^{-iπμ (x·R·x) dt} ψ`.
/// Leaves the frame time unchanged.
pub fn tidal_step(wf: &WaveFunction, tidal: &TidalMatrix, dt: f64) -> Result<WaveFunction> {
    check_tidal_step(wf.grid(), tidal, wf.mass(), dt, DEFAULT_VALIDITY_THRESHOLD)?;
    let factors: Vec<Complex64> = tidal_phase(wf.grid(), tidal, wf.mass(), dt, false)?
        .into_iter()
        .map(|p| Complex64::from_polar(1.0, p))
        .collect();
    let mut out = wf.clone();
    apply_pointwise(&mut out, &factors);
    Ok(out)
}

/// Moments of the state at one recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub mean_position: Vec<f64>,
    pub mean_velocity: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl MomentRecord {
    pub fn of(wf: &WaveFunction, step: usize) -> Self {
        Self {
            step,
            t: wf.time(),
            norm: wf.norm(),
            mean_position: wf.mean_position(),
            mean_velocity: wf.mean_velocity_spectral(),
            covariance: wf.covariance(),
        }
    }
}

/// Per-run scalars kept for judging tolerance budgets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub max_boundary_mass: f64,
    /// Largest spectral probability with `|k_a| > 0.9 k_max` on some axis, at records.
    pub max_spectral_edge_mass: f64,
    pub max_norm_drift: f64,
    /// Largest `(|⟨x⟩|² + tr Σ) |⟨v⟩| max|R|`: the neglected velocity
    /// correction to the clock rate.
    pub rate_correction: f64,
    /// Largest `(2π|⟨v⟩|)² (|⟨x⟩|² + tr Σ) μ max|R|`: phase rate dropped by
    /// evaluating the kinetic phase at the origin clock.
    pub dispersion_phase_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub dim: usize,
    pub mass: f64,
    pub records: Vec<MomentRecord>,
    pub diagnostics: RunDiagnostics,
}

impl MomentSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.mean_position.clone())
            .collect()
    }

    pub fn velocities(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.mean_velocity.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub series: MomentSeries,
    pub state: WaveFunction,
}

fn spectral_edge_mass(wf: &WaveFunction) -> f64 {
    let grid = wf.grid();
    let d = grid.dim();
    let cut = 0.9 * grid.k_max();
    let spec = wf.spectrum();
    let total: f64 = spec.values().iter().map(|v| v.norm_sqr()).sum();
    let edge: f64 = spec
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.wavevector(*i)[..d].iter().any(|k| k.abs() > cut))
        .map(|(_, v)| v.norm_sqr())
        .sum();
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// Runs `cfg.n_steps` steps and records moments every `cfg.record_every`
/// steps, starting with the initial state.
pub fn evolve(
    wf: &WaveFunction,
    tidal: &TidalMatrix,
    scheme: StepScheme,
    cfg: &EvolveConfig,
) -> Result<Evolution> {
    evolve_with(wf, tidal, scheme, cfg, |_| {})
}

/// As [`evolve`], handing each record to `on_record` as soon as it exists.
pub fn evolve_with(
    wf: &WaveFunction,
    tidal: &TidalMatrix,
    scheme: StepScheme,
    cfg: &EvolveConfig,
    mut on_record: impl FnMut(&MomentRecord),
) -> Result<Evolution> {
    cfg.check()?;
    let grid = wf.grid().clone();
    let mass = wf.mass();
    check_kinetic_step(&grid, mass, cfg.dt)?;
    check_tidal_step(&grid, tidal, mass, cfg.dt, cfg.validity_threshold)?;

    let kinetic = kinetic_factors(&grid, mass, cfg.dt);
    let tidal_dt = match scheme {
        StepScheme::Lie => cfg.dt,
        StepScheme::Strang => 0.5 * cfg.dt,
    };
    let imprint: Vec<Complex64> = tidal_phase(&grid, tidal, mass, tidal_dt, cfg.exact_rate)?
        .into_iter()
        .map(|p| Complex64::from_polar(1.0, p))
        .collect();
    let skip_imprint = tidal.is_zero();

    let mut state = wf.clone();
    let initial_norm = state.norm();
    let curvature = tidal.max_abs();
    let mut diagnostics = RunDiagnostics::default();
    let mut records = Vec::with_capacity(cfg.n_steps / cfg.record_every + 1);

    let mut record = |state: &WaveFunction, step: usize, diagnostics: &mut RunDiagnostics| {
        let rec = MomentRecord::of(state, step);
        let r2 = rec.mean_position.iter().map(|c| c * c).sum::<f64>()
            + (0..rec.covariance.len())
                .map(|a| rec.covariance[a][a])
                .sum::<f64>();
        let speed = rec.mean_velocity.iter().map(|c| c * c).sum::<f64>().sqrt();
        diagnostics.rate_correction = diagnostics.rate_correction.max(r2 * speed * curvature);
        diagnostics.dispersion_phase_rate = diagnostics
            .dispersion_phase_rate
            .max((2.0 * PI * speed).powi(2) * r2 * mass * curvature);
        diagnostics.max_norm_drift = diagnostics
            .max_norm_drift
            .max((rec.norm - initial_norm).abs());
        diagnostics.max_spectral_edge_mass = diagnostics
            .max_spectral_edge_mass
            .max(spectral_edge_mass(state));
        on_record(&rec);
        records.push(rec);
    };

    let check_boundary = |state: &WaveFunction, step: usize, diagnostics: &mut RunDiagnostics| {
        let mass_in_band = state.boundary_mass(cfg.boundary_margin_fraction);
        diagnostics.max_boundary_mass = diagnostics.max_boundary_mass.max(mass_in_band);
        if mass_in_band > cfg.boundary_mass_tol {
            Err(SimError::BoundaryContact {
                step,
                mass: mass_in_band,
            })
        } else {
            Ok(())
        }
    };

    let t0 = state.time();
    check_boundary(&state, 0, &mut diagnostics)?;
    record(&state, 0, &mut diagnostics);
    for step in 1..=cfg.n_steps {
        match scheme {
            StepScheme::Lie => {
                apply_kinetic(&mut state, &kinetic, cfg.dt);
                if !skip_imprint {
                    apply_pointwise(&mut state, &imprint);
                }
            }
            StepScheme::Strang => {
                if !skip_imprint {
                    apply_pointwise(&mut state, &imprint);
                }
                apply_kinetic(&mut state, &kinetic, cfg.dt);
                if !skip_imprint {
                    apply_pointwise(&mut state, &imprint);
                }
            }
        }
        // t0 + n·δt rather than a running sum, so record times stay exact
        state.set_time(t0 + step as f64 * cfg.dt);
        check_boundary(&state, step, &mut diagnostics)?;
        if step % cfg.record_every == 0 {
            record(&state, step, &mut diagnostics);
        }
    }

    Ok(Evolution {
        series: MomentSeries {
            dim: grid.dim(),
            mass,
            records,
            diagnostics,
        },
        state,
    })
}

/// Mean acceleration from finite differences of the recorded mean velocity.
///
/// Centred differences inside, second-order one-sided differences at the
/// ends. Records must be uniformly spaced.
pub fn acceleration_series(series: &MomentSeries) -> Result<Vec<Vec<f64>>> {
    let n = series.records.len();
    if n < 3 {
        return Err(SimError::TooFewRecords {
            needed: 3,
            actual: n,
        });
    }
    let t = series.times();
    let h = t[1] - t[0];
    if !(h > 0.0) {
        return Err(SimError::NonUniformRecords { index: 1 });
    }
    for i in 2..n {
        if ((t[i] - t[i - 1]) - h).abs() > 1e-9 * h {
            return Err(SimError::NonUniformRecords { index: i });
        }
    }
    let v = series.velocities();
    let d = series.dim;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a: Vec<f64> = (0..d)
            .map(|c| {
                if i == 0 {
                    (-3.0 * v[0][c] + 4.0 * v[1][c] - v[2][c]) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * v[n - 1][c] - 4.0 * v[n - 2][c] + v[n - 3][c]) / (2.0 * h)
                } else {
                    (v[i + 1][c] - v[i - 1][c]) / (2.0 * h)
                }
            })
            .collect();
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_grid::ComplexField;
    use crate::wavepacket::{make_packet, PacketShape};

    fn packet(x0: f64, v0: f64, mass: f64) -> WaveFunction {
        let grid = SpectralGrid::new(1, 256, 20.0).unwrap();
        make_packet(&grid, &PacketShape::gaussian(1.0), &[x0], &[v0], mass).unwrap()
    }

    #[test]
    fn single_mode_kinetic_phase() {
        let grid = SpectralGrid::new(1, 32, 4.0).unwrap();
        let k1 = grid.axis_wavenumbers()[3];
        let vals = grid
            .axis_positions()
            .iter()
            .map(|&x| Complex64::from_polar(1.0, k1 * x))
            .collect();
        let wf = WaveFunction::new(grid, ComplexField::new(vals).unwrap(), 2.0, 0.0).unwrap();
        let dt = 0.01;
        let out = kinetic_step(&wf, dt).unwrap();
        let expected = -k1 * k1 * dt / (4.0 * PI * 2.0);
        for (a, b) in wf.psi().values().iter().zip(out.psi().values()) {
            let dphi = (b / a).arg();
            assert!((dphi - expected).abs() < 1e-12);
        }
        assert_eq!(out.time(), dt);
    }

    #[test]
    fn zero_mode_untouched() {
        let grid = SpectralGrid::new(1, 16, 4.0).unwrap();
        let vals = vec![Complex64::new(0.25, 0.0); 16];
        let wf = WaveFunction::new(grid, ComplexField::new(vals).unwrap(), 2.0, 0.0).unwrap();
        let out = kinetic_step(&wf, 0.3).unwrap();
        for v in out.psi().values() {
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn kinetic_drift_matches_group_velocity() {
        let wf = packet(0.0, 0.01, 100.0);
        let out = kinetic_step(&wf, 0.1).unwrap();
        let v = wf.mean_velocity_spectral()[0];
        assert!((v - 0.01).abs() < 1e-8);
        assert!((out.mean_position()[0] - wf.mean_position()[0] - v * 0.1).abs() < 1e-10);
        assert!((out.mean_velocity_spectral()[0] - v).abs() < 1e-12);
        assert!((out.norm() - wf.norm()).abs() < 1e-12);
    }

    #[test]
    fn tidal_identity_and_symmetric_packet() {
        let wf = packet(0.0, 0.0, 100.0);
        let zero = TidalMatrix::zeros(1).unwrap();
        assert_eq!(tidal_step(&wf, &zero, 0.1).unwrap().psi(), wf.psi());
        let r = TidalMatrix::diagonal(&[1e-4]).unwrap();
        let out = tidal_step(&wf, &r, 0.1).unwrap();
        assert!((out.mean_velocity_spectral()[0] - wf.mean_velocity_spectral()[0]).abs() < 1e-12);
        assert_eq!(out.time(), wf.time());
    }

    #[test]
    fn tidal_kick_off_centre() {
        let wf = packet(2.0, 0.0, 100.0);
        let r = TidalMatrix::diagonal(&[1e-4]).unwrap();
        let out = tidal_step(&wf, &r, 0.1).unwrap();
        let dv = out.mean_velocity_spectral()[0] - wf.mean_velocity_spectral()[0];
        assert!((dv + 2e-5).abs() < 1e-10, "{dv}");
        assert!((out.norm() - wf.norm()).abs() < 1e-12);
        assert!((out.mean_position()[0] - wf.mean_position()[0]).abs() < 1e-12);
    }

    #[test]
    fn step_guards() {
        let wf = packet(0.0, 0.0, 1.0);
        // k_max² dt/(4π) ≥ π needs dt ≥ 4π²/k_max² ≈ 0.024
        assert!(matches!(
            kinetic_step(&wf, 0.05),
            Err(SimError::StepTooLarge(_))
        ));
        let wf = packet(0.0, 0.0, 100.0);
        let r = TidalMatrix::diagonal(&[2e-4]).unwrap();
        // πμ max|R| (L/2)² dt = 0.628·dt
        assert!(matches!(
            tidal_step(&wf, &r, 6.0),
            Err(SimError::StepTooLarge(_))
        ));
        let strong = TidalMatrix::diagonal(&[1e-3]).unwrap();
        assert!(matches!(
            tidal_step(&wf, &strong, 1e-3),
            Err(SimError::OutsideValidity(_))
        ));
    }

    #[test]
    fn free_evolution_is_linear_drift() {
        let wf = packet(-1.0, 0.01, 100.0);
        let zero = TidalMatrix::zeros(1).unwrap();
        let cfg = EvolveConfig::new(0.1, 1000).record_every(10);
        let run = evolve(&wf, &zero, StepScheme::Strang, &cfg).unwrap();
        let r0 = &run.series.records[0];
        for r in &run.series.records {
            assert!((r.mean_velocity[0] - r0.mean_velocity[0]).abs() < 1e-12);
            let drift = r0.mean_position[0] + r0.mean_velocity[0] * r.t;
            assert!((r.mean_position[0] - drift).abs() < 1e-10);
        }
        assert_eq!(run.series.records.len(), 101);
        assert!((run.state.time() - 100.0).abs() < 1e-9);
        let acc = acceleration_series(&run.series).unwrap();
        assert!(acc.iter().all(|a| a[0].abs() < 1e-10));
    }

    #[test]
    fn boundary_monitor_trips() {
        let wf = packet(2.0, 0.04, 50.0);
        let zero = TidalMatrix::zeros(1).unwrap();
        let cfg = EvolveConfig::new(0.1, 5000);
        match evolve(&wf, &zero, StepScheme::Lie, &cfg) {
            Err(SimError::BoundaryContact { step, .. }) => assert!(step > 0 && step < 5000),
            other => panic!("expected boundary contact, got {other:?}"),
        }
        let mut near = EvolveConfig::new(0.1, 10);
        near.boundary_margin_fraction = 0.4;
        assert!(matches!(
            evolve(&wf, &zero, StepScheme::Lie, &near),
            Err(SimError::BoundaryContact { step: 0, .. })
        ));
    }

    #[test]
    fn observer_sees_every_record() {
        let wf = packet(2.0, 0.0, 100.0);
        let r = TidalMatrix::diagonal(&[1e-4]).unwrap();
        let cfg = EvolveConfig::new(0.1, 20).record_every(5);
        let mut seen = Vec::new();
        let run =
            evolve_with(&wf, &r, StepScheme::Strang, &cfg, |rec| seen.push(rec.step)).unwrap();
        assert_eq!(seen, vec![0, 5, 10, 15, 20]);
        assert_eq!(run.series.records.len(), 5);
    }

    #[test]
    fn too_few_records() {
        let series = MomentSeries {
            dim: 1,
            mass: 1.0,
            records: vec![MomentRecord::of(&packet(0.0, 0.0, 1.0), 0); 2],
            diagnostics: RunDiagnostics::default(),
        };
        assert!(matches!(
            acceleration_series(&series),
            Err(SimError::TooFewRecords { .. })
        ));
    }

    #[test]
    fn config_checks() {
        let wf = packet(0.0, 0.0, 100.0);
        let r = TidalMatrix::zeros(1).unwrap();
        let mut cfg = EvolveConfig::new(0.1, 10);
        cfg.record_every = 0;
        assert!(evolve(&wf, &r, StepScheme::Lie, &cfg).is_err());
        let r2 = TidalMatrix::zeros(2).unwrap();
        assert!(matches!(
            evolve(&wf, &r2, StepScheme::Lie, &EvolveConfig::new(0.1, 10)),
            Err(SimError::SizeMismatch { .. })
        ));
    }
}
