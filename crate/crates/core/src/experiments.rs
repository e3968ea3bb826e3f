//! Scripted experiments: mass and shape sweeps for universality of free
//! fall, the single-step wave-vector shift, the adjacent-node phase
//! difference, and splitting-order studies.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{match_metric, rk4_integrate, ClassicalState, Trajectory};
use crate::curvature::TidalMatrix;
use crate::error::{Result, SimError};
use crate::propagator::{
    acceleration_series, evolve, tidal_step, Evolution, EvolveConfig, MomentSeries, StepScheme,
};
use crate::spectral_grid::SpectralGrid;
use crate::wavepacket::{make_packet, PacketShape, WaveFunction};

/// Default sweep threshold, relative to the oscillation amplitude.
pub const DEFAULT_WEP_THRESHOLD: f64 = 1e-8;

/// Relative error the ripple check must stay under.
pub const RIPPLE_TOLERANCE: f64 = 1e-8;

/// Initial moments of sweep variants must agree to this.
pub const INITIAL_MOMENT_TOLERANCE: f64 = 1e-6;

/// One fully specified run: grid, packet, curvature and stepping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dim: usize,
    pub points_per_axis: usize,
    pub extent: f64,
    pub shape: PacketShape,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub mass: f64,
    pub tidal: Vec<f64>,
    pub vacuum: bool,
    pub scheme: StepScheme,
    pub evolve: EvolveConfig,
}

impl Scenario {
    /// The reference 1D setup: N=256, L=20, σ=1, μ=100, R=1e-4, x0=2, v0=0,
    /// Strang steps of 0.1 over a quarter tidal period (T=157).
    pub fn standard() -> Self {
        Self {
            dim: 1,
            points_per_axis: 256,
            extent: 20.0,
            shape: PacketShape::gaussian(1.0),
            x0: vec![2.0],
            v0: vec![0.0],
            mass: 100.0,
            tidal: vec![1e-4],
            vacuum: false,
            scheme: StepScheme::Strang,
            evolve: EvolveConfig::new(0.1, 1570),
        }
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.dim, self.points_per_axis, self.extent)
    }

    pub fn tidal_matrix(&self) -> Result<TidalMatrix> {
        TidalMatrix::from_row_major(self.dim, &self.tidal)
    }

    pub fn packet(&self) -> Result<WaveFunction> {
        make_packet(&self.grid()?, &self.shape, &self.x0, &self.v0, self.mass)
    }

    pub fn total_time(&self) -> f64 {
        self.evolve.dt * self.evolve.n_steps as f64
    }

    /// Evolves the packet and integrates the classical reference from the
    /// packet's initial mean position and velocity.
    pub fn run(&self) -> Result<ScenarioRun> {
        let tidal = self.tidal_matrix()?;
        crate::curvature::validate_tidal_with(
            &tidal,
            self.extent,
            self.vacuum,
            self.evolve.validity_threshold,
        )?;
        let wf = self.packet()?;
        let evolution = evolve(&wf, &tidal, self.scheme, &self.evolve)?;
        let classical = classical_reference(&wf, &tidal, &self.evolve)?;
        let quantum = quantum_trajectory(&evolution.series);
        let deviation = match_metric(&quantum, &classical)?;
        Ok(ScenarioRun {
            evolution,
            classical,
            deviation,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub evolution: Evolution,
    pub classical: Trajectory,
    /// `match_metric` between the mean position and the classical path.
    pub deviation: f64,
}

pub fn quantum_trajectory(series: &MomentSeries) -> Trajectory {
    Trajectory {
        times: series.times(),
        positions: series.positions(),
    }
}

/// RK4 reference at the evolution step, sampled at the record times.
pub fn classical_reference(
    initial: &WaveFunction,
    tidal: &TidalMatrix,
    cfg: &EvolveConfig,
) -> Result<Trajectory> {
    let start = ClassicalState {
        x: initial.mean_position(),
        v: initial.mean_velocity_spectral(),
        t: initial.time(),
    };
    let states = rk4_integrate(&start, tidal, cfg.dt, cfg.n_steps)?;
    Ok(Trajectory::from_states(&states).every(cfg.record_every))
}

/// Predicted and measured change of the spectral centroid over one tidal step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RippleReport {
    pub predicted: Vec<f64>,
    pub measured: Vec<f64>,
    /// `|measured - predicted| / |predicted|`, or the absolute difference
    /// when `|predicted| < 1e-12`.
    pub relative_error: f64,
    /// Largest imprinted phase magnitude on the grid.
    pub edge_phase: f64,
}

impl RippleReport {
    pub fn pass(&self) -> bool {
        self.relative_error < RIPPLE_TOLERANCE
    }
}

fn max_imprint_phase(wf: &WaveFunction, tidal: &TidalMatrix, dt: f64) -> f64 {
    let grid = wf.grid();
    let d = grid.dim();
    (0..grid.len())
        .map(|i| (PI * wf.mass() * tidal.quadratic_form(&grid.position(i)[..d]) * dt).abs())
        .fold(0.0, f64::max)
}

/// Compares the centroid shift produced by one tidal step with
/// `δk = -2πμ R ⟨x⟩ δt`.
pub fn ripple_check(wf: &WaveFunction, tidal: &TidalMatrix, dt: f64) -> Result<RippleReport> {
    if tidal.dim() != wf.grid().dim() {
        return Err(SimError::SizeMismatch {
            expected: wf.grid().dim(),
            actual: tidal.dim(),
        });
    }
    let edge_phase = max_imprint_phase(wf, tidal, dt);
    if edge_phase >= PI / 4.0 {
        return Err(SimError::PhaseWrapRisk { phase: edge_phase });
    }
    let before = wf.mean_wavevector();
    let after = tidal_step(wf, tidal, dt)?.mean_wavevector();
    let measured: Vec<f64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
    let scale = -2.0 * PI * wf.mass() * dt;
    let predicted: Vec<f64> = tidal
        .apply(&wf.mean_position())
        .into_iter()
        .map(|c| scale * c)
        .collect();

    let diff = measured
        .iter()
        .zip(&predicted)
        .map(|(m, p)| (m - p).powi(2))
        .sum::<f64>()
        .sqrt();
    let size = predicted.iter().map(|p| p * p).sum::<f64>().sqrt();
    let relative_error = if size < 1e-12 { diff } else { diff / size };
    Ok(RippleReport {
        predicted,
        measured,
        relative_error,
        edge_phase,
    })
}

/// Imprinted phase difference between two neighbouring nodes, measured and
/// predicted from the midpoint gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDifference {
    pub measured: f64,
    pub predicted: f64,
    /// `2π μ max|R| δt Δx²`.
    pub bound: f64,
}

pub fn phase_difference_check(
    wf: &WaveFunction,
    tidal: &TidalMatrix,
    dt: f64,
    node_a: usize,
    node_b: usize,
) -> Result<PhaseDifference> {
    let grid = wf.grid();
    let d = grid.dim();
    if node_a >= grid.len() || node_b >= grid.len() {
        return Err(SimError::InvalidParameter(
            "node index outside the grid".into(),
        ));
    }
    let dx = grid.spacing();
    let bound = 2.0 * PI * wf.mass() * tidal.max_abs() * dt * dx * dx;
    if node_a == node_b {
        return Ok(PhaseDifference {
            measured: 0.0,
            predicted: 0.0,
            bound,
        });
    }
    let ia = grid.unravel(node_a);
    let ib = grid.unravel(node_b);
    let steps: usize = (0..d).map(|a| ia[a].abs_diff(ib[a])).sum();
    if steps != 1 {
        return Err(SimError::NotAdjacent {
            a: node_a,
            b: node_b,
        });
    }
    let xa = &grid.position(node_a)[..d];
    let xb = &grid.position(node_b)[..d];
    let factor = |x: &[f64]| {
        num_complex::Complex64::from_polar(1.0, -PI * wf.mass() * tidal.quadratic_form(x) * dt)
    };
    let measured = (factor(xb) * factor(xa).conj()).arg();
    let mid: Vec<f64> = xa.iter().zip(xb).map(|(a, b)| 0.5 * (a + b)).collect();
    let step: Vec<f64> = xa.iter().zip(xb).map(|(a, b)| b - a).collect();
    let grad = tidal.apply(&mid);
    let predicted =
        -2.0 * PI * wf.mass() * dt * grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
    Ok(PhaseDifference {
        measured,
        predicted,
        bound,
    })
}

/// Pairwise comparison of sweep variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WepReport {
    pub labels: Vec<String>,
    /// `match_metric` between mean-position series.
    pub deviation: Vec<Vec<f64>>,
    pub eotvos: Vec<Vec<f64>>,
    pub threshold: f64,
    pub max_deviation: f64,
    pub max_eotvos: f64,
    pub pass: bool,
}

/// `2 max|a_A - a_B| / max(|a_A| + |a_B|)` over the recorded accelerations;
/// zero when both accelerations vanish.
pub fn eotvos_ratio(a: &MomentSeries, b: &MomentSeries) -> Result<f64> {
    if a.records.len() != b.records.len() {
        return Err(SimError::TimestampMismatch(format!(
            "series lengths differ: {} vs {}",
            a.records.len(),
            b.records.len()
        )));
    }
    for (i, (ra, rb)) in a.records.iter().zip(&b.records).enumerate() {
        if (ra.t - rb.t).abs() > 1e-9 * ra.t.abs().max(1.0) {
            return Err(SimError::TimestampMismatch(format!(
                "record {i}: t = {} vs {}",
                ra.t, rb.t
            )));
        }
    }
    let acc_a = acceleration_series(a)?;
    let acc_b = acceleration_series(b)?;
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (x, y) in acc_a.iter().zip(&acc_b) {
        let diff: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        num = num.max(norm(&diff));
        den = den.max(norm(x) + norm(y));
    }
    if den < 1e-15 {
        return Ok(0.0);
    }
    Ok(2.0 * num / den)
}

fn assemble_report(
    labels: Vec<String>,
    runs: &[Evolution],
    threshold_factor: f64,
) -> Result<WepReport> {
    let n = runs.len();
    let trajectories: Vec<Trajectory> =
        runs.iter().map(|r| quantum_trajectory(&r.series)).collect();
    let amplitude = trajectories
        .iter()
        .flat_map(|t| t.positions.iter())
        .map(|p| p.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut deviation = vec![vec![0.0; n]; n];
    let mut eotvos = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dev = match_metric(&trajectories[i], &trajectories[j])?;
            let eta = eotvos_ratio(&runs[i].series, &runs[j].series)?;
            deviation[i][j] = dev;
            deviation[j][i] = dev;
            eotvos[i][j] = eta;
            eotvos[j][i] = eta;
        }
    }
    let max_deviation = deviation.iter().flatten().fold(0.0, |m: f64, v| m.max(*v));
    let max_eotvos = eotvos.iter().flatten().fold(0.0, |m: f64, v| m.max(*v));
    let threshold = threshold_factor * amplitude;
    Ok(WepReport {
        labels,
        deviation,
        eotvos,
        threshold,
        max_deviation,
        max_eotvos,
        pass: max_deviation <= threshold,
    })
}

pub fn wep_mass_sweep(base: &Scenario, masses: &[f64]) -> Result<WepReport> {
    wep_mass_sweep_with_threshold(base, masses, DEFAULT_WEP_THRESHOLD)
}

/// Runs the base scenario once per mass and compares the mean trajectories.
/// `threshold_factor` multiplies the largest mean-position magnitude seen.
pub fn wep_mass_sweep_with_threshold(
    base: &Scenario,
    masses: &[f64],
    threshold_factor: f64,
) -> Result<WepReport> {
    if masses.len() < 2 {
        return Err(SimError::TooFewVariants(masses.len()));
    }
    let tidal = base.tidal_matrix()?;
    let runs: Vec<Evolution> = masses
        .par_iter()
        .map(|&mass| {
            let label = format!("mass={mass}");
            let run = || -> Result<Evolution> {
                let wf = make_packet(&base.grid()?, &base.shape, &base.x0, &base.v0, mass)?;
                evolve(&wf, &tidal, base.scheme, &base.evolve)
            };
            run().map_err(|e| e.in_variant(label))
        })
        .collect::<Result<_>>()?;
    let labels = masses.iter().map(|m| format!("{m}")).collect();
    assemble_report(labels, &runs, threshold_factor)
}

pub fn wep_shape_sweep(base: &Scenario, shapes: &[PacketShape]) -> Result<WepReport> {
    wep_shape_sweep_with_threshold(base, shapes, DEFAULT_WEP_THRESHOLD)
}

/// Runs the base scenario once per packet shape. All packets must start
/// with the same mean position and velocity.
pub fn wep_shape_sweep_with_threshold(
    base: &Scenario,
    shapes: &[PacketShape],
    threshold_factor: f64,
) -> Result<WepReport> {
    if shapes.len() < 2 {
        return Err(SimError::TooFewVariants(shapes.len()));
    }
    let tidal = base.tidal_matrix()?;
    let grid = base.grid()?;
    let labels: Vec<String> = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}#{i}", s.name()))
        .collect();
    let packets: Vec<WaveFunction> = shapes
        .iter()
        .zip(&labels)
        .map(|(shape, label)| {
            make_packet(&grid, shape, &base.x0, &base.v0, base.mass)
                .map_err(|e| e.in_variant(label.clone()))
        })
        .collect::<Result<_>>()?;

    let ref_x = packets[0].mean_position();
    let ref_v = packets[0].mean_velocity_spectral();
    for (wf, label) in packets.iter().zip(&labels).skip(1) {
        let dx = wf
            .mean_position()
            .iter()
            .zip(&ref_x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dv = wf
            .mean_velocity_spectral()
            .iter()
            .zip(&ref_v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let deviation = dx.max(dv);
        if deviation > INITIAL_MOMENT_TOLERANCE {
            return Err(SimError::InitialMomentMismatch {
                label: label.clone(),
                deviation,
            });
        }
    }

    let runs: Vec<Evolution> = packets
        .par_iter()
        .zip(labels.par_iter())
        .map(|(wf, label)| {
            evolve(wf, &tidal, base.scheme, &base.evolve).map_err(|e| e.in_variant(label.clone()))
        })
        .collect::<Result<_>>()?;
    assemble_report(labels, &runs, threshold_factor)
}

/// Error of a scheme against a fine RK4 reference as the step shrinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub scheme: StepScheme,
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub reference_dt: f64,
    /// Common end time: the longest multiple of the coarsest step within
    /// the scenario's run length.
    pub horizon: f64,
    /// Least-squares slope of `ln error` against `ln dt`.
    pub order: f64,
}

pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the scenario for each step in `dts` over the scenario's total time
/// and fits the observed order of the mean-position error.
pub fn convergence_study(
    scenario: &Scenario,
    dts: &[f64],
    scheme: StepScheme,
) -> Result<ConvergenceReport> {
    if dts.len() < 3 {
        return Err(SimError::TooFewPoints(format!(
            "need at least 3 step sizes, got {}",
            dts.len()
        )));
    }
    for w in dts.windows(2) {
        if (w[1] - 0.5 * w[0]).abs() > 1e-12 * w[0] {
            return Err(SimError::InvalidParameter(format!(
                "step sizes must halve successively: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let dt_max = dts.iter().cloned().fold(0.0, f64::max);
    if dt_max <= 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "step sizes must be positive, got {dts:?}"
        )));
    }
    let coarse_steps = (scenario.total_time() / dt_max + 1e-9).floor();
    if coarse_steps < 1.0 {
        return Err(SimError::InvalidParameter(format!(
            "coarsest step {dt_max} exceeds the run length {}",
            scenario.total_time()
        )));
    }
    let horizon = coarse_steps * dt_max;
    let steps_for = |dt: f64| -> Result<usize> { Ok((horizon / dt).round() as usize) };
    let tidal = scenario.tidal_matrix()?;
    let wf = scenario.packet()?;
    let dt_min = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference_dt = dt_min / 10.0;
    let reference = rk4_integrate(
        &ClassicalState {
            x: wf.mean_position(),
            v: wf.mean_velocity_spectral(),
            t: 0.0,
        },
        &tidal,
        reference_dt,
        steps_for(reference_dt)?,
    )?;
    let reference = Trajectory::from_states(&reference);

    let errors: Vec<f64> = dts
        .par_iter()
        .map(|&dt| {
            let mut cfg = scenario.evolve.clone();
            cfg.dt = dt;
            cfg.n_steps = steps_for(dt)?;
            cfg.record_every = 1;
            let run =
                evolve(&wf, &tidal, scheme, &cfg).map_err(|e| e.in_variant(format!("dt={dt}")))?;
            let stride = (dt / reference_dt).round() as usize;
            match_metric(&quantum_trajectory(&run.series), &reference.every(stride))
        })
        .collect::<Result<_>>()?;
    let order = fit_log_slope(dts, &errors);
    Ok(ConvergenceReport {
        scheme,
        dts: dts.to_vec(),
        errors,
        reference_dt,
        horizon,
        order,
    })
}
