//! Classical reference: the linearized geodesic equation `a = -R x` in the
//! local frame, integrated with fixed-step RK4.

use serde::{Deserialize, Serialize};

use crate::curvature::TidalMatrix;
use crate::error::{Result, SimError};

/// Speed above which the low-velocity expansion is no longer trusted.
pub const MAX_CLASSICAL_SPEED: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl ClassicalState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        Self { x, v, t: 0.0 }
    }

    /// `½|v|² + ½ x·R·x`, conserved by the exact flow.
    pub fn energy(&self, tidal: &TidalMatrix) -> f64 {
        0.5 * self.v.iter().map(|c| c * c).sum::<f64>() + 0.5 * tidal.quadratic_form(&self.x)
    }
}

/// Times and positions sampled along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn from_states(states: &[ClassicalState]) -> Self {
        Self {
            times: states.iter().map(|s| s.t).collect(),
            positions: states.iter().map(|s| s.x.clone()).collect(),
        }
    }

    /// Keeps every `stride`-th sample, starting with the first.
    pub fn every(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        Self {
            times: self.times.iter().step_by(stride).copied().collect(),
            positions: self.positions.iter().step_by(stride).cloned().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `a = -R x`.
pub fn tidal_acceleration(x: &[f64], tidal: &TidalMatrix) -> Vec<f64> {
    tidal.apply(x).into_iter().map(|c| -c).collect()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| yi + a * xi).collect()
}

/// Classic fourth-order Runge–Kutta on `x' = v, v' = -R x`.
///
/// Returns `n_steps + 1` states including the initial one. A negative `dt`
/// integrates backwards.
pub fn rk4_integrate(
    start: &ClassicalState,
    tidal: &TidalMatrix,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<ClassicalState>> {
    let d = tidal.dim();
    if start.x.len() != d || start.v.len() != d {
        return Err(SimError::SizeMismatch {
            expected: d,
            actual: start.x.len(),
        });
    }
    if !dt.is_finite() || dt == 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "dt must be finite and nonzero, got {dt}"
        )));
    }
    let stiffness = dt.abs() * tidal.max_abs().sqrt();
    if stiffness >= 0.1 {
        return Err(SimError::StepTooLarge(format!(
            "dt·sqrt(max|R|) = {stiffness} must stay below 0.1"
        )));
    }

    let mut states = Vec::with_capacity(n_steps + 1);
    let mut s = start.clone();
    check_speed(&s)?;
    states.push(s.clone());
    for _ in 0..n_steps {
        let k1x = s.v.clone();
        let k1v = tidal_acceleration(&s.x, tidal);

        let x2 = axpy(0.5 * dt, &k1x, &s.x);
        let v2 = axpy(0.5 * dt, &k1v, &s.v);
        let k2x = v2.clone();
        let k2v = tidal_acceleration(&x2, tidal);

        let x3 = axpy(0.5 * dt, &k2x, &s.x);
        let v3 = axpy(0.5 * dt, &k2v, &s.v);
        let k3x = v3.clone();
        let k3v = tidal_acceleration(&x3, tidal);

        let x4 = axpy(dt, &k3x, &s.x);
        let v4 = axpy(dt, &k3v, &s.v);
        let k4x = v4;
        let k4v = tidal_acceleration(&x4, tidal);

        for i in 0..d {
            s.x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            s.v[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        s.t = start.t + dt * states.len() as f64;
        check_speed(&s)?;
        states.push(s.clone());
    }
    Ok(states)
}

fn check_speed(s: &ClassicalState) -> Result<()> {
    let speed = s.v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if speed >= MAX_CLASSICAL_SPEED {
        return Err(SimError::VelocityTooHigh {
            speed,
            limit: MAX_CLASSICAL_SPEED,
        });
    }
    Ok(())
}

/// Largest neglected `|x||v| max|R|` correction along a trajectory.
pub fn dropped_term_estimate(states: &[ClassicalState], tidal: &TidalMatrix) -> f64 {
    let r = tidal.max_abs();
    states
        .iter()
        .map(|s| {
            let x = s.x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let v = s.v.iter().map(|c| c * c).sum::<f64>().sqrt();
            x * v * r
        })
        .fold(0.0, f64::max)
}

/// Largest Euclidean distance between two position series sampled at the
/// same times.
pub fn match_metric(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SimError::TimestampMismatch(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for (i, (ta, tb)) in a.times.iter().zip(&b.times).enumerate() {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(SimError::TimestampMismatch(format!(
                "record {i}: t = {ta} vs {tb}"
            )));
        }
        let pa = &a.positions[i];
        let pb = &b.positions[i];
        if pa.len() != pb.len() {
            return Err(SimError::SizeMismatch {
                expected: pa.len(),
                actual: pb.len(),
            });
        }
        let dist = pa
            .iter()
            .zip(pb)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dist);
    }
    Ok(worst)
}
