//! Quantum test packets in a weakly curved spacetime, seen from a freely
//! falling frame.
//!
//! A packet evolves by free spectral dispersion plus a position-dependent
//! phase that comes only from gravitational time dilation of its rest-mass
//! phase. The resulting mean motion is compared against the classical tidal
//! (geodesic deviation) trajectory, and across masses and packet shapes.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod curvature;
pub mod error;
pub mod experiments;
pub mod propagator;
pub mod spectral_grid;
pub mod wavepacket;

pub use classical::{match_metric, rk4_integrate, tidal_acceleration, ClassicalState, Trajectory};
pub use curvature::{
    first_order_rate, metric_at, proper_time_rate, validate_tidal, validate_tidal_with,
    RiemannComponents, TidalMatrix, ValidityReport,
};
pub use error::{Result, SimError};
pub use experiments::{
    convergence_study, eotvos_ratio, phase_difference_check, ripple_check, wep_mass_sweep,
    wep_shape_sweep, ConvergenceReport, RippleReport, Scenario, WepReport,
};
pub use propagator::{
    acceleration_series, evolve, evolve_with, kinetic_step, tidal_step, EvolveConfig, MomentRecord,
    MomentSeries, StepScheme,
};
pub use spectral_grid::{ComplexField, SpectralGrid};
pub use wavepacket::{make_packet, PacketShape, WaveFunction};
