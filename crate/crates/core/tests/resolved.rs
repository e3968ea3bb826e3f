//! Mean-motion physics on a grid that keeps the packet spectrum resolved
//! through the quarter-period focus (N=512, σ=0.5).

use fallwave::experiments::{convergence_study, wep_mass_sweep, wep_shape_sweep, Scenario};
use fallwave::propagator::{acceleration_series, evolve, EvolveConfig, StepScheme};
use fallwave::PacketShape;

fn resolved() -> Scenario {
    let mut s = Scenario::standard();
    s.points_per_axis = 512;
    s.shape = PacketShape::gaussian(0.5);
    s
}

#[test]
fn mean_position_follows_the_tidal_orbit() {
    let run = resolved().run().unwrap();
    assert!(run.deviation < 1e-6, "{}", run.deviation);
    let d = &run.evolution.series.diagnostics;
    assert!(d.max_spectral_edge_mass < 1e-12, "{d:?}");
    assert!(d.max_norm_drift < 1e-12);
}

#[test]
fn mass_does_not_change_the_orbit() {
    let rep = wep_mass_sweep(&resolved(), &[50.0, 100.0, 200.0]).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.max_deviation < 1e-8 && rep.max_eotvos < 1e-6, "{rep:?}");
}

#[test]
fn shape_does_not_change_the_orbit() {
    let shapes = [
        PacketShape::gaussian(0.5),
        PacketShape::SkewedGaussian {
            sigma: 0.5,
            skew: 3.0,
        },
        PacketShape::DoublePeak {
            sigma: 0.5,
            separation: 2.0,
        },
    ];
    let rep = wep_shape_sweep(&resolved(), &shapes).unwrap();
    assert!(rep.max_deviation < 1e-8, "{rep:?}");
}

#[test]
fn splitting_orders() {
    let dts = [0.4, 0.2, 0.1, 0.05];
    let strang = convergence_study(&resolved(), &dts, StepScheme::Strang).unwrap();
    let lie = convergence_study(&resolved(), &dts, StepScheme::Lie).unwrap();
    assert!((1.8..=2.2).contains(&strang.order), "{strang:?}");
    assert!((0.8..=1.2).contains(&lie.order), "{lie:?}");
    assert!((strang.horizon - 156.8).abs() < 1e-9);
}

#[test]
fn acceleration_tracks_minus_r_x() {
    let mut s = resolved();
    s.evolve = EvolveConfig::new(0.1, 400);
    let r = s.tidal_matrix().unwrap();
    let run = evolve(&s.packet().unwrap(), &r, s.scheme, &s.evolve).unwrap();
    let acc = acceleration_series(&run.series).unwrap();
    // centred differences carry an O(δt² ω⁴ x) ≈ 2e-11 truncation error
    for (a, rec) in acc
        .iter()
        .zip(&run.series.records)
        .skip(1)
        .take(acc.len() - 2)
    {
        let expected = -r.apply(&rec.mean_position)[0];
        assert!(
            (a[0] - expected).abs() < 1e-10,
            "t={}: {} vs {}",
            rec.t,
            a[0],
            expected
        );
    }
}

#[test]
fn exact_rate_differs_only_at_second_order() {
    let mut first = resolved();
    first.evolve = EvolveConfig::new(0.1, 500).record_every(50);
    let mut exact = first.clone();
    exact.evolve.exact_rate = true;
    let r = first.tidal_matrix().unwrap();
    let a = evolve(&first.packet().unwrap(), &r, first.scheme, &first.evolve).unwrap();
    let b = evolve(&exact.packet().unwrap(), &r, exact.scheme, &exact.evolve).unwrap();
    let dev = a
        .series
        .records
        .iter()
        .zip(&b.series.records)
        .map(|(p, q)| (p.mean_position[0] - q.mean_position[0]).abs())
        .fold(0.0, f64::max);
    // the rate correction (x·R·x)²/8 adds a force (x·R·x)·Rx/2 ≈ 4e-8 at x=2,
    // which displaces the centre by about ½·4e-8·t² ≈ 5e-5 at t=50
    let x = 2.0f64;
    let estimate = 0.5 * (1e-4 * x * x) * (1e-4 * x) / 2.0 * 50.0f64.powi(2);
    assert!(
        dev > 0.5 * estimate && dev < 2.0 * estimate,
        "{dev} vs {estimate}"
    );
}

#[test]
fn two_dimensional_vacuum_orbit() {
    let mut s = resolved();
    s.dim = 2;
    s.points_per_axis = 128;
    s.extent = 20.0;
    s.shape = PacketShape::gaussian(0.8);
    s.mass = 20.0;
    s.x0 = vec![2.0, -1.0];
    s.v0 = vec![0.0, 0.001];
    s.tidal = vec![1e-4, 0.0, 0.0, -1e-4];
    s.evolve = EvolveConfig::new(0.1, 600).record_every(20);
    let run = s.run().unwrap();
    assert!(run.deviation < 1e-6, "{}", run.deviation);
}
