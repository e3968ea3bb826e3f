#![allow(dead_code)]

use std::f64::consts::PI;

use fallwave::{ComplexField, RiemannComponents, SpectralGrid, WaveFunction};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct O(N^{2d}) unitary DFT, `F_m = N^{-d/2} Σ_n f_n e^{-2πi n·m/N}`.
pub fn brute_force_dft(values: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
    let total = n.pow(dim as u32);
    assert_eq!(values.len(), total);
    let digits = |mut flat: usize| {
        let mut out = vec![0usize; dim];
        for a in (0..dim).rev() {
            out[a] = flat % n;
            flat /= n;
        }
        out
    };
    let norm = (total as f64).powf(-0.5);
    (0..total)
        .map(|m| {
            let mi = digits(m);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let ji = digits(j);
                let dot: usize = mi.iter().zip(&ji).map(|(a, b)| a * b).sum();
                let angle = -2.0 * PI * ((dot % n) as f64) / n as f64;
                acc += v * Complex64::from_polar(1.0, angle);
            }
            acc * norm
        })
        .collect()
}

pub fn random_values(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_normalized(rng: &mut impl Rng, grid: &SpectralGrid, mass: f64) -> WaveFunction {
    let vals = random_values(rng, grid.len());
    let mut wf =
        WaveFunction::new(grid.clone(), ComplexField::new(vals).unwrap(), mass, 0.0).unwrap();
    wf.normalize().unwrap();
    wf
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Random algebraic curvature tensor built from sums of Kulkarni–Nomizu
/// squares `S ∧ S`, which satisfy every Riemann symmetry by construction.
pub fn random_riemann(rng: &mut impl Rng, scale: f64) -> [f64; 256] {
    let mut out = [0.0; 256];
    for _ in 0..3 {
        let mut s = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = rng.gen_range(-1.0..1.0) * scale.sqrt();
                s[i][j] = v;
                s[j][i] = v;
            }
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        out[((a * 4 + b) * 4 + c) * 4 + d] +=
                            sign * (s[a][c] * s[b][d] - s[a][d] * s[b][c]);
                    }
                }
            }
        }
    }
    out
}

pub fn riemann_index(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

pub fn assert_valid(entries: [f64; 256]) -> RiemannComponents {
    RiemannComponents::new(entries).expect("constructed tensor should validate")
}

/// Prints one acceptance line and hands the verdict back.
pub fn criterion(number: u32, title: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number:>2} [{verdict}] {title}: {detail}");
    pass
}
