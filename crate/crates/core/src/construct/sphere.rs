//! Deterministic point sets on the unit sphere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Points on `𝕊^{n−1}` with an estimate of the largest distance from a
/// sphere point to its nearest grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub points: Vec<Vec<f64>>,
    pub spacing: f64,
}

/// Equally spaced angles for `n = 2`, a Fibonacci lattice for `n = 3`, and
/// seeded Gaussian directions otherwise.
pub fn sphere_grid(n: usize, count: usize, seed: u64) -> Result<SphereGrid> {
    if n == 0 || count == 0 {
        return Err(Error::InvalidInput("sphere grid needs n >= 1 and count >= 1".into()));
    }
    let c = count as f64;
    Ok(match n {
        1 => SphereGrid {
            points: vec![vec![1.0], vec![-1.0]],
            spacing: 0.0,
        },
        2 => SphereGrid {
            points: (0..count)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / c;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            spacing: std::f64::consts::PI / c,
        },
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            SphereGrid {
                points: (0..count)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / c;
                        let r = (1.0 - z * z).sqrt();
                        let a = golden * i as f64;
                        vec![r * a.cos(), r * a.sin(), z]
                    })
                    .collect(),
                spacing: (4.0 * std::f64::consts::PI / c).sqrt(),
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut points = Vec::with_capacity(count);
            while points.len() < count {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    points.push(v.into_iter().map(|a| a / norm).collect());
                }
            }
            SphereGrid {
                points,
                spacing: (sphere_area(n) / c).powf(1.0 / (n as f64 - 1.0)),
            }
        }
    })
}

/// Surface area `2π^{n/2} / Γ(n/2)` of `𝕊^{n−1}`.
fn sphere_area(n: usize) -> f64 {
    let pi = std::f64::consts::PI;
    // Γ(n/2) by the half-integer recurrence.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { pi.sqrt() };
    let mut k = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k + 1.0 <= n as f64 / 2.0 {
        gamma *= k;
        k += 1.0;
    }
    2.0 * pi.powf(n as f64 / 2.0) / gamma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_unit_and_area_matches() {
        for n in 1..=5 {
            let g = sphere_grid(n, 50, 3).unwrap();
            for p in &g.points {
                assert!((p.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-12);
    }
}
