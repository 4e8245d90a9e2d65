//! Seeded random smooth curves, tangent elements and variations.

use std::f64::consts::PI;

use rand::Rng;

use crate::geometry::{Curve, SGrid, Variation};
use crate::lagrangians::LagrangianModel;
use crate::legendre::TangentElement;
use crate::{Error, Result};

/// Trigonometric polynomial with `modes` random harmonics of total size about
/// `amplitude`, sampled on the grid.
pub fn smooth_samples<R: Rng>(rng: &mut R, grid: SGrid, modes: usize, amplitude: f64) -> Vec<f64> {
    let coeffs: Vec<(f64, f64)> = (0..modes)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let scale = amplitude / (modes.max(1) as f64).sqrt();
    grid.nodes()
        .iter()
        .map(|s| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, (a, b))| {
                    let arg = 2.0 * PI * (m + 1) as f64 * s;
                    scale * (a * arg.cos() + b * arg.sin())
                })
                .sum()
        })
        .collect()
}

/// A random curve of the model's dimensions. For `n = 2` it is a perturbed
/// graph `x = s + δx(s)`, `y = y0 + δy(s)` with `x` monotone; for `n = 1` a
/// point.
pub fn random_curve<R: Rng>(rng: &mut R, model: &LagrangianModel, k: usize) -> Result<Curve> {
    match model.n {
        1 => Curve::point(rng.gen_range(-1.0..1.0), (0..model.m).map(|_| rng.gen_range(-1.0..1.0)).collect()),
        2 => {
            let grid = SGrid::new(k)?;
            let dx = smooth_samples(rng, grid, 3, 0.02);
            let x = grid.nodes().iter().zip(&dx).map(|(s, d)| s + d).collect();
            let y0 = rng.gen_range(0.1..0.3);
            let y = smooth_samples(rng, grid, 3, 0.05).iter().map(|v| y0 + v).collect();
            let z = (0..model.m).map(|_| smooth_samples(rng, grid, 4, 0.5)).collect();
            Curve::with_winding(grid, vec![x, y], z, vec![1.0, 0.0])
        }
        n => Err(Error::UnsupportedDimension { n, m: model.m }),
    }
}

/// A compatible tangent element on a random curve with smooth random
/// transverse slopes.
pub fn random_tangent_element<R: Rng>(rng: &mut R, model: &LagrangianModel, k: usize) -> Result<TangentElement> {
    let curve = random_curve(rng, model, k)?;
    let transverse: Vec<Vec<f64>> = match model.n {
        1 => (0..model.m).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect(),
        _ => (0..model.m)
            .map(|_| {
                let base = rng.gen_range(-0.5..0.5);
                smooth_samples(rng, curve.grid, 3, 0.3).iter().map(|v| base + v).collect()
            })
            .collect(),
    };
    TangentElement::from_transverse(curve, &transverse)
}

/// A generic smooth variation of every coordinate, normalized to unit
/// `Δs`-weighted L² norm.
pub fn random_variation<R: Rng>(rng: &mut R, curve: &Curve, modes: usize) -> Variation {
    let grid = curve.grid;
    Variation {
        dx: (0..curve.n()).map(|_| smooth_samples(rng, grid, modes, 1.0)).collect(),
        dz: (0..curve.m()).map(|_| smooth_samples(rng, grid, modes, 1.0)).collect(),
    }
    .normalized(grid)
}
