//! Fixtures shared by the operations: reference curves, closed-form wave
//! solutions and refinement fits.

use std::f64::consts::PI;

use anyhow::{bail, Context};
use rand::Rng;
use surfhj::dynamics::{build_field_of_extremals, ExtremalField, UForm};
use surfhj::geometry::{Curve, SGrid};
use surfhj::lagrangians::{LagrangianModel, ModelKind};
use surfhj::legendre::IntegralElement;
use surfhj::numerics::{loglog_fit, SlopeFit};
use surfhj::sampling::smooth_samples;

/// Slice height away from the focal points of the low standing-wave modes.
pub const T0: f64 = 0.154_508_497_187_473_7;

/// Height of the slab region covered by the fields built here.
pub const T_MAX: f64 = 0.3;

pub fn require_scalar_field(model: &LagrangianModel) -> anyhow::Result<(f64, f64)> {
    match model.kind {
        ModelKind::ScalarField2d { m2, lambda } => Ok((m2, lambda)),
        _ => bail!("operation needs scalar_field_2d, got {}", model.name()),
    }
}

/// The field of extremals with zero initial momentum.
pub fn standing_field(model: &LagrangianModel) -> anyhow::Result<ExtremalField> {
    require_scalar_field(model)?;
    build_field_of_extremals(model, &UForm::Zero, T_MAX).context("building the field of extremals")
}

/// `y = T0 + 0.01 sin 2πs`, `z = 0.5 cos 2πs + 0.1`.
pub fn wavy_curve(k: usize) -> anyhow::Result<Curve> {
    let g = SGrid::new(k)?;
    let y = g.nodes().iter().map(|s| T0 + 0.01 * (2.0 * PI * s).sin()).collect();
    let z = g.nodes().iter().map(|s| 0.5 * (2.0 * PI * s).cos() + 0.1).collect();
    Ok(Curve::graph(g, y, z)?)
}

/// A random curve on a constant-`y` slice with a slightly uneven `x`.
pub fn slice_curve<R: Rng>(rng: &mut R, k: usize) -> anyhow::Result<Curve> {
    let g = SGrid::new(k)?;
    let t = rng.gen_range(0.1..0.2);
    let dx = smooth_samples(rng, g, 2, 0.01);
    let x = g.nodes().iter().zip(&dx).map(|(s, d)| s + d).collect();
    let z = smooth_samples(rng, g, 4, 0.5);
    Ok(Curve::with_winding(g, vec![x, vec![t; k]], vec![z], vec![1.0, 0.0])?)
}

pub fn omega(m2: f64) -> f64 {
    (4.0 * PI * PI + m2).sqrt()
}

pub fn standing(m2: f64, x: f64, y: f64) -> f64 {
    (2.0 * PI * x).cos() * (omega(m2) * y).cos()
}

/// Solution of the massless wave equation with zero initial velocity.
pub fn dalembert(x: f64, y: f64) -> f64 {
    let f = |u: f64| (2.0 * PI * u).sin() + 0.5 * (4.0 * PI * u).cos();
    0.5 * (f(x - y) + f(x + y))
}

/// The standing wave's integral element on the slab `y = 0`.
pub fn slab_element(k: usize, m2: f64) -> anyhow::Result<IntegralElement> {
    let g = SGrid::new(k)?;
    let z: Vec<f64> = g.nodes().iter().map(|s| standing(m2, *s, 0.0)).collect();
    let curve = Curve::graph(g, vec![0.0; k], z)?;
    let zs = curve.z_s(0);
    let h2 = zs.iter().zip(&curve.z[0]).map(|(zx, z)| 0.5 * zx * zx + 0.5 * m2 * z * z).collect();
    Ok(IntegralElement::new(curve, vec![vec![0.0; k]], vec![vec![0.0; k], h2])?)
}

/// Log-log fit of residuals against `Δs = 1/K`.
pub fn refinement_fit(ks: &[usize], errs: &[f64]) -> anyhow::Result<SlopeFit> {
    let ds: Vec<f64> = ks.iter().map(|k| 1.0 / *k as f64).collect();
    Ok(loglog_fit(&ds, errs)?)
}

pub fn max_abs<'a>(v: impl IntoIterator<Item = &'a f64>) -> f64 {
    v.into_iter().fold(0.0, |a: f64, b| a.max(b.abs()))
}
