//! Leapfrog solver for `z_yy = z_xx - P'(z)` on a periodic `x` grid.

use serde::{Deserialize, Serialize};

use crate::lagrangians::{LagrangianModel, ModelKind};
use crate::{Error, Result};

/// Guard on `|z|` beyond which a run is declared blown up.
pub const OVERFLOW_GUARD: f64 = 1e8;

/// Cauchy data on the slab `y = 0`: `z(x_a, 0) = a_a`, `z_y(x_a, 0) = w_a`
/// with `x_a = a / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub a: Vec<f64>,
    pub w: Vec<f64>,
}

impl InitialData {
    pub fn new(a: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if a.len() != w.len() {
            return Err(Error::LengthMismatch { expected: a.len(), got: w.len() });
        }
        if a.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 x samples".into()));
        }
        Ok(Self { a, w })
    }

    pub fn from_fn(n: usize, a: impl Fn(f64) -> f64, w: impl Fn(f64) -> f64) -> Result<Self> {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        Self::new(xs.iter().map(|x| a(*x)).collect(), xs.iter().map(|x| w(*x)).collect())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSolution {
    pub dx: f64,
    pub dy: f64,
    pub y: Vec<f64>,
    /// `z[level][a]`.
    pub z: Vec<Vec<f64>>,
    potential: LagrangianModel,
}

pub(crate) fn scalar_params(model: &LagrangianModel) -> Result<(f64, f64)> {
    match model.kind {
        ModelKind::ScalarField2d { m2, lambda } => Ok((m2, lambda)),
        _ => Err(Error::InvalidParameter(format!("{} has no wave dynamics", model.name()))),
    }
}

/// Solves up to `y = t_final` with `Δy = cfl·Δx` (rounded down so the final
/// level lands on `t_final`).
pub fn solve_el_direct(
    model: &LagrangianModel,
    init: &InitialData,
    t_final: f64,
    cfl: f64,
) -> Result<DirectSolution> {
    scalar_params(model)?;
    let n = init.len();
    let dx = 1.0 / n as f64;
    if !(t_final > 0.0) || !cfl.is_finite() || !(cfl > 0.0) {
        return Err(Error::InvalidParameter("need t_final > 0 and cfl > 0".into()));
    }
    let steps = (t_final / (cfl * dx)).ceil() as usize;
    let dy = t_final / steps as f64;
    if dy > dx * (1.0 + 1e-12) {
        return Err(Error::Cfl { dx, dy });
    }
    let lap = |z: &[f64], a: usize| (z[(a + 1) % n] - 2.0 * z[a] + z[(a + n - 1) % n]) / (dx * dx);
    let force = |z: &[f64], a: usize| lap(z, a) - model.potential(z[a]).1;

    let mut levels = Vec::with_capacity(steps + 1);
    let z0 = init.a.clone();
    let z1: Vec<f64> = (0..n)
        .map(|a| z0[a] + dy * init.w[a] + 0.5 * dy * dy * force(&z0, a))
        .collect();
    levels.push(z0);
    levels.push(z1);
    for step in 1..steps {
        let (prev, cur) = (&levels[step - 1], &levels[step]);
        let next: Vec<f64> = (0..n).map(|a| 2.0 * cur[a] - prev[a] + dy * dy * force(cur, a)).collect();
        if next.iter().any(|v| !(v.abs() <= OVERFLOW_GUARD)) {
            return Err(Error::BlowUp { step: step + 1, guard: OVERFLOW_GUARD });
        }
        levels.push(next);
    }
    let y = (0..=steps).map(|l| l as f64 * dy).collect();
    Ok(DirectSolution { dx, dy, y, z: levels, potential: model.clone() })
}

impl DirectSolution {
    pub fn nx(&self) -> usize {
        self.z[0].len()
    }

    pub fn last(&self) -> &[f64] {
        self.z.last().expect("at least two levels")
    }

    /// `∫ (½ z_y² + ½ z_x² + P) dx` on every interior level, with central
    /// differences in both directions. On `y = const` slices this is `∫ H² ds`.
    pub fn energy(&self) -> Vec<f64> {
        let n = self.nx();
        (1..self.z.len() - 1)
            .map(|l| {
                let (prev, cur, next) = (&self.z[l - 1], &self.z[l], &self.z[l + 1]);
                (0..n)
                    .map(|a| {
                        let zy = (next[a] - prev[a]) / (2.0 * self.dy);
                        let zx = (cur[(a + 1) % n] - cur[(a + n - 1) % n]) / (2.0 * self.dx);
                        0.5 * zy * zy + 0.5 * zx * zx + self.potential.potential(cur[a]).0
                    })
                    .sum::<f64>()
                    * self.dx
            })
            .collect()
    }

    /// Largest deviation of [`Self::energy`] from its first value.
    pub fn energy_drift(&self) -> f64 {
        let e = self.energy();
        e.iter().fold(0.0, |acc: f64, v| acc.max((v - e[0]).abs()))
    }

    /// Max-norm error against `exact(x, y)` over all levels.
    pub fn max_error(&self, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let mut worst = 0.0_f64;
        for (row, y) in self.z.iter().zip(&self.y) {
            for (a, v) in row.iter().enumerate() {
                worst = worst.max((v - exact(a as f64 * self.dx, *y)).abs());
            }
        }
        worst
    }

    /// Euler–Lagrange residual `z_yy - z_xx + P'(z)` at interior levels with the
    /// standard 3-point stencils; vanishes up to rounding for the leapfrog.
    pub fn el_residual(&self) -> f64 {
        let n = self.nx();
        let mut worst = 0.0_f64;
        for l in 1..self.z.len() - 1 {
            let (prev, cur, next) = (&self.z[l - 1], &self.z[l], &self.z[l + 1]);
            for a in 0..n {
                let zyy = (next[a] - 2.0 * cur[a] + prev[a]) / (self.dy * self.dy);
                let zxx = (cur[(a + 1) % n] - 2.0 * cur[a] + cur[(a + n - 1) % n]) / (self.dx * self.dx);
                worst = worst.max((zyy - zxx + self.potential.potential(cur[a]).1).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_stays_zero() {
        let model = LagrangianModel::scalar_field(1.0, 0.3);
        let init = InitialData::new(vec![0.0; 32], vec![0.0; 32]).unwrap();
        let sol = solve_el_direct(&model, &init, 1.0, 0.5).unwrap();
        assert!(sol.z.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn cfl_and_blowup_are_reported() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let init = InitialData::new(vec![0.0; 32], vec![0.0; 32]).unwrap();
        assert!(matches!(solve_el_direct(&model, &init, 1.0, 1.5), Err(Error::Cfl { .. })));
        let tachyon = LagrangianModel::scalar_field(-4.0, -50.0);
        let init = InitialData::from_fn(16, |x| 2.0 + (2.0 * PI * x).cos(), |_| 0.0).unwrap();
        assert!(matches!(solve_el_direct(&tachyon, &init, 5.0, 0.5), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn standing_wave_is_second_order() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let omega = (4.0 * PI * PI + 1.0_f64).sqrt();
        let errs: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| {
                let init = InitialData::from_fn(n, |x| (2.0 * PI * x).cos(), |_| 0.0).unwrap();
                let sol = solve_el_direct(&model, &init, 0.5, 0.5).unwrap();
                assert!(sol.el_residual() < 1e-8);
                sol.max_error(|x, y| (2.0 * PI * x).cos() * (omega * y).cos())
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "{errs:?}");
    }
}
