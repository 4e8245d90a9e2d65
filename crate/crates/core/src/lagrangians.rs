//! Lagrangian densities `F(x, z, z_x)` and the parametric integrand `Φ`.
//!
//! Slopes are stored row-major: `zx[i * n + j]` is `∂z^i/∂x^j`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The built-in variational models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `F = ½|ż|² - ½ k |z|²` with `x¹` playing the role of time.
    ClassicalMechanics { k: f64 },
    /// `F = ½(z_x² - z_y²) + p(z)`, `p(z) = (m²/2) z² + λ z⁴`.
    ScalarField2d { m2: f64, lambda: f64 },
    /// `F = √(1 + z_x² + z_y²)`.
    MinimalSurface,
}

/// Scenario-level model selection, e.g. `{"model":"scalar_field_2d","m2":1.0,"lambda":0.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: String,
    #[serde(default)]
    pub m2: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Spring constant of `classical_mechanics`.
    #[serde(default)]
    pub k: f64,
    /// Number of dependent fields for `classical_mechanics`.
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl ModelSpec {
    pub fn named(model: &str) -> Self {
        Self { model: model.into(), m2: 0.0, lambda: 0.0, k: 0.0, dim: 1 }
    }
}

/// A variational model with analytic first and second partials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianModel {
    pub kind: ModelKind,
    pub n: usize,
    pub m: usize,
    /// `Φ` is convex modulo the gauge directions.
    pub convex: bool,
    /// Non-fatal observations made while constructing the model.
    pub flags: Vec<String>,
}

/// Arguments of `Φ`: positions and their `s`- and `t`-derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    pub xt: Vec<f64>,
    pub zt: Vec<f64>,
}

pub fn builtin_model(spec: &ModelSpec) -> Result<LagrangianModel> {
    let mut flags = Vec::new();
    let (kind, n, m, convex) = match spec.model.as_str() {
        "classical_mechanics" => {
            if !(1..=2).contains(&spec.dim) {
                return Err(Error::InvalidParameter(format!("dim = {} not in 1..=2", spec.dim)));
            }
            if !spec.k.is_finite() {
                return Err(Error::InvalidParameter("spring constant must be finite".into()));
            }
            (ModelKind::ClassicalMechanics { k: spec.k }, 1, spec.dim, false)
        }
        "scalar_field_2d" => {
            if !spec.m2.is_finite() || !spec.lambda.is_finite() {
                return Err(Error::InvalidParameter("m2 and lambda must be finite".into()));
            }
            if spec.m2 < 0.0 {
                flags.push(format!("tachyonic mass term m2 = {}", spec.m2));
            }
            if spec.lambda < 0.0 {
                flags.push(format!("potential unbounded below, lambda = {}", spec.lambda));
            }
            (ModelKind::ScalarField2d { m2: spec.m2, lambda: spec.lambda }, 2, 1, false)
        }
        "minimal_surface" => (ModelKind::MinimalSurface, 2, 1, true),
        other => return Err(Error::UnknownModel(other.into())),
    };
    let model = LagrangianModel { kind, n, m, convex, flags };
    let err = model.derivative_self_test(16, 0x5eed);
    if !(err < 1e-6) {
        return Err(Error::InvalidParameter(format!(
            "derivative self-test failed with relative error {err:e}"
        )));
    }
    Ok(model)
}

impl LagrangianModel {
    pub fn scalar_field(m2: f64, lambda: f64) -> Self {
        builtin_model(&ModelSpec { m2, lambda, ..ModelSpec::named("scalar_field_2d") })
            .expect("finite parameters")
    }

    pub fn minimal_surface() -> Self {
        builtin_model(&ModelSpec::named("minimal_surface")).expect("no parameters")
    }

    pub fn classical(k: f64, dim: usize) -> Result<Self> {
        builtin_model(&ModelSpec { k, dim, ..ModelSpec::named("classical_mechanics") })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::ClassicalMechanics { .. } => "classical_mechanics",
            ModelKind::ScalarField2d { .. } => "scalar_field_2d",
            ModelKind::MinimalSurface => "minimal_surface",
        }
    }

    fn check(&self, x: &[f64], z: &[f64], zx: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: x.len() });
        }
        if z.len() != self.m {
            return Err(Error::LengthMismatch { expected: self.m, got: z.len() });
        }
        if zx.len() != self.m * self.n {
            return Err(Error::LengthMismatch { expected: self.m * self.n, got: zx.len() });
        }
        Ok(())
    }

    /// Scalar-field potential `p(z)` and its first two derivatives; zero for other models.
    pub fn potential(&self, z: f64) -> (f64, f64, f64) {
        match self.kind {
            ModelKind::ScalarField2d { m2, lambda } => (
                0.5 * m2 * z * z + lambda * z.powi(4),
                m2 * z + 4.0 * lambda * z.powi(3),
                m2 + 12.0 * lambda * z * z,
            ),
            _ => (0.0, 0.0, 0.0),
        }
    }

    pub fn eval_f(&self, x: &[f64], z: &[f64], zx: &[f64]) -> Result<f64> {
        self.check(x, z, zx)?;
        Ok(match self.kind {
            ModelKind::ClassicalMechanics { k } => {
                0.5 * zx.iter().map(|v| v * v).sum::<f64>()
                    - 0.5 * k * z.iter().map(|v| v * v).sum::<f64>()
            }
            ModelKind::ScalarField2d { .. } => {
                0.5 * (zx[0] * zx[0] - zx[1] * zx[1]) + self.potential(z[0]).0
            }
            ModelKind::MinimalSurface => (1.0 + zx[0] * zx[0] + zx[1] * zx[1]).sqrt(),
        })
    }

    /// `∂F/∂z^i`.
    pub fn f_z(&self, x: &[f64], z: &[f64], zx: &[f64]) -> Result<Vec<f64>> {
        self.check(x, z, zx)?;
        Ok(match self.kind {
            ModelKind::ClassicalMechanics { k } => z.iter().map(|v| -k * v).collect(),
            ModelKind::ScalarField2d { .. } => vec![self.potential(z[0]).1],
            ModelKind::MinimalSurface => vec![0.0],
        })
    }

    /// `∂F/∂z^i_{x^j}`, row-major `m x n`.
    pub fn f_zx(&self, x: &[f64], z: &[f64], zx: &[f64]) -> Result<Vec<f64>> {
        self.check(x, z, zx)?;
        Ok(match self.kind {
            ModelKind::ClassicalMechanics { .. } => zx.to_vec(),
            ModelKind::ScalarField2d { .. } => vec![zx[0], -zx[1]],
            ModelKind::MinimalSurface => {
                let r = (1.0 + zx[0] * zx[0] + zx[1] * zx[1]).sqrt();
                vec![zx[0] / r, zx[1] / r]
            }
        })
    }

    /// `∂²F/∂z^i_{x^j}∂z^{i'}_{x^{j'}}`, a row-major `(mn) x (mn)` matrix.
    pub fn f_zx_zx(&self, x: &[f64], z: &[f64], zx: &[f64]) -> Result<Vec<f64>> {
        self.check(x, z, zx)?;
        let d = self.m * self.n;
        let mut out = vec![0.0; d * d];
        match self.kind {
            ModelKind::ClassicalMechanics { .. } => {
                for a in 0..d {
                    out[a * d + a] = 1.0;
                }
            }
            ModelKind::ScalarField2d { .. } => {
                out[0] = 1.0;
                out[3] = -1.0;
            }
            ModelKind::MinimalSurface => {
                let r2 = 1.0 + zx[0] * zx[0] + zx[1] * zx[1];
                let r = r2.sqrt();
                for a in 0..2 {
                    for b in 0..2 {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        out[a * 2 + b] = delta / r - zx[a] * zx[b] / (r2 * r);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∂²F/∂z^i_{x^j}∂z^{i'}`, a row-major `(mn) x m` matrix.
    pub fn f_zx_z(&self, x: &[f64], z: &[f64], zx: &[f64]) -> Result<Vec<f64>> {
        self.check(x, z, zx)?;
        Ok(vec![0.0; self.m * self.n * self.m])
    }

    /// Relative error of the analytic first and second partials against
    /// central differences of the lower-order evaluators (step `1e-5`).
    pub fn derivative_self_test(&self, states: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-5;
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
        let mut worst: f64 = 0.0;
        for _ in 0..states {
            let x: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..self.m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let zx: Vec<f64> = (0..self.m * self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (Ok(fz), Ok(fzx), Ok(hess)) =
                (self.f_z(&x, &z, &zx), self.f_zx(&x, &z, &zx), self.f_zx_zx(&x, &z, &zx))
            else {
                return f64::INFINITY;
            };
            let mixed = self.f_zx_z(&x, &z, &zx).unwrap_or_default();
            for i in 0..self.m {
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp[i] += h;
                zm[i] -= h;
                let fd = (self.eval_f(&x, &zp, &zx).unwrap() - self.eval_f(&x, &zm, &zx).unwrap())
                    / (2.0 * h);
                worst = worst.max(rel(fd, fz[i]));
                let gp = self.f_zx(&x, &zp, &zx).unwrap();
                let gm = self.f_zx(&x, &zm, &zx).unwrap();
                for a in 0..self.m * self.n {
                    worst = worst.max(rel((gp[a] - gm[a]) / (2.0 * h), mixed[a * self.m + i]));
                }
            }
            let d = self.m * self.n;
            for b in 0..d {
                let (mut p, mut q) = (zx.clone(), zx.clone());
                p[b] += h;
                q[b] -= h;
                let fd = (self.eval_f(&x, &z, &p).unwrap() - self.eval_f(&x, &z, &q).unwrap())
                    / (2.0 * h);
                worst = worst.max(rel(fd, fzx[b]));
                let gp = self.f_zx(&x, &z, &p).unwrap();
                let gq = self.f_zx(&x, &z, &q).unwrap();
                for a in 0..d {
                    worst = worst.max(rel((gp[a] - gq[a]) / (2.0 * h), hess[a * d + b]));
                }
            }
        }
        worst
    }

    /// Slopes `z^i_{x^j}` and Jacobian `∂(x)/∂(t,s)` encoded by a parametric state.
    pub fn slopes_from_state(&self, st: &PointState) -> Result<(Vec<f64>, f64)> {
        let (n, m) = (self.n, self.m);
        for (v, want) in [(&st.x, n), (&st.xs, n), (&st.xt, n), (&st.z, m), (&st.zs, m), (&st.zt, m)] {
            if v.len() != want {
                return Err(Error::LengthMismatch { expected: want, got: v.len() });
            }
        }
        match n {
            1 => {
                let jac = st.xt[0];
                if !(jac.abs() > 1e-14) {
                    return Err(Error::SingularJacobian { node: 0, det: jac });
                }
                Ok((st.zt.iter().map(|v| v / jac).collect(), jac))
            }
            2 => {
                let jac = st.xt[0] * st.xs[1] - st.xt[1] * st.xs[0];
                let scale = (st.xt[0].abs() + st.xt[1].abs()) * (st.xs[0].abs() + st.xs[1].abs());
                if !(jac.abs() > 1e-14 * scale.max(1e-300)) {
                    return Err(Error::SingularJacobian { node: 0, det: jac });
                }
                let mut slopes = Vec::with_capacity(2 * m);
                for i in 0..m {
                    slopes.push((st.zt[i] * st.xs[1] - st.xt[1] * st.zs[i]) / jac);
                    slopes.push((st.xt[0] * st.zs[i] - st.zt[i] * st.xs[0]) / jac);
                }
                Ok((slopes, jac))
            }
            _ => Err(Error::UnsupportedDimension { n, m }),
        }
    }

    /// The parametric integrand `Φ = F(x, z, z_x(state)) · ∂(x)/∂(t,s)` with
    /// the signed Jacobian.
    pub fn eval_phi(&self, st: &PointState) -> Result<f64> {
        let (slopes, jac) = self.slopes_from_state(st)?;
        Ok(self.eval_f(&st.x, &st.z, &slopes)? * jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn scalar_field_values() {
        let sf = LagrangianModel::scalar_field(1.0, 0.0);
        assert_eq!(sf.eval_f(&[0.0, 0.0], &[0.0], &[0.0, 0.0]).unwrap(), 0.0);
        // ½(4 - 1) + ½
        assert!((sf.eval_f(&[0.0, 0.0], &[1.0], &[2.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(sf.eval_f(&[0.0], &[1.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn minimal_surface_flat_plane() {
        let ms = LagrangianModel::minimal_surface();
        assert_eq!(ms.eval_f(&[0.3, 0.1], &[2.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(ms.convex);
    }

    #[test]
    fn free_particle() {
        let cm = LagrangianModel::classical(0.0, 1).unwrap();
        assert_eq!((cm.n, cm.m), (1, 1));
        assert_eq!(cm.f_zx(&[0.0], &[0.0], &[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn unknown_model_and_flags() {
        assert!(matches!(
            builtin_model(&ModelSpec::named("sine_gordon")),
            Err(Error::UnknownModel(_))
        ));
        let tachyon = LagrangianModel::scalar_field(-1.0, 0.0);
        assert_eq!(tachyon.flags.len(), 1);
        let bad = ModelSpec { dim: 3, ..ModelSpec::named("classical_mechanics") };
        assert!(builtin_model(&bad).is_err());
    }

    #[test]
    fn phi_signed_convention() {
        let st = PointState {
            x: vec![0.0, 0.0],
            z: vec![0.0],
            xs: vec![1.0, 0.0],
            zs: vec![0.0],
            xt: vec![0.0, 1.0],
            zt: vec![0.0],
        };
        assert_eq!(LagrangianModel::scalar_field(1.0, 0.0).eval_phi(&st).unwrap(), 0.0);
        assert_eq!(LagrangianModel::minimal_surface().eval_phi(&st).unwrap(), -1.0);
        let singular = PointState { xt: vec![2.0, 0.0], ..st };
        assert!(matches!(
            LagrangianModel::minimal_surface().eval_phi(&singular),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn euler_lagrange_of_standing_wave() {
        // F_z - ∂_x F_{z_x} - ∂_y F_{z_y} for z = cos(2πx) cos(ωy), ω² = 4π² + 1.
        let sf = LagrangianModel::scalar_field(1.0, 0.0);
        let w = (4.0 * PI * PI + 1.0_f64).sqrt();
        let z = |x: f64, y: f64| (2.0 * PI * x).cos() * (w * y).cos();
        let grad = |x: f64, y: f64| {
            [-2.0 * PI * (2.0 * PI * x).sin() * (w * y).cos(), -w * (2.0 * PI * x).cos() * (w * y).sin()]
        };
        let h = 1e-4;
        for (x, y) in [(0.1, 0.2), (0.37, 0.05), (0.8, 0.9)] {
            let fzx = |x: f64, y: f64| sf.f_zx(&[x, y], &[z(x, y)], &grad(x, y)).unwrap();
            let div = (fzx(x + h, y)[0] - fzx(x - h, y)[0]) / (2.0 * h)
                + (fzx(x, y + h)[1] - fzx(x, y - h)[1]) / (2.0 * h);
            let fz = sf.f_z(&[x, y], &[z(x, y)], &grad(x, y)).unwrap()[0];
            assert!((fz - div).abs() < 1e-6, "EL residual {}", fz - div);
        }
    }
}
