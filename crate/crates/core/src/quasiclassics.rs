//! Quasiclassical checks of the functional Schrödinger analog of the scalar
//! field, `Ψ(C) = a(C) exp(i S(C) / h)`.
//!
//! Derivative operators are discretized first: `δ/δz(s_k) ↦ (1/Δs) ∂/∂z_k`
//! (and likewise for `x`, `y`), with the operators standing to the right of
//! their coefficients. At fixed `K` the residual divided by `Ψ(C)` is then an
//! exact quadratic polynomial in `h`,
//!
//! ```text
//! R(h) = r0 - i h t1 + h² r2,
//! r0 = ½(S_z² + z_s²) + (x_s² - y_s²) P + x_s S_y + y_s S_x,
//! t1 = (S_z a_z + x_s a_y + y_s a_x) / a + ½ S_zz,
//! r2 = -½ a_zz / a.
//! ```
//!
//! `r0` is the closed-form Hamilton–Jacobi residual. `t1` contains the
//! transport combination `x_s T_y + y_s T_x` divided by `a`, plus the
//! diagonal second derivative `½ S_zz`, which the transport operator alone
//! does not see.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ExtremalField;
use crate::geometry::{perturb_curve, Component, Curve, Perturbation};
use crate::hamilton_jacobi::{variational_gradient, Functional, Gradient, GradientOptions, DEFAULT_EPS};
use crate::lagrangians::{LagrangianModel, ModelKind};
use crate::legendre::{hamiltonian_jacobian, JACOBIAN_STEP};
use crate::numerics::{loglog_fit, pairwise_orders};
use crate::{Error, Result};

/// Amplitudes share the evaluation contract of action functionals.
pub use crate::hamilton_jacobi::Functional as AmplitudeFunctional;

/// Default step of the nested second differences.
pub const SECOND_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiOptions {
    /// Step of first derivatives.
    pub eps: f64,
    /// Step of second derivatives.
    pub eps2: f64,
    pub parallel: bool,
}

impl Default for QuasiOptions {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS, eps2: SECOND_EPS, parallel: true }
    }
}

impl QuasiOptions {
    fn gradient(&self) -> GradientOptions {
        GradientOptions { eps: self.eps, parallel: self.parallel }
    }
}

fn check_scalar(model: &LagrangianModel, curve: &Curve) -> Result<()> {
    if !matches!(model.kind, ModelKind::ScalarField2d { .. }) || curve.n() != 2 || curve.m() != 1 {
        return Err(Error::InvalidParameter("the Schrödinger analog is implemented for the 2d scalar field".into()));
    }
    Ok(())
}

fn map_nodes<T: Send>(k: usize, parallel: bool, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if parallel {
        (0..k).into_par_iter().map(f).collect()
    } else {
        (0..k).map(f).collect()
    }
}

/// `(F(C + ε e_k) - 2 F(C) + F(C - ε e_k)) / (ε Δs)²` for every node.
pub fn second_derivatives(
    f: &dyn Functional,
    curve: &Curve,
    component: Component,
    eps: f64,
    parallel: bool,
) -> Result<Vec<f64>> {
    let centre = f.eval(curve)?;
    let scale = (eps * curve.grid.ds()).powi(2);
    map_nodes(curve.len(), parallel, |k| {
        let plus = perturb_curve(curve, &Perturbation::indicator(component, k, eps))?;
        let minus = perturb_curve(curve, &Perturbation::indicator(component, k, -eps))?;
        Ok((f.eval(&plus)? - 2.0 * centre + f.eval(&minus)?) / scale)
    })
}

/// Amplitude that depends on `C` only through the extremal surface of the
/// field passing through it: `a(C) = g(Δx Σ_j w(x_j) A_j)` with `A` the
/// initial datum of that surface on the slab nodes.
pub struct PullbackAmplitude<'a> {
    pub field: &'a ExtremalField,
    pub weight: fn(f64) -> f64,
    pub g: fn(f64) -> f64,
}

impl<'a> PullbackAmplitude<'a> {
    /// `g = exp`, `w ≡ 1`: the exponential of the mean initial value.
    pub fn exp_mean(field: &'a ExtremalField) -> Self {
        Self { field, weight: |_| 1.0, g: f64::exp }
    }
}

impl Functional for PullbackAmplitude<'_> {
    fn eval(&self, curve: &Curve) -> Result<f64> {
        let datum = self.field.initial_datum(curve)?;
        let k = datum.len() as f64;
        let mean = datum
            .iter()
            .enumerate()
            .map(|(j, a)| (self.weight)(j as f64 / k) * a)
            .sum::<f64>()
            / k;
        Ok((self.g)(mean))
    }
}

/// `a_base(C) · exp(Δs Σ_k ℓ_k · (C_k - C*_k))`.
///
/// [`CorrectedAmplitude::solve`] picks the node covectors `ℓ_k` of minimal
/// norm that make the first-order coefficient `t1` vanish at `C*` while
/// keeping the amplitude reparameterization invariant to first order.
pub struct CorrectedAmplitude<A> {
    pub base: A,
    pub reference: Curve,
    /// `ℓ_k = (ℓ_x, ℓ_y, ℓ_z)`.
    pub ell: Vec<[f64; 3]>,
}

impl<A: Functional> Functional for CorrectedAmplitude<A> {
    fn eval(&self, curve: &Curve) -> Result<f64> {
        if curve.len() != self.reference.len() {
            return Err(Error::LengthMismatch { expected: self.reference.len(), got: curve.len() });
        }
        let r = &self.reference;
        let exponent: f64 = self
            .ell
            .iter()
            .enumerate()
            .map(|(k, l)| {
                l[0] * (curve.x[0][k] - r.x[0][k]) + l[1] * (curve.x[1][k] - r.x[1][k]) + l[2] * (curve.z[0][k] - r.z[0][k])
            })
            .sum();
        Ok(self.base.eval(curve)? * (exponent * r.grid.ds()).exp())
    }
}

impl<A: Functional> CorrectedAmplitude<A> {
    pub fn solve(model: &LagrangianModel, s: &dyn Functional, base: A, reference: &Curve, opts: QuasiOptions) -> Result<Self> {
        let terms = schrodinger_terms(model, s, &base, reference, opts)?;
        let (xs, ys, zs) = (reference.x_s(0), reference.x_s(1), reference.z_s(0));
        let ell = (0..reference.len())
            .map(|k| {
                let rows = [[ys[k], xs[k], terms.s_z[k]], [xs[k], ys[k], zs[k]]];
                let rhs = [-terms.t1[k], 0.0];
                min_norm_2x3(rows, rhs)
            })
            .collect::<Result<_>>()?;
        Ok(Self { base, reference: reference.clone(), ell })
    }
}

fn min_norm_2x3(a: [[f64; 3]; 2], b: [f64; 2]) -> Result<[f64; 3]> {
    let dot = |u: &[f64; 3], v: &[f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let (g11, g12, g22) = (dot(&a[0], &a[0]), dot(&a[0], &a[1]), dot(&a[1], &a[1]));
    let det = g11 * g22 - g12 * g12;
    if !(det.abs() > 1e-14 * (g11 * g22).max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular("amplitude correction".into()));
    }
    let c1 = (g22 * b[0] - g12 * b[1]) / det;
    let c2 = (g11 * b[1] - g12 * b[0]) / det;
    Ok([0, 1, 2].map(|i| c1 * a[0][i] + c2 * a[1][i]))
}

/// Nodewise residuals `T_j = δa/δx^j + Σ_i ∂H^j/∂p^i δa/δz^i` at `p = δS/δz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    /// `per_node[k][j]`.
    pub per_node: Vec<Vec<f64>>,
    /// `x_s T_y + y_s T_x` for the 2d scalar field, empty otherwise.
    pub contracted: Vec<f64>,
    pub l2: f64,
    pub max: f64,
}

pub fn transport_residual(
    model: &LagrangianModel,
    s: &dyn Functional,
    a: &dyn Functional,
    curve: &Curve,
    opts: QuasiOptions,
) -> Result<TransportReport> {
    let gs = variational_gradient(s, curve, opts.gradient())?;
    let ga = variational_gradient(a, curve, opts.gradient())?;
    transport_from_gradients(model, curve, &gs, &ga)
}

fn transport_from_gradients(model: &LagrangianModel, curve: &Curve, gs: &Gradient, ga: &Gradient) -> Result<TransportReport> {
    let (n, m) = (curve.n(), curve.m());
    let hp = hamiltonian_jacobian(model, curve, &gs.dz, JACOBIAN_STEP)?;
    let per_node: Vec<Vec<f64>> = (0..curve.len())
        .map(|k| {
            (0..n)
                .map(|j| ga.dx[j][k] + (0..m).map(|i| hp[i * n + j][k] * ga.dz[i][k]).sum::<f64>())
                .collect()
        })
        .collect();
    let contracted = if n == 2 && m == 1 {
        let (xs, ys) = (curve.x_s(0), curve.x_s(1));
        per_node.iter().enumerate().map(|(k, t)| xs[k] * t[1] + ys[k] * t[0]).collect()
    } else {
        Vec::new()
    };
    let flat = per_node.iter().flatten();
    let l2 = (flat.clone().map(|v| v * v).sum::<f64>() * curve.grid.ds()).sqrt();
    let max = flat.fold(0.0, |acc: f64, v| acc.max(v.abs()));
    Ok(TransportReport { per_node, contracted, l2, max })
}

/// The three `h`-coefficients of the first Schrödinger line, plus the
/// ingredients of the reparameterization line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerTerms {
    pub r0: Vec<f64>,
    pub t1: Vec<f64>,
    pub r2: Vec<f64>,
    /// `S_z`, the momentum.
    pub s_z: Vec<f64>,
    /// `½ S_zz`.
    pub half_s_zz: Vec<f64>,
    /// `(x_s T_y + y_s T_x) / a`.
    pub transport: Vec<f64>,
    /// Tangency of `S`; enters the second line at order `1/h`.
    pub tangency_s: Vec<f64>,
    /// Tangency of `a` divided by `a`; order `h⁰` of the second line.
    pub tangency_a: Vec<f64>,
}

impl SchrodingerTerms {
    /// First line `R(h)` at every node.
    pub fn residual(&self, h: f64) -> Vec<Complex64> {
        (0..self.r0.len())
            .map(|k| Complex64::new(self.r0[k] + h * h * self.r2[k], -h * self.t1[k]))
            .collect()
    }

    /// Second line `(x_s Ψ_x + y_s Ψ_y + z_s Ψ_z) / Ψ`.
    pub fn reparam(&self, h: f64) -> Vec<Complex64> {
        (0..self.r0.len())
            .map(|k| Complex64::new(self.tangency_a[k], self.tangency_s[k] / h))
            .collect()
    }
}

pub fn schrodinger_terms(
    model: &LagrangianModel,
    s: &dyn Functional,
    a: &dyn Functional,
    curve: &Curve,
    opts: QuasiOptions,
) -> Result<SchrodingerTerms> {
    check_scalar(model, curve)?;
    let gs = variational_gradient(s, curve, opts.gradient())?;
    let ga = variational_gradient(a, curve, opts.gradient())?;
    let s_zz = second_derivatives(s, curve, Component::Z(0), opts.eps2, opts.parallel)?;
    let a_zz = second_derivatives(a, curve, Component::Z(0), opts.eps2, opts.parallel)?;
    let a0 = a.eval(curve)?;
    if !(a0.abs() > 0.0) || !a0.is_finite() {
        return Err(Error::Domain(format!("amplitude {a0} at the curve")));
    }
    let (xs, ys, zs) = (curve.x_s(0), curve.x_s(1), curve.z_s(0));
    let k = curve.len();
    let mut t = SchrodingerTerms {
        r0: vec![0.0; k],
        t1: vec![0.0; k],
        r2: vec![0.0; k],
        s_z: gs.dz[0].clone(),
        half_s_zz: s_zz.iter().map(|v| 0.5 * v).collect(),
        transport: vec![0.0; k],
        tangency_s: vec![0.0; k],
        tangency_a: vec![0.0; k],
    };
    for n in 0..k {
        let (sx, sy, sz) = (gs.dx[0][n], gs.dx[1][n], gs.dz[0][n]);
        let (ax, ay, az) = (ga.dx[0][n], ga.dx[1][n], ga.dz[0][n]);
        let pot = model.potential(curve.z[0][n]).0;
        t.r0[n] = 0.5 * (sz * sz + zs[n] * zs[n]) + (xs[n] * xs[n] - ys[n] * ys[n]) * pot + xs[n] * sy + ys[n] * sx;
        t.transport[n] = (sz * az + xs[n] * ay + ys[n] * ax) / a0;
        t.t1[n] = t.transport[n] + t.half_s_zz[n];
        t.r2[n] = -0.5 * a_zz[n] / a0;
        t.tangency_s[n] = xs[n] * sx + ys[n] * sy + zs[n] * sz;
        t.tangency_a[n] = (xs[n] * ax + ys[n] * ay + zs[n] * az) / a0;
    }
    Ok(t)
}

/// Both lines of the discretized Schrödinger analog divided by `Ψ(C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerResidual {
    pub h: f64,
    pub line1: Vec<Complex64>,
    pub line2: Vec<Complex64>,
}

impl SchrodingerResidual {
    pub fn line1_l2(&self) -> f64 {
        complex_l2(&self.line1)
    }
}

fn complex_l2(v: &[Complex64]) -> f64 {
    (v.iter().map(|c| c.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt()
}

/// Residual through the ansatz expansion, with `S` and `a` differentiated
/// separately.
pub fn schrodinger_residual(
    model: &LagrangianModel,
    s: &dyn Functional,
    a: &dyn Functional,
    curve: &Curve,
    h: f64,
    opts: QuasiOptions,
) -> Result<SchrodingerResidual> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h = {h}")));
    }
    let t = schrodinger_terms(model, s, a, curve, opts)?;
    Ok(SchrodingerResidual { h, line1: t.residual(h), line2: t.reparam(h) })
}

/// Residual by applying the difference operators to the complex `Ψ` itself.
/// Phase truncation grows like `(ε₂ Δs S_z / h)²`, so this is reliable only
/// for moderate `h`.
pub fn schrodinger_residual_direct(
    model: &LagrangianModel,
    s: &dyn Functional,
    a: &dyn Functional,
    curve: &Curve,
    h: f64,
    opts: QuasiOptions,
) -> Result<SchrodingerResidual> {
    check_scalar(model, curve)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h = {h}")));
    }
    let s0 = s.eval(curve)?;
    // Ψ relative to the phase at C keeps the exponent small.
    let psi = |c: &Curve| -> Result<Complex64> {
        Ok(a.eval(c)? * Complex64::from_polar(1.0, (s.eval(c)? - s0) / h))
    };
    let psi0 = psi(curve)?;
    if !(psi0.norm() > 0.0) {
        return Err(Error::Domain("Ψ vanishes at the curve".into()));
    }
    let ds = curve.grid.ds();
    let bump = |c: Component, k: usize, e: f64| perturb_curve(curve, &Perturbation::indicator(c, k, e));
    let first = |c: Component, k: usize| -> Result<Complex64> {
        Ok((psi(&bump(c, k, opts.eps)?)? - psi(&bump(c, k, -opts.eps)?)?) / (2.0 * opts.eps * ds))
    };
    let (xs, ys, zs) = (curve.x_s(0), curve.x_s(1), curve.z_s(0));
    let rows = map_nodes(curve.len(), opts.parallel, |k| {
        // Fourth-order stencil: the phase curvature makes the δ² error of the
        // three-point stencil visible at the accuracy of interest.
        let e = opts.eps2;
        let at = |m: f64| -> Result<Complex64> { psi(&bump(Component::Z(0), k, m * e)?) };
        let d2z = (-at(2.0)? + 16.0 * at(1.0)? - 30.0 * psi0 + 16.0 * at(-1.0)? - at(-2.0)?) / (12.0 * (e * ds).powi(2));
        let dx = first(Component::X(0), k)?;
        let dy = first(Component::X(1), k)?;
        let dz = first(Component::Z(0), k)?;
        let pot = model.potential(curve.z[0][k]).0;
        let i = Complex64::i();
        let line1 = 0.5 * (-h * h * d2z + zs[k] * zs[k] * psi0) + (xs[k] * xs[k] - ys[k] * ys[k]) * pot * psi0
            - i * h * (xs[k] * dy + ys[k] * dx);
        let line2 = xs[k] * dx + ys[k] * dy + zs[k] * dz;
        Ok((line1 / psi0, line2 / psi0))
    })?;
    let (line1, line2) = rows.into_iter().unzip();
    Ok(SchrodingerResidual { h, line1, line2 })
}

/// Coefficients `(c0, c1, c2)` of the quadratic through three samples
/// `(h_i, R_i)` at every node: Richardson extrapolation to `h → 0`.
pub fn richardson(h: [f64; 3], values: [&[Complex64]; 3]) -> Result<[Vec<Complex64>; 3]> {
    let len = values[0].len();
    for v in &values[1..] {
        if v.len() != len {
            return Err(Error::LengthMismatch { expected: len, got: v.len() });
        }
    }
    if h[0] == h[1] || h[1] == h[2] || h[0] == h[2] {
        return Err(Error::InvalidParameter("distinct h required".into()));
    }
    let mut out = [vec![], vec![], vec![]];
    for n in 0..len {
        // Newton divided differences.
        let (f0, f1, f2) = (values[0][n], values[1][n], values[2][n]);
        let d01 = (f1 - f0) / (h[1] - h[0]);
        let d12 = (f2 - f1) / (h[2] - h[1]);
        let c2 = (d12 - d01) / (h[2] - h[0]);
        let c1 = d01 - c2 * (h[0] + h[1]);
        let c0 = f0 - c1 * h[0] - c2 * h[0] * h[0];
        out[0].push(c0);
        out[1].push(c1);
        out[2].push(c2);
    }
    Ok(out)
}

/// Log-log fit of the floor-subtracted residual `‖R(h) - R(0)‖` against `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSweepReport {
    pub h: Vec<f64>,
    /// `‖R(h)‖`.
    pub residual_l2: Vec<f64>,
    /// `‖R(0)‖`, the Hamilton–Jacobi discretization floor.
    pub floor: f64,
    /// `‖R(h) - R(0)‖`.
    pub subtracted_l2: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
    /// Observed order between consecutive `h`; first entry `NaN`.
    pub slope_partial: Vec<f64>,
    /// Values of `‖R(h) - R(0)‖` below this are rounding.
    pub noise: f64,
}

impl HSweepReport {
    pub fn csv_rows(&self) -> Vec<(f64, f64, f64, f64)> {
        (0..self.h.len())
            .map(|i| (self.h[i], self.residual_l2[i], self.floor, self.slope_partial[i]))
            .collect()
    }
}

/// Relative rounding level of the floor subtraction.
const SUBTRACTION_NOISE: f64 = 1e-12;

pub fn h_scaling_sweep(
    model: &LagrangianModel,
    s: &dyn Functional,
    a: &dyn Functional,
    curve: &Curve,
    hs: &[f64],
    opts: QuasiOptions,
) -> Result<HSweepReport> {
    if hs.len() < 4 {
        return Err(Error::InvalidParameter("h sweep needs at least four points".into()));
    }
    let (lo, hi) = hs.iter().fold((f64::INFINITY, 0.0_f64), |(l, u), h| (l.min(*h), u.max(*h)));
    if lo < 1e-3 * (1.0 - 1e-9) || hi > 1e-1 * (1.0 + 1e-9) || hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!("h range [{lo}, {hi}] must span two decades in [1e-3, 1e-1]")));
    }
    let terms = schrodinger_terms(model, s, a, curve, opts)?;
    sweep_from_terms(&terms, hs)
}

pub fn sweep_from_terms(terms: &SchrodingerTerms, hs: &[f64]) -> Result<HSweepReport> {
    let r0: Vec<Complex64> = terms.r0.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let floor = complex_l2(&r0);
    let mut residual_l2 = Vec::with_capacity(hs.len());
    let mut subtracted_l2 = Vec::with_capacity(hs.len());
    let mut scale: f64 = floor;
    for &h in hs {
        let r = terms.residual(h);
        residual_l2.push(complex_l2(&r));
        let diff: Vec<Complex64> = r.iter().zip(&r0).map(|(a, b)| a - b).collect();
        subtracted_l2.push(complex_l2(&diff));
        let size = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
        scale = scale.max(size);
    }
    let noise = SUBTRACTION_NOISE * scale.max(1.0);
    if subtracted_l2.iter().all(|v| *v <= noise) {
        return Err(Error::Floor(format!("floor {floor:e} dominates every h (noise {noise:e})")));
    }
    let kept: Vec<usize> = (0..hs.len()).filter(|i| subtracted_l2[*i] > noise).collect();
    let x: Vec<f64> = kept.iter().map(|i| hs[*i]).collect();
    let y: Vec<f64> = kept.iter().map(|i| subtracted_l2[*i]).collect();
    let fit = loglog_fit(&x, &y)?;
    let mut slope_partial = vec![f64::NAN];
    slope_partial.extend(pairwise_orders(hs, &subtracted_l2));
    Ok(HSweepReport {
        h: hs.to_vec(),
        residual_l2,
        floor,
        subtracted_l2,
        slope: fit.slope,
        r_squared: fit.r_squared,
        slope_partial,
        noise,
    })
}

/// `n` logarithmically spaced values of `h` from `1e-3` to `1e-1`.
pub fn default_h_list(n: usize) -> Vec<f64> {
    let n = n.max(4);
    (0..n).map(|i| 10f64.powf(-1.0 - 2.0 * i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_field_of_extremals, UForm};
    use crate::geometry::SGrid;
    use crate::hamilton_jacobi::{hj_residual_scalar_field, FnFunctional};
    use std::f64::consts::PI;

    const T0: f64 = 0.154_508_497_187_473_7;

    fn curve(k: usize) -> Curve {
        let g = SGrid::new(k).unwrap();
        let y = g.nodes().iter().map(|s| T0 + 0.01 * (2.0 * PI * s).sin()).collect();
        let z = g.nodes().iter().map(|s| (2.0 * PI * s).cos() * 0.5 + 0.1).collect();
        Curve::graph(g, y, z).unwrap()
    }

    fn serial() -> QuasiOptions {
        QuasiOptions { parallel: false, ..QuasiOptions::default() }
    }

    #[test]
    fn trivial_state_has_zero_residual() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let g = SGrid::new(8).unwrap();
        let c = Curve::graph(g, vec![T0; 8], vec![0.0; 8]).unwrap();
        let zero = FnFunctional(|_: &Curve| Ok(0.0));
        let one = FnFunctional(|_: &Curve| Ok(1.0));
        let r = schrodinger_residual(&model, &zero, &one, &c, 0.01, serial()).unwrap();
        assert!(r.line1.iter().chain(&r.line2).all(|v| v.norm() < 1e-12));
        let d = schrodinger_residual_direct(&model, &zero, &one, &c, 0.01, serial()).unwrap();
        assert!(d.line1.iter().chain(&d.line2).all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn constant_amplitude_is_transported() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let field = build_field_of_extremals(&model, &UForm::Zero, 0.3).unwrap();
        let one = FnFunctional(|_: &Curve| Ok(1.0));
        let t = transport_residual(&model, &field, &one, &curve(16), serial()).unwrap();
        assert!(t.max < 1e-12);
    }

    #[test]
    fn expansion_matches_direct_operator() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let field = build_field_of_extremals(&model, &UForm::Zero, 0.3).unwrap();
        let a = PullbackAmplitude::exp_mean(&field);
        let c = curve(16);
        for h in [0.1, 0.03] {
            let e = schrodinger_residual(&model, &field, &a, &c, h, serial()).unwrap();
            let d = schrodinger_residual_direct(&model, &field, &a, &c, h, serial()).unwrap();
            for (x, y) in e.line1.iter().zip(&d.line1) {
                assert!((x - y).norm() < 1e-5 * (1.0 + x.norm()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn leading_term_is_the_hj_residual() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let field = build_field_of_extremals(&model, &UForm::Zero, 0.3).unwrap();
        let a = PullbackAmplitude::exp_mean(&field);
        let c = curve(16);
        let t = schrodinger_terms(&model, &field, &a, &c, serial()).unwrap();
        let hj = hj_residual_scalar_field(&model, &field, &c, GradientOptions::default()).unwrap();
        for (x, y) in t.r0.iter().zip(hj.line(1)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn richardson_recovers_quadratic() {
        let v = |h: f64| vec![Complex64::new(1.0 + 2.0 * h * h, -3.0 * h)];
        let (a, b, c) = (v(0.1), v(0.05), v(0.025));
        let [c0, c1, c2] = richardson([0.1, 0.05, 0.025], [&a, &b, &c]).unwrap();
        assert!((c0[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((c1[0] - Complex64::new(0.0, -3.0)).norm() < 1e-12);
        assert!((c2[0] - Complex64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn sweep_rejects_bad_ranges_and_floors() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let one = FnFunctional(|_: &Curve| Ok(1.0));
        let zero = FnFunctional(|_: &Curve| Ok(0.0));
        let c = curve(8);
        assert!(h_scaling_sweep(&model, &zero, &one, &c, &[0.1, 0.05, 0.02], serial()).is_err());
        assert!(h_scaling_sweep(&model, &zero, &one, &c, &[0.1, 0.05, 0.03, 0.02], serial()).is_err());
        let r = h_scaling_sweep(&model, &zero, &one, &c, &default_h_list(5), serial());
        assert!(matches!(r, Err(Error::Floor(_))));
    }

    #[test]
    fn min_norm_solution_satisfies_both_rows() {
        let a = [[0.3, 1.0, -0.4], [1.0, 0.1, 0.7]];
        let l = min_norm_2x3(a, [0.5, 0.0]).unwrap();
        assert!((a[0][0] * l[0] + a[0][1] * l[1] + a[0][2] * l[2] - 0.5).abs() < 1e-14);
        assert!((a[1][0] * l[0] + a[1][1] * l[1] + a[1][2] * l[2]).abs() < 1e-14);
    }
}
