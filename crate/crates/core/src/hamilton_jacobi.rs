//! Finite-difference variational derivatives of curve functionals and the
//! residuals of the surface Hamilton–Jacobi equations built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_field_of_extremals, ExtremalField, UForm};
use crate::geometry::{perturb_curve, Component, Curve, Perturbation, SGrid, Variation};
use crate::lagrangians::{LagrangianModel, ModelKind};
use crate::legendre::{legendre_inverse, IntegralElement};
use crate::numerics::Factorization;
use crate::{Error, Result};

/// Default bump amplitude of [`variational_derivative`].
pub const DEFAULT_EPS: f64 = 1e-5;

/// A deterministic, reentrant functional `C ↦ S(C)`.
pub trait Functional: Sync {
    fn eval(&self, curve: &Curve) -> Result<f64>;
}

impl Functional for ExtremalField {
    fn eval(&self, curve: &Curve) -> Result<f64> {
        self.action(curve)
    }
}

/// Adapts a closure.
pub struct FnFunctional<F>(pub F);

impl<F> Functional for FnFunctional<F>
where
    F: Fn(&Curve) -> Result<f64> + Sync,
{
    fn eval(&self, curve: &Curve) -> Result<f64> {
        (self.0)(curve)
    }
}

impl<T: Functional + ?Sized> Functional for &T {
    fn eval(&self, curve: &Curve) -> Result<f64> {
        (**self).eval(curve)
    }
}

/// `(S(C + ε e_k) - S(C - ε e_k)) / (2 ε Δs)` for the indicator bump `e_k`.
pub fn variational_derivative(
    s: &dyn Functional,
    curve: &Curve,
    component: Component,
    node: usize,
    eps: f64,
) -> Result<f64> {
    let plus = perturb_curve(curve, &Perturbation::indicator(component, node, eps))?;
    let minus = perturb_curve(curve, &Perturbation::indicator(component, node, -eps))?;
    Ok((s.eval(&plus)? - s.eval(&minus)?) / (2.0 * eps * curve.grid.ds()))
}

/// All variational derivatives at a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    /// `δS/δx^j(s_k)`.
    pub dx: Vec<Vec<f64>>,
    /// `δS/δz^i(s_k)`.
    pub dz: Vec<Vec<f64>>,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOptions {
    pub eps: f64,
    pub parallel: bool,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS, parallel: false }
    }
}

/// Batched [`variational_derivative`] over every node and component.
pub fn variational_gradient(s: &dyn Functional, curve: &Curve, opts: GradientOptions) -> Result<Gradient> {
    let k = curve.len();
    let comps: Vec<Component> = (0..curve.n())
        .map(Component::X)
        .chain((0..curve.m()).map(Component::Z))
        .collect();
    let jobs: Vec<(Component, usize)> = comps.iter().flat_map(|c| (0..k).map(move |n| (*c, n))).collect();
    let run = |&(c, n): &(Component, usize)| variational_derivative(s, curve, c, n, opts.eps);
    let values: Vec<f64> = if opts.parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };
    let mut chunks = values.chunks(k).map(<[f64]>::to_vec);
    let dx = (0..curve.n()).map(|_| chunks.next().expect("x rows")).collect();
    let dz = (0..curve.m()).map(|_| chunks.next().expect("z rows")).collect();
    Ok(Gradient { dx, dz, eps: opts.eps })
}

/// Outcome of the step-size sweep of [`select_step`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepChoice {
    pub eps: f64,
    /// `|D(ε) - D(ε/2)|` at the chosen step.
    pub spread: f64,
    /// True when the spread grows again below the chosen step, so smaller
    /// steps are dominated by rounding.
    pub below_floor: bool,
}

/// Halving/doubling sweep around [`DEFAULT_EPS`] that picks the plateau, i.e.
/// the step where successive estimates agree best.
pub fn select_step(s: &dyn Functional, curve: &Curve, component: Component, node: usize) -> Result<StepChoice> {
    let ladder: Vec<f64> = (-6..=6).map(|e| DEFAULT_EPS * 2f64.powi(e)).collect();
    let est: Vec<f64> = ladder
        .iter()
        .map(|e| variational_derivative(s, curve, component, node, *e))
        .collect::<Result<_>>()?;
    let spreads: Vec<f64> = est.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let (best, spread) = spreads
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    let below_floor = spreads[..best].iter().any(|v| *v > 4.0 * spread.max(f64::MIN_POSITIVE));
    Ok(StepChoice { eps: ladder[best + 1], spread, below_floor })
}

/// Nodewise residuals of one form of the Hamilton–Jacobi system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HJReport {
    /// `"21"` (generic form, lines: tangency then `δS/δx^j + H^j`) or `"22"`
    /// (scalar-field form, lines: tangency then the closed-form equation).
    pub eq: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub l2: f64,
    pub max: f64,
    /// `per_node[k][line]`.
    pub per_node: Vec<Vec<f64>>,
}

impl HJReport {
    fn new(eq: &str, grid: SGrid, lines: Vec<Vec<f64>>) -> Self {
        let k = grid.len();
        let per_node: Vec<Vec<f64>> = (0..k).map(|n| lines.iter().map(|l| l[n]).collect()).collect();
        let l2 = (lines.iter().flatten().map(|v| v * v).sum::<f64>() * grid.ds()).sqrt();
        let max = lines.iter().flatten().fold(0.0, |a: f64, b| a.max(b.abs()));
        Self { eq: eq.into(), k, l2, max, per_node }
    }

    pub fn lines(&self) -> usize {
        self.per_node.first().map_or(0, Vec::len)
    }

    pub fn line(&self, i: usize) -> Vec<f64> {
        self.per_node.iter().map(|r| r[i]).collect()
    }

    /// `Δs`-weighted L² norm of one line.
    pub fn line_l2(&self, i: usize) -> f64 {
        (self.line(i).iter().map(|v| v * v).sum::<f64>() / self.k as f64).sqrt()
    }
}

/// `Σ_i z^i_s δS/δz^i + Σ_j x^j_s δS/δx^j` per node.
pub fn tangency_residual(curve: &Curve, grad: &Gradient) -> Vec<f64> {
    let xs: Vec<Vec<f64>> = (0..curve.n()).map(|j| curve.x_s(j)).collect();
    let zs: Vec<Vec<f64>> = (0..curve.m()).map(|i| curve.z_s(i)).collect();
    (0..curve.len())
        .map(|k| {
            let a: f64 = (0..curve.n()).map(|j| xs[j][k] * grad.dx[j][k]).sum();
            let b: f64 = (0..curve.m()).map(|i| zs[i][k] * grad.dz[i][k]).sum();
            a + b
        })
        .collect()
}

/// Generic form from a gradient: `H^j` by the inverse Legendre transform at
/// `p = δS/δz`.
pub fn hj_report_generic(model: &LagrangianModel, curve: &Curve, grad: &Gradient) -> Result<HJReport> {
    let (_, h) = legendre_inverse(model, curve, &grad.dz)?;
    let mut lines = vec![tangency_residual(curve, grad)];
    for j in 0..curve.n() {
        lines.push((0..curve.len()).map(|k| grad.dx[j][k] + h[j][k]).collect());
    }
    Ok(HJReport::new("21", curve.grid, lines))
}

/// Closed-form scalar-field system from a gradient.
pub fn hj_report_scalar_field(model: &LagrangianModel, curve: &Curve, grad: &Gradient) -> Result<HJReport> {
    if !matches!(model.kind, ModelKind::ScalarField2d { .. }) || curve.n() != 2 || curve.m() != 1 {
        return Err(Error::InvalidParameter("closed form needs the 2d scalar field".into()));
    }
    let (xs, ys, zs) = (curve.x_s(0), curve.x_s(1), curve.z_s(0));
    let line2 = (0..curve.len())
        .map(|k| {
            let q = grad.dz[0][k];
            let pot = model.potential(curve.z[0][k]).0;
            0.5 * (q * q + zs[k] * zs[k])
                + (xs[k] * xs[k] - ys[k] * ys[k]) * pot
                + xs[k] * grad.dx[1][k]
                + ys[k] * grad.dx[0][k]
        })
        .collect();
    Ok(HJReport::new("22", curve.grid, vec![tangency_residual(curve, grad), line2]))
}

/// Maps the generic residuals `r_j = δS/δx^j + H^j` of the scalar field onto
/// the closed-form line, `x_s r_2 + y_s r_1`.
pub fn generic_to_scalar_field(curve: &Curve, generic: &HJReport) -> HJReport {
    let (xs, ys) = (curve.x_s(0), curve.x_s(1));
    let (r1, r2) = (generic.line(1), generic.line(2));
    let line2 = (0..curve.len()).map(|k| xs[k] * r2[k] + ys[k] * r1[k]).collect();
    HJReport::new("22", curve.grid, vec![generic.line(0), line2])
}

pub fn hj_residual(model: &LagrangianModel, s: &dyn Functional, curve: &Curve, opts: GradientOptions) -> Result<HJReport> {
    hj_report_generic(model, curve, &variational_gradient(s, curve, opts)?)
}

pub fn hj_residual_scalar_field(
    model: &LagrangianModel,
    s: &dyn Functional,
    curve: &Curve,
    opts: GradientOptions,
) -> Result<HJReport> {
    hj_report_scalar_field(model, curve, &variational_gradient(s, curve, opts)?)
}

/// Predicted and measured first variation of `S` along a smooth variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationCheck {
    /// `ε ∮ (p δz - H δx) ds` by the node sum.
    pub predicted: f64,
    /// `(S(C + εδ) - S(C - εδ)) / 2`.
    pub measured: f64,
}

impl VariationCheck {
    pub fn ratio(&self) -> f64 {
        self.measured / self.predicted
    }
}

pub fn action_variation_check(
    s: &dyn Functional,
    ie: &IntegralElement,
    variation: &Variation,
    eps: f64,
) -> Result<VariationCheck> {
    let curve = &ie.curve;
    let ds = curve.grid.ds();
    let mut predicted = 0.0;
    for k in 0..curve.len() {
        for i in 0..curve.m() {
            predicted += ie.p[i][k] * variation.dz[i][k];
        }
        for j in 0..curve.n() {
            predicted -= ie.h[j][k] * variation.dx[j][k];
        }
    }
    predicted *= eps * ds;
    if eps == 0.0 {
        return Ok(VariationCheck { predicted: 0.0, measured: 0.0 });
    }
    let measured = 0.5 * (s.eval(&variation.apply(curve, eps)?)? - s.eval(&variation.apply(curve, -eps)?)?);
    Ok(VariationCheck { predicted, measured })
}

/// Result of the envelope construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSolution {
    pub s: f64,
    /// The stationary initial values `a(x_j)`.
    pub a: Vec<f64>,
    /// `C_0 = (s, 0, a(s))`.
    pub c0: Curve,
}

/// Stationarity of `G(a) = I(a, C) + U(a)` over the initial values on the
/// slab `(s, 0)`. `G` is quadratic for the linear field, so its gradient and
/// Hessian come exactly from unit-step polarization.
pub fn cauchy_envelope_solve(model: &LagrangianModel, u: &UForm, curve: &Curve) -> Result<EnvelopeSolution> {
    let t_max = curve.x.get(1).map_or(0.0, |y| y.iter().fold(0.0_f64, |a, b| a.max(*b)));
    let field = build_field_of_extremals(model, u, t_max.max(f64::MIN_POSITIVE))?;
    if !field.is_linear() {
        return Err(Error::Unsupported("envelope solve requires λ = 0".into()));
    }
    let k = curve.len();
    let g = |a: &[f64]| -> Result<f64> { Ok(field.boundary_value_action(curve, a)?.0 + field.u_value(a)) };
    let unit = |i: usize, sign: f64| {
        let mut a = vec![0.0; k];
        a[i] = sign;
        a
    };
    let g0 = g(&vec![0.0; k])?;
    let gp: Vec<f64> = (0..k).map(|i| g(&unit(i, 1.0))).collect::<Result<_>>()?;
    let gm: Vec<f64> = (0..k).map(|i| g(&unit(i, -1.0))).collect::<Result<_>>()?;
    let grad: Vec<f64> = (0..k).map(|i| 0.5 * (gp[i] - gm[i])).collect();
    let mut hess = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        hess[(i, i)] = gp[i] + gm[i] - 2.0 * g0;
        for j in 0..i {
            let mut a = unit(i, 1.0);
            a[j] = 1.0;
            let q = g(&a)? - gp[i] - gp[j] + g0;
            hess[(i, j)] = q;
            hess[(j, i)] = q;
        }
    }
    let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
    let a = Factorization::new(hess)
        .and_then(|f| f.solve(&neg))
        .map_err(|_| Error::Singular("stationarity system".into()))?;
    let s = g(&a)?;
    let c0 = Curve::graph(curve.grid, vec![0.0; k], a.clone())?;
    Ok(EnvelopeSolution { s, a, c0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn curve(k: usize) -> Curve {
        let g = SGrid::new(k).unwrap();
        let y = g.nodes().iter().map(|s| 0.15 + 0.01 * (2.0 * PI * s).sin()).collect();
        let z = g.nodes().iter().map(|s| (2.0 * PI * s).cos() + 0.2).collect();
        Curve::graph(g, y, z).unwrap()
    }

    #[test]
    fn constant_functional_has_zero_gradient() {
        let c = curve(16);
        let s = FnFunctional(|_: &Curve| Ok(3.0));
        let g = variational_gradient(&s, &c, GradientOptions::default()).unwrap();
        assert!(g.dx.iter().chain(&g.dz).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn quadratic_test_functional() {
        let c = curve(32);
        let s = FnFunctional(|c: &Curve| {
            let xs = c.x_s(0);
            Ok(c.z[0].iter().zip(&xs).map(|(z, x)| z * z * x).sum::<f64>() * c.grid.ds())
        });
        let xs = c.x_s(0);
        for k in [0usize, 5, 17] {
            let d = variational_derivative(&s, &c, Component::Z(0), k, DEFAULT_EPS).unwrap();
            assert!((d - 2.0 * c.z[0][k] * xs[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn circulation_is_tangential() {
        // ∮ z dx is invariant under reparameterization of s.
        let s = FnFunctional(|c: &Curve| {
            let k = c.len();
            let x = &c.x[0];
            Ok(0.5 * (0..k)
                .map(|j| {
                    let next = if j + 1 == k { x[0] + 1.0 } else { x[j + 1] };
                    let prev = if j == 0 { x[k - 1] - 1.0 } else { x[j - 1] };
                    c.z[0][j] * (next - prev)
                })
                .sum::<f64>())
        });
        let c = curve(32);
        let g = variational_gradient(&s, &c, GradientOptions { eps: 1e-5, parallel: true }).unwrap();
        assert!(tangency_residual(&c, &g).iter().all(|r| r.abs() < 1e-8));
    }

    #[test]
    fn report_norms_and_json() {
        let g = SGrid::new(8).unwrap();
        let rep = HJReport::new("22", g, vec![vec![0.0; 8], vec![1.0; 8]]);
        assert_eq!(rep.max, 1.0);
        assert!((rep.l2 - 1.0).abs() < 1e-15);
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["eq", "K", "l2", "max", "per_node"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn zero_variation_and_zero_envelope() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let field = build_field_of_extremals(&model, &UForm::Zero, 0.5).unwrap();
        let g = SGrid::new(16).unwrap();
        let flat = Curve::graph(g, vec![0.2; 16], vec![0.0; 16]).unwrap();
        let (_, ie) = crate::dynamics::s_functional_eval(&field, &flat).unwrap();
        let check = action_variation_check(&field, &ie, &Variation::zero(&flat), 1e-5).unwrap();
        assert_eq!((check.predicted, check.measured), (0.0, 0.0));
        let env = cauchy_envelope_solve(&model, &UForm::Zero, &flat).unwrap();
        assert!(env.s.abs() < 1e-12);
        assert!(env.a.iter().all(|a| a.abs() < 1e-12));
    }
}
