//! Fields of extremals over the slab `y = 0` and the action functional
//! `S(C)` they define.
//!
//! For `λ = 0` every evaluation is a linear solve against nodewise mode
//! matrices of the curve, and the action reduces to boundary terms:
//! on a solution `F = ½∂_x(z z_x) - ½∂_y(z z_y)`, so
//! `S = U(a) - ½∫ a w dx + ½∮_C z p ds`. For `λ ≠ 0` the extremal comes from
//! the method of lines and the action from a quadrature over the region.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::direct::scalar_params;
use super::mol::{self, MolSolution};
use super::spectral::{basis_at, coefficients, gram, omega2, rate, synthesize, ymode_rate, ModalSolution};
use crate::geometry::{Curve, SGrid, SurfacePatch};
use crate::lagrangians::LagrangianModel;
use crate::legendre::{legendre_forward, IntegralElement, TangentElement};
use crate::numerics::{gauss_legendre_unit, Factorization, TrigInterp};
use crate::{Error, Result};

/// The initial-data functional `U(C_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UForm {
    Zero,
    /// `U = ∫ w a ds` with constant `w`.
    Constant { w: f64 },
    /// `U = ∫ w(s) a(s) ds` with `w` sampled uniformly on `[0, 1)`.
    Linear { w: Vec<f64> },
    #[serde(other)]
    Unsupported,
}

impl UForm {
    /// `w_U` at the nodes `x_j = j/K`.
    pub fn samples(&self, k: usize) -> Vec<f64> {
        match self {
            UForm::Zero | UForm::Unsupported => vec![0.0; k],
            UForm::Constant { w } => vec![*w; k],
            UForm::Linear { w } => {
                let interp = TrigInterp::new(w);
                (0..k).map(|j| interp.eval(j as f64 / k as f64).0).collect()
            }
        }
    }
}

/// Quadrature nodes per curve node for boundary integrals along `C`.
const BOUNDARY_OVERSAMPLE: usize = 2;
const CACHE_CAPACITY: usize = 16;

/// Curve-dependent, `z`-independent data: node mode matrices and the
/// boundary quadrature of `½∮ z p ds`.
struct CurveGeometry {
    mc: DMatrix<f64>,
    ms: DMatrix<f64>,
    lu_c: OnceLock<Result<Factorization>>,
    lu_s: OnceLock<Result<Factorization>>,
    weight: f64,
    /// value, x- and y-derivative operators on `(α | β)`; rows are quadrature points.
    value: DMatrix<f64>,
    dx: DMatrix<f64>,
    dy: DMatrix<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Unwrapped trig interpolant `X(s), Y(s)` of a slab curve.
pub(crate) struct CurveInterp {
    xper: TrigInterp,
    y: TrigInterp,
}

impl CurveInterp {
    pub fn new(curve: &Curve) -> Self {
        Self { xper: TrigInterp::new(&curve.x_periodic(0)), y: TrigInterp::new(&curve.x[1]) }
    }

    /// `(X, X_s, Y, Y_s)`.
    pub fn at(&self, s: f64) -> (f64, f64, f64, f64) {
        let (xp, dxp) = self.xper.eval(s);
        let (y, dy) = self.y.eval(s);
        (s + xp, 1.0 + dxp, y, dy)
    }
}

impl CurveGeometry {
    fn new(curve: &Curve, w2: &[f64]) -> Self {
        let k = curve.len();
        let rates: Vec<f64> = w2.iter().map(|w| rate(*w)).collect();
        let mut mc = DMatrix::zeros(k, k);
        let mut ms = DMatrix::zeros(k, k);
        for j in 0..k {
            let (b, _) = basis_at(k, curve.x[0][j]);
            for i in 0..k {
                let (c, _, s, _) = ymode_rate(rates[i], curve.x[1][j]);
                mc[(j, i)] = c * b[i];
                ms[(j, i)] = s * b[i];
            }
        }
        let interp = CurveInterp::new(curve);
        let nq = BOUNDARY_OVERSAMPLE * k;
        let mut value = DMatrix::zeros(nq, 2 * k);
        let mut dx = DMatrix::zeros(nq, 2 * k);
        let mut dy = DMatrix::zeros(nq, 2 * k);
        let mut xs = vec![0.0; nq];
        let mut ys = vec![0.0; nq];
        for q in 0..nq {
            let (x, xsq, y, ysq) = interp.at(q as f64 / nq as f64);
            xs[q] = xsq;
            ys[q] = ysq;
            let (b, db) = basis_at(k, x);
            for i in 0..k {
                let (c, dc, s, ds) = ymode_rate(rates[i], y);
                value[(q, i)] = c * b[i];
                value[(q, k + i)] = s * b[i];
                dx[(q, i)] = c * db[i];
                dx[(q, k + i)] = s * db[i];
                dy[(q, i)] = dc * b[i];
                dy[(q, k + i)] = ds * b[i];
            }
        }
        Self {
            mc,
            ms,
            lu_c: OnceLock::new(),
            lu_s: OnceLock::new(),
            weight: 1.0 / nq as f64,
            value,
            dx,
            dy,
            xs,
            ys,
        }
    }

    fn lu_c(&self) -> Result<&Factorization> {
        self.lu_c
            .get_or_init(|| Factorization::new(self.mc.clone()))
            .as_ref()
            .map_err(|_| Error::Singular("shooting matrix".into()))
    }

    fn lu_s(&self) -> Result<&Factorization> {
        self.lu_s
            .get_or_init(|| Factorization::new(self.ms.clone()))
            .as_ref()
            .map_err(|_| Error::Singular("boundary-value matrix".into()))
    }

    /// `½∮ z p ds` along the interpolated curve.
    fn boundary_term(&self, alpha: &[f64], beta: &[f64]) -> f64 {
        let coef = nalgebra::DVector::from_iterator(alpha.len() * 2, alpha.iter().chain(beta).copied());
        let z = &self.value * &coef;
        let zx = &self.dx * &coef;
        let zy = &self.dy * &coef;
        let mut acc = 0.0;
        for q in 0..z.len() {
            acc += z[q] * (zx[q] * self.ys[q] + zy[q] * self.xs[q]);
        }
        0.5 * acc * self.weight
    }
}

/// The extremal reaching a curve.
#[derive(Debug, Clone)]
pub struct Extremal {
    pub initial: Vec<f64>,
    pub velocity: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    w2: Vec<f64>,
    nonlinear: Option<Arc<MolSolution>>,
}

impl Extremal {
    /// `(z, z_x, z_y)` at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match &self.nonlinear {
            Some(sol) => sol.eval(x, y),
            None => ModalSolution { alpha: self.alpha.clone(), beta: self.beta.clone(), omega2: self.w2.clone() }
                .eval(x, y),
        }
    }

    /// Mode coefficients of the initial value `a`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// An evaluable `S(C)` over curves `0 ≤ y(s) ≤ t_max` that are graphs over `x`.
pub struct ExtremalField {
    pub model: LagrangianModel,
    pub u: UForm,
    pub t_max: f64,
    m2: f64,
    lambda: f64,
    geometry: Mutex<HashMap<Vec<u64>, Arc<CurveGeometry>>>,
}

impl std::fmt::Debug for ExtremalField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtremalField")
            .field("model", &self.model.name())
            .field("u", &self.u)
            .field("t_max", &self.t_max)
            .finish()
    }
}

/// Validates the model and `U` and returns the field evaluator.
pub fn build_field_of_extremals(model: &LagrangianModel, u: &UForm, t_max: f64) -> Result<ExtremalField> {
    let (m2, lambda) = scalar_params(model)?;
    if matches!(u, UForm::Unsupported) {
        return Err(Error::Unsupported("only zero or linear initial functionals are supported".into()));
    }
    if let UForm::Linear { w } = u {
        if w.is_empty() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("linear U needs finite samples".into()));
        }
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter("t_max must be positive".into()));
    }
    Ok(ExtremalField { model: model.clone(), u: u.clone(), t_max, m2, lambda, geometry: Mutex::new(HashMap::new()) })
}

/// `S(C)` and the integral element of the extremal surface along `C`.
pub fn s_functional_eval(field: &ExtremalField, curve: &Curve) -> Result<(f64, IntegralElement)> {
    let ext = field.extremal(curve)?;
    let s = field.action_of(curve, &ext)?;
    Ok((s, field.element_of(curve, &ext)?))
}

fn curve_key(curve: &Curve, with_z: bool) -> Vec<u64> {
    let mut key: Vec<u64> = curve.x.iter().flatten().map(|v| v.to_bits()).collect();
    if with_z {
        key.extend(curve.z.iter().flatten().map(|v| v.to_bits()));
    }
    key
}

impl ExtremalField {
    pub fn is_linear(&self) -> bool {
        self.lambda == 0.0
    }

    /// `w_U` on the slab nodes of a `K`-point curve; equals `z_y(x, 0)`.
    pub fn initial_velocity(&self, k: usize) -> Vec<f64> {
        self.u.samples(k)
    }

    /// `U(a)` for initial values sampled at `x_j = j/K`.
    pub fn u_value(&self, a: &[f64]) -> f64 {
        let wu = coefficients(&self.u.samples(a.len()));
        let alpha = coefficients(a);
        inner(&alpha, &wu)
    }

    /// The initial integral element on `C_0 = (s, 0, a(s))`.
    pub fn initial_element(&self, a: &[f64]) -> Result<IntegralElement> {
        let k = a.len();
        let grid = SGrid::new(k)?;
        let slab = Curve::graph(grid, vec![0.0; k], a.to_vec())?;
        let te = TangentElement::from_transverse(slab, &[self.initial_velocity(k)])?;
        legendre_forward(&self.model, &te)
    }

    pub fn check_domain(&self, curve: &Curve) -> Result<()> {
        if curve.n() != 2 || curve.m() != 1 {
            return Err(Error::UnsupportedDimension { n: curve.n(), m: curve.m() });
        }
        if curve.winding != [1.0, 0.0] {
            return Err(Error::Domain("curve must wind once in x and not in y".into()));
        }
        let k = curve.len();
        let x = &curve.x[0];
        for j in 0..k {
            let next = if j + 1 == k { x[0] + 1.0 } else { x[j + 1] };
            if !(next > x[j]) {
                return Err(Error::Domain(format!("not a graph over x at node {j}")));
            }
        }
        if let Some(j) = curve.x[1].iter().position(|y| !(*y >= 0.0 && *y <= self.t_max)) {
            return Err(Error::Domain(format!("y = {} outside [0, {}] at node {j}", curve.x[1][j], self.t_max)));
        }
        if curve.z[0].iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite z".into()));
        }
        Ok(())
    }

    fn geometry(&self, curve: &Curve) -> Arc<CurveGeometry> {
        let key = curve_key(curve, false);
        if let Some(g) = self.geometry.lock().expect("geometry cache").get(&key) {
            return Arc::clone(g);
        }
        let g = Arc::new(CurveGeometry::new(curve, &omega2(curve.len(), self.m2)));
        let mut cache = self.geometry.lock().expect("geometry cache");
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        Arc::clone(cache.entry(key).or_insert(g))
    }

    /// Solves the shooting problem for the extremal through `C`.
    pub fn extremal(&self, curve: &Curve) -> Result<Extremal> {
        self.check_domain(curve)?;
        let k = curve.len();
        let w2 = omega2(k, self.m2);
        let velocity = self.initial_velocity(k);
        let beta = coefficients(&velocity);
        let geom = self.geometry(curve);
        let ms_beta = &geom.ms * nalgebra::DVector::from_column_slice(&beta);
        let rhs: Vec<f64> = (0..k).map(|j| curve.z[0][j] - ms_beta[j]).collect();
        let alpha = geom.lu_c()?.solve(&rhs)?;
        let linear = Extremal { initial: synthesize(&alpha), velocity, alpha, beta, w2, nonlinear: None };
        if self.is_linear() {
            return Ok(linear);
        }
        self.shoot_nonlinear(curve, linear)
    }

    fn shoot_nonlinear(&self, curve: &Curve, start: Extremal) -> Result<Extremal> {
        const MAX_ITER: usize = 30;
        let k = curve.len();
        let y_max = curve.x[1].iter().fold(0.0_f64, |a, b| a.max(*b));
        let solve = |alpha: &[f64]| mol::integrate(self.m2, self.lambda, alpha, &start.beta, y_max);
        let residual = |sol: &MolSolution| -> Vec<f64> {
            (0..k).map(|j| sol.eval(curve.x[0][j], curve.x[1][j]).0 - curve.z[0][j]).collect()
        };
        let norm = |r: &[f64]| r.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let scale = 1.0 + norm(&curve.z[0]);
        let mut alpha = start.alpha.clone();
        let mut sol = solve(&alpha)?;
        let mut r = residual(&sol);
        for _ in 0..MAX_ITER {
            if norm(&r) <= 1e-12 * scale {
                break;
            }
            let mut jac = DMatrix::zeros(k, k);
            for b in 0..k {
                let h = 1e-6 * (1.0 + alpha[b].abs());
                let mut plus = alpha.clone();
                plus[b] += h;
                let rp = residual(&solve(&plus)?);
                for j in 0..k {
                    jac[(j, b)] = (rp[j] - r[j]) / h;
                }
            }
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let step = Factorization::new(jac)?.solve(&neg)?;
            let mut damping = 1.0;
            loop {
                let trial: Vec<f64> = alpha.iter().zip(&step).map(|(a, d)| a + damping * d).collect();
                let tsol = solve(&trial)?;
                let tr = residual(&tsol);
                if norm(&tr) < norm(&r) || damping < 1e-4 {
                    alpha = trial;
                    sol = tsol;
                    r = tr;
                    break;
                }
                damping *= 0.5;
            }
        }
        if norm(&r) > 1e-10 * scale {
            return Err(Error::NoConvergence { iterations: MAX_ITER, residual: norm(&r) });
        }
        Ok(Extremal { initial: synthesize(&alpha), alpha, nonlinear: Some(Arc::new(sol)), ..start })
    }

    /// Largest node mismatch `|z_D(x_j, y_j) - z_j|` of a solved extremal.
    pub fn shooting_residual(&self, curve: &Curve, ext: &Extremal) -> f64 {
        (0..curve.len())
            .map(|j| (ext.eval(curve.x[0][j], curve.x[1][j]).0 - curve.z[0][j]).abs())
            .fold(0.0, f64::max)
    }

    fn action_of(&self, curve: &Curve, ext: &Extremal) -> Result<f64> {
        let u = inner(&ext.alpha, &coefficients(&self.u.samples(curve.len())));
        if ext.nonlinear.is_none() {
            let geom = self.geometry(curve);
            return Ok(u - 0.5 * inner(&ext.alpha, &ext.beta) + geom.boundary_term(&ext.alpha, &ext.beta));
        }
        let k = curve.len();
        self.region_action(curve, ext, 2 * k, 16 + k / 2).map(|a| u + a)
    }

    /// `S(C)`.
    pub fn action(&self, curve: &Curve) -> Result<f64> {
        let ext = self.extremal(curve)?;
        self.action_of(curve, &ext)
    }

    /// `∫∫ Φ` over the patch `x = X(s)`, `y = t·Y(s)`, `t ∈ [0, 1]`, by
    /// trapezoid in `s` and Gauss–Legendre in `t`.
    pub fn region_action(&self, curve: &Curve, ext: &Extremal, ns: usize, nt: usize) -> Result<f64> {
        let interp = CurveInterp::new(curve);
        let (tn, tw) = gauss_legendre_unit(nt);
        let zero = [0.0, 0.0];
        let mut acc = 0.0;
        for q in 0..ns {
            let (x, xs, yc, _) = interp.at(q as f64 / ns as f64);
            // Φ = F·∂(x, y)/∂(t, s) = -F·Y·X_s on this patch.
            let jac = -yc * xs;
            for (t, w) in tn.iter().zip(&tw) {
                let (z, zx, zy) = ext.eval(x, t * yc);
                acc += w * jac * self.model.eval_f(&zero, &[z], &[zx, zy])?;
            }
        }
        Ok(acc / ns as f64)
    }

    /// The integral element of the extremal along `C`: exact normal slope,
    /// tangential slope from the discrete `z_s`.
    pub fn element_of(&self, curve: &Curve, ext: &Extremal) -> Result<IntegralElement> {
        let (xs, ys) = (curve.x_s(0), curve.x_s(1));
        let sigma: Vec<f64> = (0..curve.len())
            .map(|j| {
                let (_, zx, zy) = ext.eval(curve.x[0][j], curve.x[1][j]);
                (-zx * ys[j] + zy * xs[j]) / (xs[j] * xs[j] + ys[j] * ys[j])
            })
            .collect();
        let te = TangentElement::from_transverse(curve.clone(), &[sigma])?;
        legendre_forward(&self.model, &te)
    }

    /// Initial values `a(x_j)` of the extremal through `C` on the slab nodes.
    pub fn initial_datum(&self, curve: &Curve) -> Result<Vec<f64>> {
        Ok(self.extremal(curve)?.initial)
    }

    /// Samples the extremal on the patch `x = X(s)`, `y = t·Y(s)` with `L`
    /// uniform `t` levels.
    pub fn fitted_patch(&self, curve: &Curve, levels: usize) -> Result<SurfacePatch> {
        if levels < 2 {
            return Err(Error::InvalidGrid("patch needs at least two t levels".into()));
        }
        let ext = self.extremal(curve)?;
        let interp = CurveInterp::new(curve);
        let t: Vec<f64> = (0..levels).map(|l| l as f64 / (levels - 1) as f64).collect();
        SurfacePatch::from_fn(curve.grid, t, vec![1.0, 0.0], |s, t| {
            let (x, _, y, _) = interp.at(s);
            (vec![x, t * y], vec![ext.eval(x, t * y).0])
        })
    }

    /// `I(a, C)`: action of the extremal with initial values `a` (on the slab
    /// nodes) that reaches `C`, ignoring `U`. Linear fields only.
    pub fn boundary_value_action(&self, curve: &Curve, a: &[f64]) -> Result<(f64, Vec<f64>)> {
        if !self.is_linear() {
            return Err(Error::Unsupported("boundary-value action requires λ = 0".into()));
        }
        self.check_domain(curve)?;
        if a.len() != curve.len() {
            return Err(Error::LengthMismatch { expected: curve.len(), got: a.len() });
        }
        let geom = self.geometry(curve);
        let alpha = coefficients(a);
        let mc_alpha = &geom.mc * nalgebra::DVector::from_column_slice(&alpha);
        let rhs: Vec<f64> = (0..curve.len()).map(|j| curve.z[0][j] - mc_alpha[j]).collect();
        let beta = geom.lu_s()?.solve(&rhs)?;
        let action = -0.5 * inner(&alpha, &beta) + geom.boundary_term(&alpha, &beta);
        Ok((action, synthesize(&beta)))
    }
}

/// `∫_0^1 f g dx` from mode coefficients.
fn inner(a: &[f64], b: &[f64]) -> f64 {
    gram(a.len()).iter().zip(a).zip(b).map(|((g, x), y)| g * x * y).sum()
}
