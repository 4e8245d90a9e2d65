//! The modified Legendre transform between tangent elements (slopes) and
//! integral elements (momentum densities `p^i`, Hamiltonian densities `H^j`).
//!
//! Everything here is nodewise; a curve contributes one [`NodeFrame`] per
//! sample, built from central differences along `s`.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::geometry::{jacobian_minors, Curve};
use crate::lagrangians::{LagrangianModel, PointState};
use crate::numerics::solve_dense;
use crate::{Error, Result};

/// Tolerance for the compatibility and transversality constraints.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Newton residual tolerance of [`legendre_inverse`].
pub const NEWTON_TOL: f64 = 1e-12;
/// Newton iteration cap of [`legendre_inverse`].
pub const NEWTON_MAX_ITER: usize = 50;

/// Local data of a curve at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFrame {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    pub minors: Vec<f64>,
}

pub fn node_frames(curve: &Curve) -> Result<Vec<NodeFrame>> {
    let minors = jacobian_minors(curve)?;
    let xs: Vec<Vec<f64>> = (0..curve.n()).map(|j| curve.x_s(j)).collect();
    let zs: Vec<Vec<f64>> = (0..curve.m()).map(|i| curve.z_s(i)).collect();
    Ok((0..curve.len())
        .map(|k| {
            let (x, z) = curve.node(k);
            NodeFrame {
                x,
                z,
                xs: xs.iter().map(|a| a[k]).collect(),
                zs: zs.iter().map(|a| a[k]).collect(),
                minors: minors.iter().map(|a| a[k]).collect(),
            }
        })
        .collect())
}

fn sign(l: usize) -> f64 {
    if l.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Momentum and Hamiltonian densities at one node from the slopes.
pub fn momenta_at(model: &LagrangianModel, frame: &NodeFrame, slopes: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (model.n, model.m);
    let f = model.eval_f(&frame.x, &frame.z, slopes)?;
    let fzx = model.f_zx(&frame.x, &frame.z, slopes)?;
    let p = (0..m)
        .map(|i| (0..n).map(|l| sign(l) * fzx[i * n + l] * frame.minors[l]).sum())
        .collect();
    let h = (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for l in 0..n {
                let contraction: f64 = (0..m).map(|i| fzx[i * n + l] * slopes[i * n + j]).sum();
                acc += sign(l) * contraction * frame.minors[l];
            }
            acc - sign(j) * f * frame.minors[j]
        })
        .collect();
    Ok((p, h))
}

/// Compatibility residuals `z^i_s - z^i_{x^j} x^j_s` at one node (empty for `n = 1`).
pub fn compatibility_at(frame: &NodeFrame, slopes: &[f64]) -> Vec<f64> {
    let n = frame.x.len();
    if n == 1 {
        return Vec::new();
    }
    (0..frame.z.len())
        .map(|i| frame.zs[i] - (0..n).map(|j| slopes[i * n + j] * frame.xs[j]).sum::<f64>())
        .collect()
}

/// Transversality residual `p^i z^i_s - H^j x^j_s` at one node.
pub fn transversality_at(frame: &NodeFrame, p: &[f64], h: &[f64]) -> f64 {
    let pz: f64 = p.iter().zip(&frame.zs).map(|(a, b)| a * b).sum();
    let hx: f64 = h.iter().zip(&frame.xs).map(|(a, b)| a * b).sum();
    pz - hx
}

/// A curve together with slopes `z^i_{x^j}` at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentElement {
    pub curve: Curve,
    /// `slopes[i * n + j][k]`.
    pub slopes: Vec<Vec<f64>>,
}

impl TangentElement {
    pub fn new(curve: Curve, slopes: Vec<Vec<f64>>) -> Result<Self> {
        let d = curve.n() * curve.m();
        if slopes.len() != d {
            return Err(Error::LengthMismatch { expected: d, got: slopes.len() });
        }
        if let Some(s) = slopes.iter().find(|s| s.len() != curve.len()) {
            return Err(Error::LengthMismatch { expected: curve.len(), got: s.len() });
        }
        Ok(Self { curve, slopes })
    }

    /// Builds the unique compatible element whose slopes along the normal
    /// direction `(-y_s, x_s)` are the given transverse samples (`n = 2`), or
    /// whose slopes are the samples themselves (`n = 1`).
    pub fn from_transverse(curve: Curve, transverse: &[Vec<f64>]) -> Result<Self> {
        let (n, m) = (curve.n(), curve.m());
        if transverse.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: transverse.len() });
        }
        let slopes = match n {
            1 => transverse.to_vec(),
            2 => {
                let (xs, ys) = (curve.x_s(0), curve.x_s(1));
                let mut slopes = vec![vec![0.0; curve.len()]; 2 * m];
                for i in 0..m {
                    let zs = curve.z_s(i);
                    for k in 0..curve.len() {
                        let norm2 = xs[k] * xs[k] + ys[k] * ys[k];
                        if !(norm2 > 0.0) {
                            return Err(Error::SingularJacobian { node: k, det: norm2 });
                        }
                        let tang = zs[k] / norm2;
                        let sigma = transverse[i][k];
                        slopes[i * 2][k] = tang * xs[k] - sigma * ys[k];
                        slopes[i * 2 + 1][k] = tang * ys[k] + sigma * xs[k];
                    }
                }
                slopes
            }
            _ => return Err(Error::UnsupportedDimension { n, m }),
        };
        Self::new(curve, slopes)
    }

    pub fn slopes_at(&self, k: usize) -> Vec<f64> {
        self.slopes.iter().map(|s| s[k]).collect()
    }

    /// Largest compatibility residual over all nodes.
    pub fn compatibility_residual(&self) -> Result<(usize, f64)> {
        let frames = node_frames(&self.curve)?;
        Ok(frames
            .iter()
            .enumerate()
            .map(|(k, fr)| {
                let r = compatibility_at(fr, &self.slopes_at(k));
                (k, r.iter().fold(0.0, |a: f64, b| a.max(b.abs())))
            })
            .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc }))
    }
}

/// A curve together with `p^i` and `H^j` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralElement {
    pub curve: Curve,
    pub p: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct IntegralRepr {
    #[serde(flatten)]
    curve: Curve,
    p: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
}

impl Serialize for IntegralElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntegralRepr { curve: self.curve.clone(), p: self.p.clone(), h: self.h.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegralElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = IntegralRepr::deserialize(d)?;
        IntegralElement::new(r.curve, r.p, r.h).map_err(serde::de::Error::custom)
    }
}

impl IntegralElement {
    pub fn new(curve: Curve, p: Vec<Vec<f64>>, h: Vec<Vec<f64>>) -> Result<Self> {
        if p.len() != curve.m() {
            return Err(Error::LengthMismatch { expected: curve.m(), got: p.len() });
        }
        if h.len() != curve.n() {
            return Err(Error::LengthMismatch { expected: curve.n(), got: h.len() });
        }
        if let Some(a) = p.iter().chain(&h).find(|a| a.len() != curve.len()) {
            return Err(Error::LengthMismatch { expected: curve.len(), got: a.len() });
        }
        Ok(Self { curve, p, h })
    }

    pub fn p_at(&self, k: usize) -> Vec<f64> {
        self.p.iter().map(|a| a[k]).collect()
    }

    pub fn h_at(&self, k: usize) -> Vec<f64> {
        self.h.iter().map(|a| a[k]).collect()
    }
}

/// Forward transform: slopes to `(p, H)`.
pub fn legendre_forward(model: &LagrangianModel, te: &TangentElement) -> Result<IntegralElement> {
    check_dims(model, &te.curve)?;
    let (node, worst) = te.compatibility_residual()?;
    if worst > CONSTRAINT_TOL {
        return Err(Error::Incompatible { node, residual: worst });
    }
    let frames = node_frames(&te.curve)?;
    let (n, m, k) = (model.n, model.m, te.curve.len());
    let mut p = vec![vec![0.0; k]; m];
    let mut h = vec![vec![0.0; k]; n];
    for (idx, fr) in frames.iter().enumerate() {
        let (pk, hk) = momenta_at(model, fr, &te.slopes_at(idx))?;
        for i in 0..m {
            p[i][idx] = pk[i];
        }
        for j in 0..n {
            h[j][idx] = hk[j];
        }
    }
    IntegralElement::new(te.curve.clone(), p, h)
}

fn check_dims(model: &LagrangianModel, curve: &Curve) -> Result<()> {
    if curve.n() != model.n || curve.m() != model.m {
        return Err(Error::UnsupportedDimension { n: curve.n(), m: curve.m() });
    }
    if model.n > 2 {
        return Err(Error::UnsupportedDimension { n: model.n, m: model.m });
    }
    Ok(())
}

fn inverse_residual(model: &LagrangianModel, frame: &NodeFrame, target: &[f64], slopes: &[f64]) -> Result<Vec<f64>> {
    let mut r = compatibility_at(frame, slopes);
    let (p, _) = momenta_at(model, frame, slopes)?;
    r.extend(p.iter().zip(target).map(|(a, b)| a - b));
    Ok(r)
}

/// Solves for the slopes at one node whose momenta equal `target`.
pub fn invert_node(
    model: &LagrangianModel,
    frame: &NodeFrame,
    target: &[f64],
    guess: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let (n, m) = (model.n, model.m);
    let d = n * m;
    let mut u: Vec<f64> = guess.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; d]);
    let scale = 1.0 + target.iter().chain(&frame.zs).map(|v| v.abs()).fold(0.0, f64::max);
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = inverse_residual(model, frame, target, &u)?;
    let mut rn = norm(&r);
    for _ in 0..NEWTON_MAX_ITER {
        if rn <= NEWTON_TOL * scale {
            return Ok(u);
        }
        let hess = model.f_zx_zx(&frame.x, &frame.z, &u)?;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(d, d);
        let mut row = 0;
        if n == 2 {
            for i in 0..m {
                for j in 0..n {
                    jac[(row, i * n + j)] = -frame.xs[j];
                }
                row += 1;
            }
        }
        for i in 0..m {
            for b in 0..d {
                jac[(row, b)] = (0..n)
                    .map(|l| sign(l) * frame.minors[l] * hess[(i * n + l) * d + b])
                    .sum();
            }
            row += 1;
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = solve_dense(jac, &neg)
            .map_err(|_| Error::Singular("degenerate Legendre transform".into()))?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
            let tr = inverse_residual(model, frame, target, &trial)?;
            let tn = norm(&tr);
            if tn < rn || alpha < 1e-6 {
                u = trial;
                r = tr;
                rn = tn;
                break;
            }
            alpha *= 0.5;
        }
    }
    if rn <= NEWTON_TOL * scale {
        Ok(u)
    } else {
        Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual: rn })
    }
}

/// Inverse transform: `p` samples to slopes and `H` samples.
pub fn legendre_inverse(
    model: &LagrangianModel,
    curve: &Curve,
    p: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    legendre_inverse_with_guess(model, curve, p, None)
}

pub fn legendre_inverse_with_guess(
    model: &LagrangianModel,
    curve: &Curve,
    p: &[Vec<f64>],
    guess: Option<&[Vec<f64>]>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    check_dims(model, curve)?;
    if p.len() != model.m {
        return Err(Error::LengthMismatch { expected: model.m, got: p.len() });
    }
    let frames = node_frames(curve)?;
    let (n, m, k) = (model.n, model.m, curve.len());
    let mut slopes = vec![vec![0.0; k]; n * m];
    let mut h = vec![vec![0.0; k]; n];
    for (idx, fr) in frames.iter().enumerate() {
        let target: Vec<f64> = p.iter().map(|a| a[idx]).collect();
        let g: Option<Vec<f64>> = guess.map(|g| g.iter().map(|a| a[idx]).collect());
        let u = invert_node(model, fr, &target, g.as_deref())?;
        let (_, hk) = momenta_at(model, fr, &u)?;
        for (a, v) in u.into_iter().enumerate() {
            slopes[a][idx] = v;
        }
        for j in 0..n {
            h[j][idx] = hk[j];
        }
    }
    Ok((slopes, h))
}

/// Hamiltonian densities `H^j(p)` at one node through the inverse transform.
pub fn hamiltonian_at(
    model: &LagrangianModel,
    frame: &NodeFrame,
    p: &[f64],
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = invert_node(model, frame, p, guess)?;
    let (_, h) = momenta_at(model, frame, &u)?;
    Ok((h, u))
}

/// Default momentum step of [`hamiltonian_jacobian`].
pub const JACOBIAN_STEP: f64 = 1e-4;

/// `∂H^j/∂p^i` at every node by central differences in `p`, laid out as
/// `out[i * n + j][k]` so it compares directly with the slopes.
pub fn hamiltonian_jacobian(
    model: &LagrangianModel,
    curve: &Curve,
    p: &[Vec<f64>],
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    check_dims(model, curve)?;
    let frames = node_frames(curve)?;
    let (n, m, k) = (model.n, model.m, curve.len());
    let mut out = vec![vec![0.0; k]; n * m];
    for (idx, fr) in frames.iter().enumerate() {
        let p0: Vec<f64> = p.iter().map(|a| a[idx]).collect();
        let centre = invert_node(model, fr, &p0, None)?;
        for i in 0..m {
            let mut plus = p0.clone();
            let mut minus = p0.clone();
            plus[i] += step;
            minus[i] -= step;
            let (hp, _) = hamiltonian_at(model, fr, &plus, Some(&centre))?;
            let (hm, _) = hamiltonian_at(model, fr, &minus, Some(&centre))?;
            for j in 0..n {
                out[i * n + j][idx] = (hp[j] - hm[j]) / (2.0 * step);
            }
        }
    }
    Ok(out)
}

/// Settings of the dual-norm maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNormOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for DualNormOptions {
    fn default() -> Self {
        Self { restarts: 20, max_iter: 400, seed: 0x0d0a1 }
    }
}

/// The support-function norm `max_{Φ(v) = 1} p·z_t - H·x_t` at one node,
/// computed by projected-gradient ascent on `(p·z_t - H·x_t)/Φ` over the
/// tangent directions `v = (x_t, z_t)` modulo the gauge direction `(x_s, z_s)`.
pub fn dual_norm(
    model: &LagrangianModel,
    frame: &NodeFrame,
    p: &[f64],
    h: &[f64],
    opts: DualNormOptions,
) -> Result<f64> {
    if !model.convex {
        return Err(Error::NotConvex);
    }
    let (n, m) = (model.n, model.m);
    let tr = transversality_at(frame, p, h);
    let scale = 1.0 + p.iter().chain(h).map(|v| v.abs()).fold(0.0, f64::max);
    if tr.abs() > CONSTRAINT_TOL * scale {
        return Err(Error::Incompatible { node: 0, residual: tr });
    }
    if p.iter().chain(h).all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let dim = n + m;
    // v = (x_t, z_t); covector of the objective and gauge direction.
    let q: Vec<f64> = h.iter().map(|v| -v).chain(p.iter().copied()).collect();
    let gauge: Vec<f64> = frame.xs.iter().chain(&frame.zs).copied().collect();
    let gauge_norm2: f64 = gauge.iter().map(|v| v * v).sum();
    let project = |v: &mut Vec<f64>| {
        if gauge_norm2 > 0.0 {
            let c: f64 = v.iter().zip(&gauge).map(|(a, b)| a * b).sum::<f64>() / gauge_norm2;
            for (a, b) in v.iter_mut().zip(&gauge) {
                *a -= c * b;
            }
        }
    };
    let normalize = |v: &mut Vec<f64>| {
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= r);
    };
    let state = |v: &[f64]| PointState {
        x: frame.x.clone(),
        z: frame.z.clone(),
        xs: frame.xs.clone(),
        zs: frame.zs.clone(),
        xt: v[..n].to_vec(),
        zt: v[n..].to_vec(),
    };
    // Ratio g(v) and its gradient; Φ_{x_t} = -H and Φ_{z_t} = p by the forward transform.
    let objective = |v: &[f64]| -> Option<(f64, Vec<f64>)> {
        let st = state(v);
        let (slopes, _) = model.slopes_from_state(&st).ok()?;
        let phi = model.eval_phi(&st).ok()?;
        if !(phi > 0.0) {
            return None;
        }
        let (pp, hh) = momenta_at(model, frame, &slopes).ok()?;
        let grad_phi: Vec<f64> = hh.iter().map(|v| -v).chain(pp).collect();
        let lin: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
        let g = lin / phi;
        let grad = q.iter().zip(&grad_phi).map(|(a, b)| (a - g * b) / phi).collect();
        Some((g, grad))
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<f64> = None;
    for _ in 0..opts.restarts {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        project(&mut v);
        normalize(&mut v);
        let mut current = match objective(&v) {
            Some(c) => c,
            None => {
                v.iter_mut().for_each(|a| *a = -*a);
                match objective(&v) {
                    Some(c) => c,
                    None => continue,
                }
            }
        };
        let mut alpha = 1.0;
        for _ in 0..opts.max_iter {
            let mut dir = current.1.clone();
            project(&mut dir);
            let gnorm = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
            if gnorm < 1e-13 * (1.0 + current.0.abs()) {
                break;
            }
            let at = |step: f64| -> Option<(f64, Vec<f64>, Vec<f64>)> {
                let mut trial: Vec<f64> = v.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                project(&mut trial);
                normalize(&mut trial);
                objective(&trial).map(|(g, grad)| (g, grad, trial))
            };
            let value = |step: f64| at(step).map_or(f64::NEG_INFINITY, |r| r.0);
            // Bracket an improving step, then golden-section search inside it.
            while alpha > 1e-14 && !(value(alpha) > current.0) {
                alpha *= 0.5;
            }
            if alpha <= 1e-14 {
                break;
            }
            let (mut lo, mut hi) = (0.0, 2.0 * alpha);
            while value(hi) > value(0.5 * hi) && hi < 1e6 {
                lo = 0.25 * hi;
                hi *= 2.0;
            }
            let ratio = 0.5 * (5f64.sqrt() - 1.0);
            let (mut a, mut b) = (hi - ratio * (hi - lo), lo + ratio * (hi - lo));
            let (mut fa, mut fb) = (value(a), value(b));
            for _ in 0..80 {
                if fa > fb {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - ratio * (hi - lo);
                    fa = value(a);
                } else {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + ratio * (hi - lo);
                    fb = value(b);
                }
                if hi - lo < 1e-12 * hi.max(1e-300) {
                    break;
                }
            }
            let step = if fa > fb { a } else { b };
            match at(step) {
                Some((g, grad, trial)) if g > current.0 => {
                    v = trial;
                    current = (g, grad);
                    alpha = step;
                }
                _ => match at(alpha) {
                    Some((g, grad, trial)) if g > current.0 => {
                        v = trial;
                        current = (g, grad);
                    }
                    _ => break,
                },
            }
        }
        best = Some(best.map_or(current.0, |b: f64| b.max(current.0)));
    }
    best.ok_or(Error::NoConvergence { iterations: opts.restarts, residual: f64::NAN })
}

/// Nodewise constraint report of an integral element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub transversality: Vec<f64>,
    /// `𝓗(p, -H) - 1` per node; `NaN` where the maximization failed.
    pub dual_norm: Option<Vec<f64>>,
}

impl ConstraintReport {
    pub fn transversality_max(&self) -> f64 {
        self.transversality.iter().fold(0.0, |a: f64, b| a.max(b.abs()))
    }

    pub fn dual_norm_max(&self) -> Option<f64> {
        self.dual_norm.as_ref().map(|r| r.iter().fold(0.0, |a: f64, b| a.max(b.abs())))
    }
}

pub fn constraint_residuals(ie: &IntegralElement, model: Option<&LagrangianModel>) -> ConstraintReport {
    let frames = node_frames(&ie.curve).unwrap_or_default();
    let transversality = frames
        .iter()
        .enumerate()
        .map(|(k, fr)| transversality_at(fr, &ie.p_at(k), &ie.h_at(k)))
        .collect();
    let dual_norm = model.filter(|m| m.convex).map(|model| {
        frames
            .iter()
            .enumerate()
            .map(|(k, fr)| {
                dual_norm(model, fr, &ie.p_at(k), &ie.h_at(k), DualNormOptions::default())
                    .map(|v| v - 1.0)
                    .unwrap_or(f64::NAN)
            })
            .collect()
    });
    ConstraintReport { transversality, dual_norm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SGrid;

    fn flat(k: usize) -> Curve {
        let g = SGrid::new(k).unwrap();
        Curve::graph(g, vec![0.0; k], vec![0.0; k]).unwrap()
    }

    #[test]
    fn free_particle_forward_and_inverse() {
        let model = LagrangianModel::classical(0.0, 1).unwrap();
        let te = TangentElement::new(Curve::point(0.0, vec![0.0]).unwrap(), vec![vec![2.0]]).unwrap();
        let ie = legendre_forward(&model, &te).unwrap();
        assert_eq!(ie.p, vec![vec![2.0]]);
        assert_eq!(ie.h, vec![vec![2.0]]);
        let (slopes, h) = legendre_inverse(&model, &te.curve, &[vec![2.0]]).unwrap();
        assert!((slopes[0][0] - 2.0).abs() < 1e-12);
        assert!((h[0][0] - 2.0).abs() < 1e-12);
        let jac = hamiltonian_jacobian(&model, &te.curve, &[vec![2.0]], JACOBIAN_STEP).unwrap();
        assert!((jac[0][0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_scalar_field_element() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let te = TangentElement::new(flat(16), vec![vec![0.0; 16]; 2]).unwrap();
        let ie = legendre_forward(&model, &te).unwrap();
        assert!(ie.p[0].iter().chain(&ie.h[0]).chain(&ie.h[1]).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn minimal_surface_plane_element() {
        let model = LagrangianModel::minimal_surface();
        let te = TangentElement::new(flat(16), vec![vec![0.0; 16]; 2]).unwrap();
        let ie = legendre_forward(&model, &te).unwrap();
        for k in 0..16 {
            assert!(ie.p[0][k].abs() < 1e-15);
            assert!(ie.h[0][k].abs() < 1e-15);
            assert!((ie.h[1][k] - 1.0).abs() < 1e-15);
        }
        let report = constraint_residuals(&ie, Some(&model));
        assert!(report.transversality_max() < 1e-15);
        let (slopes, h) = legendre_inverse(&model, &ie.curve, &ie.p).unwrap();
        assert!(slopes.iter().flatten().all(|v| v.abs() < 1e-10));
        assert!(h[0].iter().all(|v| v.abs() < 1e-10));
        assert!(h[1].iter().all(|v| (v - 1.0).abs() < 1e-10));
        let jac = hamiltonian_jacobian(&model, &ie.curve, &ie.p, JACOBIAN_STEP).unwrap();
        assert!(jac.iter().flatten().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn incompatible_element_is_rejected() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        // z_s = 0 on the flat curve, so a nonzero z_x violates compatibility.
        let te = TangentElement::new(flat(16), vec![vec![0.5; 16], vec![0.0; 16]]).unwrap();
        assert!(matches!(legendre_forward(&model, &te), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn corrupted_hamiltonian_shows_linear_residual() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let g = SGrid::new(32).unwrap();
        let z: Vec<f64> = g.nodes().iter().map(|s| (2.0 * std::f64::consts::PI * s).sin()).collect();
        let te = TangentElement::from_transverse(
            Curve::graph(g, vec![0.0; 32], z).unwrap(),
            &[vec![0.3; 32]],
        )
        .unwrap();
        let mut ie = legendre_forward(&model, &te).unwrap();
        ie.h[0].iter_mut().for_each(|v| *v += 0.1);
        let report = constraint_residuals(&ie, None);
        assert!(report.dual_norm.is_none());
        assert!(report.transversality.iter().all(|r| (r.abs() - 0.1).abs() < 1e-12));
    }

    #[test]
    fn dual_norm_refuses_nonconvex_and_scales() {
        let frames = node_frames(&flat(16)).unwrap();
        let sf = LagrangianModel::scalar_field(1.0, 0.0);
        assert_eq!(dual_norm(&sf, &frames[0], &[0.0], &[0.0, 1.0], DualNormOptions::default()), Err(Error::NotConvex));
        let ms = LagrangianModel::minimal_surface();
        assert_eq!(dual_norm(&ms, &frames[0], &[0.0], &[0.0, 0.0], DualNormOptions::default()).unwrap(), 0.0);
        let one = dual_norm(&ms, &frames[0], &[0.2], &[0.0, 0.7], DualNormOptions::default()).unwrap();
        let two = dual_norm(&ms, &frames[0], &[0.4], &[0.0, 1.4], DualNormOptions::default()).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-8, "{one} {two}");
    }

    #[test]
    fn integral_element_json_layout() {
        let model = LagrangianModel::minimal_surface();
        let te = TangentElement::new(flat(8), vec![vec![0.0; 8]; 2]).unwrap();
        let ie = legendre_forward(&model, &te).unwrap();
        let json = serde_json::to_value(&ie).unwrap();
        assert!(json.get("p").is_some() && json.get("H").is_some() && json.get("K").is_some());
        let back: IntegralElement = serde_json::from_value(json).unwrap();
        assert_eq!(back, ie);
    }
}
