//! Characteristic flow of integral elements (the field analog of Hamilton's
//! canonical equations), integrated with the explicit midpoint rule.

use std::f64::consts::PI;

use crate::geometry::{Curve, SGrid};
use crate::lagrangians::LagrangianModel;
use crate::legendre::{invert_node, legendre_forward, momenta_at, node_frames, IntegralElement, NodeFrame, TangentElement};
use crate::{Error, Result};

/// A choice of the independent variables `x^j(s, t)` along the flow.
pub trait Gauge: Sync {
    fn position(&self, s: f64, t: f64) -> Vec<f64>;
    fn velocity(&self, s: f64, t: f64) -> Vec<f64>;
    fn winding(&self) -> Vec<f64>;
}

/// `x = s`, `y = t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlabGauge;

impl Gauge for SlabGauge {
    fn position(&self, s: f64, t: f64) -> Vec<f64> {
        vec![s, t]
    }
    fn velocity(&self, _: f64, _: f64) -> Vec<f64> {
        vec![0.0, 1.0]
    }
    fn winding(&self) -> Vec<f64> {
        vec![1.0, 0.0]
    }
}

/// `x = s + amplitude·sin(2πs)·t`, `y = t`.
#[derive(Debug, Clone, Copy)]
pub struct ShearedGauge {
    pub amplitude: f64,
}

impl Gauge for ShearedGauge {
    fn position(&self, s: f64, t: f64) -> Vec<f64> {
        vec![s + self.amplitude * (2.0 * PI * s).sin() * t, t]
    }
    fn velocity(&self, s: f64, _: f64) -> Vec<f64> {
        vec![self.amplitude * (2.0 * PI * s).sin(), 1.0]
    }
    fn winding(&self) -> Vec<f64> {
        vec![1.0, 0.0]
    }
}

/// `x = x_0 + t` for the `n = 1` reduction.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimeGauge {
    pub start: f64,
}

impl Gauge for TimeGauge {
    fn position(&self, _: f64, t: f64) -> Vec<f64> {
        vec![self.start + t]
    }
    fn velocity(&self, _: f64, _: f64) -> Vec<f64> {
        vec![1.0]
    }
    fn winding(&self) -> Vec<f64> {
        vec![0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub t: Vec<f64>,
    pub slices: Vec<IntegralElement>,
}

impl Flow {
    pub fn last(&self) -> &IntegralElement {
        self.slices.last().expect("flow has an initial slice")
    }
}

/// Step used for the `z`, `z_s` partials of `H^j` at frozen momenta.
const PARTIAL_STEP: f64 = 1e-6;

struct Rhs<'a> {
    model: &'a LagrangianModel,
    gauge: &'a dyn Gauge,
    grid: SGrid,
}

impl Rhs<'_> {
    fn curve(&self, t: f64, z: &[Vec<f64>]) -> Result<Curve> {
        let n = self.model.n;
        let mut x = vec![vec![0.0; self.grid.len()]; n];
        for k in 0..self.grid.len() {
            let pos = self.gauge.position(self.grid.node(k), t);
            for j in 0..n {
                x[j][k] = pos[j];
            }
        }
        Curve::with_winding(self.grid, x, z.to_vec(), self.gauge.winding())
    }

    fn hamiltonian(&self, frame: &NodeFrame, p: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let u = invert_node(self.model, frame, p, Some(guess))?;
        Ok(momenta_at(self.model, frame, &u)?.1)
    }

    /// `(z_t, p_t, slopes)` at time `t`.
    fn eval(
        &self,
        t: f64,
        z: &[Vec<f64>],
        p: &[Vec<f64>],
        guess: &[Vec<f64>],
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let (n, m) = (self.model.n, self.model.m);
        let kk = self.grid.len();
        let curve = self.curve(t, z)?;
        let frames = node_frames(&curve)?;
        let mut slopes = vec![vec![0.0; kk]; n * m];
        let mut zt = vec![vec![0.0; kk]; m];
        let mut dz = vec![vec![0.0; kk]; m];
        let mut a_zs = vec![vec![0.0; kk]; m];
        for (k, frame) in frames.iter().enumerate() {
            let pk: Vec<f64> = p.iter().map(|a| a[k]).collect();
            let gk: Vec<f64> = guess.iter().map(|a| a[k]).collect();
            let u = invert_node(self.model, frame, &pk, Some(&gk))?;
            let xt = self.gauge.velocity(self.grid.node(k), t);
            for i in 0..m {
                zt[i][k] = (0..n).map(|j| u[i * n + j] * xt[j]).sum();
                let contract = |h: &[f64]| -> f64 { h.iter().zip(&xt).map(|(a, b)| a * b).sum() };
                let mut fp = frame.clone();
                let mut fm = frame.clone();
                let hz = PARTIAL_STEP * (1.0 + frame.z[i].abs());
                fp.z[i] += hz;
                fm.z[i] -= hz;
                dz[i][k] = (contract(&self.hamiltonian(&fp, &pk, &u)?)
                    - contract(&self.hamiltonian(&fm, &pk, &u)?))
                    / (2.0 * hz);
                if !self.grid.is_point() {
                    let mut fp = frame.clone();
                    let mut fm = frame.clone();
                    let hs = PARTIAL_STEP * (1.0 + frame.zs[i].abs());
                    fp.zs[i] += hs;
                    fm.zs[i] -= hs;
                    a_zs[i][k] = (contract(&self.hamiltonian(&fp, &pk, &u)?)
                        - contract(&self.hamiltonian(&fm, &pk, &u)?))
                        / (2.0 * hs);
                }
            }
            for (b, v) in u.into_iter().enumerate() {
                slopes[b][k] = v;
            }
        }
        // p_t = -(1/Δs) ∂/∂z_k Σ H^j x^j_t Δs, the z_s dependence entering
        // through the transposed central-difference stencil.
        let inv2ds = 0.5 / self.grid.ds();
        let pt = (0..m)
            .map(|i| {
                (0..kk)
                    .map(|k| {
                        let stencil = if self.grid.is_point() {
                            0.0
                        } else {
                            (a_zs[i][(k + kk - 1) % kk] - a_zs[i][(k + 1) % kk]) * inv2ds
                        };
                        -dz[i][k] - stencil
                    })
                    .collect()
            })
            .collect();
        Ok((zt, pt, slopes))
    }
}

fn axpy(base: &[Vec<f64>], step: f64, dir: &[Vec<f64>]) -> Vec<Vec<f64>> {
    base.iter()
        .zip(dir)
        .map(|(a, d)| a.iter().zip(d).map(|(x, y)| x + step * y).collect())
        .collect()
}

/// Integrates `z_t = H_p · x_t`, `p_t = -δ/δz ∫ H^j x^j_t ds` from `ie0`.
///
/// The positions of `ie0` must agree with `gauge.position(s, 0)`.
pub fn characteristics_flow(
    model: &LagrangianModel,
    ie0: &IntegralElement,
    gauge: &dyn Gauge,
    opts: FlowOptions,
) -> Result<Flow> {
    let grid = ie0.curve.grid;
    if ie0.curve.n() != model.n || ie0.curve.m() != model.m {
        return Err(Error::UnsupportedDimension { n: ie0.curve.n(), m: ie0.curve.m() });
    }
    if opts.steps == 0 || !(opts.t_final > 0.0) {
        return Err(Error::InvalidParameter("flow needs t_final > 0 and at least one step".into()));
    }
    let dt = opts.t_final / opts.steps as f64;
    if !(dt > 1e-12 * opts.t_final.max(1.0)) {
        return Err(Error::InvalidParameter(format!("step size underflow (dt = {dt:e})")));
    }
    for k in 0..grid.len() {
        let pos = gauge.position(grid.node(k), 0.0);
        for (j, v) in pos.iter().enumerate() {
            if (ie0.curve.x[j][k] - v).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("initial curve does not match the gauge at node {k}")));
            }
        }
    }
    let rhs = Rhs { model, gauge, grid };
    let mut z = ie0.curve.z.clone();
    let mut p = ie0.p.clone();
    let mut guess = crate::legendre::legendre_inverse(model, &ie0.curve, &p)?.0;
    let mut slices = vec![ie0.clone()];
    let mut times = vec![0.0];
    for step in 0..opts.steps {
        let t = step as f64 * dt;
        let (zt1, pt1, s1) = rhs.eval(t, &z, &p, &guess)?;
        let zm = axpy(&z, 0.5 * dt, &zt1);
        let pm = axpy(&p, 0.5 * dt, &pt1);
        let (zt2, pt2, _) = rhs.eval(t + 0.5 * dt, &zm, &pm, &s1)?;
        z = axpy(&z, dt, &zt2);
        p = axpy(&p, dt, &pt2);
        let t_next = (step + 1) as f64 * dt;
        let curve = rhs.curve(t_next, &z)?;
        let (slopes, _) = crate::legendre::legendre_inverse_with_guess(model, &curve, &p, Some(&s1))?;
        let ie = legendre_forward(model, &TangentElement::new(curve, slopes.clone())?)
            .map(|mut ie| {
                // keep the integrated momenta; the forward map reproduces them to Newton tolerance
                ie.p = p.clone();
                ie
            })?;
        guess = slopes;
        slices.push(ie);
        times.push(t_next);
    }
    Ok(Flow { t: times, slices })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_element_is_a_fixed_point() {
        let model = LagrangianModel::scalar_field(1.0, 0.0);
        let g = SGrid::new(16).unwrap();
        let curve = Curve::graph(g, vec![0.0; 16], vec![0.0; 16]).unwrap();
        let ie = IntegralElement::new(curve, vec![vec![0.0; 16]], vec![vec![0.0; 16]; 2]).unwrap();
        let flow = characteristics_flow(&model, &ie, &SlabGauge, FlowOptions { t_final: 0.2, steps: 4 }).unwrap();
        assert!(flow.last().curve.z[0].iter().chain(&flow.last().p[0]).all(|v| *v == 0.0));
        assert!((flow.last().curve.x[1][3] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn harmonic_oscillator_is_second_order() {
        let model = LagrangianModel::classical(1.0, 1).unwrap();
        let ie = IntegralElement::new(Curve::point(0.0, vec![1.0]).unwrap(), vec![vec![0.0]], vec![vec![0.5]]).unwrap();
        let errs: Vec<f64> = [50usize, 100]
            .iter()
            .map(|&steps| {
                let flow = characteristics_flow(&model, &ie, &TimeGauge::default(), FlowOptions { t_final: 2.0, steps }).unwrap();
                let end = flow.last();
                (end.curve.z[0][0] - 2.0_f64.cos()).abs().max((end.p[0][0] + 2.0_f64.sin()).abs())
            })
            .collect();
        assert!(errs[1] < 1e-3);
        assert!(((errs[0] / errs[1]).log2() - 2.0).abs() < 0.2, "{errs:?}");
    }
}
