//! Pseudo-spectral method of lines for `z_yy = z_xx - m² z - 4λ z³`.

use super::spectral::{basis_at, coefficients, omega2, synthesize};
use crate::{Error, Result};

/// Modal state stored on a uniform `y` grid, interpolated by cubic Hermite.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MolSolution {
    pub dy: f64,
    pub values: Vec<Vec<f64>>,
    pub rates: Vec<Vec<f64>>,
}

fn accel(w2: &[f64], lambda: f64, c: &[f64]) -> Vec<f64> {
    let cubic: Vec<f64> = synthesize(c).iter().map(|z| 4.0 * lambda * z * z * z).collect();
    let nl = coefficients(&cubic);
    c.iter().zip(w2).zip(&nl).map(|((c, w), n)| -w * c - n).collect()
}

fn add(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// RK4 up to `y_max` with `ω_max Δy ≤ 1/4`.
pub(crate) fn integrate(m2: f64, lambda: f64, alpha: &[f64], beta: &[f64], y_max: f64) -> Result<MolSolution> {
    let k = alpha.len();
    let w2 = omega2(k, m2);
    let w_max = w2.iter().fold(1.0_f64, |a, b| a.max(b.abs().sqrt()));
    let span = y_max.max(1e-12);
    let steps = (4.0 * span * w_max).ceil().max(1.0) as usize + 1;
    let dy = span / (steps - 1).max(1) as f64;
    let mut values = vec![alpha.to_vec()];
    let mut rates = vec![beta.to_vec()];
    let (mut c, mut d) = (alpha.to_vec(), beta.to_vec());
    for step in 1..steps {
        let a1 = accel(&w2, lambda, &c);
        let (c2, d2) = (add(&c, 0.5 * dy, &d), add(&d, 0.5 * dy, &a1));
        let a2 = accel(&w2, lambda, &c2);
        let (c3, d3) = (add(&c, 0.5 * dy, &d2), add(&d, 0.5 * dy, &a2));
        let a3 = accel(&w2, lambda, &c3);
        let (c4, d4) = (add(&c, dy, &d3), add(&d, dy, &a3));
        let a4 = accel(&w2, lambda, &c4);
        for i in 0..k {
            c[i] += dy / 6.0 * (d[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i]);
            d[i] += dy / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        if c.iter().any(|v| !(v.abs() < super::direct::OVERFLOW_GUARD)) {
            return Err(Error::BlowUp { step, guard: super::direct::OVERFLOW_GUARD });
        }
        values.push(c.clone());
        rates.push(d.clone());
    }
    Ok(MolSolution { dy, values, rates })
}

impl MolSolution {
    /// `(z, z_x, z_y)` at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let last = self.values.len() - 1;
        let idx = ((y / self.dy).floor().max(0.0) as usize).min(last.saturating_sub(1));
        let h = self.dy;
        let tau = (y - idx as f64 * h) / h;
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let (h00, h10, h01, h11) = (2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + tau, -2.0 * t3 + 3.0 * t2, t3 - t2);
        let (d00, d10, d01, d11) = (
            (6.0 * t2 - 6.0 * tau) / h,
            3.0 * t2 - 4.0 * tau + 1.0,
            (-6.0 * t2 + 6.0 * tau) / h,
            3.0 * t2 - 2.0 * tau,
        );
        let next = (idx + 1).min(last);
        let (c0, c1, r0, r1) = (&self.values[idx], &self.values[next], &self.rates[idx], &self.rates[next]);
        let k = c0.len();
        let (b, db) = basis_at(k, x);
        let (mut z, mut zx, mut zy) = (0.0, 0.0, 0.0);
        for i in 0..k {
            let v = h00 * c0[i] + h10 * h * r0[i] + h01 * c1[i] + h11 * h * r1[i];
            let dv = d00 * c0[i] + d10 * r0[i] + d01 * c1[i] + d11 * r1[i];
            z += v * b[i];
            zx += v * db[i];
            zy += dv * b[i];
        }
        (z, zx, zy)
    }
}

#[cfg(test)]
mod tests {
    use super::super::spectral::ModalSolution;
    use super::*;

    #[test]
    fn linear_case_matches_modal_solution() {
        let alpha = vec![0.1, 0.5, -0.2, 0.05, 0.0, 0.01, 0.0, 0.0];
        let beta = vec![0.3, 0.0, 0.1, 0.0, -0.05, 0.0, 0.0, 0.0];
        let mol = integrate(1.0, 0.0, &alpha, &beta, 0.4).unwrap();
        let exact = ModalSolution { alpha: alpha.clone(), beta: beta.clone(), omega2: omega2(8, 1.0) };
        for (x, y) in [(0.1, 0.05), (0.7, 0.33), (0.45, 0.4)] {
            let (a, b, c) = mol.eval(x, y);
            let (e, f, g) = exact.eval(x, y);
            assert!((a - e).abs() < 1e-5 && (b - f).abs() < 1e-4 && (c - g).abs() < 1e-4);
        }
    }
}
