//! Separable solutions of `z_yy = z_xx - m² z` on the periodic strip.
//!
//! Basis layout for `K` modes: index 0 is the constant, `2k-1`/`2k` are
//! `cos`/`sin(2πkx)`, and for even `K` the last index is the Nyquist cosine.

use std::f64::consts::PI;

pub(crate) fn wavenumbers(k: usize) -> Vec<f64> {
    (0..k)
        .map(|b| {
            if b == 0 {
                0.0
            } else if k.is_multiple_of(2) && b == k - 1 {
                PI * k as f64
            } else {
                2.0 * PI * b.div_ceil(2) as f64
            }
        })
        .collect()
}

/// `∫_0^1 b(x)² dx` per basis function.
pub(crate) fn gram(k: usize) -> Vec<f64> {
    (0..k).map(|b| if b == 0 { 1.0 } else { 0.5 }).collect()
}

/// Values and `x`-derivatives of all basis functions at `x`.
pub(crate) fn basis_at(k: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut val = vec![0.0; k];
    let mut der = vec![0.0; k];
    val[0] = 1.0;
    let theta = 2.0 * PI * x;
    let (s1, c1) = theta.sin_cos();
    let (mut c, mut s) = (1.0, 0.0);
    let pairs = if k.is_multiple_of(2) { k / 2 - 1 } else { (k - 1) / 2 };
    for mode in 1..=pairs {
        let nc = c * c1 - s * s1;
        let ns = s * c1 + c * s1;
        c = nc;
        s = ns;
        let w = 2.0 * PI * mode as f64;
        val[2 * mode - 1] = c;
        val[2 * mode] = s;
        der[2 * mode - 1] = -w * s;
        der[2 * mode] = w * c;
    }
    if k.is_multiple_of(2) && k > 1 {
        let w = PI * k as f64;
        let (sn, cn) = (w * x).sin_cos();
        val[k - 1] = cn;
        der[k - 1] = -w * sn;
    }
    (val, der)
}

/// Coefficients reproducing samples on the nodes `x_j = j/K`.
pub(crate) fn coefficients(samples: &[f64]) -> Vec<f64> {
    let k = samples.len();
    let kf = k as f64;
    let mut out = vec![0.0; k];
    out[0] = samples.iter().sum::<f64>() / kf;
    let pairs = if k.is_multiple_of(2) { k / 2 - 1 } else { (k - 1) / 2 };
    for mode in 1..=pairs {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, f) in samples.iter().enumerate() {
            let arg = 2.0 * PI * ((mode * j) % k) as f64 / kf;
            let (s, c) = arg.sin_cos();
            a += f * c;
            b += f * s;
        }
        out[2 * mode - 1] = 2.0 * a / kf;
        out[2 * mode] = 2.0 * b / kf;
    }
    if k.is_multiple_of(2) && k > 1 {
        out[k - 1] = samples
            .iter()
            .enumerate()
            .map(|(j, f)| if j % 2 == 0 { *f } else { -*f })
            .sum::<f64>()
            / kf;
    }
    out
}

/// Samples of a coefficient vector on the nodes `x_j = j/K`.
pub(crate) fn synthesize(coeffs: &[f64]) -> Vec<f64> {
    let k = coeffs.len();
    (0..k)
        .map(|j| {
            let (b, _) = basis_at(k, j as f64 / k as f64);
            b.iter().zip(coeffs).map(|(u, v)| u * v).sum()
        })
        .collect()
}

/// `C(y)` with `C(0) = 1, C'(0) = 0` and `S(y)` with `S(0) = 0, S'(0) = 1`
/// for `f'' = -ω² f`: returns `(C, C', S, S')`.
pub(crate) fn ymode(omega2: f64, y: f64) -> (f64, f64, f64, f64) {
    ymode_rate(rate(omega2), y)
}

/// `sign(ω²)·√|ω²|`, the argument expected by [`ymode_rate`].
pub(crate) fn rate(omega2: f64) -> f64 {
    omega2.signum() * omega2.abs().sqrt()
}

/// [`ymode`] with a precomputed signed rate from [`rate`].
pub(crate) fn ymode_rate(r: f64, y: f64) -> (f64, f64, f64, f64) {
    if r > 0.0 {
        let (s, c) = (r * y).sin_cos();
        (c, -r * s, s / r, c)
    } else if r < 0.0 {
        let v = -r;
        let (s, c) = ((v * y).sinh(), (v * y).cosh());
        (c, v * s, s / v, c)
    } else {
        (1.0, 0.0, y, 1.0)
    }
}

pub(crate) fn omega2(k: usize, m2: f64) -> Vec<f64> {
    wavenumbers(k).into_iter().map(|w| w * w + m2).collect()
}

/// An exact solution given by initial coefficients `α` (values) and `β` (y-velocities).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ModalSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub omega2: Vec<f64>,
}

impl ModalSolution {
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let k = self.alpha.len();
        let (b, db) = basis_at(k, x);
        let (mut z, mut zx, mut zy) = (0.0, 0.0, 0.0);
        for i in 0..k {
            let (c, dc, s, ds) = ymode(self.omega2[i], y);
            let amp = self.alpha[i] * c + self.beta[i] * s;
            z += amp * b[i];
            zx += amp * db[i];
            zy += (self.alpha[i] * dc + self.beta[i] * ds) * b[i];
        }
        (z, zx, zy)
    }
}
