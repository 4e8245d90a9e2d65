//! Small numerical kernels shared by the solvers: dense solves, Gauss
//! quadrature, periodic trigonometric interpolation and log-log fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reciprocal condition estimate below which a factorization is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-14;

/// LU factorization of a square matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Factorization {
    lu: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl Factorization {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::LengthMismatch { expected: dim, got: matrix.ncols() });
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let lu = matrix.lu();
        let u = lu.u();
        let min_pivot = (0..dim).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(min_pivot > SINGULAR_PIVOT * scale) {
            return Err(Error::Singular(format!(
                "pivot {min_pivot:e} relative to scale {scale:e}"
            )));
        }
        Ok(Self { lu, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, got: rhs.len() });
        }
        let b = DVector::from_column_slice(rhs);
        self.lu
            .solve(&b)
            .map(|x| x.iter().copied().collect())
            .ok_or_else(|| Error::Singular("LU solve failed".into()))
    }
}

/// Solves a dense square system.
pub fn solve_dense(matrix: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(matrix)?.solve(rhs)
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 0 { 1.0 } else { p1 };
            let pn1 = if order == 0 { 0.0 } else { p0 };
            dp = n * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Real trigonometric interpolant of samples on the periodic grid `s_k = k/K`.
///
/// For even `K` the Nyquist term carries only a cosine, so the interpolant
/// reproduces all samples exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterp {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nyquist: Option<f64>,
}

impl TrigInterp {
    pub fn new(samples: &[f64]) -> Self {
        let k = samples.len();
        let kf = k as f64;
        let mean = samples.iter().sum::<f64>() / kf;
        let half = k.div_ceil(2);
        let mut cos = Vec::with_capacity(half.saturating_sub(1));
        let mut sin = Vec::with_capacity(half.saturating_sub(1));
        for mode in 1..half {
            let (mut c, mut s) = (0.0, 0.0);
            for (j, f) in samples.iter().enumerate() {
                let arg = 2.0 * PI * (mode * j % k) as f64 / kf;
                c += f * arg.cos();
                s += f * arg.sin();
            }
            cos.push(2.0 * c / kf);
            sin.push(2.0 * s / kf);
        }
        let nyquist = (k.is_multiple_of(2) && k > 1).then(|| {
            samples
                .iter()
                .enumerate()
                .map(|(j, f)| if j % 2 == 0 { *f } else { -*f })
                .sum::<f64>()
                / kf
        });
        Self { mean, cos, sin, nyquist }
    }

    /// Value and first derivative at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let theta = 2.0 * PI * s;
        let (s1, c1) = theta.sin_cos();
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut value = self.mean;
        let mut deriv = 0.0;
        for (mode, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
            let w = 2.0 * PI * (mode + 1) as f64;
            value += a * ck + b * sk;
            deriv += w * (b * ck - a * sk);
        }
        if let Some(a) = self.nyquist {
            let w = PI * (2 * (self.cos.len() + 1)) as f64;
            let arg = w * s;
            value += a * arg.cos();
            deriv -= a * w * arg.sin();
        }
        (value, deriv)
    }
}

/// Least-squares fit of `log y = slope * log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::Floor("fewer than two points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Floor("non-positive value in log-log fit".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(SlopeFit { slope, intercept, r_squared })
}

/// Observed order between consecutive refinement levels, `log(e_i/e_{i+1}) / log(h_i/h_{i+1})`.
pub fn pairwise_orders(h: &[f64], err: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(hw, ew)| (ew[0] / ew[1]).ln() / (hw[0] / hw[1]).ln())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(6);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        // degree 11 is exact for 6 points
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(11)).sum();
        assert!((integral - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn trig_interp_reproduces_samples_and_derivative() {
        for k in [8usize, 9, 16] {
            let s: Vec<f64> = (0..k).map(|j| j as f64 / k as f64).collect();
            let f: Vec<f64> = s
                .iter()
                .map(|s| 0.3 + (2.0 * PI * s).sin() - 0.5 * (4.0 * PI * s).cos())
                .collect();
            let interp = TrigInterp::new(&f);
            for (sj, fj) in s.iter().zip(&f) {
                assert!((interp.eval(*sj).0 - fj).abs() < 1e-12);
            }
            let (v, d) = interp.eval(0.123);
            let t = 2.0 * PI * 0.123;
            assert!((v - (0.3 + t.sin() - 0.5 * (2.0 * t).cos())).abs() < 1e-12);
            assert!((d - 2.0 * PI * (t.cos() + (2.0 * t).sin())).abs() < 1e-10);
        }
    }

    #[test]
    fn nyquist_mode_is_interpolated() {
        let f: Vec<f64> = (0..8).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let interp = TrigInterp::new(&f);
        for (j, fj) in f.iter().enumerate() {
            assert!((interp.eval(j as f64 / 8.0).0 - fj).abs() < 1e-12);
        }
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        let fit = loglog_fit(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.r_squared > 0.999_999);
        assert!(loglog_fit(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Factorization::new(m), Err(Error::Singular(_))));
    }
}
