//! Closed-form discrete oracle on three nodes, shared by test targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfhj::geometry::{Curve, SGrid};

const T0: f64 = 0.154_508_497_187_473_7;

/// A discrete phase and amplitude on three nodes that solve both lines of the
/// Schrödinger analog through first order at `C*`, built in closed form.
pub struct TinyOracle {
    pub reference: Curve,
    q: Vec<f64>,
    b: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    mu: Vec<f64>,
    eta: Vec<f64>,
    nu: Vec<f64>,
}

fn solve2(a: [[f64; 2]; 2], r: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [(r[0] * a[1][1] - a[0][1] * r[1]) / det, (a[0][0] * r[1] - a[1][0] * r[0]) / det]
}

fn periodic_diff(f: &[f64], shift: f64) -> Vec<f64> {
    let k = f.len();
    (0..k)
        .map(|i| {
            let next = if i + 1 == k { f[0] + shift } else { f[i + 1] };
            let prev = if i == 0 { f[k - 1] - shift } else { f[i - 1] };
            (next - prev) * k as f64 / 2.0
        })
        .collect()
}

impl TinyOracle {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = SGrid::coarse(3).unwrap();
        let x: Vec<f64> = grid.nodes().iter().map(|s| s + rng.gen_range(-0.02..0.02)).collect();
        let y: Vec<f64> = (0..3).map(|_| T0 + rng.gen_range(-0.01..0.01)).collect();
        let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let (xs, ys, zs) = (periodic_diff(&x, 1.0), periodic_diff(&y, 0.0), periodic_diff(&z, 0.0));
        let reference = Curve::with_winding(grid, vec![x, y], vec![z.clone()], vec![1.0, 0.0]).unwrap();
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (q, b, mu) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let ds = 1.0 / 3.0;
        let (mut u, mut v, mut eta, mut nu) = (vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]);
        for k in 0..3 {
            let m = [[xs[k], ys[k]], [ys[k], xs[k]]];
            let hj = 0.5 * (q[k] * q[k] + zs[k] * zs[k]) + (xs[k] * xs[k] - ys[k] * ys[k]) * 0.5 * z[k] * z[k];
            [u[k], v[k]] = solve2(m, [-hj, -zs[k] * q[k]]);
            [eta[k], nu[k]] = solve2(m, [-(q[k] * mu[k] + 0.5 * b[k] / ds), -zs[k] * mu[k]]);
        }
        Self { reference, q, b, u, v, mu, eta, nu }
    }

    pub fn phase(&self, c: &Curve) -> f64 {
        let r = &self.reference;
        (0..3)
            .map(|k| {
                let dz = c.z[0][k] - r.z[0][k];
                self.q[k] * dz + 0.5 * self.b[k] * dz * dz + self.u[k] * (c.x[1][k] - r.x[1][k]) + self.v[k] * (c.x[0][k] - r.x[0][k])
            })
            .sum::<f64>()
            / 3.0
    }

    pub fn amplitude(&self, c: &Curve) -> f64 {
        let r = &self.reference;
        ((0..3)
            .map(|k| {
                self.mu[k] * (c.z[0][k] - r.z[0][k])
                    + self.eta[k] * (c.x[1][k] - r.x[1][k])
                    + self.nu[k] * (c.x[0][k] - r.x[0][k])
            })
            .sum::<f64>()
            / 3.0)
            .exp()
    }

    /// `R(h)/Ψ` at `C*` in closed form: only the amplitude curvature survives.
    pub fn residual(&self, h: f64) -> Vec<f64> {
        self.mu.iter().map(|m| -0.5 * h * h * m * m).collect()
    }
}

