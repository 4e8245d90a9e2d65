//! Periodic parameter grids, discretized curves and surface patches.
//!
//! A curve `C` of the variational problem is stored as samples of
//! `x^j(s_k)` and `z^i(s_k)` on the periodic grid `s_k = k/K`. Coordinates
//! that wrap around the periodic `x`-direction carry a winding number so
//! that `x^j - w_j s` is periodic and can be differentiated with central
//! differences.

use serde::{Deserialize, Serialize};

use crate::numerics::TrigInterp;
use crate::{Error, Result};

/// Smallest sample count accepted by [`SGrid::new`].
pub const MIN_NODES: usize = 8;

/// Uniform periodic parameter grid on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SGrid {
    k: usize,
}

impl SGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k < MIN_NODES {
            return Err(Error::InvalidGrid(format!("K = {k} < {MIN_NODES}")));
        }
        Ok(Self { k })
    }

    /// Degenerate single-node grid with `ds = 1`, used when `n = 1` and the
    /// curve collapses to a point.
    pub fn point() -> Self {
        Self { k: 1 }
    }

    /// Very coarse grid (`K >= 3`) for brute-force discrete oracles.
    pub fn coarse(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidGrid(format!("coarse grid needs K >= 3, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn is_point(&self) -> bool {
        self.k == 1
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn node(&self, index: usize) -> f64 {
        index as f64 / self.k as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.node(i)).collect()
    }
}

/// Second-order periodic central difference `(f_{k+1} - f_{k-1}) / (2 ds)`.
///
/// Input that is not periodic (a sawtooth such as `s_k` itself) produces a
/// spurious spike at the seam; wrapped coordinates should be handled through
/// [`Curve::x_s`], which removes the winding first.
pub fn s_derivative(samples: &[f64], grid: SGrid) -> Result<Vec<f64>> {
    let k = grid.len();
    if samples.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: samples.len() });
    }
    if grid.is_point() {
        return Ok(vec![0.0]);
    }
    let scale = 0.5 / grid.ds();
    Ok((0..k)
        .map(|i| (samples[(i + 1) % k] - samples[(i + k - 1) % k]) * scale)
        .collect())
}

/// A coordinate of the ambient space `R^{n+m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X(usize),
    Z(usize),
}

/// A discretized `(n-1)`-dimensional parameterized surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub grid: SGrid,
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// Winding number of each `x^j` around the periodic direction.
    pub winding: Vec<f64>,
}

impl Curve {
    pub fn new(grid: SGrid, x: Vec<Vec<f64>>, z: Vec<Vec<f64>>) -> Result<Self> {
        let n = x.len();
        Self::with_winding(grid, x, z, vec![0.0; n])
    }

    pub fn with_winding(
        grid: SGrid,
        x: Vec<Vec<f64>>,
        z: Vec<Vec<f64>>,
        winding: Vec<f64>,
    ) -> Result<Self> {
        if x.is_empty() || z.is_empty() {
            return Err(Error::UnsupportedDimension { n: x.len(), m: z.len() });
        }
        if winding.len() != x.len() {
            return Err(Error::LengthMismatch { expected: x.len(), got: winding.len() });
        }
        for arr in x.iter().chain(&z) {
            if arr.len() != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), got: arr.len() });
            }
        }
        if grid.is_point() && x.len() != 1 {
            return Err(Error::InvalidGrid("point grid requires n = 1".into()));
        }
        Ok(Self { grid, x, z, winding })
    }

    /// Graph-type curve over the slab: `x = s`, `y = y(s)`, `z = z(s)`.
    pub fn graph(grid: SGrid, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        Self::with_winding(grid, vec![grid.nodes(), y], vec![z], vec![1.0, 0.0])
    }

    /// A point in `R^{1+m}` for the `n = 1` reduction.
    pub fn point(x: f64, z: Vec<f64>) -> Result<Self> {
        let z = z.into_iter().map(|v| vec![v]).collect();
        Self::new(SGrid::point(), vec![vec![x]], z)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Periodic part `x^j - w_j s`.
    pub fn x_periodic(&self, j: usize) -> Vec<f64> {
        let w = self.winding[j];
        self.x[j]
            .iter()
            .enumerate()
            .map(|(k, x)| x - w * self.grid.node(k))
            .collect()
    }

    pub fn x_s(&self, j: usize) -> Vec<f64> {
        if self.grid.is_point() {
            return vec![0.0];
        }
        let w = self.winding[j];
        s_derivative(&self.x_periodic(j), self.grid)
            .expect("curve arrays match grid")
            .into_iter()
            .map(|d| d + w)
            .collect()
    }

    pub fn z_s(&self, i: usize) -> Vec<f64> {
        s_derivative(&self.z[i], self.grid).expect("curve arrays match grid")
    }

    pub fn component(&self, c: Component) -> Result<&[f64]> {
        match c {
            Component::X(j) => self.x.get(j),
            Component::Z(i) => self.z.get(i),
        }
        .map(Vec::as_slice)
        .ok_or(Error::UnsupportedDimension { n: self.n(), m: self.m() })
    }

    fn component_mut(&mut self, c: Component) -> Result<&mut Vec<f64>> {
        let (n, m) = (self.n(), self.m());
        match c {
            Component::X(j) => self.x.get_mut(j),
            Component::Z(i) => self.z.get_mut(i),
        }
        .ok_or(Error::UnsupportedDimension { n, m })
    }

    /// All `(x, z)` values at one node.
    pub fn node(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.x.iter().map(|a| a[k]).collect(),
            self.z.iter().map(|a| a[k]).collect(),
        )
    }
}

/// JSON layout `{"K":…, "x":[[…]], "z":[[…]], "winding":[…]}`.
#[derive(Serialize, Deserialize)]
struct CurveRepr {
    #[serde(rename = "K")]
    k: usize,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    winding: Option<Vec<f64>>,
}

impl Serialize for Curve {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let winding = self.winding.iter().any(|w| *w != 0.0).then(|| self.winding.clone());
        CurveRepr { k: self.grid.len(), x: self.x.clone(), z: self.z.clone(), winding }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Curve {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CurveRepr::deserialize(deserializer)?;
        let grid = match repr.k {
            1 => SGrid::point(),
            k => SGrid::coarse(k).map_err(serde::de::Error::custom)?,
        };
        let winding = repr.winding.unwrap_or_else(|| vec![0.0; repr.x.len()]);
        Curve::with_winding(grid, repr.x, repr.z, winding).map_err(serde::de::Error::custom)
    }
}

/// Minors `d(x^1..^x^l..x^n)/ds` of the curve, one array per omitted index `l`.
pub fn jacobian_minors(curve: &Curve) -> Result<Vec<Vec<f64>>> {
    match curve.n() {
        1 => Ok(vec![vec![1.0; curve.len()]]),
        2 => Ok(vec![curve.x_s(1), curve.x_s(0)]),
        n => Err(Error::UnsupportedDimension { n, m: curve.m() }),
    }
}

/// Surface patch sampled on a periodic `s` grid times a uniform `t` grid.
///
/// Arrays are row-major `K x L`: sample `(k, l)` lives at `k * L + l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePatch {
    pub sgrid: SGrid,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub winding: Vec<f64>,
}

impl SurfacePatch {
    pub fn new(
        sgrid: SGrid,
        t: Vec<f64>,
        x: Vec<Vec<f64>>,
        z: Vec<Vec<f64>>,
        winding: Vec<f64>,
    ) -> Result<Self> {
        if t.len() < 2 || t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("t samples must be strictly increasing".into()));
        }
        let expected = sgrid.len() * t.len();
        for arr in x.iter().chain(&z) {
            if arr.len() != expected {
                return Err(Error::LengthMismatch { expected, got: arr.len() });
            }
        }
        if winding.len() != x.len() {
            return Err(Error::LengthMismatch { expected: x.len(), got: winding.len() });
        }
        Ok(Self { sgrid, t, x, z, winding })
    }

    /// Builds a patch by sampling `f(s, t) -> (x, z)` on the grid.
    pub fn from_fn<F>(sgrid: SGrid, t: Vec<f64>, winding: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> (Vec<f64>, Vec<f64>),
    {
        let l = t.len();
        let (x0, z0) = f(0.0, t[0]);
        let mut x = vec![vec![0.0; sgrid.len() * l]; x0.len()];
        let mut z = vec![vec![0.0; sgrid.len() * l]; z0.len()];
        for k in 0..sgrid.len() {
            for (li, tl) in t.iter().enumerate() {
                let (xv, zv) = f(sgrid.node(k), *tl);
                for (j, v) in xv.into_iter().enumerate() {
                    x[j][k * l + li] = v;
                }
                for (i, v) in zv.into_iter().enumerate() {
                    z[i][k * l + li] = v;
                }
            }
        }
        Self::new(sgrid, t, x, z, winding)
    }

    pub fn slices(&self) -> usize {
        self.t.len()
    }

    /// The constant-`t` slice with index `l` as a curve.
    pub fn slice(&self, l: usize) -> Result<Curve> {
        let nl = self.t.len();
        if l >= nl {
            return Err(Error::IndexOutOfRange { index: l, len: nl });
        }
        let pick = |arr: &Vec<f64>| (0..self.sgrid.len()).map(|k| arr[k * nl + l]).collect();
        Curve::with_winding(
            self.sgrid,
            self.x.iter().map(pick).collect(),
            self.z.iter().map(pick).collect(),
            self.winding.clone(),
        )
    }
}

/// Shape of a perturbation along the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// Unit value at one node, zero elsewhere.
    Indicator(usize),
    /// Caller-supplied samples, one per node.
    Smooth(Vec<f64>),
}

/// Variation `ε · profile` of one coordinate of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub target: Component,
    pub profile: Profile,
    pub amplitude: f64,
}

impl Perturbation {
    pub fn indicator(target: Component, node: usize, amplitude: f64) -> Self {
        Self { target, profile: Profile::Indicator(node), amplitude }
    }

    pub fn smooth(target: Component, samples: Vec<f64>, amplitude: f64) -> Self {
        Self { target, profile: Profile::Smooth(samples), amplitude }
    }
}

/// Returns a copy of `curve` with `pert` applied.
pub fn perturb_curve(curve: &Curve, pert: &Perturbation) -> Result<Curve> {
    let mut out = curve.clone();
    let len = curve.len();
    let target = out.component_mut(pert.target)?;
    match &pert.profile {
        Profile::Indicator(k) => {
            if *k >= len {
                return Err(Error::IndexOutOfRange { index: *k, len });
            }
            target[*k] += pert.amplitude;
        }
        Profile::Smooth(samples) => {
            if samples.len() != len {
                return Err(Error::LengthMismatch { expected: len, got: samples.len() });
            }
            for (v, p) in target.iter_mut().zip(samples) {
                *v += pert.amplitude * p;
            }
        }
    }
    Ok(out)
}

/// A joint variation `(δx, δz)` of all coordinates, in sample form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub dx: Vec<Vec<f64>>,
    pub dz: Vec<Vec<f64>>,
}

impl Variation {
    pub fn zero(curve: &Curve) -> Self {
        Self {
            dx: vec![vec![0.0; curve.len()]; curve.n()],
            dz: vec![vec![0.0; curve.len()]; curve.m()],
        }
    }

    /// Reparameterization direction `δx^j = a x^j_s`, `δz^i = a z^i_s`.
    pub fn tangential(curve: &Curve, a: &[f64]) -> Result<Self> {
        if a.len() != curve.len() {
            return Err(Error::LengthMismatch { expected: curve.len(), got: a.len() });
        }
        let scale = |d: Vec<f64>| d.iter().zip(a).map(|(d, a)| d * a).collect();
        Ok(Self {
            dx: (0..curve.n()).map(|j| scale(curve.x_s(j))).collect(),
            dz: (0..curve.m()).map(|i| scale(curve.z_s(i))).collect(),
        })
    }

    /// Reparameterization direction built from the trigonometric-interpolant
    /// tangent, which is exact for band-limited curves.
    pub fn tangential_spectral(curve: &Curve, a: &[f64]) -> Result<Self> {
        if a.len() != curve.len() {
            return Err(Error::LengthMismatch { expected: curve.len(), got: a.len() });
        }
        let nodes = curve.grid.nodes();
        let tangent = |samples: Vec<f64>, shift: f64| -> Vec<f64> {
            let interp = TrigInterp::new(&samples);
            nodes.iter().zip(a).map(|(s, a)| a * (interp.eval(*s).1 + shift)).collect()
        };
        Ok(Self {
            dx: (0..curve.n()).map(|j| tangent(curve.x_periodic(j), curve.winding[j])).collect(),
            dz: (0..curve.m()).map(|i| tangent(curve.z[i].clone(), 0.0)).collect(),
        })
    }

    /// `Δs`-weighted L² norm over all components.
    pub fn norm(&self, grid: SGrid) -> f64 {
        (self.dx.iter().chain(&self.dz).flatten().map(|a| a * a).sum::<f64>() * grid.ds()).sqrt()
    }

    /// Rescaled to unit [`norm`](Self::norm); the zero variation is returned unchanged.
    pub fn normalized(mut self, grid: SGrid) -> Self {
        let norm = self.norm(grid);
        if norm > 0.0 {
            self.dx.iter_mut().chain(self.dz.iter_mut()).flatten().for_each(|a| *a /= norm);
        }
        self
    }

    /// `curve + eps * self`.
    pub fn apply(&self, curve: &Curve, eps: f64) -> Result<Curve> {
        let mut out = curve.clone();
        for (j, d) in self.dx.iter().enumerate() {
            let pert = Perturbation::smooth(Component::X(j), d.clone(), eps);
            out = perturb_curve(&out, &pert)?;
        }
        for (i, d) in self.dz.iter().enumerate() {
            let pert = Perturbation::smooth(Component::Z(i), d.clone(), eps);
            out = perturb_curve(&out, &pert)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(k: usize) -> SGrid {
        SGrid::new(k).unwrap()
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(16);
        let d = s_derivative(&[3.5; 16], g).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn derivative_of_sine_is_second_order() {
        let g = grid(64);
        let f: Vec<f64> = g.nodes().iter().map(|s| (2.0 * PI * s).sin()).collect();
        let d = s_derivative(&f, g).unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(&d)
            .map(|(s, d)| (d - 2.0 * PI * (2.0 * PI * s).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.011, "max error {err}");
    }

    #[test]
    fn sawtooth_shows_seam_artifact_unless_unwrapped() {
        let g = grid(16);
        let raw = s_derivative(&g.nodes(), g).unwrap();
        // (s_1 - s_15) / (2 ds) = -7 at the seam instead of 1
        assert!((raw[0] + 7.0).abs() < 1e-12);
        let curve = Curve::graph(g, vec![0.0; 16], vec![0.0; 16]).unwrap();
        assert!(curve.x_s(0).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(
            s_derivative(&[0.0; 5], grid(8)),
            Err(Error::LengthMismatch { expected: 8, got: 5 })
        ));
        assert!(SGrid::new(4).is_err());
    }

    #[test]
    fn minors_of_point_and_flat_slice() {
        let point = Curve::point(0.0, vec![1.0]).unwrap();
        assert_eq!(jacobian_minors(&point).unwrap(), vec![vec![1.0]]);

        let g = grid(32);
        let flat = Curve::graph(g, vec![0.0; 32], vec![0.0; 32]).unwrap();
        let minors = jacobian_minors(&flat).unwrap();
        assert!(minors[0].iter().all(|v| v.abs() < 1e-12));
        assert!(minors[1].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn minors_of_wavy_slice() {
        let g = grid(64);
        let y: Vec<f64> = g.nodes().iter().map(|s| (2.0 * PI * s).sin()).collect();
        let curve = Curve::graph(g, y, vec![0.0; 64]).unwrap();
        let minors = jacobian_minors(&curve).unwrap();
        for (k, s) in g.nodes().iter().enumerate() {
            assert!((minors[0][k] - 2.0 * PI * (2.0 * PI * s).cos()).abs() < 0.011);
            assert!((minors[1][k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_coordinates_swaps_minors() {
        let g = grid(32);
        let a: Vec<f64> = g.nodes().iter().map(|s| 0.2 * (2.0 * PI * s).cos()).collect();
        let b: Vec<f64> = g.nodes().iter().map(|s| 0.1 * (4.0 * PI * s).sin()).collect();
        let c1 = Curve::new(g, vec![a.clone(), b.clone()], vec![vec![0.0; 32]]).unwrap();
        let c2 = Curve::new(g, vec![b, a], vec![vec![0.0; 32]]).unwrap();
        let m1 = jacobian_minors(&c1).unwrap();
        let m2 = jacobian_minors(&c2).unwrap();
        assert_eq!(m1[0], m2[1]);
        assert_eq!(m1[1], m2[0]);
    }

    #[test]
    fn unsupported_dimension() {
        let g = grid(8);
        let c = Curve::new(g, vec![vec![0.0; 8]; 3], vec![vec![0.0; 8]]).unwrap();
        assert!(matches!(jacobian_minors(&c), Err(Error::UnsupportedDimension { n: 3, .. })));
    }

    #[test]
    fn perturbation_identity_and_indicator() {
        let g = grid(8);
        let c = Curve::graph(g, vec![0.1; 8], vec![0.5; 8]).unwrap();
        let same = perturb_curve(&c, &Perturbation::indicator(Component::Z(0), 3, 0.0)).unwrap();
        assert_eq!(same, c);
        let bumped = perturb_curve(&c, &Perturbation::indicator(Component::Z(0), 3, 1e-5)).unwrap();
        for k in 0..8 {
            let diff = bumped.z[0][k] - c.z[0][k];
            if k == 3 {
                assert!((diff - 1e-5).abs() < 1e-15);
            } else {
                assert_eq!(diff, 0.0);
            }
        }
        assert_eq!(c.z[0][3], 0.5, "original untouched");
        assert!(matches!(
            perturb_curve(&c, &Perturbation::indicator(Component::Z(0), 8, 1.0)),
            Err(Error::IndexOutOfRange { index: 8, len: 8 })
        ));
        assert!(perturb_curve(&c, &Perturbation::indicator(Component::Z(1), 0, 1.0)).is_err());
    }

    #[test]
    fn patch_slices_are_curves() {
        let g = grid(8);
        let patch = SurfacePatch::from_fn(g, vec![0.0, 0.5, 1.0], vec![1.0, 0.0], |s, t| {
            (vec![s, t], vec![s * t])
        })
        .unwrap();
        let c = patch.slice(1).unwrap();
        assert_eq!(c.x[1], vec![0.5; 8]);
        assert!((c.z[0][4] - 0.25).abs() < 1e-15);
        assert!(SurfacePatch::new(g, vec![0.0, 0.0], vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn curve_json_layout() {
        let g = grid(8);
        let c = Curve::graph(g, vec![0.25; 8], vec![1.0; 8]).unwrap();
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["K"], 8);
        assert_eq!(json["x"].as_array().unwrap().len(), 2);
        let back: Curve = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn spectral_tangent_is_exact_for_trig_curves() {
        let g = grid(16);
        let y = g.nodes().iter().map(|s| 0.2 + 0.1 * (2.0 * PI * s).sin()).collect();
        let z = g.nodes().iter().map(|s| (4.0 * PI * s).cos()).collect();
        let c = Curve::graph(g, y, z).unwrap();
        let v = Variation::tangential_spectral(&c, &[2.0; 16]).unwrap();
        for (k, s) in g.nodes().iter().enumerate() {
            assert!((v.dx[0][k] - 2.0).abs() < 1e-12);
            assert!((v.dx[1][k] - 0.4 * PI * (2.0 * PI * s).cos()).abs() < 1e-12);
            assert!((v.dz[0][k] + 8.0 * PI * (4.0 * PI * s).sin()).abs() < 1e-11);
        }
    }
}
