//! Row layout for CSV export of curves with their integral elements.

use serde::Serialize;

use crate::geometry::SurfacePatch;
use crate::lagrangians::LagrangianModel;
use crate::legendre::{legendre_forward, IntegralElement, TangentElement};
use crate::Result;

/// One CSV row `(slice, s, x, y, z, p, H1, H2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceRow {
    pub slice: usize,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub p: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
}

pub fn element_rows(slice: usize, ie: &IntegralElement) -> Vec<SliceRow> {
    (0..ie.curve.len())
        .map(|k| SliceRow {
            slice,
            s: ie.curve.grid.node(k),
            x: ie.curve.x[0][k],
            y: ie.curve.x.get(1).map_or(0.0, |y| y[k]),
            z: ie.curve.z[0][k],
            p: ie.p[0][k],
            h1: ie.h[0][k],
            h2: ie.h.get(1).map_or(0.0, |h| h[k]),
        })
        .collect()
}

/// Rows for every slice of a patch; slopes come from central differences in
/// `s` and `t` projected onto the compatible elements.
pub fn patch_rows(model: &LagrangianModel, patch: &SurfacePatch) -> Result<Vec<SliceRow>> {
    let nl = patch.slices();
    let mut rows = Vec::new();
    for l in 0..nl {
        let curve = patch.slice(l)?;
        let (lo, hi) = (l.saturating_sub(1), (l + 1).min(nl - 1));
        let (clo, chi) = (patch.slice(lo)?, patch.slice(hi)?);
        let dt = patch.t[hi] - patch.t[lo];
        let (xs, ys) = (curve.x_s(0), curve.x_s(1));
        let sigma: Vec<f64> = (0..curve.len())
            .map(|k| {
                let xt = (chi.x[0][k] - clo.x[0][k]) / dt;
                let yt = (chi.x[1][k] - clo.x[1][k]) / dt;
                let zt = (chi.z[0][k] - clo.z[0][k]) / dt;
                let zs = curve.z_s(0)[k];
                // normal slope from the 2x2 system [x_t y_t; x_s y_s] (z_x, z_y) = (z_t, z_s)
                let det = xt * ys[k] - yt * xs[k];
                let zx = (zt * ys[k] - yt * zs) / det;
                let zy = (xt * zs - zt * xs[k]) / det;
                (-zx * ys[k] + zy * xs[k]) / (xs[k] * xs[k] + ys[k] * ys[k])
            })
            .collect();
        let ie = legendre_forward(model, &TangentElement::from_transverse(curve, &[sigma])?)?;
        rows.extend(element_rows(l, &ie));
    }
    Ok(rows)
}
