//! Midpoint quadrature of the parametric action over a sampled patch.

use crate::geometry::SurfacePatch;
use crate::lagrangians::{LagrangianModel, PointState};
use crate::{Error, Result};

/// `∫∫ Φ ds dt` with the tensor-product midpoint rule: every cell
/// `[s_k, s_{k+1}] × [t_l, t_{l+1}]` contributes `Φ` at its centre, built from
/// corner averages and edge-averaged differences.
pub fn action_over_patch(model: &LagrangianModel, patch: &SurfacePatch) -> Result<f64> {
    let (n, m) = (patch.x.len(), patch.z.len());
    if n != model.n || m != model.m {
        return Err(Error::UnsupportedDimension { n, m });
    }
    let kk = patch.sgrid.len();
    let nl = patch.t.len();
    let ds = patch.sgrid.ds();
    // Sample with the periodic wrap: node K is node 0 shifted by the winding.
    let at = |arr: &[f64], wind: f64, k: usize, l: usize| {
        if k == kk {
            arr[l] + wind
        } else {
            arr[k * nl + l]
        }
    };
    let corners = |arr: &[f64], wind: f64, k: usize, l: usize| {
        let (a, b, c, d) = (
            at(arr, wind, k, l),
            at(arr, wind, k + 1, l),
            at(arr, wind, k, l + 1),
            at(arr, wind, k + 1, l + 1),
        );
        (0.25 * (a + b + c + d), 0.5 * ((b - a) + (d - c)), 0.5 * ((c - a) + (d - b)))
    };
    let point = patch.sgrid.is_point();
    let mut total = 0.0;
    for k in 0..kk {
        for l in 0..nl - 1 {
            let dt = patch.t[l + 1] - patch.t[l];
            let mut st = PointState {
                x: vec![0.0; n],
                z: vec![0.0; m],
                xs: vec![0.0; n],
                zs: vec![0.0; m],
                xt: vec![0.0; n],
                zt: vec![0.0; m],
            };
            for j in 0..n {
                let w = if point { 0.0 } else { patch.winding[j] };
                let (c, ds_diff, dt_diff) =
                    if point { single(&patch.x[j], l) } else { corners(&patch.x[j], w, k, l) };
                st.x[j] = c;
                st.xs[j] = if point { 0.0 } else { ds_diff / ds };
                st.xt[j] = dt_diff / dt;
            }
            for i in 0..m {
                let (c, ds_diff, dt_diff) =
                    if point { single(&patch.z[i], l) } else { corners(&patch.z[i], 0.0, k, l) };
                st.z[i] = c;
                st.zs[i] = if point { 0.0 } else { ds_diff / ds };
                st.zt[i] = dt_diff / dt;
            }
            let phi = model.eval_phi(&st).map_err(|e| match e {
                Error::SingularJacobian { det, .. } => Error::SingularJacobian { node: k * nl + l, det },
                other => other,
            })?;
            total += phi * ds * dt;
        }
    }
    Ok(total)
}

// For the point grid the "patch" is a path in t only.
fn single(arr: &[f64], l: usize) -> (f64, f64, f64) {
    (0.5 * (arr[l] + arr[l + 1]), 0.0, arr[l + 1] - arr[l])
}
