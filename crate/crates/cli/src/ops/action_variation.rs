//! First variation of the action along smooth and tangential perturbations.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use surfhj::dynamics::{s_functional_eval, ExtremalField};
use surfhj::geometry::Variation;
use surfhj::hamilton_jacobi::{action_variation_check, DEFAULT_EPS};
use surfhj::sampling::{random_variation, smooth_samples};

use super::common::{refinement_fit, standing_field, wavy_curve};
use super::guard;
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::Scenario;

/// Random variations of `z` alone. Rows are `(sample, predicted, measured,
/// ratio, scaled error)`; the scaled error divides `|measured - predicted|`
/// by its Cauchy–Schwarz bound `ε ‖p‖ ‖δz‖`, which stays meaningful when
/// `δz` is nearly orthogonal to `p` and the plain ratio is not.
fn dz_ratios(field: &ExtremalField, sc: &Scenario, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<Vec<f64>>> {
    let c = wavy_curve(sc.grid.k)?;
    let (_, ie) = s_functional_eval(field, &c)?;
    let l2 = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() * c.grid.ds()).sqrt();
    let mut rows = Vec::new();
    for i in 0..sc.samples {
        let mut v = Variation::zero(&c);
        v.dz[0] = random_variation(rng, &c, 4).dz[0].clone();
        let check = action_variation_check(field, &ie, &v, DEFAULT_EPS)?;
        let bound = DEFAULT_EPS * l2(&ie.p[0]) * l2(&v.dz[0]);
        let scaled = (check.measured - check.predicted).abs() / bound;
        rows.push(vec![i as f64, check.predicted, check.measured, check.ratio(), scaled]);
    }
    Ok(rows)
}

struct Tangential {
    worst: f64,
    floor: f64,
    central: f64,
}

/// Exact reparameterizations move `S` only by rounding; the central-difference
/// tangent is annihilated by the prediction exactly.
fn tangential(field: &ExtremalField, sc: &Scenario, rng: &mut ChaCha8Rng) -> anyhow::Result<Tangential> {
    let c = wavy_curve(sc.grid.k)?;
    let (s, ie) = s_functional_eval(field, &c)?;
    let floor = 2.0 * c.len() as f64 * f64::EPSILON * s.abs();
    let (mut worst, mut central): (f64, f64) = (0.0, 0.0);
    for _ in 0..(sc.samples / 2).max(1) {
        let a = smooth_samples(rng, c.grid, 3, 1.0);
        let v = Variation::tangential_spectral(&c, &a)?.normalized(c.grid);
        worst = worst.max(action_variation_check(field, &ie, &v, DEFAULT_EPS)?.measured.abs());
        let v = Variation::tangential(&c, &a)?;
        central = central.max(action_variation_check(field, &ie, &v, DEFAULT_EPS)?.predicted.abs());
    }
    Ok(Tangential { worst, floor, central })
}

/// Error of the prediction when the nodes move, per unit ε, at each level.
fn node_motion(field: &ExtremalField, ks: &[usize]) -> anyhow::Result<Vec<f64>> {
    ks.iter()
        .map(|&k| {
            let c = wavy_curve(k)?;
            let (_, ie) = s_functional_eval(field, &c)?;
            let mut v = Variation::zero(&c);
            v.dx[0] = c.grid.nodes().iter().map(|s| (2.0 * PI * s).sin()).collect();
            v.dx[1] = c.grid.nodes().iter().map(|s| 0.5 * (4.0 * PI * s).cos()).collect();
            let check = action_variation_check(field, &ie, &v, DEFAULT_EPS)?;
            Ok((check.measured - check.predicted).abs() / DEFAULT_EPS)
        })
        .collect()
}

pub fn run(sc: &Scenario, rng: &mut ChaCha8Rng, out: &mut Outcome) -> anyhow::Result<()> {
    let model = sc.build_model()?;
    let field = standing_field(&model)?;

    let t = sc.tol("ratio", 1e-3);
    let r = dz_ratios(&field, sc, rng).and_then(|rows| {
        let scaled = rows.iter().map(|r| r[4]).fold(0.0, f64::max);
        let plain = rows.iter().map(|r| (r[3] - 1.0).abs()).fold(0.0, f64::max);
        let within = rows.iter().filter(|r| (r[3] - 1.0).abs() <= t).count();
        out.artifact(Artifact::csv("variations.csv", &["sample", "predicted", "measured", "ratio", "scaled_error"], rows)?);
        Ok(Check::below("ratio", "eq9", scaled, t)
            .with("K", sc.grid.k)
            .with("eps", DEFAULT_EPS)
            .with("samples", sc.samples)
            .with("max_abs_ratio_minus_one", plain)
            .with("ratios_within_band", within))
    });
    out.check(guard("ratio", "eq9", Relation::Below, t, r));

    match tangential(&field, sc, rng) {
        Ok(tg) => {
            out.check(Check::below("tangential", "eq9", tg.worst, tg.floor).with("floor", "2 K eps_mach |S|"));
            out.check(Check::below("central-tangent", "eq9", tg.central, sc.tol("central-tangent", 1e-15)));
        }
        Err(e) => out.check(Check::failed("tangential", "eq9", Relation::Below, 0.0, &e)),
    }

    let t = sc.tol("node-motion", 1.8);
    let ks = &sc.grid.levels;
    let r = node_motion(&field, ks).and_then(|errs| {
        let fit = refinement_fit(ks, &errs)?;
        out.artifact(Artifact::csv(
            "node_motion.csv",
            &["level", "K", "residual"],
            ks.iter().zip(&errs).enumerate().map(|(i, (k, e))| vec![i as f64, *k as f64, *e]),
        )?);
        Ok(Check::at_least("node-motion", "eq9", fit.slope, t).with("residuals", &errs))
    });
    out.check(guard("node-motion", "eq9", Relation::AtLeast, t, r));
    Ok(())
}
