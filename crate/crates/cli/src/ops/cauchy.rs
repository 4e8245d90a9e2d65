//! Envelope construction of the action against the field construction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use surfhj::dynamics::{build_field_of_extremals, UForm};
use surfhj::hamilton_jacobi::cauchy_envelope_solve;

use super::common::{require_scalar_field, slice_curve, T_MAX};
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::Scenario;

pub fn run(sc: &Scenario, rng: &mut ChaCha8Rng, out: &mut Outcome) -> anyhow::Result<()> {
    let model = sc.build_model()?;
    let k = sc.grid.k;
    let t = sc.tol("eq33-vs-35", 1e-6);
    let mut rows = Vec::new();
    let r = (|| -> anyhow::Result<(f64, f64)> {
        require_scalar_field(&model)?;
        let (mut ds, mut da): (f64, f64) = (0.0, 0.0);
        for curve_index in 0..sc.samples {
            let c = slice_curve(rng, k)?;
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect();
            for (form, u) in [UForm::Zero, UForm::Constant { w: 0.3 }, UForm::Linear { w }].into_iter().enumerate() {
                let field = build_field_of_extremals(&model, &u, T_MAX)?;
                let env = cauchy_envelope_solve(&model, &u, &c)?;
                let s = field.action(&c)?;
                let a = field.initial_datum(&c)?;
                let e = (env.s - s).abs();
                let ea = env.a.iter().zip(&a).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
                ds = ds.max(e);
                da = da.max(ea);
                rows.push(vec![curve_index as f64, form as f64, s, env.s, e, ea]);
            }
        }
        Ok((ds, da))
    })();
    let ti = sc.tol("initial-values", 1e-6);
    match r {
        Ok((ds, da)) => {
            out.check(Check::below("envelope-action", "eq33-vs-35", ds, t).with("curves", sc.samples));
            out.check(Check::below("envelope-initial-values", "eq35", da, ti).with("curves", sc.samples));
        }
        Err(e) => {
            out.check(Check::failed("envelope-action", "eq33-vs-35", Relation::Below, t, &e));
            out.check(Check::failed("envelope-initial-values", "eq35", Relation::Below, ti, &e));
        }
    }
    out.artifact(Artifact::csv(
        "cauchy.csv",
        &["curve", "u_form", "s_field", "s_envelope", "s_error", "initial_error"],
        rows,
    )?);
    Ok(())
}
