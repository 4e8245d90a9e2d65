//! Hamilton–Jacobi residuals of the field action under refinement.

use surfhj::geometry::Curve;
use surfhj::hamilton_jacobi::{
    generic_to_scalar_field, hj_report_generic, hj_report_scalar_field, hj_residual_scalar_field, variational_gradient,
    FnFunctional, GradientOptions,
};

use super::common::{refinement_fit, standing_field, wavy_curve};
use super::guard;
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::Scenario;

pub fn run(sc: &Scenario, out: &mut Outcome) -> anyhow::Result<()> {
    let model = sc.build_model()?;
    let field = standing_field(&model)?;
    let opts = GradientOptions { parallel: sc.parallel, ..GradientOptions::default() };
    let ks = &sc.grid.levels;

    let (mut l1, mut l2, mut agree) = (Vec::new(), Vec::new(), 0.0_f64);
    let levels = ks.iter().try_for_each(|&k| -> anyhow::Result<()> {
        let c = wavy_curve(k)?;
        let g = variational_gradient(&field, &c, opts)?;
        let closed = hj_report_scalar_field(&model, &c, &g)?;
        let generic = generic_to_scalar_field(&c, &hj_report_generic(&model, &c, &g)?);
        for (a, b) in closed.per_node.iter().zip(&generic.per_node) {
            for (x, y) in a.iter().zip(b) {
                agree = agree.max((x - y).abs());
            }
        }
        l1.push(closed.line_l2(0));
        l2.push(closed.line_l2(1));
        Ok(())
    });
    let t = sc.tol("slope", 1.0);
    match levels {
        Ok(()) => {
            for (name, line) in [("line1-slope", &l1), ("line2-slope", &l2)] {
                let r = refinement_fit(ks, line).map(|f| {
                    Check::at_least(name, "eq22", f.slope, t).with("l2", line).with("r_squared", f.r_squared)
                });
                out.check(guard(name, "eq22", Relation::AtLeast, t, r));
            }
            out.check(Check::below("generic-vs-closed", "eq21-vs-22", agree, sc.tol("eq21-vs-22", 1e-8)));
            let rows = (0..ks.len()).map(|i| vec![i as f64, ks[i] as f64, l1[i], l2[i]]);
            out.artifact(Artifact::csv("hj_levels.csv", &["level", "K", "line1_l2", "line2_l2"], rows)?);
        }
        Err(e) => {
            for name in ["line1-slope", "line2-slope"] {
                out.check(Check::failed(name, "eq22", Relation::AtLeast, t, &e));
            }
            out.check(Check::failed("generic-vs-closed", "eq21-vs-22", Relation::Below, 1e-8, &e));
        }
    }

    // Adding ∫z ds to S breaks the equation by O(1).
    let t = sc.tol("corrupted", 1e-3);
    let k = ks[ks.len() / 2];
    let r = (|| -> anyhow::Result<Check> {
        let c = wavy_curve(k)?;
        let bad = FnFunctional(|c: &Curve| Ok(field.action(c)? + 0.01 * c.z[0].iter().sum::<f64>() * c.grid.ds()));
        let good = hj_residual_scalar_field(&model, &field, &c, opts)?;
        let worse = hj_residual_scalar_field(&model, &bad, &c, opts)?;
        let margin = (worse.line_l2(0) - good.line_l2(0)).max(worse.line_l2(1) - good.line_l2(1));
        Ok(Check::at_least("corrupted-action", "eq22", margin, t).with("K", k))
    })();
    out.check(guard("corrupted-action", "eq22", Relation::AtLeast, t, r));
    Ok(())
}
