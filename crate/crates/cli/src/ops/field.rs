//! Shooting an extremal through a curve and sampling its patch.

use surfhj::dynamics::{action_over_patch, patch_rows, s_functional_eval};

use super::common::{standing_field, wavy_curve};
use super::guard;
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::Scenario;

pub fn run(sc: &Scenario, out: &mut Outcome) -> anyhow::Result<()> {
    let model = sc.build_model()?;
    let field = standing_field(&model)?;
    let c = wavy_curve(sc.grid.k)?;
    let ext = field.extremal(&c)?;

    let t = sc.tol("shooting", 1e-10);
    out.check(Check::below("shooting-residual", "eq2", field.shooting_residual(&c, &ext), t));

    let t = sc.tol("region-action", 1e-8);
    let r = (|| -> anyhow::Result<Check> {
        let boundary = field.action(&c)?;
        let k = c.len();
        let region = field.region_action(&c, &ext, 4 * k, 24 + k / 2)?;
        Ok(Check::below("boundary-vs-region-action", "eq33", (boundary - region).abs(), t)
            .with("boundary", boundary)
            .with("region", region))
    })();
    out.check(guard("boundary-vs-region-action", "eq33", Relation::Below, t, r));

    let patch = field.fitted_patch(&c, sc.grid.l)?;
    out.observe("patch_action", action_over_patch(&model, &patch)?);
    let (s, _) = s_functional_eval(&field, &c)?;
    out.observe("action", s);
    let rows = patch_rows(&model, &patch)?;
    out.artifact(Artifact::csv(
        "patch.csv",
        &["slice", "s", "x", "y", "z", "p", "H1", "H2"],
        rows.iter().map(|r| vec![r.slice as f64, r.s, r.x, r.y, r.z, r.p, r.h1, r.h2]),
    )?);
    Ok(())
}
