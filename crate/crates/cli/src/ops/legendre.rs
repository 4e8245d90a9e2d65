//! Identities of the transform between tangent and integral elements.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use surfhj::lagrangians::{builtin_model, LagrangianModel, ModelSpec, PointState};
use surfhj::legendre::{
    constraint_residuals, hamiltonian_jacobian, legendre_forward, legendre_inverse, node_frames, TangentElement,
    JACOBIAN_STEP,
};
use surfhj::sampling::random_tangent_element;

use super::guard;
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::Scenario;

fn default_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec { k: 1.3, ..ModelSpec::named("classical_mechanics") },
        ModelSpec { m2: 1.0, ..ModelSpec::named("scalar_field_2d") },
        ModelSpec::named("minimal_surface"),
    ]
}

/// Worst `|p·z_t - H·x_t - Φ| / (1 + |Φ|)` over the nodes, for random
/// extensions `x_t` with `z_t` taken from the element's slopes.
fn homogeneity_residual(model: &LagrangianModel, te: &TangentElement, rng: &mut ChaCha8Rng) -> anyhow::Result<f64> {
    let ie = legendre_forward(model, te)?;
    let (n, m) = (model.n, model.m);
    let mut worst: f64 = 0.0;
    for (k, fr) in node_frames(&te.curve)?.iter().enumerate() {
        let slopes = te.slopes_at(k);
        let xt: Vec<f64> = match n {
            1 => vec![rng.gen_range(0.5..2.0)],
            _ => vec![rng.gen_range(-1.0..1.0), -rng.gen_range(0.5..2.0)],
        };
        let zt: Vec<f64> = (0..m).map(|i| (0..n).map(|j| slopes[i * n + j] * xt[j]).sum()).collect();
        let st = PointState { x: fr.x.clone(), z: fr.z.clone(), xs: fr.xs.clone(), zs: fr.zs.clone(), xt: xt.clone(), zt: zt.clone() };
        let phi = model.eval_phi(&st)?;
        let lhs: f64 = (0..m).map(|i| ie.p[i][k] * zt[i]).sum::<f64>() - (0..n).map(|j| ie.h[j][k] * xt[j]).sum::<f64>();
        worst = worst.max((lhs - phi).abs() / (1.0 + phi.abs()));
    }
    Ok(worst)
}

/// `p = F_ż`, `H = F_ż·ż - F` at single points.
fn classical_reduction(model: &LagrangianModel, states: usize, rng: &mut ChaCha8Rng) -> anyhow::Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let te = random_tangent_element(rng, model, 1)?;
        let ie = legendre_forward(model, &te)?;
        let x = [te.curve.x[0][0]];
        let z: Vec<f64> = te.curve.z.iter().map(|r| r[0]).collect();
        let v: Vec<f64> = te.slopes.iter().map(|r| r[0]).collect();
        let fv = model.f_zx(&x, &z, &v)?;
        let h = fv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - model.eval_f(&x, &z, &v)?;
        for i in 0..model.m {
            worst = worst.max((ie.p[i][0] - fv[i]).abs());
        }
        worst = worst.max((ie.h[0][0] - h).abs());
    }
    Ok(worst)
}

struct RoundTrip {
    momentum: f64,
    slopes: f64,
    hp_slopes: f64,
}

fn roundtrip(model: &LagrangianModel, elements: usize, rng: &mut ChaCha8Rng) -> anyhow::Result<RoundTrip> {
    let mut r = RoundTrip { momentum: 0.0, slopes: 0.0, hp_slopes: 0.0 };
    for _ in 0..elements {
        let te = random_tangent_element(rng, model, 32)?;
        let ie = legendre_forward(model, &te)?;
        let (slopes, h) = legendre_inverse(model, &te.curve, &ie.p)?;
        for (a, b) in slopes.iter().flatten().zip(te.slopes.iter().flatten()) {
            r.slopes = r.slopes.max((a - b).abs());
        }
        for (a, b) in h.iter().flatten().zip(ie.h.iter().flatten()) {
            r.momentum = r.momentum.max((a - b).abs());
        }
        let back = legendre_forward(model, &TangentElement::new(te.curve.clone(), slopes)?)?;
        for (a, b) in back.p.iter().flatten().zip(ie.p.iter().flatten()) {
            r.momentum = r.momentum.max((a - b).abs());
        }
        let jac = hamiltonian_jacobian(model, &te.curve, &ie.p, JACOBIAN_STEP)?;
        for (a, b) in jac.iter().flatten().zip(te.slopes.iter().flatten()) {
            r.hp_slopes = r.hp_slopes.max((a - b).abs());
        }
    }
    Ok(r)
}

fn dual_sphere(model: &LagrangianModel, elements: usize, rng: &mut ChaCha8Rng) -> anyhow::Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..elements {
        let te = random_tangent_element(rng, model, 16)?;
        let ie = legendre_forward(model, &te)?;
        let r = constraint_residuals(&ie, Some(model)).dual_norm_max().unwrap_or(f64::NAN);
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
    }
    Ok(worst)
}

pub fn run(sc: &Scenario, rng: &mut ChaCha8Rng, out: &mut Outcome) -> anyhow::Result<()> {
    let specs = if sc.models.is_empty() { default_models() } else { sc.models.clone() };
    let k = sc.grid.k;
    let (n_id, n_rt, n_dual) = (sc.samples, (sc.samples / 2).max(1), (sc.samples / 5).max(1));
    let mut rows = Vec::new();
    for (index, spec) in specs.iter().enumerate() {
        let model = builtin_model(spec)?;
        let name = model.name();
        let t10 = sc.tol("eq10", 1e-10);
        let t11 = sc.tol("eq11", 1e-10);
        let (mut transversality, mut homogeneity): (f64, f64) = (0.0, 0.0);
        let identities = (|| -> anyhow::Result<()> {
            for _ in 0..n_id {
                let te = random_tangent_element(rng, &model, k)?;
                let ie = legendre_forward(&model, &te)?;
                transversality = transversality.max(constraint_residuals(&ie, None).transversality_max());
                homogeneity = homogeneity.max(homogeneity_residual(&model, &te, rng)?);
            }
            Ok(())
        })();
        match identities {
            Ok(()) => {
                out.check(Check::below(&format!("{name}/transversality"), "eq10", transversality, t10).with("elements", n_id));
                out.check(Check::below(&format!("{name}/homogeneity"), "eq11", homogeneity, t11).with("elements", n_id));
            }
            Err(e) => {
                out.check(Check::failed(&format!("{name}/transversality"), "eq10", Relation::Below, t10, &e));
                out.check(Check::failed(&format!("{name}/homogeneity"), "eq11", Relation::Below, t11, &e));
            }
        }
        if model.n == 1 {
            let c = format!("{name}/classical-reduction");
            let t = sc.tol("eq8", 1e-12);
            let r = classical_reduction(&model, n_id, rng).map(|v| Check::below(&c, "eq8", v, t).with("states", n_id));
            out.check(guard(&c, "eq8", Relation::Below, t, r));
        }
        let (tm, t19) = (sc.tol("roundtrip", 1e-8), sc.tol("eq19", 1e-5));
        match roundtrip(&model, n_rt, rng) {
            Ok(r) => {
                out.check(
                    Check::below(&format!("{name}/roundtrip"), "eq16-18", r.momentum.max(r.slopes), tm)
                        .with("momentum", r.momentum)
                        .with("slopes", r.slopes)
                        .with("elements", n_rt),
                );
                out.check(Check::below(&format!("{name}/hamiltonian-gradient"), "eq19", r.hp_slopes, t19).with("elements", n_rt));
                rows.push(vec![index as f64, transversality, homogeneity, r.momentum.max(r.slopes), r.hp_slopes]);
            }
            Err(e) => {
                out.check(Check::failed(&format!("{name}/roundtrip"), "eq16-18", Relation::Below, tm, &e));
                out.check(Check::failed(&format!("{name}/hamiltonian-gradient"), "eq19", Relation::Below, t19, &e));
            }
        }
        if model.convex {
            let c = format!("{name}/dual-norm");
            let t = sc.tol("eq15", 1e-6);
            let r = dual_sphere(&model, n_dual, rng).map(|v| Check::below(&c, "eq15", v, t).with("elements", n_dual));
            out.check(guard(&c, "eq15", Relation::Below, t, r));
        }
        out.observe(&format!("{name}/flags"), &model.flags);
    }
    out.artifact(Artifact::csv("legendre.csv", &["model_index", "transversality", "homogeneity", "roundtrip", "hp_slopes"], rows)?);
    Ok(())
}
