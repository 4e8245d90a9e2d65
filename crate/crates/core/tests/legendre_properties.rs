use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surfhj::lagrangians::{LagrangianModel, PointState};
use surfhj::legendre::{
    constraint_residuals, hamiltonian_jacobian, legendre_forward, legendre_inverse, node_frames, JACOBIAN_STEP,
};
use surfhj::sampling::random_tangent_element;

fn models() -> Vec<LagrangianModel> {
    vec![
        LagrangianModel::classical(1.3, 1).unwrap(),
        LagrangianModel::scalar_field(1.0, 0.0),
        LagrangianModel::scalar_field(0.5, 0.2),
        LagrangianModel::minimal_surface(),
    ]
}

/// `p·z_t - H·x_t - Φ` for a random extension `x_t`, `z_t = z_x x_t`.
fn homogeneity_residual(model: &LagrangianModel, rng: &mut ChaCha8Rng, seed: u64) -> f64 {
    let te = random_tangent_element(&mut ChaCha8Rng::seed_from_u64(seed), model, 64).unwrap();
    let ie = legendre_forward(model, &te).unwrap();
    let frames = node_frames(&te.curve).unwrap();
    let (n, m) = (model.n, model.m);
    let mut worst: f64 = 0.0;
    for (k, fr) in frames.iter().enumerate() {
        let slopes = te.slopes_at(k);
        let xt: Vec<f64> = match n {
            1 => vec![rng.gen_range(0.5..2.0)],
            _ => vec![rng.gen_range(-1.0..1.0), -rng.gen_range(0.5..2.0)],
        };
        let zt: Vec<f64> = (0..m).map(|i| (0..n).map(|j| slopes[i * n + j] * xt[j]).sum()).collect();
        let st = PointState { x: fr.x.clone(), z: fr.z.clone(), xs: fr.xs.clone(), zs: fr.zs.clone(), xt: xt.clone(), zt: zt.clone() };
        let phi = model.eval_phi(&st).unwrap();
        let lhs: f64 = (0..m).map(|i| ie.p[i][k] * zt[i]).sum::<f64>() - (0..n).map(|j| ie.h[j][k] * xt[j]).sum::<f64>();
        worst = worst.max((lhs - phi).abs() / (1.0 + phi.abs()));
    }
    worst
}

#[test]
fn transversality_and_homogeneity_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for model in models() {
        let mut transversality: f64 = 0.0;
        let mut homogeneity: f64 = 0.0;
        for seed in 0..100 {
            let te = random_tangent_element(&mut ChaCha8Rng::seed_from_u64(seed), &model, 64).unwrap();
            let ie = legendre_forward(&model, &te).unwrap();
            transversality = transversality.max(constraint_residuals(&ie, None).transversality_max());
            homogeneity = homogeneity.max(homogeneity_residual(&model, &mut rng, seed));
        }
        assert!(transversality < 1e-10, "{} transversality {transversality:e}", model.name());
        assert!(homogeneity < 1e-10, "{} homogeneity {homogeneity:e}", model.name());
    }
}

#[test]
fn classical_reduction_is_textbook_legendre() {
    let model = LagrangianModel::classical(2.0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let te = random_tangent_element(&mut rng, &model, 1).unwrap();
        let ie = legendre_forward(&model, &te).unwrap();
        let (x, z, v) = (te.curve.x[0][0], te.curve.z[0][0], te.slopes[0][0]);
        // F = ½ v² - ½ k z²
        let f = 0.5 * v * v - z * z;
        assert!((model.eval_f(&[x], &[z], &[v]).unwrap() - f).abs() < 1e-14);
        assert!((ie.p[0][0] - v).abs() < 1e-12);
        assert!((ie.h[0][0] - (v * v - f)).abs() < 1e-12);
    }
}

#[test]
fn roundtrip_and_hamiltonian_derivatives() {
    for model in models() {
        let (mut trip, mut slopes_err, mut hp_slopes): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for seed in 0..50 {
            let te = random_tangent_element(&mut ChaCha8Rng::seed_from_u64(1000 + seed), &model, 32).unwrap();
            let ie = legendre_forward(&model, &te).unwrap();
            let (slopes, h) = legendre_inverse(&model, &te.curve, &ie.p).unwrap();
            for (a, b) in slopes.iter().flatten().zip(te.slopes.iter().flatten()) {
                slopes_err = slopes_err.max((a - b).abs());
            }
            for (a, b) in h.iter().flatten().zip(ie.h.iter().flatten()) {
                trip = trip.max((a - b).abs());
            }
            let back = legendre_forward(&model, &surfhj::legendre::TangentElement::new(te.curve.clone(), slopes).unwrap()).unwrap();
            for (a, b) in back.p.iter().flatten().zip(ie.p.iter().flatten()) {
                trip = trip.max((a - b).abs());
            }
            let jac = hamiltonian_jacobian(&model, &te.curve, &ie.p, JACOBIAN_STEP).unwrap();
            for (a, b) in jac.iter().flatten().zip(te.slopes.iter().flatten()) {
                hp_slopes = hp_slopes.max((a - b).abs());
            }
        }
        assert!(trip < 1e-8, "{} roundtrip {trip:e}", model.name());
        assert!(slopes_err < 1e-8, "{} slopes {slopes_err:e}", model.name());
        assert!(hp_slopes < 1e-5, "{} hp_slopes {hp_slopes:e}", model.name());
    }
}

#[test]
fn minimal_surface_elements_lie_on_the_dual_unit_sphere() {
    let model = LagrangianModel::minimal_surface();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let te = random_tangent_element(&mut ChaCha8Rng::seed_from_u64(77 + seed), &model, 16).unwrap();
        let ie = legendre_forward(&model, &te).unwrap();
        worst = worst.max(constraint_residuals(&ie, Some(&model)).dual_norm_max().unwrap());
    }
    assert!(worst < 1e-6, "{worst:e}");
}
