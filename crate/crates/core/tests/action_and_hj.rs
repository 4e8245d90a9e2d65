use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfhj::dynamics::{build_field_of_extremals, s_functional_eval, ExtremalField, UForm};
use surfhj::geometry::{Component, Curve, SGrid, Variation};
use surfhj::hamilton_jacobi::*;
use surfhj::lagrangians::LagrangianModel;
use surfhj::numerics::loglog_fit;
use surfhj::sampling::{random_variation, smooth_samples};

/// Slice height kept away from the standing-wave focal points of low modes.
const T0: f64 = 0.154_508_497_187_473_7;

fn standing_field() -> ExtremalField {
    build_field_of_extremals(&LagrangianModel::scalar_field(1.0, 0.0), &UForm::Zero, 0.3).unwrap()
}

fn wavy_curve(k: usize) -> Curve {
    let g = SGrid::new(k).unwrap();
    let y = g.nodes().iter().map(|s| T0 + 0.01 * (2.0 * PI * s).sin()).collect();
    let z = g.nodes().iter().map(|s| 0.5 * (2.0 * PI * s).cos() + 0.1).collect();
    Curve::graph(g, y, z).unwrap()
}

fn dz_only(rng: &mut ChaCha8Rng, curve: &Curve) -> Variation {
    let mut v = Variation::zero(curve);
    v.dz[0] = random_variation(rng, curve, 4).dz[0].clone();
    v
}

#[test]
fn action_variation_ratio_for_smooth_dz() {
    let field = standing_field();
    let c = wavy_curve(128);
    let (_, ie) = s_functional_eval(&field, &c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let check = action_variation_check(&field, &ie, &dz_only(&mut rng, &c), 1e-5).unwrap();
        assert!((check.ratio() - 1.0).abs() < 1e-3, "{check:?}");
    }
}

#[test]
fn moving_nodes_costs_second_order_in_ds() {
    let field = standing_field();
    let mut errs = Vec::new();
    let ks = [32usize, 64, 128];
    for k in ks {
        let c = wavy_curve(k);
        let (_, ie) = s_functional_eval(&field, &c).unwrap();
        let mut v = Variation::zero(&c);
        v.dx[0] = c.grid.nodes().iter().map(|s| (2.0 * PI * s).sin()).collect();
        v.dx[1] = c.grid.nodes().iter().map(|s| 0.5 * (4.0 * PI * s).cos()).collect();
        let check = action_variation_check(&field, &ie, &v, 1e-5).unwrap();
        errs.push((check.measured - check.predicted).abs() / 1e-5);
    }
    let ds: Vec<f64> = ks.iter().map(|k| 1.0 / *k as f64).collect();
    let fit = loglog_fit(&ds, &errs).unwrap();
    assert!(fit.slope > 1.8, "{errs:?} {fit:?}");
}

#[test]
fn tangential_variation_is_below_noise() {
    let field = standing_field();
    let c = wavy_curve(128);
    let (s, ie) = s_functional_eval(&field, &c).unwrap();
    let floor = 2.0 * c.len() as f64 * f64::EPSILON * s.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let a = smooth_samples(&mut rng, c.grid, 3, 1.0);
        let v = Variation::tangential_spectral(&c, &a).unwrap().normalized(c.grid);
        let small = action_variation_check(&field, &ie, &v, 1e-5).unwrap().measured;
        assert!(small.abs() < floor, "{small:e} vs {floor:e}");
        // Larger steps expose the cubic remainder of an exact tangent.
        let (m3, m2) = (
            action_variation_check(&field, &ie, &v, 1e-3).unwrap().measured,
            action_variation_check(&field, &ie, &v, 1e-2).unwrap().measured,
        );
        assert!(((m2 / m3).abs().log10() - 3.0).abs() < 0.1, "{m3:e} {m2:e}");
        let central = Variation::tangential(&c, &a).unwrap();
        assert!(action_variation_check(&field, &ie, &central, 1e-5).unwrap().predicted.abs() < 1e-15);
    }
}

#[test]
fn hj_residuals_refine_and_forms_agree() {
    let model = LagrangianModel::scalar_field(1.0, 0.0);
    let field = standing_field();
    let ks = [32usize, 64, 128];
    let (mut l1, mut l2) = (Vec::new(), Vec::new());
    for k in ks {
        let c = wavy_curve(k);
        let g = variational_gradient(&field, &c, GradientOptions::default()).unwrap();
        let closed = hj_report_scalar_field(&model, &c, &g).unwrap();
        let generic = generic_to_scalar_field(&c, &hj_report_generic(&model, &c, &g).unwrap());
        for (a, b) in closed.per_node.iter().zip(&generic.per_node) {
            assert!((a[1] - b[1]).abs() < 1e-8);
        }
        l1.push(closed.line_l2(0));
        l2.push(closed.line_l2(1));
    }
    let ds: Vec<f64> = ks.iter().map(|k| 1.0 / *k as f64).collect();
    for line in [&l1, &l2] {
        let fit = loglog_fit(&ds, line).unwrap();
        assert!(fit.slope >= 1.0, "{line:?} {fit:?}");
    }
}

#[test]
fn corrupted_action_is_detected() {
    let model = LagrangianModel::scalar_field(1.0, 0.0);
    let field = standing_field();
    let c = wavy_curve(64);
    let bad = FnFunctional(|c: &Curve| Ok(field.action(c)? + 0.01 * c.z[0].iter().sum::<f64>() * c.grid.ds()));
    let good = hj_residual_scalar_field(&model, &field, &c, GradientOptions::default()).unwrap();
    let worse = hj_residual_scalar_field(&model, &bad, &c, GradientOptions::default()).unwrap();
    assert!(worse.line_l2(1) - good.line_l2(1) > 1e-3 || worse.line_l2(0) - good.line_l2(0) > 1e-3);
}

#[test]
fn field_element_matches_finite_differences() {
    let field = standing_field();
    let flat = Curve::graph(SGrid::new(32).unwrap(), vec![T0; 32], wavy_curve(32).z[0].clone()).unwrap();
    let (_, ie) = s_functional_eval(&field, &flat).unwrap();
    let g = variational_gradient(&field, &flat, GradientOptions::default()).unwrap();
    assert!(g.dz[0].iter().zip(&ie.p[0]).all(|(d, p)| (d - p).abs() < 1e-5));

    // Off a slice both parts carry the central-difference error of the curve.
    let ks = [32usize, 64, 128];
    let (mut ez, mut ex) = (Vec::new(), Vec::new());
    for k in ks {
        let c = wavy_curve(k);
        let (_, ie) = s_functional_eval(&field, &c).unwrap();
        let g = variational_gradient(&field, &c, GradientOptions::default()).unwrap();
        ez.push((0..k).map(|n| (g.dz[0][n] - ie.p[0][n]).abs()).fold(0.0, f64::max));
        ex.push((0..k).flat_map(|n| (0..2).map(move |j| (n, j))).map(|(n, j)| (g.dx[j][n] + ie.h[j][n]).abs()).fold(0.0, f64::max));
    }
    let ds: Vec<f64> = ks.iter().map(|k| 1.0 / *k as f64).collect();
    for e in [&ez, &ex] {
        assert!(loglog_fit(&ds, e).unwrap().slope > 1.8, "{e:?}");
    }
}

#[test]
fn zero_initial_momentum_on_the_slab() {
    let field = standing_field();
    let g = SGrid::new(16).unwrap();
    let a = g.nodes().iter().map(|s| (2.0 * PI * s).sin()).collect();
    let c0 = Curve::graph(g, vec![0.0; 16], a).unwrap();
    for k in [0usize, 5, 11] {
        // Bumps in z stay on the slab, so the field stays in its domain.
        let d = variational_derivative(&field, &c0, Component::Z(0), k, DEFAULT_EPS).unwrap();
        assert!(d.abs() < 1e-7, "{d}");
    }
}

#[test]
fn finite_difference_error_is_quadratic_in_eps() {
    const OMEGA: f64 = 100.0;
    let s = FnFunctional(|c: &Curve| {
        let xs = c.x_s(0);
        Ok(c.z[0].iter().zip(&xs).map(|(z, x)| (OMEGA * z).sin() * x).sum::<f64>() * c.grid.ds())
    });
    let c = wavy_curve(16);
    let k = 3;
    let exact = OMEGA * (OMEGA * c.z[0][k]).cos() * c.x_s(0)[k];
    let eps: Vec<f64> = (0..7).map(|i| 10f64.powf(-6.0 + 0.5 * i as f64)).collect();
    let err: Vec<f64> = eps
        .iter()
        .map(|e| (variational_derivative(&s, &c, Component::Z(0), k, *e).unwrap() - exact).abs())
        .collect();
    let fit = loglog_fit(&eps, &err).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.1, "{err:?} {fit:?}");
}

fn slice_curve(rng: &mut ChaCha8Rng, k: usize) -> Curve {
    let g = SGrid::new(k).unwrap();
    let t = rng.gen_range(0.1..0.2);
    let dx = smooth_samples(rng, g, 2, 0.01);
    let x = g.nodes().iter().zip(&dx).map(|(s, d)| s + d).collect();
    let z = smooth_samples(rng, g, 4, 0.5);
    Curve::with_winding(g, vec![x, vec![t; k]], vec![z], vec![1.0, 0.0]).unwrap()
}

#[test]
fn envelope_matches_field_on_seeded_curves() {
    let model = LagrangianModel::scalar_field(1.0, 0.0);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let c = slice_curve(&mut rng, 16);
        let w: Vec<f64> = (0..16).map(|_| rng.gen_range(-0.5..0.5)).collect();
        for u in [UForm::Zero, UForm::Constant { w: 0.3 }, UForm::Linear { w }] {
            let field = build_field_of_extremals(&model, &u, 0.3).unwrap();
            let env = cauchy_envelope_solve(&model, &u, &c).unwrap();
            let s = field.action(&c).unwrap();
            assert!((env.s - s).abs() < 1e-6, "seed {seed} {u:?}: {} vs {s}", env.s);
            let a = field.initial_datum(&c).unwrap();
            assert!(env.a.iter().zip(&a).all(|(x, y)| (x - y).abs() < 1e-6));
        }
    }
}

#[test]
fn improved_step_is_on_the_plateau() {
    let field = standing_field();
    let c = wavy_curve(32);
    let choice = select_step(&field, &c, Component::Z(0), 4).unwrap();
    assert!(choice.eps > 1e-7 && choice.eps < 1e-3);
}
