//! Characteristic flows against the direct Euler–Lagrange solver.

use surfhj::dynamics::{characteristics_flow, solve_el_direct, FlowOptions, InitialData, SlabGauge, TimeGauge};
use surfhj::geometry::Curve;
use surfhj::lagrangians::LagrangianModel;
use surfhj::legendre::IntegralElement;
use surfhj::numerics::loglog_fit;

use super::common::{max_abs, refinement_fit, require_scalar_field, slab_element, standing};
use super::guard;
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::Scenario;

pub const FLOW_TIME: f64 = 0.5;
pub const CFL: f64 = 0.5;

/// Max discrepancy between the flow's final slice and the leapfrog solution.
pub fn flow_vs_direct(model: &LagrangianModel, m2: f64, k: usize) -> anyhow::Result<f64> {
    let ie = slab_element(k, m2)?;
    let flow = characteristics_flow(model, &ie, &SlabGauge, FlowOptions { t_final: FLOW_TIME, steps: k })?;
    let init = InitialData::from_fn(k, |x| standing(m2, x, 0.0), |_| 0.0)?;
    let direct = solve_el_direct(model, &init, FLOW_TIME, CFL)?;
    Ok(flow.last().curve.z[0].iter().zip(direct.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Drift of `∫H² ds` over unit time along the flow.
pub fn flow_energy_drift(model: &LagrangianModel, m2: f64, k: usize) -> anyhow::Result<f64> {
    let ie = slab_element(k, m2)?;
    let flow = characteristics_flow(model, &ie, &SlabGauge, FlowOptions { t_final: 1.0, steps: 2 * k })?;
    let energy: Vec<f64> = flow.slices.iter().map(|e| e.h[1].iter().sum::<f64>() / k as f64).collect();
    Ok(energy.iter().map(|e| (e - energy[0]).abs()).fold(0.0, f64::max))
}

/// Worst deviation of `(z, p)` from `(cos t, -sin t)` for the unit oscillator.
fn oscillator_error(steps: usize) -> anyhow::Result<f64> {
    let model = LagrangianModel::classical(1.0, 1)?;
    let ie = IntegralElement::new(Curve::point(0.0, vec![1.0])?, vec![vec![0.0]], vec![vec![0.5]])?;
    let flow = characteristics_flow(&model, &ie, &TimeGauge::default(), FlowOptions { t_final: 1.0, steps })?;
    Ok(flow
        .t
        .iter()
        .zip(&flow.slices)
        .map(|(t, e)| (e.curve.z[0][0] - t.cos()).abs().max((e.p[0][0] + t.sin()).abs()))
        .fold(0.0, f64::max))
}

pub fn run(sc: &Scenario, out: &mut Outcome) -> anyhow::Result<()> {
    let model = sc.build_model()?;
    let (m2, _) = require_scalar_field(&model)?;
    let ks = &sc.grid.levels;
    let t = sc.tol("slope", 1.8);

    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (name, eq, f) in [
        ("flow-vs-direct", "eq24-26", flow_vs_direct as fn(&LagrangianModel, f64, usize) -> anyhow::Result<f64>),
        ("flow-energy-drift", "noether", flow_energy_drift),
    ] {
        let errs = ks.iter().map(|&k| f(&model, m2, k)).collect::<anyhow::Result<Vec<f64>>>();
        if let Ok(e) = &errs {
            columns.push(e.clone());
        }
        let r = errs.and_then(|e| Ok(Check::at_least(name, eq, refinement_fit(ks, &e)?.slope, t).with("residuals", &e)));
        out.check(guard(name, eq, Relation::AtLeast, t, r));
    }
    let direct = ks
        .iter()
        .map(|&k| -> anyhow::Result<f64> {
            let init = InitialData::from_fn(k, |x| standing(m2, x, 0.0), |_| 0.0)?;
            Ok(solve_el_direct(&model, &init, 1.0, CFL)?.energy_drift())
        })
        .collect::<anyhow::Result<Vec<f64>>>();
    let r = direct.and_then(|e| Ok(Check::at_least("direct-energy-drift", "noether", refinement_fit(ks, &e)?.slope, t).with("residuals", &e)));
    out.check(guard("direct-energy-drift", "noether", Relation::AtLeast, t, r));

    let steps = [40usize, 80, 160];
    let r = steps.iter().map(|s| oscillator_error(*s)).collect::<anyhow::Result<Vec<f64>>>().and_then(|e| {
        let dt: Vec<f64> = steps.iter().map(|s| 1.0 / *s as f64).collect();
        let fit = loglog_fit(&dt, &e)?;
        Ok(Check::within("oscillator-order", "eq24-26", fit.slope, 2.0, sc.tol("oscillator-band", 0.2))
            .with("errors", &e)
            .with("max_error", max_abs(&e)))
    });
    out.check(guard("oscillator-order", "eq24-26", Relation::Within { target: 2.0 }, 0.2, r));

    if columns.len() == 2 {
        let rows = (0..ks.len()).map(|i| vec![i as f64, ks[i] as f64, columns[0][i], columns[1][i]]);
        out.artifact(Artifact::csv("characteristics.csv", &["level", "K", "flow_vs_direct", "energy_drift"], rows)?);
    }
    Ok(())
}
