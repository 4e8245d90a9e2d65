//! Convergence sweeps: one residual per refinement level and a log-log slope.

use anyhow::bail;
use rand_chacha::ChaCha8Rng;
use surfhj::dynamics::{solve_el_direct, InitialData};
use surfhj::geometry::{Component, Curve};
use surfhj::hamilton_jacobi::{hj_residual_scalar_field, variational_derivative, FnFunctional, GradientOptions};
use surfhj::numerics::{loglog_fit, SlopeFit};
use surfhj::quasiclassics::{default_h_list, h_scaling_sweep, transport_residual, CorrectedAmplitude, PullbackAmplitude, QuasiOptions};

use super::characteristics::{flow_energy_drift, flow_vs_direct, CFL};
use super::common::{dalembert, require_scalar_field, standing, standing_field, wavy_curve};
use crate::report::{Artifact, Check, Outcome, Relation};
use crate::scenario::{Scenario, SweepTarget};

/// Abscissa and residual columns of one sweep.
struct Series {
    x: Vec<f64>,
    residual: Vec<f64>,
    extra: Vec<(&'static str, Vec<f64>)>,
}

impl Series {
    fn levels(ks: &[usize], residual: Vec<f64>) -> Self {
        Self { x: ks.iter().map(|k| *k as f64).collect(), residual, extra: Vec::new() }
    }

    /// Fit against `Δs = 1/K` or `h`/`ε` directly.
    fn fit(&self, inverse: bool) -> anyhow::Result<SlopeFit> {
        let x: Vec<f64> = self.x.iter().map(|v| if inverse { 1.0 / v } else { *v }).collect();
        Ok(loglog_fit(&x, &self.residual)?)
    }
}

fn default_relation(target: SweepTarget) -> (Relation, f64) {
    match target {
        SweepTarget::ElStandingWave | SweepTarget::ElDalembert => (Relation::Within { target: 2.0 }, 0.2),
        SweepTarget::ActionVariationEps | SweepTarget::QuasiclassicsH => (Relation::Within { target: 2.0 }, 0.1),
        SweepTarget::Hj | SweepTarget::Transport => (Relation::AtLeast, 1.0),
        SweepTarget::Characteristics | SweepTarget::Energy => (Relation::AtLeast, 1.8),
    }
}

fn eq_tag(target: SweepTarget) -> &'static str {
    match target {
        SweepTarget::ElStandingWave | SweepTarget::ElDalembert => "eq2",
        SweepTarget::Hj => "eq22",
        SweepTarget::ActionVariationEps => "eq9",
        SweepTarget::QuasiclassicsH => "eq31",
        SweepTarget::Transport => "eq32",
        SweepTarget::Characteristics => "eq24-26",
        SweepTarget::Energy => "noether",
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn measure(sc: &Scenario, target: SweepTarget, npts: (usize, usize)) -> anyhow::Result<Series> {
    let model = sc.build_model()?;
    let ks = &sc.grid.levels;
    let per_level = |f: &dyn Fn(usize) -> anyhow::Result<f64>| ks.iter().map(|k| f(*k)).collect::<anyhow::Result<Vec<_>>>();
    Ok(match target {
        SweepTarget::ElStandingWave | SweepTarget::ElDalembert => {
            let (m2, lambda) = require_scalar_field(&model)?;
            let massless = target == SweepTarget::ElDalembert;
            if lambda != 0.0 || (massless && m2 != 0.0) {
                bail!("closed-form solution needs lambda = 0{}", if massless { " and m2 = 0" } else { "" });
            }
            let exact = move |x: f64, y: f64| if massless { dalembert(x, y) } else { standing(m2, x, y) };
            Series::levels(
                ks,
                per_level(&|k| {
                    let init = InitialData::from_fn(k, |x| exact(x, 0.0), |_| 0.0)?;
                    Ok(solve_el_direct(&model, &init, 1.0, CFL)?.max_error(exact))
                })?,
            )
        }
        SweepTarget::Hj => {
            let field = standing_field(&model)?;
            let opts = GradientOptions { parallel: sc.parallel, ..GradientOptions::default() };
            let reports = ks
                .iter()
                .map(|&k| Ok(hj_residual_scalar_field(&model, &field, &wavy_curve(k)?, opts)?))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let mut s = Series::levels(ks, reports.iter().map(|r| r.l2).collect());
            s.extra.push(("line1", reports.iter().map(|r| r.line_l2(0)).collect()));
            s.extra.push(("line2", reports.iter().map(|r| r.line_l2(1)).collect()));
            s
        }
        SweepTarget::ActionVariationEps => {
            const OMEGA: f64 = 100.0;
            let s = FnFunctional(|c: &Curve| {
                let xs = c.x_s(0);
                Ok(c.z[0].iter().zip(&xs).map(|(z, x)| (OMEGA * z).sin() * x).sum::<f64>() * c.grid.ds())
            });
            let c = wavy_curve(sc.grid.k)?;
            let node = 3.min(c.len() - 1);
            let exact = OMEGA * (OMEGA * c.z[0][node]).cos() * c.x_s(0)[node];
            let eps = log_spaced(1e-6, 1e-3, npts.1);
            let residual = eps
                .iter()
                .map(|e| Ok((variational_derivative(&s, &c, Component::Z(0), node, *e)? - exact).abs()))
                .collect::<anyhow::Result<Vec<_>>>()?;
            Series { x: eps, residual, extra: Vec::new() }
        }
        SweepTarget::QuasiclassicsH => {
            let field = standing_field(&model)?;
            let opts = QuasiOptions { parallel: sc.parallel, ..QuasiOptions::default() };
            let c = wavy_curve(sc.grid.k)?;
            let a = CorrectedAmplitude::solve(&model, &field, PullbackAmplitude::exp_mean(&field), &c, opts)?;
            let r = h_scaling_sweep(&model, &field, &a, &c, &default_h_list(npts.0), opts)?;
            let floor = vec![r.floor; r.h.len()];
            Series { x: r.h, residual: r.subtracted_l2, extra: vec![("unsubtracted", r.residual_l2), ("floor", floor)] }
        }
        SweepTarget::Transport => {
            let field = standing_field(&model)?;
            let opts = QuasiOptions { parallel: sc.parallel, ..QuasiOptions::default() };
            let a = PullbackAmplitude::exp_mean(&field);
            Series::levels(ks, per_level(&|k| Ok(transport_residual(&model, &field, &a, &wavy_curve(k)?, opts)?.l2))?)
        }
        SweepTarget::Characteristics => {
            let (m2, _) = require_scalar_field(&model)?;
            Series::levels(ks, per_level(&|k| flow_vs_direct(&model, m2, k))?)
        }
        SweepTarget::Energy => {
            let (m2, _) = require_scalar_field(&model)?;
            Series::levels(ks, per_level(&|k| flow_energy_drift(&model, m2, k))?)
        }
    })
}

pub fn run(sc: &Scenario, _rng: &mut ChaCha8Rng, out: &mut Outcome) -> anyhow::Result<()> {
    let spec = sc.sweep.as_ref().expect("validated sweep block");
    let target = spec.target;
    let (relation, threshold) = match (spec.expect, spec.band, spec.at_least) {
        (Some(e), Some(b), _) => (Relation::Within { target: e }, b),
        (_, _, Some(a)) => (Relation::AtLeast, a),
        _ => default_relation(target),
    };
    let eq = eq_tag(target);
    let by_level = !matches!(target, SweepTarget::ActionVariationEps | SweepTarget::QuasiclassicsH);
    let series = match measure(sc, target, (spec.h_points, spec.eps_points)) {
        Ok(s) => s,
        Err(e) => {
            out.check(Check::failed("slope", eq, relation, threshold, &e));
            return Ok(());
        }
    };
    let mut fits = vec![("slope".to_string(), series.fit(by_level))];
    for (name, col) in &series.extra {
        if name.starts_with("line") {
            let s = Series { x: series.x.clone(), residual: col.clone(), extra: Vec::new() };
            fits.push((format!("{name}-slope"), s.fit(by_level)));
        }
    }
    for (name, fit) in fits {
        let c = match fit {
            Ok(f) => Check::new(&name, eq, f.slope, relation, threshold).with("r_squared", f.r_squared),
            Err(e) => Check::failed(&name, eq, relation, threshold, &e),
        };
        out.check(c.with("residuals", &series.residual));
    }
    let mut header = vec!["level", "K_or_h", "residual"];
    header.extend(series.extra.iter().map(|(n, _)| *n));
    let rows = (0..series.x.len()).map(|i| {
        let mut row = vec![i as f64, series.x[i], series.residual[i]];
        row.extend(series.extra.iter().map(|(_, c)| c[i]));
        row
    });
    out.artifact(Artifact::csv("sweep.csv", &header, rows)?);
    out.observe("target", target);
    Ok(())
}
