//! One module per operation. Each returns its checks in a fixed order; a
//! check whose computation errors is recorded as failed, not propagated.

mod action_variation;
mod cauchy;
mod characteristics;
mod common;
mod field;
mod hj;
mod legendre;
mod quasiclassics;
mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{Check, Outcome, Relation};
use crate::scenario::{Operation, Scenario};

/// Runs the scenario's operation with one generator seeded from the scenario.
pub fn run(sc: &Scenario) -> anyhow::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut out = Outcome::default();
    match sc.operation {
        Operation::VerifyLegendre => legendre::run(sc, &mut rng, &mut out)?,
        Operation::VerifyActionVariation => action_variation::run(sc, &mut rng, &mut out)?,
        Operation::VerifyHj => hj::run(sc, &mut out)?,
        Operation::VerifyCauchy => cauchy::run(sc, &mut rng, &mut out)?,
        Operation::VerifyQuasiclassics => quasiclassics::run(sc, &mut rng, &mut out)?,
        Operation::RunCharacteristics => characteristics::run(sc, &mut out)?,
        Operation::RunField => field::run(sc, &mut out)?,
        Operation::Sweep => sweep::run(sc, &mut rng, &mut out)?,
    }
    Ok(out)
}

/// Turns a fallible measurement into a check.
pub(crate) fn guard(name: &str, eq: &str, relation: Relation, threshold: f64, r: anyhow::Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::failed(name, eq, relation, threshold, &e))
}
