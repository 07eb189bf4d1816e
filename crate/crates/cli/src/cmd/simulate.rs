//! `simulate hit-frequency|independence|mu-x|borel-cantelli`.

use std::path::Path;

use anyhow::Result;
use symon_core::montecarlo::{
    borel_cantelli_experiment, estimate_event, independence_experiment, Event, HitSets,
};
use symon_core::{GroupContext, Modulus};

use super::usage;
use crate::{output, SimCommon, SimulateCmd};

pub fn run(c: &SimulateCmd, out: Option<&Path>) -> Result<()> {
    match c {
        SimulateCmd::HitFrequency { common, n, ell, e } => {
            let ctx = context(common, *n)?;
            let ells = match ell {
                Some(l) => vec![*l],
                None => ctx.modulus().primes(),
            };
            let sets = hit_sets(common, &ells)?;
            let event = match ells.as_slice() {
                [l] => Event::SpecialSetHit { ell: *l },
                _ => Event::JointSpecialSetHit { ells: ells.clone() },
            };
            let est = estimate_event(&ctx, &event, *e, common.samples, common.seed, Some(&sets))?;
            output::json(out, &est)
        }
        SimulateCmd::Independence { common, ells } => {
            let mut ells = ells.clone();
            ells.sort_unstable();
            ells.dedup();
            if ells.len() < 2 {
                return Err(usage("independence needs at least two primes"));
            }
            let n = ells.iter().try_fold(1u64, |acc, &l| acc.checked_mul(l));
            let n = n.ok_or_else(|| usage("product of primes overflows u64"))?;
            let ctx = context(common, n)?;
            let sets = hit_sets(common, &ells)?;
            let report = independence_experiment(&ctx, &ells, common.samples, common.seed, &sets)?;
            output::json(out, &report)
        }
        SimulateCmd::MuX { common, ell, n, e } => {
            let ctx = context(common, n.unwrap_or(*ell))?;
            let est = estimate_event(&ctx, &Event::X { ell: *ell }, *e, common.samples, common.seed, None)?;
            output::json(out, &est)
        }
        SimulateCmd::BorelCantelli { common, ells, e } => {
            let report = borel_cantelli_experiment(
                common.g,
                common.q,
                ells,
                *e,
                common.samples,
                common.seed,
                common.strategy,
                common.lookup_max_ell,
            )?;
            output::json(out, &report)
        }
    }
}

fn context(c: &SimCommon, n: u64) -> Result<GroupContext> {
    Ok(GroupContext::new(c.g, Modulus::new(n)?, c.q)?)
}

fn hit_sets(c: &SimCommon, ells: &[u64]) -> Result<HitSets> {
    if c.g != 2 {
        return Err(usage(format!("special-set hits are implemented for g = 2 (got g = {})", c.g)));
    }
    Ok(HitSets::new(c.g, c.q, ells, c.strategy, c.lookup_max_ell)?)
}
