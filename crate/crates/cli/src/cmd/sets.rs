//! `special-set build|verify`.

use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use symon_core::modmat::ModVector;
use symon_core::specialsets::{build_s, build_s0, build_sq, load_dump, sidecar_path, BuildOptions};
use symon_core::{GroupContext, Multiplier, SetLevel, SpecialSet};

use super::{usage, VerificationFailed};
use crate::{output, BuildArgs, SpecialSetCmd, VerifyDumpArgs};

pub fn run(c: &SpecialSetCmd, budget: u64, out: Option<&Path>) -> Result<()> {
    match c {
        SpecialSetCmd::Build(a) => build(a, budget, out),
        SpecialSetCmd::Verify(a) => verify(a, budget, out),
    }
}

#[derive(Serialize)]
struct BuildReport {
    command: &'static str,
    dump: String,
    sidecar: String,
    g: usize,
    ell: u64,
    q: String,
    level: String,
    strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<u64>,
    cardinality: String,
    lines: u64,
}

fn materialize(
    ctx: &GroupContext,
    level: SetLevel,
    lambda: Option<u64>,
    opts: &BuildOptions,
) -> Result<SpecialSet> {
    let set = match (level, lambda) {
        (SetLevel::QUnion, None) => build_sq(ctx, opts)?,
        (SetLevel::QUnion, Some(_)) => return Err(usage("--lambda applies to the s0 and s levels only")),
        (_, None) => return Err(usage(format!("level {level} needs --lambda"))),
        (SetLevel::S0, Some(l)) => build_s0(ctx, Multiplier::new(ctx.modulus(), l)?, opts)?,
        (SetLevel::Full, Some(l)) => build_s(ctx, Multiplier::new(ctx.modulus(), l)?, opts)?,
    };
    Ok(set)
}

fn build(a: &BuildArgs, budget: u64, out: Option<&Path>) -> Result<()> {
    if a.g != 2 {
        return Err(usage(format!("special-set materialization needs g = 2 (got g = {})", a.g)));
    }
    let ctx = GroupContext::prime(a.g, a.ell, a.q)?;
    let level = SetLevel::from(a.level);
    if let Some(l) = a.lambda {
        if !ctx.allows_multiplier(l) {
            return Err(usage(format!("lambda = {l} is not an allowed multiplier for q = {}", a.q)));
        }
    }
    let opts = BuildOptions { strategy: a.strategy, budget, max_ell: a.max_ell };
    let set = materialize(&ctx, level, a.lambda, &opts)?;
    let lines = set.write_dump(&a.dump)?;
    let meta = set.sidecar();
    output::json(
        out,
        &BuildReport {
            command: "special-set build",
            dump: a.dump.display().to_string(),
            sidecar: sidecar_path(&a.dump).display().to_string(),
            g: meta.g,
            ell: meta.ell,
            q: meta.q,
            level: meta.level,
            strategy: meta.strategy,
            lambda: meta.lambda,
            cardinality: meta.cardinality,
            lines,
        },
    )
}

#[derive(Serialize)]
struct Invariant {
    name: &'static str,
    checked: u64,
    failures: u64,
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    dump: String,
    g: usize,
    ell: u64,
    q: String,
    level: String,
    strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<u64>,
    cardinality: String,
    elements: u64,
    invariants: Vec<Invariant>,
    ok: bool,
}

fn verify(a: &VerifyDumpArgs, budget: u64, out: Option<&Path>) -> Result<()> {
    let set = load_dump(&a.dump, budget)?;
    let ctx = set.ctx();
    let keys = set.elements().expect("loaded sets are materialized");
    let (modulus, dim) = (ctx.modulus(), ctx.dim());
    let n = keys.len();
    let e1 = ModVector::unit(modulus, dim, 0)?;

    // member, one fixed line, that line is e1 (s0 only), structural membership
    let fails = (0..n)
        .into_par_iter()
        .map(|i| -> symon_core::Result<[u64; 4]> {
            let m = keys.get(i, modulus, dim);
            let fixed = m.fixed_space()?;
            let on_e1 = fixed.len() == 1 && fixed[0].entries()[1..].iter().all(|&x| x == 0);
            Ok([
                u64::from(!ctx.is_member(&m) || !set.lambdas().contains(&ctx.multiplier(&m)?.value())),
                u64::from(fixed.len() != 1 || fixed[0].is_zero()),
                u64::from(set.level() == SetLevel::S0 && (!on_e1 || m.mul_vec(&e1)? != e1)),
                u64::from(!set.contains_structurally(&m)),
            ])
        })
        .try_reduce(|| [0; 4], |x, y| Ok([x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]))?;

    let n = n as u64;
    let mut invariants = vec![
        Invariant {
            name: "cardinality",
            checked: 1,
            failures: u64::from(set.cardinality() != &n.into()),
        },
        Invariant { name: "member_with_allowed_multiplier", checked: n, failures: fails[0] },
        Invariant { name: "fixed_space_is_one_line", checked: n, failures: fails[1] },
    ];
    if set.level() == SetLevel::S0 {
        invariants.push(Invariant { name: "fixes_e1", checked: n, failures: fails[2] });
    }
    invariants.push(Invariant { name: "structural_membership", checked: n, failures: fails[3] });
    if a.rebuild {
        let opts = BuildOptions { strategy: set.strategy(), budget, max_ell: a.max_ell };
        let lambda = (set.level() != SetLevel::QUnion).then(|| set.lambdas()[0]);
        let fresh = materialize(ctx, set.level(), lambda, &opts)?;
        invariants.push(Invariant {
            name: "rebuild_identical",
            checked: 1,
            failures: u64::from(fresh.elements() != set.elements()),
        });
    }
    let ok = invariants.iter().all(|i| i.failures == 0);
    let meta = set.sidecar();
    output::json(
        out,
        &VerifyReport {
            command: "special-set verify",
            dump: a.dump.display().to_string(),
            g: meta.g,
            ell: meta.ell,
            q: meta.q,
            level: meta.level,
            strategy: meta.strategy,
            lambda: meta.lambda,
            cardinality: meta.cardinality,
            elements: n,
            invariants,
            ok,
        },
    )?;
    if !ok {
        return Err(VerificationFailed("dump invariants violated".into()).into());
    }
    Ok(())
}
