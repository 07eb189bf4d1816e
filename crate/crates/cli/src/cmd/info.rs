//! `orders` and `enumerate`.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use symon_core::modmat::dump_header;
use symon_core::sympgroup::{ord_mod, sp_order};
use symon_core::{GroupContext, Modulus, Multiplier, QParam};

use crate::{output, EnumerateArgs, OrdersArgs};

#[derive(Serialize)]
struct PrimeOrder {
    ell: u64,
    sp_order: String,
    gsp_q_order: String,
}

#[derive(Serialize)]
struct OrdersReport {
    command: &'static str,
    g: usize,
    n: u64,
    q: QParam,
    #[serde(skip_serializing_if = "Option::is_none")]
    ord_n_q: Option<u64>,
    degenerate_q: bool,
    order: String,
    primes: Vec<PrimeOrder>,
}

pub fn orders(a: &OrdersArgs, out: Option<&Path>) -> Result<()> {
    let ctx = GroupContext::new(a.g, Modulus::new(a.n)?, a.q)?;
    let primes = ctx
        .modulus()
        .primes()
        .into_iter()
        .map(|ell| {
            Ok(PrimeOrder {
                ell,
                sp_order: sp_order(a.g, ell).to_string(),
                gsp_q_order: ctx.restrict(ell)?.order().to_string(),
            })
        })
        .collect::<symon_core::Result<Vec<_>>>()?;
    let ord_n_q = match a.q {
        QParam::Finite(q) => Some(ord_mod(q, a.n)?),
        QParam::Infinity => None,
    };
    output::json(
        out,
        &OrdersReport {
            command: "orders",
            g: a.g,
            n: a.n,
            q: a.q,
            ord_n_q,
            degenerate_q: ctx.is_degenerate_q(),
            order: ctx.order().to_string(),
            primes,
        },
    )
}

#[derive(Serialize)]
struct CountReport {
    command: &'static str,
    g: usize,
    ell: u64,
    q: QParam,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<u64>,
    count: String,
}

/// Without `--count-only`, writes the members in dump format.
pub fn enumerate(a: &EnumerateArgs, budget: u64, out: Option<&Path>) -> Result<()> {
    let ctx = GroupContext::prime(a.g, a.ell, a.q)?;
    let lambda = a.lambda.map(|l| Multiplier::new(ctx.modulus(), l)).transpose()?;
    let members = ctx.enumerate(lambda, budget)?;
    if a.count_only {
        let count = members.count() as u64;
        return output::json(
            out,
            &CountReport { command: "enumerate", g: a.g, ell: a.ell, q: a.q, lambda: a.lambda, count: count.to_string() },
        );
    }
    let mut w = output::sink(out)?;
    writeln!(w, "{}", dump_header(ctx.dim(), ctx.modulus()))?;
    for m in members {
        writeln!(w, "{}", m.to_line())?;
    }
    w.flush()?;
    Ok(())
}
