mod info;
mod series;
mod sets;
mod simulate;
mod verify;

use std::fmt;

use symon_core::Error;

use crate::{Cli, Command};

/// A check ran and found a violation (exit 1).
#[derive(Debug)]
pub struct VerificationFailed(pub String);

/// Flags that make no sense together (exit 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "usage: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}
impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<VerificationFailed>().is_some() {
        return 1;
    }
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        // a dump or sidecar that does not match what it claims to be
        Some(Error::Mismatch(_) | Error::Parse(_)) => 1,
        Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::VerifyCounts(a) => verify::run(a, cli.budget, out),
        Command::SpecialSet(c) => sets::run(c, cli.budget, out),
        Command::Series(c) => series::run(c, out),
        Command::Simulate(c) => simulate::run(c, out),
        Command::Orders(a) => info::orders(a, out),
        Command::Enumerate(a) => info::enumerate(a, cli.budget, out),
    }
}
