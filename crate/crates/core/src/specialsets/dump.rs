//! Text dumps of materialized sets with a JSON sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BSelectionStrategy, PackedKeys, SetLevel, SpecialSet};
use crate::error::{Error, Result};
use crate::modmat::{dump_header, DumpReader};
use crate::sympgroup::{GroupContext, Multiplier, QParam};

/// Metadata written next to a dump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSidecar {
    pub g: usize,
    pub ell: u64,
    pub q: String,
    pub level: String,
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u64>,
    pub cardinality: String,
    pub seed_independent: bool,
}

/// `<dump>.json`.
pub fn sidecar_path(dump: &Path) -> PathBuf {
    let mut s = dump.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl SpecialSet {
    pub fn sidecar(&self) -> SetSidecar {
        SetSidecar {
            g: self.ctx.g(),
            ell: self.ell(),
            q: self.ctx.q().to_string(),
            level: self.level.to_string(),
            strategy: self.strategy.to_string(),
            lambda: match self.level {
                SetLevel::QUnion => None,
                _ => self.lambdas().first().copied(),
            },
            cardinality: self.cardinality.to_string(),
            seed_independent: true,
        }
    }

    /// Writes the sorted element list to `path` and the sidecar to `<path>.json`.
    pub fn write_dump(&self, path: &Path) -> Result<u64> {
        let elements = self.elements.as_ref().ok_or(Error::NotMaterialized)?;
        let modulus = self.ctx.modulus();
        let dim = self.ctx.dim();
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", dump_header(dim, modulus))?;
        for a in elements.matrices(modulus, dim) {
            writeln!(out, "{}", a.to_line())?;
        }
        out.flush()?;
        let sidecar = serde_json::to_string_pretty(&self.sidecar())
            .map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(sidecar_path(path), sidecar + "\n")?;
        Ok(elements.len() as u64)
    }
}

/// Reads a dump and its sidecar back into a materialized set.
pub fn load_dump(path: &Path, budget: u64) -> Result<SpecialSet> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    let meta: SetSidecar = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let q: QParam = meta.q.parse()?;
    let level: SetLevel = meta.level.parse()?;
    let strategy: BSelectionStrategy = meta.strategy.parse()?;
    let ctx = GroupContext::prime(meta.g, meta.ell, q)?;
    let lambda = meta.lambda.map(|l| Multiplier::new(ctx.modulus(), l)).transpose()?;
    let mut set = SpecialSet::describe(&ctx, level, lambda, strategy, budget)?;
    if set.cardinality.to_string() != meta.cardinality {
        return Err(Error::Mismatch(format!(
            "sidecar cardinality {} disagrees with {}",
            meta.cardinality, set.cardinality
        )));
    }
    let reader = DumpReader::new(BufReader::new(File::open(path)?))?;
    if reader.dim() != ctx.dim() || reader.modulus() != ctx.modulus() {
        return Err(Error::Mismatch("dump header disagrees with sidecar".into()));
    }
    let mut keys = Vec::new();
    for a in reader {
        keys.push(a?.pack().ok_or_else(|| Error::Mismatch("matrix too large to pack".into()))?);
    }
    let read = keys.len();
    let packed = PackedKeys::from_keys(ctx.modulus(), ctx.dim(), keys);
    if packed.len() != read {
        return Err(Error::Mismatch("dump contains duplicate matrices".into()));
    }
    set.elements = Some(packed);
    Ok(set)
}
