//! `series part-a|part-b`.

use std::path::Path;

use anyhow::Result;
use symon_core::analysis::{part_a_series, part_b_series};
use symon_core::SeriesReport;

use super::usage;
use crate::{output, Format, SeriesCmd};

pub fn run(c: &SeriesCmd, out: Option<&Path>) -> Result<()> {
    let (report, format) = match c {
        SeriesCmd::PartA(a) => {
            if a.g < 2 {
                return Err(usage(format!("part-a needs g >= 2, the construction is empty at g = {}", a.g)));
            }
            (part_a_series(a.g, a.q, a.ell_max)?, a.format)
        }
        SeriesCmd::PartB(a) => {
            if a.g == 0 || a.e == 0 {
                return Err(usage("part-b needs g >= 1 and e >= 1"));
            }
            (part_b_series(a.g, a.e, a.ell_max)?, a.format)
        }
    };
    emit(&report, format, out)
}

fn emit(report: &SeriesReport, format: Format, out: Option<&Path>) -> Result<()> {
    match format {
        Format::Json => output::json(out, report),
        Format::Csv => output::csv_rows(out, &report.rows),
    }
}
