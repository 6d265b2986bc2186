use std::io::Write;

use ulb_core::Real;

use crate::report::{ReportRow, ScanReport};
use crate::CliResult;

pub const ROW_HEADER: [&str; 13] = [
    "n", "N", "tau", "alpha", "ULB1", "beta", "ULB2", "card_bound2", "L_beta", "label",
    "downgraded", "s_best", "energy_best",
];

pub fn num(x: Real, prec: usize) -> String {
    format!("{x:.prec$}")
}

fn opt(x: Option<Real>, prec: usize) -> String {
    x.map(|v| num(v, prec)).unwrap_or_default()
}

fn row_fields(r: &ReportRow, prec: usize) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.card.to_string(),
        r.tau.to_string(),
        num(r.alpha, prec),
        num(r.ulb1, prec),
        opt(r.beta, prec),
        opt(r.ulb2, prec),
        opt(r.card_bound2, prec),
        opt(r.lev_beta, prec),
        r.label.to_string(),
        r.downgraded.to_string(),
        opt(r.best_s, prec),
        opt(r.best_energy, prec),
    ]
}

pub fn rows_csv<W: Write>(out: W, rows: &[ReportRow], prec: usize) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROW_HEADER)?;
    for r in rows {
        w.write_record(row_fields(r, prec))?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-aligned table with the same columns as the CSV.
pub fn rows_text<W: Write>(mut out: W, rows: &[ReportRow], prec: usize) -> CliResult<()> {
    let cells: Vec<Vec<String>> = std::iter::once(ROW_HEADER.iter().map(|s| s.to_string()).collect())
        .chain(rows.iter().map(|r| row_fields(r, prec)))
        .collect();
    let widths: Vec<usize> = (0..ROW_HEADER.len())
        .map(|i| cells.iter().map(|c| c[i].len()).max().unwrap_or(0))
        .collect();
    for c in &cells {
        let line: Vec<String> = c.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        writeln!(out, "{}", line.join("  ").trim_end())?;
    }
    Ok(())
}

pub fn scan_csv<W: Write>(out: W, s: &ScanReport) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "tau", "label", "lo", "hi"])?;
    for r in &s.runs {
        w.write_record([
            s.n.to_string(),
            r.tau.to_string(),
            r.label.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One line per tau block, runs grouped by label like the published scan tables.
pub fn scan_text<W: Write>(mut out: W, s: &ScanReport) -> CliResult<()> {
    writeln!(out, "n = {}, N in [{}, {}], {}", s.n, s.lo, s.hi, s.potential)?;
    let mut taus: Vec<usize> = s.runs.iter().map(|r| r.tau).collect();
    taus.dedup();
    for tau in taus {
        let block: Vec<_> = s.runs.iter().filter(|r| r.tau == tau).collect();
        let parts: Vec<String> = block
            .iter()
            .map(|r| {
                if r.lo == r.hi {
                    format!("{} {}", r.label, r.lo)
                } else {
                    format!("{} [{},{}]", r.label, r.lo, r.hi)
                }
            })
            .collect();
        writeln!(out, "tau={tau:>2}: {}", parts.join("; "))?;
    }
    for w in &s.warnings {
        writeln!(out, "warning: {w}")?;
    }
    for (card, e) in &s.errors {
        writeln!(out, "error at N={card}: {e}")?;
    }
    Ok(())
}
