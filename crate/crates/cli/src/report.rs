use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ulb_core::codes::SphericalCode;
use ulb_core::levenshtein::{solve_s, ulb_first_capped, BoundCertificate};
use ulb_core::liftedulb::{
    classify_with, compress_runs, second_level_lev_poly, ulb_second_capped, Label, LabelRun,
    DEFAULT_GRID,
};
use ulb_core::potentials::Potential;
use ulb_core::Real;

use crate::{CliResult, Exit};

/// One line of a Table 5 style report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub card: usize,
    pub tau: usize,
    pub alpha: Real,
    pub ulb1: Real,
    pub beta: Option<Real>,
    pub ulb2: Option<Real>,
    /// g(1)/g_0 of the second-level Levenshtein-type polynomial.
    pub card_bound2: Option<Real>,
    /// L_tau(n, beta_{k+1})
    pub lev_beta: Option<Real>,
    pub label: Label,
    pub reason: Option<String>,
    /// Second-level certificate holds only through the direct check.
    pub downgraded: bool,
    pub best_s: Option<Real>,
    pub best_energy: Option<Real>,
}

impl ReportRow {
    pub fn exit(&self) -> Exit {
        match self.label {
            Label::NoUlb2 => Exit::NoUlb2,
            _ if self.downgraded => Exit::Downgraded,
            _ => Exit::Valid,
        }
    }
}

/// Cases listed in the small-dimension comparison table.
pub fn table5_cases() -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = (12..=20).map(|m| (3, m)).collect();
    v.extend((14..=30).map(|m| (4, m)));
    v.extend((30..=40).map(|m| (5, m)));
    v
}

/// `h` of `None` means Newton in dimension n.
pub fn report_row(n: usize, card: usize, h: Option<&Potential>, cap: usize) -> CliResult<ReportRow> {
    let h = h.cloned().unwrap_or(Potential::Newton(n));
    let c = card as Real;
    let cls = classify_with(n, c, &h, cap, DEFAULT_GRID)?;
    let (ulb1, _) = ulb_first_capped(n, c, &h, cap)?;
    let mut row = ReportRow {
        n,
        card,
        tau: cls.tau,
        alpha: solve_s(n, c)?,
        ulb1,
        beta: None,
        ulb2: None,
        card_bound2: None,
        lev_beta: None,
        label: cls.label,
        reason: cls.reason.clone(),
        downgraded: false,
        best_s: None,
        best_energy: None,
    };
    if let Some(lift) = &cls.lift {
        let (v, cert) = ulb_second_capped(n, c, &h, cap)?;
        let lp = second_level_lev_poly(n, lift, cls.tau)?;
        row.beta = Some(lift.beta_last());
        row.ulb2 = Some(v);
        row.card_bound2 = lp.bound;
        row.lev_beta = Some(lp.lev_at_beta);
        row.downgraded = downgraded(&cert);
    }
    if let Some(code) = SphericalCode::builtin_for(n, card) {
        row.best_s = Some(code.spectrum().max_inner);
        row.best_energy = Some(code.energy(&h)?);
    }
    Ok(row)
}

/// Rows in input order; cases are computed in parallel.
pub fn report_rows(cases: &[(usize, usize)], h: Option<&Potential>, cap: usize) -> Vec<CliResult<ReportRow>> {
    cases
        .par_iter()
        .map(|&(n, card)| report_row(n, card, h, cap))
        .collect()
}

/// A valid certificate whose sufficient-condition path did not go through.
pub fn downgraded(cert: &BoundCertificate) -> bool {
    const DIRECT: [&str; 3] = ["sufficient_conditions", "partials_below", "partials_psd"];
    cert.valid() && DIRECT.iter().any(|k| cert.checks.get(*k).is_some_and(|c| !c.pass))
}

pub fn certificate_exit(cert: &BoundCertificate) -> Exit {
    if downgraded(cert) {
        Exit::Downgraded
    } else {
        Exit::Valid
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub lo: usize,
    pub hi: usize,
    pub potential: String,
    pub runs: Vec<LabelRun>,
    /// Labels occurring in more than one run within a tau block.
    pub warnings: Vec<String>,
    /// (N, error) for cases that could not be classified.
    pub errors: Vec<(usize, String)>,
}

impl ScanReport {
    pub fn exit(&self) -> Exit {
        self.runs.iter().map(|r| label_exit(r.label)).max().unwrap_or(Exit::Valid)
    }
}

pub fn label_exit(l: Label) -> Exit {
    if l == Label::NoUlb2 {
        Exit::NoUlb2
    } else {
        Exit::Valid
    }
}

pub fn scan(n: usize, lo: usize, hi: usize, h: Option<&Potential>, cap: usize) -> ScanReport {
    let h = h.cloned().unwrap_or(Potential::Newton(n));
    let rows = ulb_core::liftedulb::classify_range(n, lo, hi, &h, cap);
    let mut labelled = Vec::new();
    let mut errors = Vec::new();
    for (card, r) in (lo..=hi).zip(rows) {
        match r {
            Ok(c) => labelled.push((card, c.tau, c.label)),
            Err(e) => errors.push((card, e.to_string())),
        }
    }
    let runs = compress_runs(&labelled);
    ScanReport {
        n,
        lo,
        hi,
        potential: h.to_string(),
        warnings: non_contiguous(&runs),
        runs,
        errors,
    }
}

fn non_contiguous(runs: &[LabelRun]) -> Vec<String> {
    let mut seen: BTreeMap<(usize, Label), Vec<&LabelRun>> = BTreeMap::new();
    for r in runs {
        seen.entry((r.tau, r.label)).or_default().push(r);
    }
    seen.into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|((tau, label), v)| {
            let parts: Vec<String> = v.iter().map(|r| format!("[{},{}]", r.lo, r.hi)).collect();
            format!("tau={tau}: {label} is not an interval: {}", parts.join(", "))
        })
        .collect()
}
