use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use ulb_cli::format::{num, rows_csv, rows_text, scan_csv, scan_text};
use ulb_cli::report::{self, certificate_exit, report_rows, table5_cases, ReportRow};
use ulb_cli::{CliError, CliResult, Exit};
use ulb_core::cell600::{self, Lambda600, NODE_STARTS};
use ulb_core::codes::SphericalCode;
use ulb_core::levenshtein::{
    dgs_bound, first_level_quadrature, interval, lev_bound, solve_s, tau_of, ulb_first_capped,
    BoundCertificate, TestFnSummary,
};
use ulb_core::liftedulb::{
    classify_with, second_level_testfns, solve_lift, ulb_second_capped, Label, DEFAULT_GRID,
};
use ulb_core::potentials::Potential;
use ulb_core::{Error, Real};

#[derive(Parser)]
#[command(name = "ulb", version, about = "Universal lower bounds for energy of spherical codes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Global {
    /// Emit JSON
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV
    #[arg(long, global = true)]
    csv: bool,
    /// Digits after the decimal point in text and CSV output
    #[arg(long, global = true, default_value_t = 5)]
    precision: usize,
    /// Largest j for which test functions Q_j are checked
    #[arg(long, global = true, default_value_t = 200)]
    max_testfn: usize,
    /// Seed for randomized multistart searches
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// newton | riesz:<s> | exp:<a>
    #[arg(long, global = true, default_value = "newton")]
    potential: String,
}

impl Global {
    fn potential(&self, n: usize) -> CliResult<Potential> {
        Ok(Potential::parse(&self.potential, n)?)
    }

    fn is_default_potential(&self) -> bool {
        self.potential.trim().eq_ignore_ascii_case("newton")
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// First-level bound with its certificate
    Ulb1 { n: usize, card: usize },
    /// Second-level bound with its certificate
    Ulb2 { n: usize, card: usize },
    /// Levenshtein bound at a separation s, or the first-level data for a cardinality
    LevBound {
        n: usize,
        #[arg(long, conflicts_with = "card", required_unless_present = "card")]
        s: Option<Real>,
        #[arg(long)]
        card: Option<usize>,
    },
    /// Test functions Q_j of the first- or second-level rule
    Testfns {
        n: usize,
        card: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        level: u8,
        #[arg(long)]
        from: Option<usize>,
    },
    /// ULB1-LP, No-ULB2, ULB2-LP or ULB2
    Classify { n: usize, card: usize },
    /// Rows of the small-dimension comparison table
    Table5 {
        /// Cases as n:N, comma separated; defaults to the full n = 3, 4, 5 table
        #[arg(long, value_delimiter = ',')]
        rows: Vec<String>,
    },
    /// Classify every N in [lo, hi] and compress into label runs
    Scan { n: usize, lo: usize, hi: usize },
    /// Reports on a built-in or imported code
    Code {
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        name: Option<String>,
        /// One point per line, whitespace separated coordinates
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CodeReport::Energy)]
        report: CodeReport,
        /// Largest moment index examined
        #[arg(long, default_value_t = 20)]
        imax: usize,
    },
    /// Level-3 certificate for the 600-cell
    #[command(name = "verify-600cell")]
    Verify600 {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        subspace: u8,
        /// Also report the optimal triangle of (B, C) parameters
        #[arg(long)]
        triangle: bool,
        /// Also recover the quadrature nodes from the third-level system
        #[arg(long)]
        nodes: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeReport {
    Energy,
    Spectrum,
    IndexSet,
    Quadrature,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out) {
        Ok(e) => ExitCode::from(e as u8),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn json<W: Write, T: Serialize>(out: &mut W, v: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run<W: Write>(cli: &Cli, out: &mut W) -> CliResult<Exit> {
    let g = &cli.global;
    let p = g.precision;
    match &cli.cmd {
        Cmd::Ulb1 { n, card } => {
            let (v, cert) = ulb_first_capped(*n, *card as Real, &g.potential(*n)?, g.max_testfn)?;
            print_cert(out, g, v, &cert)?;
            cert_exit(&cert)
        }
        Cmd::Ulb2 { n, card } => {
            match ulb_second_capped(*n, *card as Real, &g.potential(*n)?, g.max_testfn) {
                Ok((v, cert)) => {
                    print_cert(out, g, v, &cert)?;
                    cert_exit(&cert)
                }
                Err(Error::NoLift(reason)) => {
                    if g.json {
                        json(out, &serde_json::json!({ "n": n, "N": card, "label": Label::NoUlb2, "reason": reason }))?;
                    } else {
                        writeln!(out, "No-ULB2: {reason}")?;
                    }
                    Ok(Exit::NoUlb2)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::LevBound { n, s, card } => lev(out, g, *n, *s, *card),
        Cmd::Testfns { n, card, level, from } => testfns(out, g, *n, *card, *level, *from),
        Cmd::Classify { n, card } => {
            let c = classify_with(*n, *card as Real, &g.potential(*n)?, g.max_testfn, DEFAULT_GRID)?;
            if g.json {
                json(out, &c)?;
            } else if g.csv {
                writeln!(out, "n,N,tau,label,reason")?;
                writeln!(out, "{},{},{},{},{}", c.n, card, c.tau, c.label, c.reason.clone().unwrap_or_default())?;
            } else {
                write!(out, "n={} N={} tau={}: {}", c.n, card, c.tau, c.label)?;
                match &c.reason {
                    Some(r) => writeln!(out, " ({r})")?,
                    None => writeln!(out)?,
                }
            }
            Ok(report::label_exit(c.label))
        }
        Cmd::Table5 { rows } => {
            let cases = if rows.is_empty() { table5_cases() } else { parse_cases(rows)? };
            let h = custom_potential(g)?;
            let mut done: Vec<ReportRow> = Vec::with_capacity(cases.len());
            for r in report_rows(&cases, h.as_ref(), g.max_testfn) {
                done.push(r?);
            }
            if g.json {
                json(out, &done)?;
            } else if g.csv {
                rows_csv(&mut *out, &done, p)?;
            } else {
                rows_text(&mut *out, &done, p)?;
            }
            Ok(done.iter().map(ReportRow::exit).max().unwrap_or(Exit::Valid))
        }
        Cmd::Scan { n, lo, hi } => {
            if lo > hi {
                return Err(CliError::Usage(format!("empty range [{lo}, {hi}]")));
            }
            let h = custom_potential(g)?;
            let s = report::scan(*n, *lo, *hi, h.as_ref(), g.max_testfn);
            if g.json {
                json(out, &s)?;
            } else if g.csv {
                scan_csv(&mut *out, &s)?;
            } else {
                scan_text(&mut *out, &s)?;
            }
            for w in &s.warnings {
                if g.json || g.csv {
                    eprintln!("warning: {w}");
                }
            }
            Ok(s.exit())
        }
        Cmd::Code { name, file, report, imax } => {
            let code = match (name, file) {
                (Some(nm), _) => SphericalCode::builtin(nm)?,
                (None, Some(f)) => {
                    let text = std::fs::read_to_string(f)?;
                    SphericalCode::parse(f.display().to_string(), &text)?
                }
                _ => unreachable!("clap enforces one source"),
            };
            code_report(out, g, &code, *report, *imax)
        }
        Cmd::Verify600 { subspace, triangle, nodes } => verify600(out, g, *subspace, *triangle, *nodes),
    }
}

/// None when the potential is the per-dimension Newton default.
fn custom_potential(g: &Global) -> CliResult<Option<Potential>> {
    if g.is_default_potential() {
        Ok(None)
    } else {
        Ok(Some(g.potential(0)?))
    }
}

fn parse_cases(rows: &[String]) -> CliResult<Vec<(usize, usize)>> {
    rows.iter()
        .map(|r| {
            let bad = || CliError::Usage(format!("expected n:N, got {r:?}"));
            let (a, b) = r.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn cert_exit(cert: &BoundCertificate) -> CliResult<Exit> {
    if !cert.valid() {
        return Err(CliError::Usage(format!("certificate failed: {}", cert.failed().join(", "))));
    }
    Ok(certificate_exit(cert))
}

fn print_cert<W: Write>(out: &mut W, g: &Global, v: Real, cert: &BoundCertificate) -> CliResult<()> {
    let p = g.precision;
    if g.json {
        return json(out, cert);
    }
    if g.csv {
        writeln!(out, "n,N,level,tau,potential,value,valid,downgraded")?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            cert.n,
            cert.card,
            cert.level,
            cert.tau,
            cert.potential,
            num(v, p),
            cert.valid(),
            report::downgraded(cert)
        )?;
        return Ok(());
    }
    writeln!(out, "level {} bound, n={} N={} tau={} h={}", cert.level, cert.n, cert.card, cert.tau, cert.potential)?;
    writeln!(out, "value   {}", num(v, p))?;
    writeln!(out, "nodes   {}", join(&cert.nodes, p))?;
    writeln!(out, "weights {}", join(&cert.weights, p))?;
    for (k, c) in &cert.checks {
        let tag = if c.pass { "ok" } else if c.mandatory { "FAIL" } else { "no" };
        writeln!(out, "  {k:<24} {tag:<4} margin {:.3e}", c.margin)?;
    }
    if let Some(tf) = &cert.testfns {
        print_summary(out, tf)?;
    }
    let verdict = if !cert.valid() {
        "INVALID"
    } else if report::downgraded(cert) {
        "VALID (direct check)"
    } else {
        "VALID"
    };
    writeln!(out, "certificate {verdict}")?;
    Ok(())
}

fn print_summary<W: Write>(out: &mut W, tf: &TestFnSummary) -> CliResult<()> {
    if tf.nonnegative() {
        writeln!(out, "test functions nonnegative up to j={}", tf.cap)?;
    } else {
        writeln!(
            out,
            "negative test functions up to j={}: {:?} (min Q_{} = {:.3e})",
            tf.cap, tf.negative, tf.argmin, tf.min
        )?;
    }
    Ok(())
}

fn join(v: &[Real], p: usize) -> String {
    v.iter().map(|x| num(*x, p)).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct LevReport {
    n: usize,
    tau: usize,
    s: Real,
    bound: Real,
    interval: (Real, Real),
    dgs: (u128, u128),
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    card: Option<usize>,
}

fn lev<W: Write>(out: &mut W, g: &Global, n: usize, s: Option<Real>, card: Option<usize>) -> CliResult<Exit> {
    let p = g.precision;
    let (s, tau, bound) = match (s, card) {
        (Some(s), _) => {
            let (l, tau) = lev_bound(n, s)?;
            (s, tau, l)
        }
        (None, Some(m)) => {
            let s = solve_s(n, m as Real)?;
            (s, tau_of(n, m as Real)?.tau, m as Real)
        }
        _ => unreachable!("clap requires --s or --card"),
    };
    let r = LevReport {
        n,
        tau,
        s,
        bound,
        interval: interval(n, tau),
        dgs: (dgs_bound(n, tau), dgs_bound(n, tau + 1)),
        card,
    };
    if g.json {
        json(out, &r)?;
    } else if g.csv {
        writeln!(out, "n,tau,s,L")?;
        writeln!(out, "{},{},{},{}", n, tau, num(s, p), num(bound, p))?;
    } else {
        writeln!(out, "n={n} tau={tau} s={} L={}", num(s, p), num(bound, p))?;
        writeln!(
            out,
            "I_tau = [{}, {}), D(n,tau) = {}, D(n,tau+1) = {}",
            num(r.interval.0, p),
            num(r.interval.1, p),
            r.dgs.0,
            r.dgs.1
        )?;
    }
    Ok(Exit::Valid)
}

#[derive(Serialize)]
struct TestFnReport {
    n: usize,
    #[serde(rename = "N")]
    card: usize,
    level: u8,
    values: Vec<(usize, Real)>,
    summary: TestFnSummary,
}

fn testfns<W: Write>(
    out: &mut W,
    g: &Global,
    n: usize,
    card: usize,
    level: u8,
    from: Option<usize>,
) -> CliResult<Exit> {
    let c = card as Real;
    let cap = g.max_testfn;
    let fl = first_level_quadrature(n, c)?;
    let tau = fl.params.tau;
    let from = from.unwrap_or(tau + 1);
    let mut values = if level == 1 {
        fl.rule.test_functions(from..=cap)
    } else {
        let (_, cands, pick) = solve_lift(n, c, DEFAULT_GRID, &g.potential(n)?)?;
        let Some(i) = pick else {
            writeln!(out, "No-ULB2: no admissible second-level rule")?;
            return Ok(Exit::NoUlb2);
        };
        second_level_testfns(&cands[i].lift, tau, cap)
    };
    values.retain(|v| v.0 >= from);
    let r = TestFnReport {
        n,
        card,
        level,
        summary: TestFnSummary::from_values(&values, cap),
        values,
    };
    if g.json {
        json(out, &r)?;
    } else {
        if g.csv {
            writeln!(out, "j,Q")?;
        }
        for (j, q) in &r.values {
            if g.csv {
                writeln!(out, "{j},{:.*e}", g.precision, q)?;
            } else {
                writeln!(out, "Q_{j:<4} {:>+.*e}", g.precision, q)?;
            }
        }
        if !g.csv {
            print_summary(out, &r.summary)?;
        }
    }
    Ok(Exit::Valid)
}

#[derive(Serialize)]
struct EnergyReport {
    code: String,
    n: usize,
    #[serde(rename = "N")]
    card: usize,
    potential: String,
    energy: Real,
    separation: Real,
    ulb1: Option<Real>,
    ulb2: Option<Real>,
}

#[derive(Serialize)]
struct IndexReport {
    code: String,
    imax: usize,
    moments: Vec<Real>,
    index_set: Vec<usize>,
    design_strength: usize,
}

fn code_report<W: Write>(out: &mut W, g: &Global, code: &SphericalCode, kind: CodeReport, imax: usize) -> CliResult<Exit> {
    let p = g.precision;
    let (n, card) = (code.dim, code.card());
    match kind {
        CodeReport::Energy => {
            let h = g.potential(n)?;
            let spec = code.spectrum();
            let r = EnergyReport {
                code: code.name.clone(),
                n,
                card,
                potential: h.to_string(),
                energy: code.energy(&h)?,
                separation: spec.max_inner,
                ulb1: ulb_first_capped(n, card as Real, &h, g.max_testfn).ok().map(|x| x.0),
                ulb2: ulb_second_capped(n, card as Real, &h, g.max_testfn)
                    .ok()
                    .filter(|x| x.1.valid())
                    .map(|x| x.0),
            };
            if g.json {
                json(out, &r)?;
            } else if g.csv {
                writeln!(out, "code,n,N,potential,energy,s,ULB1,ULB2")?;
                let o = |x: Option<Real>| x.map(|v| num(v, p)).unwrap_or_default();
                writeln!(out, "{},{n},{card},{},{},{},{},{}", r.code, r.potential, num(r.energy, p), num(r.separation, p), o(r.ulb1), o(r.ulb2))?;
            } else {
                writeln!(out, "{} (n={n}, N={card}), h={}", r.code, r.potential)?;
                writeln!(out, "energy     {}", num(r.energy, p))?;
                writeln!(out, "separation {}", num(r.separation, p))?;
                if let Some(v) = r.ulb1 {
                    writeln!(out, "ULB1       {}", num(v, p))?;
                }
                if let Some(v) = r.ulb2 {
                    writeln!(out, "ULB2       {}", num(v, p))?;
                }
            }
        }
        CodeReport::Spectrum => {
            let s = code.spectrum();
            if g.json {
                json(out, &s)?;
            } else {
                writeln!(out, "{}inner,freq,pairs", if g.csv { "" } else { "# " })?;
                for i in 0..s.values.len() {
                    writeln!(out, "{},{},{}", num(s.values[i], p.max(12)), num(s.freqs[i], p.max(12)), s.pairs[i])?;
                }
            }
        }
        CodeReport::IndexSet => {
            let r = IndexReport {
                code: code.name.clone(),
                imax,
                moments: code.moments(imax),
                index_set: code.index_set(imax).into_iter().collect(),
                design_strength: code.design_strength(imax),
            };
            if g.json {
                json(out, &r)?;
            } else if g.csv {
                writeln!(out, "i,moment,in_index_set")?;
                for (i, m) in r.moments.iter().enumerate() {
                    writeln!(out, "{i},{:.*e},{}", p, m, r.index_set.contains(&i))?;
                }
            } else {
                writeln!(out, "index set (i <= {imax}): {:?}", r.index_set)?;
                writeln!(out, "design strength {}", r.design_strength)?;
            }
        }
        CodeReport::Quadrature => {
            let rule = code.quadrature(imax);
            if g.json {
                json(out, &rule)?;
            } else {
                writeln!(out, "{}node,weight", if g.csv { "" } else { "# " })?;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    writeln!(out, "{},{}", num(*x, p.max(12)), num(*w, p.max(12)))?;
                }
                if !g.csv {
                    writeln!(out, "# exactness residual {:.3e}", rule.exactness_residual())?;
                }
            }
        }
    }
    Ok(Exit::Valid)
}

#[derive(Serialize)]
struct Verify600Report {
    subspace: Lambda600,
    value: Real,
    energy: Real,
    certificate: BoundCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda3: Option<cell600::Lambda3Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    triangle: Option<cell600::TriangleReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    nodes: Vec<cell600::ThirdLevelNodes>,
}

fn verify600<W: Write>(out: &mut W, g: &Global, sub: u8, triangle: bool, nodes: bool) -> CliResult<Exit> {
    let p = g.precision;
    let h = g.potential(4)?;
    let lambda = Lambda600::from_id(sub)?;
    let (value, cert) = cell600::verify_600cell_optimality(&h, lambda)?;
    let energy = SphericalCode::builtin("600cell")?.energy(&h)?;
    let mut r = Verify600Report {
        subspace: lambda,
        value,
        energy,
        lambda3: if lambda == Lambda600::L3 { Some(cell600::lambda3_failure()?) } else { None },
        triangle: if triangle { Some(cell600::optimal_triangle(&h)?) } else { None },
        nodes: Vec::new(),
        certificate: cert,
    };
    if nodes {
        for v in [Lambda600::L1, Lambda600::L2] {
            r.nodes.push(cell600::third_level_nodes(v, g.seed, NODE_STARTS)?);
        }
    }
    let exit = cert_exit(&r.certificate)?;
    if g.json {
        json(out, &r)?;
        return Ok(exit);
    }
    if g.csv {
        writeln!(out, "subspace,potential,value,energy,valid,downgraded")?;
        writeln!(out, "{},{},{},{},{},{}", lambda, r.certificate.potential, num(value, p), num(energy, p), r.certificate.valid(), report::downgraded(&r.certificate))?;
        return Ok(exit);
    }
    print_cert(out, g, value, &r.certificate)?;
    writeln!(out, "600-cell energy {}  (relative gap {:.2e})", num(energy, p), (value - energy).abs() / energy)?;
    if let Some(f) = &r.lambda3 {
        writeln!(out, "{lambda}: j=14 constants (A,B,C) = ({})", join(&f.constants, 10))?;
        writeln!(out, "  t* = {:.13}, excess on [-1,t*) = {:.3e}", f.t_star, f.excess)?;
    }
    if let Some(t) = &r.triangle {
        writeln!(out, "triangle for {} (alpha = {:.6e}{})", t.potential, t.alpha, if t.degenerate { ", degenerate" } else { "" })?;
        for (k, (b, c)) in t.vertices.iter().enumerate() {
            writeln!(out, "  vertex {}: B = {:.10}, C = {:.10}, mismatch {:.1e}", k + 1, b, c, t.vertex_mismatch[k])?;
        }
        for (name, f) in [("lambda12", t.lambda12), ("lambda13", t.lambda13), ("lambda23", t.lambda23), ("slope at 1", t.slope_at_one)] {
            writeln!(out, "  {name:<10} = {:+.10e} B {:+.10e} C", f.b, f.c)?;
        }
        writeln!(out, "  interior violation {:.1e}", t.interior_violation)?;
    }
    for nd in &r.nodes {
        writeln!(out, "third-level nodes ({}): c = ({})", nd.variant, join(&nd.c, 10))?;
        writeln!(out, "  nodes {}", join(&nd.nodes, 10))?;
        writeln!(out, "  exactness {:.1e}, {} real solutions", nd.exactness, nd.solutions)?;
    }
    Ok(exit)
}
