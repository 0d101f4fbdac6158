use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::search::{counterexample_search, GridSpec, SearchStrategy};
use super::verify::{ClaimReport, Verdict};
use super::{builtin_catalog, Assertion, Exponent, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TheoryVerdict {
    Holds,
    Fails,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EmpiricalVerdict {
    NoViolation,
    ViolationFound,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionRow {
    pub alpha: f64,
    /// `p/q`, the exponent of the `P` side over that of the `Q` side.
    pub ratio: f64,
    pub empirical: EmpiricalVerdict,
    pub theory: TheoryVerdict,
    /// `None` when theory is silent.
    pub agree: Option<bool>,
    pub max_violation: f64,
}

/// Exponents `(p, q)` for a catalog claim such that its sides receive the
/// given exponents.
fn map_exponents(claim_lhs: Exponent, claim_rhs: Exponent, e_lhs: f64, e_rhs: f64) -> (f64, f64) {
    let (mut p, mut q) = (1.0, 1.0);
    for (slot, e) in [(claim_lhs, e_lhs), (claim_rhs, e_rhs)] {
        match slot {
            Exponent::P => p = e,
            Exponent::Q => q = e,
            Exponent::None => {}
        }
    }
    (p, q)
}

fn exponent_of(side: Side, p: f64, q: f64) -> f64 {
    match side.exponent {
        Exponent::P => p,
        Exponent::Q => q,
        Exponent::None => 1.0,
    }
}

/// What the catalog says about `lhs ≺_log rhs` at `(α, p, q)`.
pub fn theory_verdict(lhs: Side, rhs: Side, alpha: f64, p: f64, q: f64) -> TheoryVerdict {
    let (el, er) = (exponent_of(lhs, p, q), exponent_of(rhs, p, q));
    let mut holds = false;
    let mut fails = false;
    for c in builtin_catalog() {
        if c.lhs.kind != lhs.kind || c.rhs.kind != rhs.kind {
            continue;
        }
        let (cp, cq) = map_exponents(c.lhs.exponent, c.rhs.exponent, el, er);
        if !c.applies(alpha, cp, cq) {
            continue;
        }
        match c.assertion {
            Assertion::HoldsForAllPairs => holds = true,
            Assertion::CounterexampleExists => fails = true,
            Assertion::Open => {}
        }
    }
    match (holds, fails) {
        (true, false) => TheoryVerdict::Holds,
        (false, true) => TheoryVerdict::Fails,
        _ => TheoryVerdict::Unknown,
    }
}

/// Scans an `α × p/q` grid (with `q = 1`) for violations of `lhs ≺_log rhs`.
pub fn region_scan(lhs: Side, rhs: Side, alphas: &[f64], ratios: &[f64], trials: usize, seed: u64) -> Result<Vec<RegionRow>> {
    let cells: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| ratios.iter().map(move |&r| (a, r))).collect();
    cells
        .par_iter()
        .map(|&(alpha, ratio)| {
            let (p, q) = (ratio, 1.0);
            let l = lhs.spec(alpha, p, q)?;
            let r = rhs.spec(alpha, p, q)?;
            let strategy = SearchStrategy::Combined { grid: GridSpec::coarse(), trials, n_max: 3, seed };
            let found = counterexample_search(&l, &r, &strategy)?;
            let empirical = if found.is_some() { EmpiricalVerdict::ViolationFound } else { EmpiricalVerdict::NoViolation };
            let theory = theory_verdict(lhs, rhs, alpha, p, q);
            let agree = match theory {
                TheoryVerdict::Holds => Some(empirical == EmpiricalVerdict::NoViolation),
                TheoryVerdict::Fails => Some(empirical == EmpiricalVerdict::ViolationFound),
                TheoryVerdict::Unknown => None,
            };
            Ok(RegionRow { alpha, ratio, empirical, theory, agree, max_violation: found.map_or(0.0, |w| w.violation) })
        })
        .collect()
}

/// True when every disagreement sits next to a change of the theoretical
/// verdict along the ratio axis, i.e. within one grid cell of the boundary.
/// Rows must come from [`region_scan`] with the same grids.
pub fn boundary_agreement(rows: &[RegionRow], n_ratios: usize) -> bool {
    if n_ratios == 0 || rows.len() % n_ratios != 0 {
        return false;
    }
    rows.chunks(n_ratios).all(|line| {
        line.iter().enumerate().all(|(j, row)| {
            if row.agree != Some(false) {
                return true;
            }
            let neighbour_differs = |k: usize| line.get(k).is_some_and(|n| n.theory != row.theory);
            (j > 0 && neighbour_differs(j - 1)) || neighbour_differs(j + 1)
        })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TableCell {
    /// Condition on `p` under which the relation holds.
    pub entry: &'static str,
    pub claims: Vec<&'static str>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub relation: &'static str,
    pub below_one: TableCell,
    pub above_one: TableCell,
}

fn cell(entry: &'static str, claims: &[&'static str]) -> TableCell {
    TableCell { entry, claims: claims.to_vec() }
}

/// The Log-Euclidean comparison table with the catalog claims behind each cell.
pub fn table34_layout() -> Vec<TableRow> {
    let row = |relation, below_one, above_one| TableRow { relation, below_one, above_one };
    vec![
        row("R ≺ LE", cell("none", &["Table3.4:R<LE:a<1"]), cell("none", &["Table3.4:R<LE:a>1"])),
        row("LE ≺ R", cell("all p", &["Prop3.17a"]), cell("all p", &["Prop3.17a"])),
        row("G ≺ LE", cell("all p", &["Prop3.17b"]), cell("none", &["Table3.4:G<LE:a>1"])),
        row("LE ≺ G", cell("none", &["Table3.4:LE<G:a<1"]), cell("all p", &["Prop3.17c", "Cor3.18.1"])),
        row("SG ≺ LE", cell("none", &["Table3.4:SG<LE:a<1"]), cell("?", &["Table3.4:SG<LE:a>1"])),
        row("LE ≺ SG", cell("all p", &["Prop3.17d"]), cell("none", &["Cor3.18.2"])),
        row("SGt ≺ LE", cell("none", &["Cor3.18.3"]), cell("none", &["Table3.4:SGt<LE:a>1"])),
        row(
            "LE ≺ SGt",
            cell("all p if α ≤ 1/2, none if 1/2 < α < 1", &["Cor3.18.4", "Thm3.19"]),
            cell("all p", &["Cor3.18.5"]),
        ),
    ]
}

fn cell_status(c: &TableCell, reports: &[ClaimReport]) -> Result<String> {
    let mut parts = Vec::new();
    for id in &c.claims {
        let r = reports
            .iter()
            .find(|r| r.claim_id == *id)
            .ok_or_else(|| Error::Parameter(format!("no report for {id}")))?;
        parts.push(match (r.assertion, r.verdict) {
            (Assertion::Open, _) if r.violations > 0 => "open, violation seen".to_string(),
            (Assertion::Open, _) => "open, none seen".to_string(),
            (_, Verdict::Confirmed) => "ok".to_string(),
            (_, Verdict::Refuted) => "REFUTED".to_string(),
            (_, Verdict::Inconclusive) => "inconclusive".to_string(),
        });
    }
    parts.dedup();
    Ok(parts.join("/"))
}

/// Text rendering of the table with the reproduction status of each cell.
pub fn render_table34(reports: &[ClaimReport]) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} | {:<42} | {:<20} | {:<8} | {}", "relation", "α < 1", "check", "α > 1", "check");
    let _ = writeln!(out, "{}", "-".repeat(100));
    for row in table34_layout() {
        let _ = writeln!(
            out,
            "{:<10} | {:<42} | {:<20} | {:<8} | {}",
            row.relation,
            row.below_one.entry,
            cell_status(&row.below_one, reports)?,
            row.above_one.entry,
            cell_status(&row.above_one, reports)?
        );
    }
    Ok(out)
}
