//! Eigenvalue orders: weak log-majorization, log-majorization and the
//! entrywise eigenvalue order; Schatten norms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{same_dim, Psd};

/// Absolute tolerance on log partial products.
pub const MAJ_TOL: f64 = 1e-9;
/// Tolerance on `|log det X - log det Y|`.
pub const DET_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    WeakLog,
    Log,
    EigenOrder,
}

#[derive(Clone, Debug, Serialize)]
pub struct MajorizationVerdict {
    pub relation: Relation,
    /// `(log Π_{i<=k} λ_i(X), log Π_{i<=k} λ_i(Y))`; for `EigenOrder` the
    /// entries are the eigenvalues themselves.
    pub per_k: Vec<(f64, f64)>,
    /// Log-determinants of `X` and `Y`.
    pub det_pair: (f64, f64),
    pub holds: bool,
    /// Smallest signed gap over `k` (negative means a violation).
    pub margin: f64,
    /// `|margin| <= tol`: a sharp case rather than a clear pass or violation.
    pub boundary: bool,
}

/// Log partial products of the eigenvalues, `-inf` past the rank.
fn log_partials(x: &Psd) -> Vec<f64> {
    let r = x.rank();
    let mut acc = 0.0;
    x.eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if i < r {
                acc += v.ln();
                acc
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

fn gap(lx: f64, ly: f64) -> f64 {
    match (lx == f64::NEG_INFINITY, ly == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        _ => ly - lx,
    }
}

fn partial_products(x: &Psd, y: &Psd) -> Result<(Vec<(f64, f64)>, f64)> {
    same_dim(x.dim(), y.dim())?;
    let px = log_partials(x);
    let py = log_partials(y);
    let margin = px.iter().zip(&py).map(|(&a, &b)| gap(a, b)).fold(f64::INFINITY, f64::min);
    Ok((px.into_iter().zip(py).collect(), margin))
}

pub fn weak_log_majorize(x: &Psd, y: &Psd, maj_tol: f64) -> Result<MajorizationVerdict> {
    let (per_k, margin) = partial_products(x, y)?;
    let det_pair = (x.log_det(), y.log_det());
    Ok(MajorizationVerdict {
        relation: Relation::WeakLog,
        per_k,
        det_pair,
        holds: margin >= -maj_tol,
        margin,
        boundary: margin.abs() <= maj_tol,
    })
}

pub fn log_majorize(x: &Psd, y: &Psd, maj_tol: f64, det_tol: f64) -> Result<MajorizationVerdict> {
    let mut v = weak_log_majorize(x, y, maj_tol)?;
    v.relation = Relation::Log;
    let (dx, dy) = v.det_pair;
    let det_ok = (dx == f64::NEG_INFINITY && dy == f64::NEG_INFINITY) || (dx - dy).abs() <= det_tol;
    v.holds = v.holds && det_ok;
    Ok(v)
}

/// `λ_i(X) <= λ_i(Y) + tol` for every `i`.
pub fn eigen_order_le(x: &Psd, y: &Psd, tol: f64) -> Result<MajorizationVerdict> {
    same_dim(x.dim(), y.dim())?;
    let per_k: Vec<(f64, f64)> = x.eigenvalues().iter().copied().zip(y.eigenvalues().iter().copied()).collect();
    let margin = per_k.iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    Ok(MajorizationVerdict {
        relation: Relation::EigenOrder,
        per_k,
        det_pair: (x.log_det(), y.log_det()),
        holds: margin >= -tol,
        margin,
        boundary: margin.abs() <= tol,
    })
}

/// Schatten `s`-norm of a PSD matrix; `s = f64::INFINITY` is the operator norm.
pub fn schatten_norm(x: &Psd, s: f64) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::Parameter(format!("Schatten index must be >= 1, got {s}")));
    }
    let ev = x.eigenvalues();
    if s.is_infinite() {
        return Ok(ev[0]);
    }
    // scale by λ_max to avoid overflow for large s
    let m = ev[0];
    if m == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = ev.iter().map(|v| (v / m).powf(s)).sum();
    Ok(m * sum.powf(1.0 / s))
}

pub fn trace_norm(x: &Psd) -> f64 {
    x.trace()
}

pub fn operator_norm(x: &Psd) -> f64 {
    x.lambda_max()
}
