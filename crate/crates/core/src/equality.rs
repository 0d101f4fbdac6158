//! Equality cases of norm inequalities between quasi-means, and the
//! fourth-order Taylor expansion of `t ↦ Tr G_α(e^{tH}, e^{tK})` used to show
//! that trace equality forces commutation.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::majorization::schatten_norm;
use crate::means::{compute_mean, trace_mean, weighted_geometric, MeanKind, MeanSpec};
use crate::spectral::{c, frobenius, same_dim, trace, CMat, Hermitian, Psd};

/// Matrix coefficients of `e^{-tK/2} e^{tH} e^{-tK/2}` (`x`) and of its
/// `α`-th power (`y`), and the scalar coefficients `z` of
/// `Tr G_α(e^{tK}, e^{tH}) = n + Σ z_k t^k`.
#[derive(Clone, Debug, Serialize)]
pub struct TaylorCoefficients {
    pub alpha: f64,
    #[serde(skip)]
    pub x: [Hermitian; 4],
    #[serde(skip)]
    pub y: [Hermitian; 4],
    /// `z_1..z_4` from the matrix coefficients.
    pub z: [f64; 4],
    /// Closed-form expression of `z_4` in traces of words in `H` and `K`.
    pub z4_closed: f64,
}

fn tr(m: &CMat) -> f64 {
    trace(m).re
}

pub fn taylor_coefficients(h: &Hermitian, k: &Hermitian, alpha: f64) -> Result<TaylorCoefficients> {
    same_dim(h.dim(), k.dim())?;
    if !alpha.is_finite() {
        return Err(Error::Parameter("alpha must be finite".into()));
    }
    let (h, k) = (h.matrix(), k.matrix());
    let a = alpha;
    let (h2, k2) = (h * h, k * k);
    let (h3, k3) = (&h2 * h, &k2 * k);
    let s = |m: CMat, f: f64| m * c(f);

    let x1 = h - k;
    let x2 = s(&x1 * &x1, 0.5);
    let x3 = s(h3.clone(), 1.0 / 6.0) - s(&h2 * k + k * &h2, 0.25) + s(h * &k2 + k * h * k * c(2.0) + &k2 * h, 0.125)
        - s(k3.clone(), 1.0 / 6.0);
    let x4 = s(&h3 * h, 1.0 / 24.0) - s(&h3 * k + k * &h3, 1.0 / 12.0)
        + s(&h2 * &k2 + k * &h2 * k * c(2.0) + &k2 * &h2, 1.0 / 16.0)
        - s(h * &k3 + k * h * &k2 * c(3.0) + &k2 * h * k * c(3.0) + &k3 * h, 1.0 / 48.0)
        + s(&k3 * k, 1.0 / 24.0);

    let b2 = a * (a - 1.0) / 2.0;
    let b3 = b2 * (a - 2.0) / 3.0;
    let b4 = b3 * (a - 3.0) / 4.0;
    let y1 = s(x1.clone(), a);
    let y2 = s(x2.clone(), a) + s(&x1 * &x1, b2);
    let y3 = s(x3.clone(), a) + s(&x1 * &x2 + &x2 * &x1, b2) + s(&x1 * &x1 * &x1, b3);
    let y4 = s(x4.clone(), a)
        + s(&x1 * &x3 + &x2 * &x2 + &x3 * &x1, b2)
        + s(&x1 * &x1 * &x2 + &x1 * &x2 * &x1 + &x2 * &x1 * &x1, b3)
        + s(&x1 * &x1 * &x1 * &x1, b4);

    let z1 = tr(&(&y1 + k));
    let z2 = tr(&(&y2 + &y1 * k + s(k2.clone(), 0.5)));
    let z3 = tr(&(&y3 + &y2 * k + &y1 * &k2 * c(0.5) + s(k3.clone(), 1.0 / 6.0)));
    let z4 = tr(&(&y4 + &y3 * k + &y2 * &k2 * c(0.5) + &y1 * &k3 * c(1.0 / 6.0) + s(&k3 * k, 1.0 / 24.0)));

    let b = 1.0 - a;
    let z4_closed = (a.powi(4) * tr(&(&h3 * h))
        + 4.0 * a.powi(3) * b * tr(&(&h3 * k))
        + 4.0 * a * (a - 1.0) * (a * a - a + 1.0) * tr(&(&h2 * &k2))
        + 2.0 * a * (a - 1.0) * (a * a - a - 2.0) * tr(&(h * k * h * k))
        + 4.0 * a * b.powi(3) * tr(&(h * &k3))
        + b.powi(4) * tr(&(&k3 * k)))
        / 24.0;

    let herm = Hermitian::symmetrized;
    Ok(TaylorCoefficients {
        alpha,
        x: [herm(x1), herm(x2), herm(x3), herm(x4)],
        y: [herm(y1), herm(y2), herm(y3), herm(y4)],
        z: [z1, z2, z3, z4],
        z4_closed,
    })
}

/// `‖HK − KH‖_F`.
pub fn commutation_defect(h: &Hermitian, k: &Hermitian) -> Result<f64> {
    same_dim(h.dim(), k.dim())?;
    let (h, k) = (h.matrix(), k.matrix());
    Ok(frobenius(&(h * k - k * h)))
}

/// `z_4 − Tr(αH + (1−α)K)^4 / 24`, which vanishes when `H` and `K` commute.
pub fn z4_gap(h: &Hermitian, k: &Hermitian, alpha: f64) -> Result<f64> {
    let t = taylor_coefficients(h, k, alpha)?;
    let l = h.scale(alpha).add(&k.scale(1.0 - alpha))?;
    let l2 = l.matrix() * l.matrix();
    Ok(t.z[3] - tr(&(&l2 * &l2)) / 24.0)
}

/// The gap in closed form: `α(α−1)/12 · ‖[H,K]‖_F²`.
pub fn z4_gap_closed_form(h: &Hermitian, k: &Hermitian, alpha: f64) -> Result<f64> {
    let d = commutation_defect(h, k)?;
    Ok(alpha * (alpha - 1.0) / 12.0 * d * d)
}

/// `t ↦ Tr G_α(e^{tK}, e^{tH})`, the function expanded by [`taylor_coefficients`].
pub fn trace_geometric_exp(h: &Hermitian, k: &Hermitian, alpha: f64, t: f64) -> Result<f64> {
    let a = k.scale(t).exp()?;
    let b = h.scale(t).exp()?;
    Ok(weighted_geometric(&a, &b, alpha)?.trace())
}

/// Finite-difference weights for derivatives `0..=m` at `x0` on arbitrary nodes.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![vec![0.0; n]; m + 1];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Taylor coefficients `f^{(k)}(0)/k!`, `k = 1..4`, from a symmetric stencil
/// with `2·half + 1` points and step `h`.
pub fn finite_difference_taylor<F>(f: F, half: usize, step: f64) -> Result<[f64; 4]>
where
    F: Fn(f64) -> Result<f64>,
{
    if half < 2 || !(step > 0.0) {
        return Err(Error::Parameter("stencil needs at least 5 points and a positive step".into()));
    }
    let nodes: Vec<f64> = (-(half as i64)..=half as i64).map(|j| j as f64 * step).collect();
    let values = nodes.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let w = fornberg_weights(0.0, &nodes, 4);
    let mut out = [0.0; 4];
    let mut fact = 1.0;
    for k in 1..=4 {
        fact *= k as f64;
        out[k - 1] = w[k].iter().zip(&values).map(|(a, b)| a * b).sum::<f64>() / fact;
    }
    Ok(out)
}

/// Finite-difference estimate of `z_1..z_4` with two independent stencils.
#[derive(Clone, Debug, Serialize)]
pub struct TaylorCheck {
    pub formula: [f64; 4],
    pub primary: [f64; 4],
    pub cross_check: [f64; 4],
    /// Scale used for relative errors: `max(|z_k|, Σ_j |λ_j(αH+(1−α)K)|^k / k!)`.
    pub scale: [f64; 4],
    pub rel_error: [f64; 4],
    pub stencil_agreement: [f64; 4],
}

pub fn taylor_check(h: &Hermitian, k: &Hermitian, alpha: f64) -> Result<TaylorCheck> {
    let t = taylor_coefficients(h, k, alpha)?;
    let f = |s: f64| trace_geometric_exp(h, k, alpha, s);
    let primary = finite_difference_taylor(f, 6, 0.05)?;
    let cross_check = finite_difference_taylor(f, 4, 2e-2)?;
    let l = h.scale(alpha).add(&k.scale(1.0 - alpha))?.eig()?;
    let mut scale = [0.0; 4];
    let mut rel_error = [0.0; 4];
    let mut stencil_agreement = [0.0; 4];
    let mut fact = 1.0;
    for i in 0..4 {
        fact *= (i + 1) as f64;
        let natural: f64 = l.values.iter().map(|v| v.abs().powi(i as i32 + 1)).sum::<f64>() / fact;
        scale[i] = t.z[i].abs().max(natural).max(f64::MIN_POSITIVE);
        rel_error[i] = (primary[i] - t.z[i]).abs() / scale[i];
        stencil_agreement[i] = (primary[i] - cross_check[i]).abs() / scale[i];
    }
    Ok(TaylorCheck { formula: t.z, primary, cross_check, scale, rel_error, stencil_agreement })
}

/// Pairs of means whose norm inequality has a commutation equality case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EqualityPair {
    RenyiRenyi,
    GeometricRenyi,
    SpectralRenyi,
    SpectralTildeRenyi,
    LogEuclideanRenyi,
    GeometricGeometric,
    SpectralGeometric,
    SpectralTildeGeometric,
    LogEuclideanGeometric,
}

impl EqualityPair {
    pub const ALL: [EqualityPair; 9] = [
        EqualityPair::RenyiRenyi,
        EqualityPair::GeometricRenyi,
        EqualityPair::SpectralRenyi,
        EqualityPair::SpectralTildeRenyi,
        EqualityPair::LogEuclideanRenyi,
        EqualityPair::GeometricGeometric,
        EqualityPair::SpectralGeometric,
        EqualityPair::SpectralTildeGeometric,
        EqualityPair::LogEuclideanGeometric,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EqualityPair::RenyiRenyi => "R-R",
            EqualityPair::GeometricRenyi => "G-R",
            EqualityPair::SpectralRenyi => "SG-R",
            EqualityPair::SpectralTildeRenyi => "SGt-R",
            EqualityPair::LogEuclideanRenyi => "LE-R",
            EqualityPair::GeometricGeometric => "G-G",
            EqualityPair::SpectralGeometric => "SG-G",
            EqualityPair::SpectralTildeGeometric => "SGt-G",
            EqualityPair::LogEuclideanGeometric => "LE-G",
        }
    }

    /// The two kinds, first with exponent `p`, second with `q`.
    pub fn kinds(self) -> (MeanKind, MeanKind) {
        use MeanKind::*;
        match self {
            EqualityPair::RenyiRenyi => (Renyi, Renyi),
            EqualityPair::GeometricRenyi => (Geometric, Renyi),
            EqualityPair::SpectralRenyi => (SpectralGeometric, Renyi),
            EqualityPair::SpectralTildeRenyi => (SpectralGeometricTilde, Renyi),
            EqualityPair::LogEuclideanRenyi => (LogEuclidean, Renyi),
            EqualityPair::GeometricGeometric => (Geometric, Geometric),
            EqualityPair::SpectralGeometric => (SpectralGeometric, Geometric),
            EqualityPair::SpectralTildeGeometric => (SpectralGeometricTilde, Geometric),
            EqualityPair::LogEuclideanGeometric => (LogEuclidean, Geometric),
        }
    }

    /// Parameter regions, as text.
    pub fn regions(self) -> &'static str {
        match self {
            EqualityPair::RenyiRenyi => "p != q",
            EqualityPair::GeometricRenyi => "α < 1; or α > 1 with p/q < min(α/2, α-1) or p/q > max(α/2, α-1)",
            EqualityPair::SpectralRenyi => "α < 1 with p/q > max(α, 1-α) or p/q < min(α, 1-α); or α > 1 with p/q < α",
            EqualityPair::SpectralTildeRenyi => "α < 1 with p/q < α; α <= 1/2 with q < p; or α > 1 with p/q > α",
            EqualityPair::LogEuclideanRenyi => "any α, p",
            EqualityPair::GeometricGeometric => "α in (0,2] and p != q",
            EqualityPair::SpectralGeometric => "α < 1; or 1 < α <= 2 with p/q < min(2, α/(α-1))",
            EqualityPair::SpectralTildeGeometric => "α <= 1/2; or 1 < α <= 2 with q/p < min(1/2, (α-1)/α)",
            EqualityPair::LogEuclideanGeometric => "α in (0,2]",
        }
    }

    /// Inside a region: `Some(true)` when the `p`-side is the log-majorized
    /// (smaller) one, `Some(false)` when the `q`-side is; `None` outside.
    pub fn orientation(self, alpha: f64, p: f64, q: f64) -> Option<bool> {
        let a = alpha;
        let r = p / q;
        if !(a > 0.0) || a == 1.0 || !(p > 0.0 && q > 0.0) {
            return None;
        }
        match self {
            EqualityPair::RenyiRenyi => (p != q).then_some(p < q),
            EqualityPair::GeometricRenyi => {
                if a < 1.0 || r < (a / 2.0).min(a - 1.0) {
                    Some(true)
                } else if r > (a / 2.0).max(a - 1.0) {
                    Some(false)
                } else {
                    None
                }
            }
            EqualityPair::SpectralRenyi => {
                if a < 1.0 && r > a.max(1.0 - a) {
                    Some(false)
                } else if (a < 1.0 && r < a.min(1.0 - a)) || (a > 1.0 && r < a) {
                    Some(true)
                } else {
                    None
                }
            }
            EqualityPair::SpectralTildeRenyi => {
                if a < 1.0 && r < a {
                    Some(true)
                } else if (a <= 0.5 && q < p) || (a > 1.0 && r > a) {
                    Some(false)
                } else {
                    None
                }
            }
            EqualityPair::LogEuclideanRenyi => Some(true),
            EqualityPair::GeometricGeometric => {
                if a > 2.0 || p == q {
                    None
                } else if a < 1.0 {
                    Some(p > q)
                } else {
                    Some(p < q)
                }
            }
            EqualityPair::SpectralGeometric => {
                if a < 1.0 {
                    Some(false)
                } else if a <= 2.0 && r < 2f64.min(a / (a - 1.0)) {
                    Some(true)
                } else {
                    None
                }
            }
            EqualityPair::SpectralTildeGeometric => {
                if a <= 0.5 || (a > 1.0 && a <= 2.0 && q / p < 0.5f64.min((a - 1.0) / a)) {
                    Some(false)
                } else {
                    None
                }
            }
            EqualityPair::LogEuclideanGeometric => {
                if a < 1.0 {
                    Some(false)
                } else if a <= 2.0 {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }

    /// Finds the pair for two specs, in either order; returns the pair and
    /// the exponents `(p, q)` in pair order.
    pub fn identify(lhs: &MeanSpec, rhs: &MeanSpec) -> Option<(EqualityPair, f64, f64)> {
        EqualityPair::ALL.iter().find_map(|&pair| {
            let (k1, k2) = pair.kinds();
            if (lhs.kind, rhs.kind) == (k1, k2) {
                Some((pair, lhs.p, rhs.p))
            } else if (rhs.kind, lhs.kind) == (k1, k2) {
                Some((pair, rhs.p, lhs.p))
            } else {
                None
            }
        })
    }
}

impl fmt::Display for EqualityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EqualityPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EqualityPair::ALL
            .into_iter()
            .find(|p| p.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown pair '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EqualityProbe {
    pub pair: EqualityPair,
    /// `‖larger‖ − ‖smaller‖` for the log-majorization valid in the region.
    pub gap: f64,
    pub commutator_norm: f64,
    pub schatten: f64,
}

/// Norm gap between two means on `(A, B)`, oriented by the log-majorization
/// that holds in the pair's region. Commuting inputs give a zero gap;
/// non-commuting inputs should give a strictly positive one.
pub fn norm_equality_probe(lhs: &MeanSpec, rhs: &MeanSpec, a: &Psd, b: &Psd, schatten: f64) -> Result<EqualityProbe> {
    if !(1.0..f64::INFINITY).contains(&schatten) {
        return Err(Error::Parameter(format!("need a strictly increasing norm, Schatten s in [1, inf), got {schatten}")));
    }
    if lhs.alpha != rhs.alpha {
        return Err(Error::Parameter("both means must share alpha".into()));
    }
    let (pair, p, q) = EqualityPair::identify(lhs, rhs)
        .ok_or_else(|| Error::Parameter(format!("no equality pair for {} and {}", lhs.label(), rhs.label())))?;
    let first_smaller = pair.orientation(lhs.alpha, p, q).ok_or_else(|| {
        Error::Parameter(format!("(α, p, q) = ({}, {p}, {q}) is outside the {pair} regions: {}", lhs.alpha, pair.regions()))
    })?;
    let (first, second) = if lhs.kind == pair.kinds().0 && lhs.p == p { (lhs, rhs) } else { (rhs, lhs) };
    let n1 = schatten_norm(&compute_mean(first, a, b)?.value, schatten)?;
    let n2 = schatten_norm(&compute_mean(second, a, b)?.value, schatten)?;
    let gap = if first_smaller { n2 - n1 } else { n1 - n2 };
    let commutator_norm = commutation_defect(a.hermitian(), b.hermitian())?;
    Ok(EqualityProbe { pair, gap, commutator_norm, schatten })
}

/// Trace ordering of one family over an exponent grid.
#[derive(Clone, Debug, Serialize)]
pub struct TraceOrderReport {
    pub kind: MeanKind,
    pub alpha: f64,
    pub exponents: Vec<f64>,
    pub traces: Vec<f64>,
    /// Smallest `|Tr M_p − Tr M_q|` with the expected sign over grid pairs.
    pub min_margin: f64,
    pub consistent: bool,
}

/// For fixed non-commuting `A, B > 0`: `Tr R_{α,p}` increases in `p`;
/// `Tr G_{α,p}` decreases in `p` for `α < 1` and increases for `1 < α ≤ 2`.
pub fn trace_order_probe(kind: MeanKind, alpha: f64, a: &Psd, b: &Psd, exponents: &[f64]) -> Result<TraceOrderReport> {
    let increasing = match kind {
        MeanKind::Renyi => true,
        MeanKind::Geometric if alpha < 1.0 => false,
        MeanKind::Geometric if alpha <= 2.0 => true,
        _ => return Err(Error::Parameter(format!("no trace characterization for {kind} at α = {alpha}"))),
    };
    let traces = exponents
        .iter()
        .map(|&p| trace_mean(&MeanSpec::new(kind, alpha, p)?, a, b))
        .collect::<Result<Vec<_>>>()?;
    let mut min_margin = f64::INFINITY;
    for i in 0..exponents.len() {
        for j in 0..exponents.len() {
            if exponents[i] < exponents[j] {
                let d = traces[j] - traces[i];
                min_margin = min_margin.min(if increasing { d } else { -d });
            }
        }
    }
    Ok(TraceOrderReport {
        kind,
        alpha,
        exponents: exponents.to_vec(),
        traces,
        min_margin,
        consistent: min_margin > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{derive_rng, random_hermitian, sample_psd};
    use approx::assert_relative_eq;

    #[test]
    fn equal_arguments_collapse() {
        let mut rng = derive_rng(1, 0, 0);
        let h = random_hermitian(3, &mut rng);
        let t = taylor_coefficients(&h, &h, 1.5).unwrap();
        assert!(t.x[0].max_abs() < 1e-15 && t.x[1].max_abs() < 1e-15);
        let h4 = tr(&(h.matrix() * h.matrix() * h.matrix() * h.matrix())) / 24.0;
        assert_relative_eq!(t.z[3], h4, max_relative = 1e-12);
        assert_relative_eq!(t.z4_closed, h4, max_relative = 1e-12);
    }

    #[test]
    fn zero_k_gives_scaled_traces() {
        let mut rng = derive_rng(2, 0, 0);
        let h = random_hermitian(3, &mut rng);
        let a = 1.25;
        let t = taylor_coefficients(&h, &Hermitian::zeros(3), a).unwrap();
        let mut p = CMat::identity(3, 3);
        let mut fact = 1.0;
        for i in 0..4 {
            p = &p * h.matrix();
            fact *= (i + 1) as f64;
            assert_relative_eq!(t.z[i], a.powi(i as i32 + 1) / fact * tr(&p), epsilon = 1e-13);
        }
    }

    #[test]
    fn closed_form_z4_matches_matrix_route() {
        let mut rng = derive_rng(3, 0, 0);
        for a in [0.3, 1.25, 1.5, 2.0, 3.0] {
            let h = random_hermitian(3, &mut rng);
            let k = random_hermitian(3, &mut rng);
            let t = taylor_coefficients(&h, &k, a).unwrap();
            assert_relative_eq!(t.z[3], t.z4_closed, epsilon = 1e-13, max_relative = 1e-11);
            assert_relative_eq!(z4_gap(&h, &k, a).unwrap(), z4_gap_closed_form(&h, &k, a).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn pauli_defect() {
        let h = Hermitian::diag(&[1.0, -1.0]);
        let k = Hermitian::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_relative_eq!(commutation_defect(&h, &k).unwrap(), 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert!(z4_gap(&h, &k, 1.5).unwrap() > 0.0);
        let d = Hermitian::diag(&[2.0, 3.0]);
        assert_eq!(commutation_defect(&h, &d).unwrap(), 0.0);
        assert!(z4_gap(&h, &d, 1.5).unwrap().abs() < 1e-14);
    }

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn finite_differences_match_expansion() {
        let mut rng = derive_rng(4, 0, 0);
        let h = random_hermitian(3, &mut rng);
        let k = random_hermitian(3, &mut rng);
        let chk = taylor_check(&h, &k, 1.5).unwrap();
        for e in chk.rel_error {
            assert!(e < 1e-6, "{chk:?}");
        }
    }

    #[test]
    fn commuting_probe_is_flat() {
        let a = Psd::diag(&[1.0, 2.0, 0.5]).unwrap();
        let b = Psd::diag(&[0.3, 1.0, 2.0]).unwrap();
        let l = MeanSpec::new(MeanKind::Renyi, 0.5, 1.0).unwrap();
        let r = MeanSpec::new(MeanKind::Renyi, 0.5, 2.0).unwrap();
        let pr = norm_equality_probe(&l, &r, &a, &b, 1.0).unwrap();
        assert!(pr.gap.abs() <= 1e-10 && pr.commutator_norm == 0.0);
    }

    #[test]
    fn noncommuting_probe_has_gap() {
        let mut rng = derive_rng(5, 0, 0);
        let a = sample_psd(3, Some(10.0), &mut rng).unwrap();
        let b = sample_psd(3, Some(10.0), &mut rng).unwrap();
        let l = MeanSpec::new(MeanKind::Renyi, 0.5, 1.0).unwrap();
        let r = MeanSpec::new(MeanKind::Renyi, 0.5, 2.0).unwrap();
        let pr = norm_equality_probe(&l, &r, &a, &b, 1.0).unwrap();
        assert!(pr.gap > 0.0 && pr.commutator_norm > 1e-3);
        // reversed order gives the same oriented gap
        let pr2 = norm_equality_probe(&r, &l, &a, &b, 1.0).unwrap();
        assert_relative_eq!(pr.gap, pr2.gap);
    }

    #[test]
    fn outside_region_is_an_error() {
        let a = Psd::identity(2);
        let l = MeanSpec::new(MeanKind::Geometric, 3.0, 1.0).unwrap();
        let r = MeanSpec::new(MeanKind::Geometric, 3.0, 2.0).unwrap();
        let e = norm_equality_probe(&l, &r, &a, &a, 1.0).unwrap_err();
        assert!(e.to_string().contains("G-G"));
        assert!(norm_equality_probe(&l, &l, &a, &a, f64::INFINITY).is_err());
    }
}
