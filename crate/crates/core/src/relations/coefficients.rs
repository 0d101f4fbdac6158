use crate::error::{Error, Result};
use crate::means::{compute_mean, MeanKind, MeanSpec};

use super::search::AbThetaPoint;

/// Coefficient `c` in `λ₁(M(A0, B_θ)) = 1 + c θ² + o(θ²)` for `y = x`.
pub fn second_order_coefficient(kind: MeanKind, alpha: f64, p: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Parameter(format!("x must lie in (0,1), got {x}")));
    }
    MeanSpec::new(kind, alpha, p)?;
    let a = alpha;
    let xp = x.powf(p);
    let c = match kind {
        MeanKind::Renyi => (-1.0 - xp + x.powf(a * p) + x.powf((1.0 - a) * p)) / (p * (1.0 - xp)),
        MeanKind::Geometric => a * (1.0 - a) / (2.0 * p) * (xp - 1.0 / xp),
        MeanKind::SpectralGeometric => -2.0 * a * (1.0 - a) / p * (1.0 - xp) / (1.0 + xp),
        MeanKind::SpectralGeometricTilde => {
            let first = a * (1.0 - xp) / (1.0 + xp);
            let num = xp + xp * xp - x.powf((2.0 * a + 1.0) * p) - x.powf(2.0 * (1.0 - a) * p);
            let den = (1.0 - xp) * (1.0 + xp).powi(2);
            -(first + num / den) / p
        }
        MeanKind::LogEuclidean => a * (1.0 - a) * x.ln(),
        other => return Err(Error::Parameter(format!("no second-order coefficient for {other}"))),
    };
    Ok(c)
}

/// Richardson estimate `(4 f(θ/2) - f(θ)) / 3` with `f(t) = (λ₁(t) - 1)/t²`.
pub fn numeric_second_order(kind: MeanKind, alpha: f64, p: f64, x: f64, theta: f64) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::Parameter("theta must be nonzero".into()));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Parameter(format!("x must lie in (0,1), got {x}")));
    }
    let spec = MeanSpec::new(kind, alpha, p)?;
    let f = |t: f64| -> Result<f64> {
        let (a0, b) = AbThetaPoint::new(x, x, t)?.matrices()?;
        let l1 = compute_mean(&spec, &a0, &b)?.value.lambda_max();
        Ok((l1 - 1.0) / (t * t))
    };
    Ok((4.0 * f(theta / 2.0)? - f(theta)?) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_examples() {
        let e = (-1f64).exp();
        assert_relative_eq!(second_order_coefficient(MeanKind::LogEuclidean, 0.5, 1.0, e).unwrap(), -0.25, epsilon = 1e-15);
        assert_relative_eq!(second_order_coefficient(MeanKind::Geometric, 0.5, 1.0, 0.5).unwrap(), -3.0 / 16.0, epsilon = 1e-15);
        assert_relative_eq!(second_order_coefficient(MeanKind::Renyi, 0.5, 1.0, 0.25).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(
            second_order_coefficient(MeanKind::SpectralGeometric, 0.5, 1.0, 1.0 / 3.0).unwrap(),
            -0.25,
            epsilon = 1e-15
        );
        assert!(second_order_coefficient(MeanKind::Renyi, 0.5, 1.0, 1.5).is_err());
    }

    #[test]
    fn numeric_matches_at_center() {
        for kind in MeanKind::GEOMETRIC_TYPE {
            let c = second_order_coefficient(kind, 0.5, 1.0, 0.5).unwrap();
            let n = numeric_second_order(kind, 0.5, 1.0, 0.5, 1e-3).unwrap();
            assert_relative_eq!(n, c, max_relative = 1e-4);
        }
        let n = numeric_second_order(MeanKind::SpectralGeometric, 0.5, 1.0, 1.0 / 3.0, 1e-3).unwrap();
        assert_relative_eq!(n, -0.25, max_relative = 1e-4);
    }

    #[test]
    fn zero_theta_rejected() {
        assert!(numeric_second_order(MeanKind::Renyi, 0.5, 1.0, 0.5, 0.0).is_err());
    }
}
