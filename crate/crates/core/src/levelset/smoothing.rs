use crate::error::{Error, Result};

/// Bandwidth `delta` and floor `alpha` of the smoothed Heaviside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub delta: f64,
    pub alpha: f64,
}

impl SmoothingParams {
    pub fn new(delta: f64, alpha: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("smoothing bandwidth must be positive, got {delta}")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!("Heaviside floor must lie in [0, 1), got {alpha}")));
        }
        Ok(Self { delta, alpha })
    }
}

/// Piecewise-cubic smoothed Heaviside, `alpha` below `-delta`, 1 from `delta` on.
pub fn heaviside(phi: f64, sp: SmoothingParams) -> f64 {
    let SmoothingParams { delta, alpha } = sp;
    if phi < -delta {
        alpha
    } else if phi < delta {
        let u = phi / delta;
        0.75 * (1.0 - alpha) * (u - u * u * u / 3.0) + 0.5 * (1.0 + alpha)
    } else {
        1.0
    }
}

/// Derivative of [`heaviside`]: a quadratic bump supported on `|phi| <= delta`.
pub fn dirac(phi: f64, sp: SmoothingParams) -> f64 {
    let SmoothingParams { delta, alpha } = sp;
    if phi.abs() > delta {
        0.0
    } else {
        let u = phi / delta;
        0.75 * (1.0 - alpha) / delta * (1.0 - u * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splines::GaussRule;
    use proptest::prelude::*;

    fn sp(delta: f64, alpha: f64) -> SmoothingParams {
        SmoothingParams::new(delta, alpha).unwrap()
    }

    #[test]
    fn reference_values() {
        let s = sp(0.05, 0.0);
        assert_eq!(heaviside(0.0, s), 0.5);
        assert_eq!(heaviside(0.05, s), 1.0);
        assert!((heaviside(-0.05, s) - 0.0).abs() < 1e-15);
        assert!((heaviside(0.025, s) - 0.84375).abs() < 1e-15);
        assert!((dirac(0.0, s) - 15.0).abs() < 1e-12);
        assert_eq!(dirac(0.06, s), 0.0);
        let s = sp(0.05, 0.2);
        assert!((heaviside(-0.05, s) - 0.2).abs() < 1e-15);
        assert_eq!(heaviside(-1.0, s), 0.2);
        assert!(dirac(0.05, s).abs() < 1e-12 && dirac(-0.05, s).abs() < 1e-12);
    }

    #[test]
    fn dirac_integrates_to_jump() {
        let rule = GaussRule::new(3);
        for alpha in [0.0, 0.1, 0.5] {
            let s = sp(0.05, alpha);
            let total: f64 = rule.mapped(-0.05, 0.05).map(|(x, w)| w * dirac(x, s)).sum();
            assert!((total - (1.0 - alpha)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SmoothingParams::new(0.0, 0.0).is_err());
        assert!(SmoothingParams::new(0.1, 1.0).is_err());
        assert!(SmoothingParams::new(0.1, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn dirac_is_heaviside_derivative(u in -0.999f64..0.999, delta in 0.001f64..1.0, alpha in 0.0f64..0.9) {
            let s = sp(delta, alpha);
            let phi = u * delta;
            let h = 1e-6 * delta;
            let fd = (heaviside(phi + h, s) - heaviside(phi - h, s)) / (2.0 * h);
            // O(h^2) truncation plus roundoff of H/h
            let tol = 1e-6 * dirac(0.0, s) + 1e-9 / delta;
            prop_assert!((fd - dirac(phi, s)).abs() <= tol);
        }

        #[test]
        fn heaviside_monotone_bounded(a in -2.0f64..2.0, b in -2.0f64..2.0, alpha in 0.0f64..0.9) {
            let s = sp(0.5, alpha);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(heaviside(lo, s) <= heaviside(hi, s));
            prop_assert!(heaviside(a, s) >= alpha && heaviside(a, s) <= 1.0);
        }
    }
}
