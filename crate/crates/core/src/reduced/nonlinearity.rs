use serde::{Deserialize, Serialize};

use crate::error::{KgmError, Result};

/// Self-interaction term `g(x, t)` of the matter equation (x-independent here).
///
/// The power family `g(t) = |t|^(p-2) t` satisfies the growth conditions
/// with `s = p` and `r = 0`; `s` and `r` are carried so that the growth
/// certificates can be evaluated against any claimed constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Nonlinearity {
    None,
    Power { p: f64, s: f64, r: f64 },
}

/// Constants for the sampled growth conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub p: f64,
    pub a1: f64,
    pub a2: f64,
    pub s: f64,
    pub r: f64,
    pub b1: f64,
    pub b2: f64,
    /// `A` in `|G(t)| <= eps/2 t^2 + A |t|^p`, valid for every `eps >= 0`.
    pub big_a: f64,
}

impl Nonlinearity {
    /// `g(t) = |t|^(p-2) t` with `p` in `(2, 6)`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 2.0 && p < 6.0) {
            return Err(KgmError::InvalidParameter(format!(
                "power exponent p = {p} must lie in (2, 6)"
            )));
        }
        Ok(Nonlinearity::Power { p, s: p, r: 0.0 })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Nonlinearity::None)
    }

    pub fn is_odd(&self) -> bool {
        // both catalog members are odd in t
        true
    }

    pub fn g(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::None => 0.0,
            Nonlinearity::Power { p, .. } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.abs().powf(p - 2.0) * t
                }
            }
        }
    }

    /// `G(t) = int_0^t g`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::None => 0.0,
            Nonlinearity::Power { p, .. } => t.abs().powf(p) / p,
        }
    }

    /// Constants for which the growth conditions hold for the power family:
    /// `|g| <= a1 + a2 |t|^(p-1)` with `a1 = 0, a2 = 1`, and
    /// `G >= b1 |t|^s - b2` with `b1 = 1/p, b2 = 0` when `s = p`, and
    /// `|G| <= A |t|^p` with `A = 1/p`.
    pub fn growth_constants(&self) -> Option<GrowthConstants> {
        match *self {
            Nonlinearity::None => None,
            Nonlinearity::Power { p, s, r } => Some(GrowthConstants {
                p,
                a1: 0.0,
                a2: 1.0,
                s,
                r,
                b1: 1.0 / p,
                b2: 0.0,
                big_a: 1.0 / p,
            }),
        }
    }
}

pub fn eval_g(nl: &Nonlinearity, t: f64) -> f64 {
    nl.g(t)
}

#[allow(non_snake_case)]
pub fn eval_G(nl: &Nonlinearity, t: f64) -> f64 {
    nl.antiderivative(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_examples() {
        let nl = Nonlinearity::power(4.0).unwrap();
        assert_eq!(nl.g(2.0), 8.0);
        assert_eq!(nl.antiderivative(2.0), 4.0);
        let nl3 = Nonlinearity::power(3.0).unwrap();
        assert!((nl3.g(-2.0) + 4.0).abs() < 1e-15);
        assert!((nl3.antiderivative(-2.0) - 8.0 / 3.0).abs() < 1e-15);
        for nl in [Nonlinearity::None, nl, nl3] {
            assert_eq!(nl.g(0.0), 0.0);
            assert_eq!(nl.antiderivative(0.0), 0.0);
        }
    }

    #[test]
    fn rejects_exponent_outside_range() {
        assert!(Nonlinearity::power(2.0).is_err());
        assert!(Nonlinearity::power(6.0).is_err());
        assert!(Nonlinearity::power(f64::NAN).is_err());
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let nl = Nonlinearity::power(3.5).unwrap();
        for &t in &[-2.3, -0.4, 0.7, 1.9] {
            // composite Simpson on [0, t]
            let n = 2000;
            let h = t / n as f64;
            let mut acc = nl.g(0.0) + nl.g(t);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * nl.g(i as f64 * h);
            }
            let simpson = acc * h / 3.0;
            assert!((simpson - nl.antiderivative(t)).abs() < 1e-9);
            // s G <= t g with s = p
            assert!(3.5 * nl.antiderivative(t) <= t * nl.g(t) + 1e-12);
        }
    }
}
