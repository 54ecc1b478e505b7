//! Polynomial confining potentials.
//!
//! A potential is stored densely in the monomial basis. Admissible fields
//! have even degree >= 2 and a positive leading coefficient, which makes the
//! weight `exp(-N V)` integrable together with every polynomial moment.

use crate::error::{Error, Result};

/// A real polynomial confining potential, coefficient of `x^k` at index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl Potential {
    /// Builds a potential from monomial coefficients, validating the growth
    /// condition (even degree >= 2, positive leading coefficient).
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "coefficient list is empty".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "coefficient list contains a non-finite value".into(),
            ));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        let degree = coeffs.len() - 1;
        if degree < 2 || degree % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "degree {degree} is not an even integer >= 2"
            )));
        }
        if *coeffs.last().unwrap() <= 0.0 {
            return Err(Error::InvalidParameter(
                "leading coefficient must be strictly positive".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// V(x) by Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// V'(x), the exact analytic derivative.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        horner(&self.deriv_coeffs(), x)
    }

    /// Coefficients of V'.
    pub fn deriv_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect()
    }

    /// True when every odd coefficient vanishes.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// The quartic family `V(x) = (g/4) x^4 + (t/2) x^2` together with its
/// critical coupling.
#[derive(Debug, Clone)]
pub struct Quartic {
    pub potential: Potential,
    pub g: f64,
    pub t_param: f64,
}

impl Quartic {
    /// Coupling at which the equilibrium density develops an interior
    /// quadratic zero at the origin.
    pub fn t_critical(&self) -> f64 {
        -2.0 * self.g.sqrt()
    }

    pub fn is_critical(&self) -> bool {
        let tc = self.t_critical();
        (self.t_param - tc).abs() <= 1e-12 * (1.0 + tc.abs())
    }
}

/// Builds the quartic `V(x) = (g/4) x^4 + (t/2) x^2`. Fails for `g <= 0`.
pub fn quartic_family(g: f64, t_param: f64) -> Result<Quartic> {
    if !(g > 0.0) || !t_param.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quartic family needs g > 0 and finite t (got g = {g}, t = {t_param})"
        )));
    }
    let potential = Potential::new(vec![0.0, 0.0, t_param / 2.0, 0.0, g / 4.0])?;
    Ok(Quartic {
        potential,
        g,
        t_param,
    })
}

/// Gaussian field `x^2 / 2`; its equilibrium measure is the semicircle on
/// [-2, 2].
pub fn gaussian() -> Potential {
    Potential::new(vec![0.0, 0.0, 0.5]).expect("valid coefficients")
}
