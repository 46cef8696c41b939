use serde::{Deserialize, Serialize};

use crate::error::{KirchhoffError, Result};

/// Coefficients of `M(s) = a + b s`, the power `q` of the source term, and the
/// spatial dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    a: f64,
    b: f64,
    q: f64,
    n: usize,
}

impl ModelParams {
    /// Parameters with `a, b > 0`, `q > 3`, `n ∈ {1, 2}`.
    ///
    /// For `n ≤ 2` the upper restriction `q < 2* - 1` is vacuous (`2* = ∞`).
    /// `q = 3` needs the Sobolev gate in [`ModelParams::cubic`].
    pub fn new(a: f64, b: f64, q: f64, n: usize) -> Result<Self> {
        let mut errs = Self::basic_errors(a, b, n);
        if !q.is_finite() {
            errs.push(format!("q must be finite, got {q}"));
        } else if q == 3.0 {
            errs.push(
                "q = 3 requires the gate b < S^4; construct with ModelParams::cubic".to_string(),
            );
        } else if q < 3.0 {
            errs.push(format!(
                "q must satisfy q > 3 (or q = 3 with b < S^4), got {q}"
            ));
        }
        if errs.is_empty() {
            Ok(Self { a, b, q, n })
        } else {
            Err(KirchhoffError::Domain(errs.join("; ")))
        }
    }

    /// The borderline case `q = 3`, admitted only when `b < S⁴` where `S` is the
    /// `H¹₀ → L⁴` embedding constant of the domain.
    pub fn cubic(a: f64, b: f64, n: usize, sobolev: f64) -> Result<Self> {
        let mut errs = Self::basic_errors(a, b, n);
        if !(sobolev > 0.0 && sobolev.is_finite()) {
            errs.push(format!("Sobolev constant must be positive, got {sobolev}"));
        } else if !(b < sobolev.powi(4)) {
            errs.push(format!(
                "q = 3 requires b < S^4 = {:.6e}, got b = {b}",
                sobolev.powi(4)
            ));
        }
        if errs.is_empty() {
            Ok(Self { a, b, q: 3.0, n })
        } else {
            Err(KirchhoffError::Domain(errs.join("; ")))
        }
    }

    fn basic_errors(a: f64, b: f64, n: usize) -> Vec<String> {
        let mut errs = Vec::new();
        if !(a > 0.0 && a.is_finite()) {
            errs.push(format!("a must be positive, got {a}"));
        }
        if !(b > 0.0 && b.is_finite()) {
            errs.push(format!("b must be positive, got {b}"));
        }
        if !(1..=2).contains(&n) {
            errs.push(format!("spatial dimension must be 1 or 2, got {n}"));
        }
        errs
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `M(s) = a + b s`.
    pub fn kirchhoff_coefficient(&self, s: f64) -> f64 {
        self.a + self.b * s
    }

    /// Source term `|v|^{q-1} v`.
    pub fn source(&self, v: f64) -> f64 {
        v.abs().powf(self.q - 1.0) * v
    }

    /// `q < 2* - 1` holds trivially for `n ≤ 2`.
    pub fn is_subcritical(&self) -> bool {
        self.n <= 2
    }

    /// GN exponent `γ = q + 1 - n(q-1)/2`.
    pub fn gamma(&self) -> f64 {
        self.q + 1.0 - self.n as f64 * (self.q - 1.0) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelParams::new(1.0, 1.0, 5.0, 1).is_ok());
        assert!(ModelParams::new(0.0, 1.0, 5.0, 1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 5.0, 1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 2.5, 1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 3.0, 1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 5.0, 3).is_err());
        let msg = ModelParams::new(1.0, 1.0, 2.5, 1).unwrap_err().to_string();
        assert!(msg.contains("q > 3"), "{msg}");
    }

    #[test]
    fn cubic_gate() {
        assert!(ModelParams::cubic(1.0, 0.5, 1, 1.0).is_ok());
        assert!(ModelParams::cubic(1.0, 1.5, 1, 1.0).is_err());
        assert!(ModelParams::cubic(1.0, 0.005, 1, 0.3).is_ok());
        assert!(ModelParams::cubic(1.0, 0.005, 1, 0.3).unwrap().q() == 3.0);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(ModelParams::new(1.0, 1.0, 5.0, 1).unwrap().gamma(), 4.0);
        assert_eq!(ModelParams::new(1.0, 1.0, 4.0, 2).unwrap().gamma(), 2.0);
    }
}
