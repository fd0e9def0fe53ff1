use crate::error::{KgsError, Result};

/// The constants `a`, `b` and the subcritical exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KirchhoffParams {
    a: f64,
    b: f64,
    p: f64,
}

impl KirchhoffParams {
    pub fn new(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(KgsError::Domain(format!("a must be positive, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(KgsError::Domain(format!("b must be positive, got {b}")));
        }
        if !(p > 4.0 && p < 6.0) {
            return Err(KgsError::Domain(format!(
                "exponent p must satisfy 4 < p < 6 (subcritical term between the Kirchhoff and critical powers), got {p}"
            )));
        }
        Ok(Self { a, b, p })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_window_is_open() {
        assert!(KirchhoffParams::new(1.0, 1.0, 4.0).is_err());
        assert!(KirchhoffParams::new(1.0, 1.0, 6.0).is_err());
        assert!(KirchhoffParams::new(1.0, 1.0, 7.0).is_err());
        assert!(KirchhoffParams::new(1.0, 1.0, 4.5).is_ok());
        assert!(KirchhoffParams::new(0.0, 1.0, 5.0).is_err());
        assert!(KirchhoffParams::new(1.0, -1.0, 5.0).is_err());
    }
}
