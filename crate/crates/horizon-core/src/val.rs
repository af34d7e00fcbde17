//! Value-with-standard-error arithmetic.
//!
//! Closed-form evaluators are exact (`se = 0`); evaluators backed by
//! Monte-Carlo tables carry the table cell's standard error through
//! arithmetic by first-order propagation, treating operands as uncorrelated.
//! Acceptance tolerances consume the propagated `se`.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Val {
    pub v: f64,
    pub se: f64,
}

impl Val {
    pub const ZERO: Val = Val { v: 0.0, se: 0.0 };
    pub const ONE: Val = Val { v: 1.0, se: 0.0 };

    pub fn exact(v: f64) -> Self {
        Val { v, se: 0.0 }
    }

    pub fn with_se(v: f64, se: f64) -> Self {
        Val { v, se }
    }

    pub fn is_exact(&self) -> bool {
        self.se == 0.0
    }

    /// Scale by an exact constant.
    pub fn scale(self, c: f64) -> Self {
        Val { v: c * self.v, se: c.abs() * self.se }
    }
}

impl Add for Val {
    type Output = Val;
    fn add(self, rhs: Val) -> Val {
        Val { v: self.v + rhs.v, se: self.se.hypot(rhs.se) }
    }
}

impl Sub for Val {
    type Output = Val;
    fn sub(self, rhs: Val) -> Val {
        Val { v: self.v - rhs.v, se: self.se.hypot(rhs.se) }
    }
}

impl Mul for Val {
    type Output = Val;
    fn mul(self, rhs: Val) -> Val {
        let se = (rhs.v * self.se).hypot(self.v * rhs.se);
        Val { v: self.v * rhs.v, se }
    }
}

impl Div for Val {
    type Output = Val;
    fn div(self, rhs: Val) -> Val {
        let v = self.v / rhs.v;
        let se = (self.se / rhs.v).hypot(v * rhs.se / rhs.v);
        Val { v, se: se.abs() }
    }
}

impl Neg for Val {
    type Output = Val;
    fn neg(self) -> Val {
        Val { v: -self.v, se: self.se }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_values_stay_exact() {
        let a = Val::exact(2.0);
        let b = Val::exact(3.0);
        assert_eq!((a * b).se, 0.0);
        assert_eq!((a + b).v, 5.0);
    }

    #[test]
    fn se_propagates_in_quadrature() {
        let a = Val::with_se(1.0, 0.3);
        let b = Val::with_se(2.0, 0.4);
        let s = a + b;
        assert!((s.se - 0.5).abs() < 1e-15);
    }
}
