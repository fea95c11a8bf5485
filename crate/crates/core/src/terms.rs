//! Candidate terms `u^q * d^(a+b) u / dx^a dy^b` and their canonical labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial derivative multi-index. `{x: 0, y: 0}` means no derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct DerivPattern {
    pub x: u8,
    pub y: u8,
}

impl DerivPattern {
    pub const NONE: DerivPattern = DerivPattern { x: 0, y: 0 };

    pub fn x(order: u8) -> Self {
        DerivPattern { x: order, y: 0 }
    }

    pub fn y(order: u8) -> Self {
        DerivPattern { x: 0, y: order }
    }

    pub fn is_none(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn order(&self) -> u8 {
        self.x + self.y
    }

    fn suffix(&self) -> String {
        let mut s = String::with_capacity(self.order() as usize);
        s.extend(std::iter::repeat_n('x', self.x as usize));
        s.extend(std::iter::repeat_n('y', self.y as usize));
        s
    }
}

/// One dictionary column: `u^poly_power` times the derivative `deriv` of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisTerm {
    pub deriv: DerivPattern,
    pub poly_power: u32,
}

impl BasisTerm {
    pub const CONSTANT: BasisTerm = BasisTerm {
        deriv: DerivPattern::NONE,
        poly_power: 0,
    };

    pub fn new(deriv: DerivPattern, poly_power: u32) -> Self {
        BasisTerm { deriv, poly_power }
    }

    pub fn is_constant(&self) -> bool {
        self.deriv.is_none() && self.poly_power == 0
    }

    /// Degree of homogeneity in `u`: scaling `u -> c u` scales the column by `c^degree`.
    pub fn homogeneity(&self) -> u32 {
        self.poly_power + u32::from(!self.deriv.is_none())
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Evaluate the term from `u` and the derivative value at one point.
    pub fn eval(&self, u: f64, deriv_value: f64) -> f64 {
        let p = pow_u(u, self.poly_power);
        if self.deriv.is_none() {
            p
        } else {
            p * deriv_value
        }
    }
}

pub(crate) fn pow_u(u: f64, q: u32) -> f64 {
    match q {
        0 => 1.0,
        1 => u,
        2 => u * u,
        _ => u.powi(q as i32),
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let poly = match self.poly_power {
            0 => None,
            1 => Some("u".to_string()),
            q => Some(format!("u^{q}")),
        };
        match (poly, self.deriv.is_none()) {
            (None, true) => write!(f, "1"),
            (Some(p), true) => write!(f, "{p}"),
            (None, false) => write!(f, "u_{}", self.deriv.suffix()),
            (Some(p), false) => write!(f, "{p}*u_{}", self.deriv.suffix()),
        }
    }
}

fn parse_poly(s: &str) -> Option<u32> {
    match s {
        "u" => Some(1),
        _ => s.strip_prefix("u^")?.parse().ok().filter(|q| *q >= 2),
    }
}

fn parse_deriv(s: &str) -> Option<DerivPattern> {
    let suffix = s.strip_prefix("u_")?;
    if suffix.is_empty() {
        return None;
    }
    let xs = suffix.chars().take_while(|&c| c == 'x').count();
    let rest = &suffix[xs..];
    if !rest.chars().all(|c| c == 'y') {
        return None;
    }
    Some(DerivPattern {
        x: u8::try_from(xs).ok()?,
        y: u8::try_from(rest.len()).ok()?,
    })
}

impl FromStr for BasisTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnresolvableLabel(s.to_string());
        let s = s.trim();
        if s == "1" {
            return Ok(BasisTerm::CONSTANT);
        }
        if let Some((p, d)) = s.split_once('*') {
            let q = parse_poly(p).ok_or_else(bad)?;
            let deriv = parse_deriv(d).ok_or_else(bad)?;
            return Ok(BasisTerm::new(deriv, q));
        }
        if let Some(q) = parse_poly(s) {
            return Ok(BasisTerm::new(DerivPattern::NONE, q));
        }
        parse_deriv(s).map(|d| BasisTerm::new(d, 0)).ok_or_else(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_labels() {
        assert_eq!(BasisTerm::CONSTANT.label(), "1");
        assert_eq!(BasisTerm::new(DerivPattern::NONE, 1).label(), "u");
        assert_eq!(BasisTerm::new(DerivPattern::NONE, 3).label(), "u^3");
        assert_eq!(BasisTerm::new(DerivPattern::x(2), 0).label(), "u_xx");
        assert_eq!(BasisTerm::new(DerivPattern::x(1), 1).label(), "u*u_x");
        assert_eq!(BasisTerm::new(DerivPattern::x(2), 2).label(), "u^2*u_xx");
        assert_eq!(BasisTerm::new(DerivPattern::y(2), 0).label(), "u_yy");
        assert_eq!(BasisTerm::new(DerivPattern { x: 1, y: 1 }, 0).label(), "u_xy");
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "v", "u^1", "u^0", "u_", "u_yx", "u*", "u*u", "2*u_x", "u^2*u_xz"] {
            assert!(s.parse::<BasisTerm>().is_err(), "{s} parsed");
        }
    }

    proptest! {
        #[test]
        fn label_round_trip(x in 0u8..7, y in 0u8..3, q in 0u32..7) {
            let t = BasisTerm::new(DerivPattern { x, y }, q);
            prop_assert_eq!(t.label().parse::<BasisTerm>().unwrap(), t);
        }
    }
}
