use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::terms::BasisTerm;

/// `d^time_order u / dt^time_order = sum_k coefficient_k * term_k(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeModel {
    pub time_order: u8,
    pub terms: Vec<(BasisTerm, f64)>,
}

impl PdeModel {
    pub fn new(time_order: u8, terms: Vec<(BasisTerm, f64)>) -> Result<Self> {
        if !(1..=2).contains(&time_order) {
            return Err(Error::UnsupportedCombination(format!(
                "time order {time_order} (only 1 and 2 are supported)"
            )));
        }
        if terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::InvalidSystem("non-finite model coefficient".into()));
        }
        Ok(PdeModel { time_order, terms })
    }

    pub fn uses_y(&self) -> bool {
        self.terms.iter().any(|(t, _)| t.deriv.y > 0)
    }

    pub fn coefficient(&self, term: &BasisTerm) -> f64 {
        self.terms.iter().filter(|(t, _)| t == term).map(|(_, c)| c).sum()
    }
}
