use num_rational::Ratio;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::dp::NoiseKind;
use crate::error::{Error, Result};

pub const MAX_ROUNDS: usize = 1 << 20;

/// Total `(ε, δ)` spent evenly over `rounds`, half on selection and half on
/// measurement each round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub rounds: usize,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64, rounds: usize) -> Result<PrivacyBudget> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {epsilon} must be positive")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta {delta} must lie in (0, 1)")));
        }
        if rounds == 0 || rounds > MAX_ROUNDS {
            return Err(Error::Config(format!("rounds must lie in 1..={MAX_ROUNDS}, got {rounds}")));
        }
        exact(epsilon)?;
        Ok(PrivacyBudget { epsilon, delta, rounds })
    }

    pub fn epsilon_select(&self) -> f64 {
        self.epsilon / (2 * self.rounds) as f64
    }

    pub fn epsilon_measure(&self) -> f64 {
        self.epsilon / (2 * self.rounds) as f64
    }

    /// Classical Gaussian-mechanism calibration for unit L2 sensitivity.
    pub fn gaussian_sigma(&self) -> f64 {
        (2.0 * (1.25 / self.delta).ln()).sqrt() / self.epsilon_measure()
    }

    /// Laplace scale for unit L1 sensitivity.
    pub fn laplace_scale(&self) -> f64 {
        1.0 / self.epsilon_measure()
    }

    pub fn noise_scale(&self, kind: NoiseKind) -> f64 {
        if kind.is_gaussian() {
            self.gaussian_sigma()
        } else {
            self.laplace_scale()
        }
    }

    pub fn ledger(&self) -> BudgetLedger {
        BudgetLedger { total: exact(self.epsilon).expect("checked on construction"), entries: Vec::new() }
    }

    /// The per-step share of the total as an exact fraction.
    pub(crate) fn step_share(&self) -> Ratio<i128> {
        exact(self.epsilon).expect("checked on construction") / Ratio::from_integer(2 * self.rounds as i128)
    }
}

/// The exact binary fraction an `f64` denotes.
fn exact(x: f64) -> Result<Ratio<i128>> {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1 << 52) - 1)) as i128;
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | 1 << 52, exp - 1075) };
    match e {
        e if (0..=70).contains(&e) => Ok(Ratio::from_integer(mant << e)),
        e if (-90..0).contains(&e) => Ok(Ratio::new(mant, 1i128 << -e)),
        _ => Err(Error::Config(format!("epsilon {x} is out of the supported range"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Select,
    Measure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub round: usize,
    pub step: Step,
    pub epsilon: Ratio<i128>,
}

/// Rational bookkeeping of every charge against the budget.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetLedger {
    pub total: Ratio<i128>,
    pub entries: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn charge(&mut self, round: usize, step: Step, epsilon: Ratio<i128>) -> Result<()> {
        if self.spent() + epsilon > self.total {
            return Err(Error::Config(format!("round {round} would exceed the privacy budget")));
        }
        self.entries.push(LedgerEntry { round, step, epsilon });
        Ok(())
    }

    pub fn spent(&self) -> Ratio<i128> {
        self.entries.iter().map(|e| e.epsilon).sum()
    }

    /// Exactly the whole budget has been charged.
    pub fn balanced(&self) -> bool {
        self.spent() == self.total
    }
}

fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Serialize for LedgerEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LedgerEntry", 4)?;
        st.serialize_field("round", &self.round)?;
        st.serialize_field("step", &self.step)?;
        st.serialize_field("epsilon", &ratio_f64(&self.epsilon))?;
        st.serialize_field("epsilon_exact", &self.epsilon.to_string())?;
        st.end()
    }
}

impl Serialize for BudgetLedger {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let spent = self.spent();
        let mut st = s.serialize_struct("BudgetLedger", 5)?;
        st.serialize_field("epsilon_total", &ratio_f64(&self.total))?;
        st.serialize_field("epsilon_spent_exact", &spent.to_string())?;
        st.serialize_field("epsilon_total_exact", &self.total.to_string())?;
        st.serialize_field("balanced", &self.balanced())?;
        st.serialize_field("entries", &self.entries)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigma_matches_closed_form() {
        let b = PrivacyBudget::new(1.0, 1e-9, 5).unwrap();
        assert_eq!(b.epsilon_measure(), 0.1);
        let want = (2.0f64 * (1.25e9f64).ln()).sqrt() * 10.0;
        assert!((b.gaussian_sigma() - want).abs() < 1e-9);
        assert!((b.laplace_scale() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_budgets() {
        assert!(PrivacyBudget::new(0.0, 1e-9, 1).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0, 1).is_err());
        assert!(PrivacyBudget::new(1.0, 1e-9, 0).is_err());
    }

    #[test]
    fn overspending_is_refused() {
        let b = PrivacyBudget::new(1.0, 1e-9, 1).unwrap();
        let mut l = b.ledger();
        l.charge(0, Step::Select, b.step_share()).unwrap();
        l.charge(0, Step::Measure, b.step_share()).unwrap();
        assert!(l.balanced());
        assert!(l.charge(1, Step::Select, b.step_share()).is_err());
    }

    proptest! {
        #[test]
        fn ledger_sums_exactly(eps in 1e-3f64..100.0, rounds in 1usize..200) {
            let b = PrivacyBudget::new(eps, 1e-9, rounds).unwrap();
            let mut l = b.ledger();
            for t in 0..rounds {
                l.charge(t, Step::Select, b.step_share()).unwrap();
                l.charge(t, Step::Measure, b.step_share()).unwrap();
            }
            prop_assert!(l.balanced());
            prop_assert_eq!(ratio_f64(&l.total), eps);
        }
    }
}
