//! Resource limits shared by every operation that can blow up.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Pollard–Brent iterations allowed per composite cofactor.
    pub factor: u64,
    /// Largest cyclotomic conductor that may be materialized.
    pub conductor: u64,
    /// Largest `n` for which a cover presentation materializes `h/n`; every
    /// level dividing `lcm(1..=n)` is then in play, so this stays small.
    pub denominator: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            factor: 1 << 20,
            conductor: 512,
            denominator: 24,
        }
    }
}

/// Primes below this bound are removed by trial division before any
/// probabilistic machinery is consulted.
pub const TRIAL_DIVISION_BOUND: u64 = 1 << 16;
