//! Multiplication counts per received symbol for the two DPSK receivers.
//!
//! A BCJR pass over an `N`-state trellis with `N` transitions per state
//! costs about `2N²` multiplications per step.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Joint,
    Separate,
}

/// Coefficient of `T` in the multiplication count of a receiver running
/// `iterations` feedback passes.
pub fn complexity_count(order: u64, noise_states: u64, memory: u32, iterations: u64, arch: Architecture) -> u64 {
    let super_trellis = order * order * noise_states * noise_states;
    let code = order.pow(2 * memory);
    let de = order * order;
    match arch {
        Architecture::Joint => 2 * (iterations + 1) * (super_trellis + code),
        Architecture::Separate => 2 * (super_trellis + (iterations + 1) * (de + code)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        // one noise state, no iterations: 2(M² + M^2L) vs 2(M² + M² + M^2L)
        assert_eq!(complexity_count(2, 1, 1, 0, Architecture::Joint), 16);
        assert_eq!(complexity_count(2, 1, 1, 0, Architecture::Separate), 24);
    }
}
