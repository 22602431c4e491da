//! Bundled example models.

use crate::netparse::{parse_network, ReactionNetwork};

/// Two-gene mutual repression network with c = (3, 4, 1, 0.2) for both genes.
pub const TOY_MODEL: &str = include_str!("../models/toy.lna");
/// dx/dt = 1 - x.
pub const LINEAR_MODEL: &str = include_str!("../models/linear.lna");
/// Linear conversion chain with a Metzler Jacobian.
pub const CHAIN_MODEL: &str = include_str!("../models/chain.lna");
/// Stable network without a diagonal Lyapunov certificate.
pub const OSCILLATING_MODEL: &str = include_str!("../models/oscillating.lna");

pub fn toy_network() -> ReactionNetwork {
    parse_network(TOY_MODEL).expect("bundled toy model parses")
}

pub fn linear_network() -> ReactionNetwork {
    parse_network(LINEAR_MODEL).expect("bundled linear model parses")
}

pub fn chain_network() -> ReactionNetwork {
    parse_network(CHAIN_MODEL).expect("bundled chain model parses")
}

pub fn oscillating_network() -> ReactionNetwork {
    parse_network(OSCILLATING_MODEL).expect("bundled oscillating model parses")
}
