//! Voter-model network values and equilibria of budgeted proportional
//! contests between an incumbent (defender) and a challenger (attacker).
//!
//! - [`graph`]: graphs, random-walk transition matrices, network values.
//! - [`contest`]: the proportional success function and payoffs.
//! - [`voter`]: Monte Carlo simulation of the voter model.
//! - [`nash`]: best responses and simultaneous-move equilibria.
//! - [`stackelberg`]: defender-first leader-follower equilibria.
//! - [`experiments`]: the two-community sweep and solver dispatch.

pub mod contest;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod nash;
pub mod roots;
pub mod stackelberg;
pub mod voter;

pub use contest::{
    csf, expected_payoff, validate_allocation, Allocation, AllocationCheck, EquilibriumResult,
    GameSpec, Method,
};
pub use error::{Error, Result};
pub use graph::{
    build_graph, network_values, transition_matrix, walk_weight_propagation, Graph, Player,
    TransitionMatrix, ValuationVector,
};
pub use nash::{
    best_response, grid_nash_oracle, nash_br_dynamics, nash_proportional, nash_two_community,
    BrDynamicsOptions, BrDynamicsReport, TwoCommunitySpec,
};
pub use stackelberg::{
    grid_stackelberg_oracle, leader_objective, stackelberg_numeric, stackelberg_proportional,
    stackelberg_two_community, stationarity_residual,
};
pub use voter::{sample_initial, simulate_payoff, step, PreferenceState, SimEstimate};
