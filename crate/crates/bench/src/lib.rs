//! Fixtures shared by the benchmarks.

use xyff_core::bethe::singlet_states;
use xyff_core::{BetheState, GaugeParams, ModelParams, C64};

pub struct Fixture {
    pub model: ModelParams,
    pub gauge: GaugeParams,
    pub sector0: Vec<BetheState>,
    pub sector1: Vec<BetheState>,
}

/// Generic-ξ chain of `n` sites at `τ = 0.3 + 0.7i` with its singlet states.
pub fn fixture(n: usize) -> Fixture {
    let model = ModelParams::random_inhomogeneous(n, C64::new(0.3, 0.7), 1).expect("model");
    let gauge = GaugeParams::new(C64::new(0.13, 0.21), C64::new(-0.31, 0.17), &model).expect("gauge");
    let sector0 = singlet_states(0, &model).expect("sector 0");
    let sector1 = singlet_states(1, &model).expect("sector 1");
    Fixture { model, gauge, sector0, sector1 }
}
