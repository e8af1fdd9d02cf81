//! Monte Carlo evaluation in continuous time.
//!
//! Each path draws the arrival times of the demand process and replays a
//! policy: actions at integer review epochs, stock drained one unit per
//! arrival in between. Costs are accrued exactly along the path, so the only
//! error is sampling error.
//!
//! Path `i` uses the seed `base ^ i`, where `base` is drawn from the run
//! seed; results do not depend on how the paths are spread over threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::costkernel::{constant_a, CostParameters};
use crate::demand::{IntensityModel, PathSample};
use crate::error::{Error, Result};
use crate::solver::{Action, PolicyTable};

/// Base of the per-path seeds for a run. XOR with the raw run seed would let
/// nearby run seeds share most of their paths (seeds 5 and 6 over 2048 paths
/// draw the same set), so the run seed is expanded first.
fn path_base(seed: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(seed).next_u64()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

impl SimEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            paths: n,
            seed,
        }
    }

    /// (mean − reference) / std_error; 0 when both agree exactly.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = self.mean - reference;
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap == 0.0 {
            0.0
        } else {
            gap.signum() * f64::INFINITY
        }
    }
}

/// ∫_a^b e^{-δu} · stock du for constant stock on [a, b].
pub fn discounted_holding(stock: f64, a: f64, b: f64, delta: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if delta == 0.0 {
        stock * (b - a)
    } else {
        stock * ((-delta * a).exp() - (-delta * b).exp()) / delta
    }
}

/// The result of replaying a policy along one demand path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathOutcome {
    pub cost: f64,
    pub stop_epoch: usize,
}

/// Replay `policy` from stock `x0` with the full order budget along `path`.
pub fn replay(
    policy: &PolicyTable,
    params: &CostParameters,
    path: &PathSample,
    x0: usize,
) -> Result<PathOutcome> {
    let spec = policy.spec();
    let horizon = policy.horizon();
    let delta = params.delta;
    let mut stock = x0;
    let mut z = spec.initial_budget();
    let mut cost = 0.0;
    let mut next_arrival = 0;
    let arrivals = &path.arrivals;

    let mut stop_epoch = horizon;
    for t in 0..=horizon {
        let epoch = t as f64;
        let action = policy.action(t, stock, z)?;
        match action {
            Action::Stop => {
                stop_epoch = t;
                break;
            }
            Action::OrderUpTo(y) => {
                cost += (-delta * epoch).exp() * (params.setup_cost + params.c_bar * (y - stock) as f64);
                stock = y;
                z = spec.after_order(z);
            }
            Action::Continue => {}
        }
        if t == horizon {
            // Only Stop is possible at the horizon.
            return Err(Error::UnreachableState { t, x: stock, z });
        }
        let end = epoch + 1.0;
        let mut clock = epoch;
        while next_arrival < arrivals.len() && arrivals[next_arrival] <= end {
            let a = arrivals[next_arrival];
            cost += params.c1 * discounted_holding(stock as f64, clock, a, delta);
            if stock > 0 {
                stock -= 1;
            } else {
                cost += (-delta * a).exp() * params.c2(a);
            }
            clock = a;
            next_arrival += 1;
        }
        cost += params.c1 * discounted_holding(stock as f64, clock, end, delta);
    }

    cost += (-delta * stop_epoch as f64).exp() * params.c4 * stock as f64;
    cost += arrivals[next_arrival..]
        .iter()
        .map(|&a| (-delta * a).exp() * params.c3(a))
        .sum::<f64>();
    Ok(PathOutcome { cost, stop_epoch })
}

/// Replay the policy on `paths` independent demand paths.
pub fn simulate(
    policy: &PolicyTable,
    params: &CostParameters,
    model: &IntensityModel,
    x0: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<PathOutcome>> {
    if model.horizon() != policy.horizon() {
        return Err(Error::InvalidInput(format!(
            "policy horizon {} does not match intensity horizon {}",
            policy.horizon(),
            model.horizon()
        )));
    }
    if x0 > policy.x_max() {
        return Err(Error::InvalidInput(format!(
            "initial stock {x0} exceeds x_max {}",
            policy.x_max()
        )));
    }
    let base = path_base(seed);
    (0..paths as u64)
        .into_par_iter()
        .map(|i| replay(policy, params, &model.sample_path(base ^ i), x0))
        .collect()
}

/// Expected discounted total cost of `policy` from stock `x0`, including the
/// outside-source cost after stopping.
pub fn evaluate_policy(
    policy: &PolicyTable,
    params: &CostParameters,
    model: &IntensityModel,
    x0: usize,
    paths: usize,
    seed: u64,
) -> Result<SimEstimate> {
    let outcomes = simulate(policy, params, model, x0, paths, seed)?;
    let costs: Vec<f64> = outcomes.iter().map(|o| o.cost).collect();
    Ok(SimEstimate::from_samples(&costs, seed))
}

/// Empirical frequency of each stopping epoch 0..=T.
pub fn stop_histogram(outcomes: &[PathOutcome], horizon: usize) -> Vec<f64> {
    let mut counts = vec![0.0; horizon + 1];
    for o in outcomes {
        counts[o.stop_epoch] += 1.0;
    }
    let n = outcomes.len().max(1) as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// Estimate of E ∫_0^T e^{-δu} c₃(u) dN_u against its compensator form
/// ∫_0^T e^{-δu} c₃(u) λ(u) du.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub estimate: SimEstimate,
    pub analytic: f64,
    pub z: f64,
}

pub fn martingale_check(params: &CostParameters, model: &IntensityModel, paths: usize, seed: u64) -> MartingaleReport {
    let base = path_base(seed);
    let samples: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            model
                .sample_path(base ^ i)
                .arrivals
                .iter()
                .map(|&a| (-params.delta * a).exp() * params.c3(a))
                .sum()
        })
        .collect();
    let estimate = SimEstimate::from_samples(&samples, seed);
    let analytic = constant_a(params, model);
    MartingaleReport {
        estimate,
        analytic,
        z: estimate.z_score(analytic),
    }
}

/// One path of the switching cost: hold stock `x` without orders until
/// `tau`, then scrap and buy from the outside source until the horizon.
pub fn switch_cost_on_path(params: &CostParameters, path: &PathSample, x: usize, tau: f64) -> f64 {
    let delta = params.delta;
    let mut stock = x;
    let mut clock = 0.0;
    let mut cost = 0.0;
    let mut rest = path.arrivals.as_slice();
    while let Some((&a, tail)) = rest.split_first() {
        if a > tau {
            break;
        }
        cost += params.c1 * discounted_holding(stock as f64, clock, a, delta);
        if stock > 0 {
            stock -= 1;
        } else {
            cost += (-delta * a).exp() * params.c2(a);
        }
        clock = a;
        rest = tail;
    }
    cost += params.c1 * discounted_holding(stock as f64, clock, tau, delta);
    cost += (-delta * tau).exp() * params.c4 * stock as f64;
    cost + rest.iter().map(|&a| (-delta * a).exp() * params.c3(a)).sum::<f64>()
}

/// Monte Carlo estimate of the switching cost 𝒞(x, τ).
pub fn estimate_switch_cost(
    params: &CostParameters,
    model: &IntensityModel,
    x: usize,
    tau: f64,
    paths: usize,
    seed: u64,
) -> Result<SimEstimate> {
    if !(0.0..=model.horizon() as f64).contains(&tau) {
        return Err(Error::OutOfHorizon {
            t: tau,
            horizon: model.horizon(),
        });
    }
    let base = path_base(seed);
    let samples: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| switch_cost_on_path(params, &model.sample_path(base ^ i), x, tau))
        .collect();
    Ok(SimEstimate::from_samples(&samples, seed))
}
