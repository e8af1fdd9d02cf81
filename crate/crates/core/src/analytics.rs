//! Post-solution analytics.
//!
//! Two groups live here. The first reads a solved policy: the distribution
//! of the epoch at which it stops. The second is closed-form and works on a
//! single final-stock decision: the cost 𝒞(x, τ) of holding stock x and
//! switching to the outside source at a fixed time τ, its differences in x,
//! the order-up-to level S(τ) and bounds on the best switching time.
//!
//! Everything in the second group is written for the review epoch 0. Use
//! [`rebase`] to move the parameters to a later epoch first.

use serde::Serialize;

use crate::costkernel::{constant_a, CostParameters};
use crate::demand::IntensityModel;
use crate::error::{Error, Result};
use crate::poisson;
use crate::quadrature::CompositeRule;
use crate::solver::{Action, DemandTable, PolicyTable, StopMode};

/// Default resolution of τ grids, in periods.
pub const DEFAULT_TAU_STEP: f64 = 0.01;

/// P{τ = m} for m = 0..=T under a fixed policy and initial stock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingTimeDistribution {
    pub mass: Vec<f64>,
}

impl StoppingTimeDistribution {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    /// Smallest m with P{τ ≤ m} ≥ q.
    pub fn quantile(&self, q: f64) -> usize {
        let mut acc = 0.0;
        for (m, p) in self.mass.iter().enumerate() {
            acc += p;
            if acc >= q {
                return m;
            }
        }
        self.mass.len() - 1
    }
}

/// Distribution of the stopping epoch of a dynamic-stop policy started at
/// stock `x0` with the full order budget.
///
/// For each target epoch m a backward pass computes P(t, x, z), the
/// probability of first stopping at m from state (x, z) at epoch t before
/// the action is applied. Orders move the state to the order-up-to level of
/// the state actually entered.
pub fn stopping_time_distribution(
    policy: &PolicyTable,
    model: &IntensityModel,
    x0: usize,
) -> Result<StoppingTimeDistribution> {
    let spec = policy.spec();
    if spec.stop != StopMode::Dynamic {
        return Err(Error::PolicyIncompatible(format!(
            "stopping-time distribution needs a dynamic-stop model, got {spec}"
        )));
    }
    if model.horizon() != policy.horizon() {
        return Err(Error::InvalidInput(format!(
            "policy horizon {} does not match intensity horizon {}",
            policy.horizon(),
            model.horizon()
        )));
    }
    let horizon = policy.horizon();
    let x_max = policy.x_max();
    let width = x_max + 1;
    let layers = spec.layers();
    let z0 = spec.initial_budget();
    policy.action(0, x0, z0)?;

    // Resolve every action once: Some((post-action stock, layer)) or None for Stop.
    let mut next_state = vec![None; (horizon + 1) * layers * width];
    for t in 0..=horizon {
        for z in 0..layers {
            for x in 0..width {
                next_state[(t * layers + z) * width + x] = match policy.action(t, x, z)? {
                    Action::Stop => None,
                    Action::Continue => Some((x, z)),
                    Action::OrderUpTo(y) => Some((y, spec.after_order(z))),
                };
            }
        }
    }

    let demand = DemandTable::new(model);
    let mut mass = vec![0.0; horizon + 1];
    let mut current = vec![0.0; layers * width];
    let mut expect = vec![0.0; layers * width];
    for (m, slot) in mass.iter_mut().enumerate() {
        for z in 0..layers {
            for x in 0..width {
                current[z * width + x] = if next_state[(m * layers + z) * width + x].is_none() {
                    1.0
                } else {
                    0.0
                };
            }
        }
        for t in (0..m).rev() {
            for z in 0..layers {
                demand.expect_into(
                    t,
                    &current[z * width..(z + 1) * width],
                    &mut expect[z * width..(z + 1) * width],
                );
            }
            for z in 0..layers {
                for x in 0..width {
                    current[z * width + x] = match next_state[(t * layers + z) * width + x] {
                        None => 0.0,
                        Some((y, layer)) => expect[layer * width + y],
                    };
                }
            }
        }
        *slot = current[z0 * width + x0];
    }
    Ok(StoppingTimeDistribution { mass })
}

/// Which standing assumptions of the switching-time analysis hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// c₃ and c̃₂ non-increasing.
    pub non_inc: bool,
    /// c₃, c̃₂, c₄ and c₁ − δc₄ non-negative.
    pub pos: bool,
    pub intensity_non_increasing: bool,
    /// c̄ > −c₄.
    pub unit_cost_exceeds_scrap_credit: bool,
    /// c₂ ≥ c₃ everywhere.
    pub penalty_covers_outside_cost: bool,
    /// One line per failed check, naming the offending quantity.
    pub failures: Vec<String>,
}

impl AssumptionReport {
    /// NON-INC, POS and c̄ > −c₄ together: what 𝒞 and its differences need.
    pub fn holds(&self) -> bool {
        self.non_inc && self.pos && self.unit_cost_exceeds_scrap_credit && self.penalty_covers_outside_cost
    }
}

pub fn validate_assumptions(params: &CostParameters, model: &IntensityModel) -> AssumptionReport {
    let mut failures = Vec::new();

    let c3_non_inc = params.gamma >= 0.0 || params.c3_bar == 0.0;
    if !c3_non_inc {
        failures.push(format!(
            "NON-INC: c3 increases over time (gamma = {} with c3_bar = {})",
            params.gamma, params.c3_bar
        ));
    }

    let mut pos = true;
    if params.c3_bar < 0.0 {
        pos = false;
        failures.push(format!("POS: c3 is negative (c3_bar = {})", params.c3_bar));
    }
    if params.c2_bar < 0.0 {
        pos = false;
        failures.push(format!("POS: c2 - c3 is negative (c2_bar = {})", params.c2_bar));
    }
    if params.c4 < 0.0 {
        pos = false;
        failures.push(format!("POS: scrap cost c4 = {} is negative", params.c4));
    }
    let net_holding = params.c1 - params.delta * params.c4;
    if net_holding < 0.0 {
        pos = false;
        failures.push(format!("POS: c1 - delta*c4 = {net_holding} is negative"));
    }

    let intensity_non_increasing = model.is_non_increasing();
    if !intensity_non_increasing {
        failures.push("intensity is not non-increasing".into());
    }
    let unit_cost_exceeds_scrap_credit = params.c_bar > -params.c4;
    if !unit_cost_exceeds_scrap_credit {
        failures.push(format!("unit cost {} does not exceed -c4 = {}", params.c_bar, -params.c4));
    }
    let penalty_covers_outside_cost = params.c2_bar >= 0.0;
    if !penalty_covers_outside_cost {
        failures.push(format!("c2 < c3 (c2_bar = {})", params.c2_bar));
    }

    AssumptionReport {
        non_inc: c3_non_inc,
        pos,
        intensity_non_increasing,
        unit_cost_exceeds_scrap_credit,
        penalty_covers_outside_cost,
        failures,
    }
}

fn require_assumptions(params: &CostParameters, model: &IntensityModel) -> Result<AssumptionReport> {
    let report = validate_assumptions(params, model);
    if !report.holds() {
        return Err(Error::AssumptionViolated(report.failures.join("; ")));
    }
    Ok(report)
}

fn check_tau(model: &IntensityModel, tau: f64) -> Result<()> {
    let horizon = model.horizon();
    if !(0.0..=horizon as f64).contains(&tau) {
        return Err(Error::OutOfHorizon { t: tau, horizon });
    }
    Ok(())
}

/// Parameters and intensity seen from review epoch `t`: the outside-source
/// cost is c₃(t + ·) and the intensity is shifted by t periods. Costs of
/// the rebased problem are in time-t money.
pub fn rebase(params: &CostParameters, model: &IntensityModel, t: usize) -> Result<(CostParameters, IntensityModel)> {
    if t >= model.horizon() {
        return Err(Error::OutOfHorizon {
            t: t as f64,
            horizon: model.horizon(),
        });
    }
    let mut shifted = *params;
    shifted.c3_bar = params.c3(t as f64);
    Ok((shifted, IntensityModel::from_rates(model.rates()[t..].to_vec())?))
}

// Integrands. Each is the τ-derivative of the corresponding closed form, so
// every quantity below is its value at τ = 0 plus an integral over [0, τ].

/// ∂𝒞(x, u)/∂u = e^{-δu}[λ(−c₄−c₂)P{N_u ≤ x−1} + λc̃₂ + (c₁−δc₄)E[(x−N_u)⁺]].
fn cost_rate(params: &CostParameters, model: &IntensityModel, x: usize, u: f64) -> f64 {
    let lambda = model.rate_at(u);
    let mu = model.mean_value_unchecked(u);
    let below = poisson::cdf_signed(x as i64 - 1, mu);
    (-params.delta * u).exp()
        * (lambda * (-params.c4 - params.c2(u)) * below
            + lambda * params.c2_tilde(u)
            + (params.c1 - params.delta * params.c4) * poisson::expected_positive_part(x, mu))
}

/// ∂Δ_x𝒞(x, u)/∂u.
fn difference_rate(params: &CostParameters, model: &IntensityModel, x: usize, u: f64) -> f64 {
    let lambda = model.rate_at(u);
    let mu = model.mean_value_unchecked(u);
    (-params.delta * u).exp()
        * (lambda * (-params.c4 - params.c2(u)) * poisson::pmf(x, mu)
            + (params.c1 - params.delta * params.c4) * poisson::cdf(x, mu))
}

/// Integrand of the second difference: e^{-δu}[c₁ − c₂'(u) + δc₂(u)]P{N_u = n}.
fn curvature_rate(params: &CostParameters, model: &IntensityModel, n: usize, u: f64) -> f64 {
    let mu = model.mean_value_unchecked(u);
    (-params.delta * u).exp()
        * (params.c1 - params.c2_prime(u) + params.delta * params.c2(u))
        * poisson::pmf(n, mu)
}

/// Boundary term e^{-δτ}(c₂(τ) + c₄)P{N_τ = n} of the second difference.
fn curvature_boundary(params: &CostParameters, model: &IntensityModel, n: usize, tau: f64) -> f64 {
    (-params.delta * tau).exp() * (params.c2(tau) + params.c4) * poisson::pmf(n, model.mean_value_unchecked(tau))
}

/// Jumps of c₂ as (time, c₂(l) − c₂(l−)). The exponential outside-source
/// cost makes c₂ continuous, so the list is empty.
fn c2_jumps(_params: &CostParameters) -> Vec<(f64, f64)> {
    Vec::new()
}

fn jump_correction(params: &CostParameters, model: &IntensityModel, n: usize, tau: f64) -> f64 {
    c2_jumps(params)
        .iter()
        .filter(|(l, _)| *l <= tau)
        .map(|&(l, jump)| (-params.delta * l).exp() * jump * poisson::pmf(n, model.mean_value_unchecked(l)))
        .sum()
}

/// 𝒞(x, τ): expected discounted cost of holding stock `x` from time 0 and
/// switching to the outside source at time `tau`, without further orders.
pub fn switch_cost(params: &CostParameters, model: &IntensityModel, x: usize, tau: f64) -> Result<f64> {
    require_assumptions(params, model)?;
    check_tau(model, tau)?;
    let rule = CompositeRule::default();
    Ok(params.c4 * x as f64
        + constant_a(params, model)
        + rule.integrate(0.0, tau, |u| cost_rate(params, model, x, u)))
}

/// Δ_x𝒞(x, τ) = 𝒞(x + 1, τ) − 𝒞(x, τ).
pub fn delta_x_switch_cost(params: &CostParameters, model: &IntensityModel, x: usize, tau: f64) -> Result<f64> {
    require_assumptions(params, model)?;
    check_tau(model, tau)?;
    let rule = CompositeRule::default();
    Ok(params.c4 + rule.integrate(0.0, tau, |u| difference_rate(params, model, x, u)))
}

/// Δ²_x𝒞(x, τ) = Δ_x𝒞(x + 1, τ) − Δ_x𝒞(x, τ), from the integrated-by-parts
/// form with the boundary term at τ and the c₂ jump correction.
pub fn second_difference(params: &CostParameters, model: &IntensityModel, x: usize, tau: f64) -> Result<f64> {
    require_assumptions(params, model)?;
    check_tau(model, tau)?;
    let n = x + 1;
    let rule = CompositeRule::default();
    Ok(curvature_boundary(params, model, n, tau)
        + rule.integrate(0.0, tau, |u| curvature_rate(params, model, n, u))
        - jump_correction(params, model, n, tau))
}

/// ∂𝒞(x, τ)/∂τ (right derivative at the period boundaries).
pub fn switch_cost_slope(params: &CostParameters, model: &IntensityModel, x: usize, tau: f64) -> Result<f64> {
    require_assumptions(params, model)?;
    check_tau(model, tau)?;
    Ok(cost_rate(params, model, x, tau))
}

/// S(τ) = min{x : c̄ + Δ_x𝒞(x, τ) ≥ 0}, searched over 0..=x_max.
pub fn order_up_to_of_tau(params: &CostParameters, model: &IntensityModel, tau: f64, x_max: usize) -> Result<usize> {
    require_assumptions(params, model)?;
    check_tau(model, tau)?;
    let rule = CompositeRule::default();
    for x in 0..=x_max {
        let delta = params.c4 + rule.integrate(0.0, tau, |u| difference_rate(params, model, x, u));
        if params.c_bar + delta >= 0.0 {
            return Ok(x);
        }
    }
    Err(Error::NotFound { x_max })
}

/// Uniform grid 0, step, 2·step, … ending exactly at the horizon.
pub fn tau_grid(horizon: usize, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!("tau step must be positive, got {step}")));
    }
    let end = horizon as f64;
    let n = (end / step).round() as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| i as f64 * step).filter(|&t| t < end).collect();
    grid.push(end);
    Ok(grid)
}

/// 𝒞(x, ·) and its x-differences on a τ grid.
#[derive(Debug, Clone, Serialize)]
pub struct SwitchCostCurve {
    pub x: usize,
    pub tau_grid: Vec<f64>,
    /// 𝒞(x, τ).
    pub values: Vec<f64>,
    /// Δ_x𝒞(x, τ).
    pub first_differences: Vec<f64>,
    /// Δ²_x𝒞(x, τ).
    pub second_differences: Vec<f64>,
}

impl SwitchCostCurve {
    /// Grid point with the smallest 𝒞 (earliest on ties) and its value.
    pub fn argmin(&self) -> (f64, f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        (self.tau_grid[best], self.values[best])
    }
}

/// Build the curve by integrating between consecutive grid points.
pub fn switch_cost_curve(params: &CostParameters, model: &IntensityModel, x: usize, step: f64) -> Result<SwitchCostCurve> {
    require_assumptions(params, model)?;
    let grid = tau_grid(model.horizon(), step)?;
    // Grid cells are short, one panel per cell is plenty.
    let rule = CompositeRule::new(8, 1);
    let base = params.c4 * x as f64 + constant_a(params, model);
    let n = x + 1;

    let mut values = Vec::with_capacity(grid.len());
    let mut first = Vec::with_capacity(grid.len());
    let mut second = Vec::with_capacity(grid.len());
    let (mut cost_int, mut diff_int, mut curv_int) = (0.0, 0.0, 0.0);
    let mut prev = 0.0;
    for &tau in &grid {
        cost_int += rule.integrate(prev, tau, |u| cost_rate(params, model, x, u));
        diff_int += rule.integrate(prev, tau, |u| difference_rate(params, model, x, u));
        curv_int += rule.integrate(prev, tau, |u| curvature_rate(params, model, n, u));
        prev = tau;
        values.push(base + cost_int);
        first.push(params.c4 + diff_int);
        second.push(curvature_boundary(params, model, n, tau) + curv_int - jump_correction(params, model, n, tau));
    }
    Ok(SwitchCostCurve {
        x,
        tau_grid: grid,
        values,
        first_differences: first,
        second_differences: second,
    })
}

/// Bounds on the best switching time for stock x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchBounds {
    pub lb: f64,
    pub ub: f64,
}

/// P{N_τ ≤ x − 1}[c₂(τ) + c₄].
fn stay_pressure(params: &CostParameters, model: &IntensityModel, x: usize, tau: f64) -> f64 {
    poisson::cdf_signed(x as i64 - 1, model.mean_value_unchecked(tau)) * (params.c2(tau) + params.c4)
}

/// Bounds on a grid of the default resolution.
pub fn switch_time_bounds(params: &CostParameters, model: &IntensityModel, x: usize) -> Result<SwitchBounds> {
    switch_time_bounds_with_step(params, model, x, DEFAULT_TAU_STEP)
}

/// Upper bound: the smallest grid τ with c̃₂(T) ≥ P{N_τ ≤ x−1}[c₂(τ)+c₄],
/// else T. Lower bound: the largest grid τ with λ(τ) ≥ 1 and
/// P{N_τ ≤ x−1}[c₂(τ)+c₄] ≥ x(c₁−δc₄) + c̃₂(0), else 0. The lower bound
/// also needs a non-increasing intensity.
pub fn switch_time_bounds_with_step(
    params: &CostParameters,
    model: &IntensityModel,
    x: usize,
    step: f64,
) -> Result<SwitchBounds> {
    let report = require_assumptions(params, model)?;
    if !report.intensity_non_increasing {
        return Err(Error::AssumptionViolated(
            "the lower switching-time bound needs a non-increasing intensity".into(),
        ));
    }
    let horizon = model.horizon() as f64;
    let grid = tau_grid(model.horizon(), step)?;

    let floor_ub = params.c2_tilde(horizon);
    let ub = grid
        .iter()
        .copied()
        .find(|&tau| floor_ub >= stay_pressure(params, model, x, tau))
        .unwrap_or(horizon);

    let threshold = x as f64 * (params.c1 - params.delta * params.c4) + params.c2_tilde(0.0);
    let lb = grid
        .iter()
        .rev()
        .copied()
        .find(|&tau| model.rate_at(tau) >= 1.0 && stay_pressure(params, model, x, tau) >= threshold)
        .unwrap_or(0.0);

    Ok(SwitchBounds { lb, ub })
}

/// Check, on a grid, the four conditions under which the order-up-to level
/// cannot drop when the switching time moves from τ₂ to τ₂ + ε:
/// τ₁ < τ₂, S(τ₁) ≥ S(τ₂), S(τ₁) ≤ Λ(τ₂) and
/// c₁ ≤ (Λ(u) − S(τ₁))/Λ(u) · λ(u)c₃(u) on [τ₂, τ₂ + ε].
pub fn monotone_order_up_to_conditions(
    params: &CostParameters,
    model: &IntensityModel,
    tau1: f64,
    tau2: f64,
    eps: f64,
    x_max: usize,
) -> Result<bool> {
    let report = require_assumptions(params, model)?;
    check_tau(model, tau1)?;
    check_tau(model, tau2 + eps)?;
    if !report.intensity_non_increasing || tau1 >= tau2 {
        return Ok(false);
    }
    let s1 = order_up_to_of_tau(params, model, tau1, x_max)? as f64;
    let s2 = order_up_to_of_tau(params, model, tau2, x_max)? as f64;
    if s1 < s2 || s1 > model.mean_value_unchecked(tau2) {
        return Ok(false);
    }
    let checks = ((eps / DEFAULT_TAU_STEP).ceil() as usize).max(1);
    Ok((0..=checks).all(|i| {
        let u = tau2 + eps * i as f64 / checks as f64;
        let big_lambda = model.mean_value_unchecked(u);
        big_lambda > 0.0 && params.c1 <= (big_lambda - s1) / big_lambda * model.rate_at(u) * params.c3(u)
    }))
}
