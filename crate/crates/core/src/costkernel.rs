//! Expected discounted cost primitives.
//!
//! Within period k the intensity is a constant λ, so with s = u − k the
//! demand increment N_u − N_k is Poisson(λs). Every kernel is then a sum of
//! the weights
//!
//! ```text
//! w_i(a) = ∫_0^1 e^{-a s} e^{-λ s} (λ s)^i / i! ds = (λ/μ)^i · P(i+1, μ) / μ,   μ = a + λ,
//! ```
//!
//! where P is the regularised lower incomplete gamma function. P(i+1, μ) is
//! the Poisson upper tail P{Poisson(μ) > i}; it is accumulated from the far
//! tail so small values never come from a subtraction. With
//! c₃(u) = c̄₃ e^{-γu}, the c₂- and c₃-weighted integrals reuse the same
//! weights at rate a = δ + γ.

use serde::{Deserialize, Serialize};

use crate::demand::IntensityModel;
use crate::error::{Error, Result};
use crate::poisson;

/// Cost and discount scalars. `c₂(u) = c2_bar + c₃(u)` and `c₃(u) = c3_bar·e^{-γu}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParameters {
    /// Unit purchasing cost c̄.
    pub c_bar: f64,
    /// Fixed cost per order, K.
    pub setup_cost: f64,
    /// Holding cost rate per unit and time.
    pub c1: f64,
    /// Lost-sales premium over the outside source.
    pub c2_bar: f64,
    /// Outside-source unit cost at time zero.
    pub c3_bar: f64,
    /// Decline rate of the outside-source cost.
    pub gamma: f64,
    /// Scrap cost per unit; negative values are salvage revenue.
    pub c4: f64,
    /// Continuous discount rate.
    pub delta: f64,
}

impl CostParameters {
    /// Base case of the numerical study: c̄ = 100, c₁ = 1, c̄₂ = 200,
    /// c̄₃ = 200, γ = 0.01, c₄ = 25, δ = 0.005 and K = 0.
    pub fn base_case() -> Self {
        Self {
            c_bar: 100.0,
            setup_cost: 0.0,
            c1: 1.0,
            c2_bar: 200.0,
            c3_bar: 200.0,
            gamma: 0.01,
            c4: 25.0,
            delta: 0.005,
        }
    }

    pub fn with_setup_cost(mut self, k: f64) -> Self {
        self.setup_cost = k;
        self
    }

    pub fn c3(&self, u: f64) -> f64 {
        self.c3_bar * (-self.gamma * u).exp()
    }

    pub fn c2(&self, u: f64) -> f64 {
        self.c2_bar + self.c3(u)
    }

    /// c̃₂ = c₂ − c₃, constant under the exponential outside-source cost.
    pub fn c2_tilde(&self, _u: f64) -> f64 {
        self.c2_bar
    }

    /// Derivative of c₂ in u.
    pub fn c2_prime(&self, u: f64) -> f64 {
        -self.gamma * self.c3(u)
    }

    /// Check the standing invariants: finite values, non-negative scalar
    /// costs and rates, and c̄ > −c₄ (otherwise buying in order to scrap
    /// would be profitable without bound).
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_bar", self.c_bar),
            ("setup_cost", self.setup_cost),
            ("c1", self.c1),
            ("c2_bar", self.c2_bar),
            ("c3_bar", self.c3_bar),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !self.c4.is_finite() {
            return Err(Error::InvalidInput("c4 must be finite".into()));
        }
        if self.c_bar <= -self.c4 {
            return Err(Error::InvalidInput(format!(
                "unit cost {} must exceed minus the scrap cost {}",
                self.c_bar, self.c4
            )));
        }
        Ok(())
    }

    /// True when the two parameter sets produce identical kernel tables
    /// (they may differ only in c̄ and K).
    pub fn same_kernels(&self, other: &CostParameters) -> bool {
        self.c1 == other.c1
            && self.c2_bar == other.c2_bar
            && self.c3_bar == other.c3_bar
            && self.gamma == other.gamma
            && self.c4 == other.c4
            && self.delta == other.delta
    }
}

/// Which demand is counted as satisfied within a period that starts with
/// stock x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LostSalesConvention {
    /// Satisfied-demand sum runs over i = 0..=x, for every x. Kept for
    /// comparison; it counts one more satisfied arrival than stock allows.
    Paper,
    /// Satisfied-demand sum runs over i = 0..x−1: the x-th arrival takes the
    /// last unit and later arrivals are lost.
    #[default]
    Arrival,
}

impl LostSalesConvention {
    /// Number of leading terms counted as satisfied demand at stock `x`.
    fn satisfied_terms(self, x: usize) -> usize {
        match self {
            LostSalesConvention::Paper => x + 1,
            LostSalesConvention::Arrival => x,
        }
    }
}

impl std::str::FromStr for LostSalesConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(LostSalesConvention::Paper),
            "arrival" => Ok(LostSalesConvention::Arrival),
            other => Err(Error::InvalidInput(format!("unknown convention '{other}' (paper|arrival)"))),
        }
    }
}

impl std::fmt::Display for LostSalesConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LostSalesConvention::Paper => "paper",
            LostSalesConvention::Arrival => "arrival",
        })
    }
}

/// ∫_0^1 e^{-a s} ds.
pub fn unit_discount(a: f64) -> f64 {
    if a.abs() < 1e-300 {
        1.0
    } else {
        -(-a).exp_m1() / a
    }
}

/// Weights w_i(a) = ∫_0^1 e^{-a s} P{Poisson(λ s) = i} ds for i = 0..=n_max.
pub fn discounted_pmf_weights(a: f64, lambda: f64, n_max: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_max + 1];
    if lambda <= 0.0 {
        w[0] = unit_discount(a);
        return w;
    }
    let mu = a + lambda;
    let tails = poisson::upper_tails(mu, n_max);
    let ratio = lambda / mu;
    let mut scale = 1.0 / mu;
    for (wi, tail) in w.iter_mut().zip(tails) {
        *wi = scale * tail;
        scale *= ratio;
    }
    w
}

/// Order cost c(m): zero for m = 0, K + c̄·m otherwise.
pub fn order_cost(params: &CostParameters, m: usize) -> f64 {
    if m == 0 {
        0.0
    } else {
        params.setup_cost + params.c_bar * m as f64
    }
}

/// Integrals over one period that involve only c₂, c₃ and λ.
#[derive(Debug, Clone, Copy)]
struct PeriodIntegrals {
    /// ∫ e^{-δ(u−k)} c₂(u) λ du over the period.
    c2: f64,
    /// ∫ e^{-δ(u−k)} c₃(u) λ du over the period.
    c3: f64,
    /// ∫ e^{-δ(u−k)} c̃₂(u) λ du over the period.
    c2_tilde: f64,
}

fn period_integrals(params: &CostParameters, lambda: f64, k: usize) -> PeriodIntegrals {
    let c3_start = params.c3(k as f64);
    let c3 = lambda * c3_start * unit_discount(params.delta + params.gamma);
    let c2_tilde = lambda * params.c2_bar * unit_discount(params.delta);
    PeriodIntegrals {
        c2: c2_tilde + c3,
        c3,
        c2_tilde,
    }
}

/// c₂-weighted weights J_i = ∫ e^{-δ(u−k)} c₂(u) λ P{N_u − N_k = i} du.
fn c2_weights(params: &CostParameters, lambda: f64, k: usize, n_max: usize) -> Vec<f64> {
    let plain = discounted_pmf_weights(params.delta, lambda, n_max);
    let decayed = discounted_pmf_weights(params.delta + params.gamma, lambda, n_max);
    let c3_start = params.c3(k as f64);
    plain
        .iter()
        .zip(&decayed)
        .map(|(p, d)| lambda * (params.c2_bar * p + c3_start * d))
        .collect()
}

fn check_period(model: &IntensityModel, k: usize, x: usize) -> Result<f64> {
    let horizon = model.horizon();
    if k >= horizon {
        return Err(Error::OutOfGrid {
            k,
            x,
            horizon,
            x_max: usize::MAX,
        });
    }
    Ok(model.rates()[k])
}

/// H(k, x) = c₁ Σ_{n<x} Σ_{i≤n} w_i(δ), summed as written.
pub fn holding_cost(params: &CostParameters, model: &IntensityModel, k: usize, x: usize) -> Result<f64> {
    let lambda = check_period(model, k, x)?;
    if x == 0 {
        return Ok(0.0);
    }
    let w = discounted_pmf_weights(params.delta, lambda, x);
    let mut total = 0.0;
    for n in 0..x {
        for wi in &w[..=n] {
            total += wi;
        }
    }
    Ok(params.c1 * total)
}

/// L(k, x) = ∫ e^{-δ(u−k)} c₂ λ du − Σ_{i=0}^{U(x)} J_i, summed as written.
pub fn replacement_cost(
    params: &CostParameters,
    model: &IntensityModel,
    convention: LostSalesConvention,
    k: usize,
    x: usize,
) -> Result<f64> {
    let lambda = check_period(model, k, x)?;
    let terms = convention.satisfied_terms(x);
    let total = period_integrals(params, lambda, k).c2;
    let j = c2_weights(params, lambda, k, terms);
    Ok(total - j[..terms].iter().sum::<f64>())
}

/// C(k, x) = H(k, x) + L(k, x).
pub fn one_period_cost(
    params: &CostParameters,
    model: &IntensityModel,
    convention: LostSalesConvention,
    k: usize,
    x: usize,
) -> Result<f64> {
    Ok(holding_cost(params, model, k, x)? + replacement_cost(params, model, convention, k, x)?)
}

/// Reformulated one-period cost C̃(k, x). At x = 0 it is the c̃₂-weighted
/// arrival integral; for x ≥ 1 it is H + ∫e^{-δ(u−k)}(c₂ − c₃)λ − Σ J_i.
pub fn reformulated_cost(
    params: &CostParameters,
    model: &IntensityModel,
    convention: LostSalesConvention,
    k: usize,
    x: usize,
) -> Result<f64> {
    let lambda = check_period(model, k, x)?;
    let ints = period_integrals(params, lambda, k);
    if x == 0 {
        return Ok(ints.c2_tilde);
    }
    let terms = convention.satisfied_terms(x);
    let j = c2_weights(params, lambda, k, terms);
    Ok(holding_cost(params, model, k, x)? + ints.c2_tilde - j[..terms].iter().sum::<f64>())
}

/// S(k, x) = c₄x + ∫_k^T e^{-δ(u−k)} c₃(u) λ(u) du.
pub fn stopping_cost(params: &CostParameters, model: &IntensityModel, k: usize, x: usize) -> Result<f64> {
    let horizon = model.horizon();
    if k > horizon {
        return Err(Error::OutOfGrid {
            k,
            x,
            horizon,
            x_max: usize::MAX,
        });
    }
    Ok(params.c4 * x as f64 + outside_source_tail(params, model)[k])
}

/// A = ∫_0^T e^{-δu} c₃(u) λ(u) du.
pub fn constant_a(params: &CostParameters, model: &IntensityModel) -> f64 {
    outside_source_tail(params, model)[0]
}

/// tail[k] = ∫_k^T e^{-δ(u−k)} c₃(u) λ(u) du for k = 0..=T.
fn outside_source_tail(params: &CostParameters, model: &IntensityModel) -> Vec<f64> {
    let horizon = model.horizon();
    let mut tail = vec![0.0; horizon + 1];
    let step = (-params.delta).exp();
    for k in (0..horizon).rev() {
        tail[k] = period_integrals(params, model.rates()[k], k).c3 + step * tail[k + 1];
    }
    tail
}

/// All kernels on the grid k ∈ 0..T, x ∈ 0..=x_max.
#[derive(Debug, Clone)]
pub struct KernelTable {
    params: CostParameters,
    convention: LostSalesConvention,
    horizon: usize,
    x_max: usize,
    h: Vec<f64>,
    l: Vec<f64>,
    c_tilde: Vec<f64>,
    outside_period: Vec<f64>,
    outside_tail: Vec<f64>,
}

impl KernelTable {
    fn idx(&self, k: usize, x: usize) -> Result<usize> {
        if k >= self.horizon || x > self.x_max {
            return Err(Error::OutOfGrid {
                k,
                x,
                horizon: self.horizon,
                x_max: self.x_max,
            });
        }
        Ok(k * (self.x_max + 1) + x)
    }

    pub fn params(&self) -> &CostParameters {
        &self.params
    }

    pub fn convention(&self) -> LostSalesConvention {
        self.convention
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_max(&self) -> usize {
        self.x_max
    }

    pub fn holding(&self, k: usize, x: usize) -> Result<f64> {
        Ok(self.h[self.idx(k, x)?])
    }

    pub fn replacement(&self, k: usize, x: usize) -> Result<f64> {
        Ok(self.l[self.idx(k, x)?])
    }

    pub fn one_period(&self, k: usize, x: usize) -> Result<f64> {
        let i = self.idx(k, x)?;
        Ok(self.h[i] + self.l[i])
    }

    pub fn reformulated(&self, k: usize, x: usize) -> Result<f64> {
        Ok(self.c_tilde[self.idx(k, x)?])
    }

    /// Row of C̃(k, ·).
    pub fn reformulated_row(&self, k: usize) -> &[f64] {
        let w = self.x_max + 1;
        &self.c_tilde[k * w..(k + 1) * w]
    }

    /// Row of C(k, ·) = H + L.
    pub fn one_period_row(&self, k: usize) -> Vec<f64> {
        let w = self.x_max + 1;
        let r = k * w..(k + 1) * w;
        self.h[r.clone()].iter().zip(&self.l[r]).map(|(h, l)| h + l).collect()
    }

    /// ∫ e^{-δ(u−k)} c₃ λ du over period k.
    pub fn outside_source_period(&self, k: usize) -> f64 {
        self.outside_period[k]
    }

    /// S(k, x) for k ∈ 0..=T.
    pub fn stopping(&self, k: usize, x: usize) -> Result<f64> {
        if k > self.horizon || x > self.x_max {
            return Err(Error::OutOfGrid {
                k,
                x,
                horizon: self.horizon,
                x_max: self.x_max,
            });
        }
        Ok(self.params.c4 * x as f64 + self.outside_tail[k])
    }

    /// The policy-independent constant A.
    pub fn a(&self) -> f64 {
        self.outside_tail[0]
    }
}

/// Build every kernel for k ∈ 0..T and x ∈ 0..=x_max. Each row costs
/// O(x_max) once the weights are known: holding sums and satisfied-demand
/// sums are accumulated incrementally in x, and L is formed as the tail
/// Σ_{i>U(x)} J_i rather than as a difference.
pub fn build_kernel_table(
    params: &CostParameters,
    model: &IntensityModel,
    convention: LostSalesConvention,
    x_max: usize,
) -> Result<KernelTable> {
    params.validate()?;
    let horizon = model.horizon();
    let width = x_max + 1;
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = {
        use rayon::prelude::*;
        (0..horizon)
            .into_par_iter()
            .map(|k| kernel_row(params, model.rates()[k], k, convention, x_max))
            .collect()
    };
    let mut h = Vec::with_capacity(horizon * width);
    let mut l = Vec::with_capacity(horizon * width);
    let mut c_tilde = Vec::with_capacity(horizon * width);
    for (hr, lr, cr) in rows {
        h.extend(hr);
        l.extend(lr);
        c_tilde.extend(cr);
    }
    let outside_period = (0..horizon)
        .map(|k| period_integrals(params, model.rates()[k], k).c3)
        .collect();
    Ok(KernelTable {
        params: *params,
        convention,
        horizon,
        x_max,
        h,
        l,
        c_tilde,
        outside_period,
        outside_tail: outside_source_tail(params, model),
    })
}

fn kernel_row(
    params: &CostParameters,
    lambda: f64,
    k: usize,
    convention: LostSalesConvention,
    x_max: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let width = x_max + 1;
    let ints = period_integrals(params, lambda, k);
    // Far enough that J beyond n_top is below anything representable next
    // to the values we keep.
    let mu = params.delta + lambda;
    let n_top = (x_max + 2).max((mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize);
    let w = discounted_pmf_weights(params.delta, lambda, n_top);
    let j = c2_weights(params, lambda, k, n_top);

    // tail[i] = Σ_{m ≥ i} J_m
    let mut tail = vec![0.0; n_top + 2];
    for i in (0..=n_top).rev() {
        tail[i] = tail[i + 1] + j[i];
    }

    let mut h = vec![0.0; width];
    let mut cum_w = 0.0;
    for x in 1..width {
        cum_w += w[x - 1];
        h[x] = h[x - 1] + params.c1 * cum_w;
    }
    let l: Vec<f64> = (0..width).map(|x| tail[convention.satisfied_terms(x)]).collect();
    let c_tilde = (0..width)
        .map(|x| {
            if x == 0 {
                ints.c2_tilde
            } else {
                h[x] + l[x] - ints.c3
            }
        })
        .collect();
    (h, l, c_tilde)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_cost_cases() {
        let p = CostParameters::base_case().with_setup_cost(1000.0);
        assert_eq!(order_cost(&p, 0), 0.0);
        assert_eq!(order_cost(&p, 5), 1500.0);
        assert_eq!(order_cost(&CostParameters::base_case(), 1), 100.0);
    }

    #[test]
    fn weights_without_demand() {
        let w = discounted_pmf_weights(0.0, 0.0, 3);
        assert_eq!(w, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn validate_rejects_profitable_scrap() {
        let mut p = CostParameters::base_case();
        p.c4 = -150.0;
        assert!(p.validate().is_err());
        p.c4 = -25.0;
        assert!(p.validate().is_ok());
    }
}
