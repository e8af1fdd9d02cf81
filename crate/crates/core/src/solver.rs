//! Backward induction for the stop/order model family.
//!
//! A model is a coordinate `a/b/c`:
//!
//! - `a` is the stopping flexibility: `D` (stop at any epoch, chosen
//!   adaptively), `S` (a switching epoch fixed at time zero) or `T` (hold
//!   inventory until the horizon).
//! - `b` is the order budget: a finite number of orders `M`, or `inf`.
//! - `c` is the timing of orders: `Z` (orders only at time zero) or `F`.
//!
//! The solver works in reformulated units: the per-period cost is C̃ and the
//! stopping cost is c₄x. The total expected cost is Ṽ(0, x₀) + A.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::costkernel::{CostParameters, KernelTable};
use crate::demand::IntensityModel;
use crate::error::{Error, Result};
use crate::poisson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopMode {
    Dynamic,
    Static,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderBudget {
    Finite(u32),
    Unlimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FirstOrder {
    ZeroOnly,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModelSpec {
    pub stop: StopMode,
    pub budget: OrderBudget,
    pub first_order: FirstOrder,
}

impl ModelSpec {
    pub fn new(stop: StopMode, budget: OrderBudget, first_order: FirstOrder) -> Result<Self> {
        let spec = Self {
            stop,
            budget,
            first_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.budget, self.first_order) {
            (OrderBudget::Unlimited, FirstOrder::ZeroOnly) => Err(Error::BudgetMisuse(
                "an unlimited budget with orders only at time zero is not a model of the family".into(),
            )),
            (OrderBudget::Finite(0), _) => Err(Error::BudgetMisuse("order budget must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Number of budget layers in the state space.
    pub fn layers(&self) -> usize {
        match self.budget {
            OrderBudget::Finite(m) => m as usize + 1,
            OrderBudget::Unlimited => 1,
        }
    }

    /// Budget coordinate at time zero.
    pub fn initial_budget(&self) -> usize {
        self.layers() - 1
    }

    fn is_unlimited(&self) -> bool {
        matches!(self.budget, OrderBudget::Unlimited)
    }

    /// Whether an order may be placed at epoch `t` with budget coordinate `z`.
    pub fn may_order(&self, t: usize, z: usize) -> bool {
        let budget_left = self.is_unlimited() || z >= 1;
        let timing = matches!(self.first_order, FirstOrder::Free) || t == 0;
        budget_left && timing
    }

    /// Budget coordinate after an order placed with coordinate `z`.
    pub fn after_order(&self, z: usize) -> usize {
        if self.is_unlimited() {
            z
        } else {
            z - 1
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.stop {
            StopMode::Dynamic => "D",
            StopMode::Static => "S",
            StopMode::Never => "T",
        };
        let c = match self.first_order {
            FirstOrder::ZeroOnly => "Z",
            FirstOrder::Free => "F",
        };
        match self.budget {
            OrderBudget::Finite(m) => write!(f, "{a}/{m}/{c}"),
            OrderBudget::Unlimited => write!(f, "{a}/inf/{c}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("model '{s}' is not of the form a/b/c, e.g. D/inf/F"));
        let parts: Vec<&str> = s.trim().split('/').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let stop = match parts[0] {
            "D" | "d" => StopMode::Dynamic,
            "S" | "s" => StopMode::Static,
            "T" | "t" => StopMode::Never,
            _ => return Err(bad()),
        };
        let budget = match parts[1] {
            "inf" | "∞" | "Inf" | "INF" => OrderBudget::Unlimited,
            m => OrderBudget::Finite(m.parse().map_err(|_| bad())?),
        };
        let first_order = match parts[2] {
            "Z" | "z" => FirstOrder::ZeroOnly,
            "F" | "f" => FirstOrder::Free,
            _ => return Err(bad()),
        };
        ModelSpec::new(stop, budget, first_order)
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelSpec> for String {
    fn from(spec: ModelSpec) -> String {
        spec.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Stop,
    Continue,
    /// Raise stock to the given level (strictly above the current one).
    OrderUpTo(usize),
}

/// Values indexed by (t, x, z) for t ∈ 0..=T.
#[derive(Debug, Clone)]
pub struct ValueGrid {
    horizon: usize,
    x_max: usize,
    layers: usize,
    values: Vec<f64>,
    continuation: Vec<f64>,
}

impl ValueGrid {
    fn idx(&self, t: usize, x: usize, z: usize) -> usize {
        (t * self.layers + z) * (self.x_max + 1) + x
    }

    /// Value Ṽ(t, x, z).
    pub fn value(&self, t: usize, x: usize, z: usize) -> f64 {
        self.values[self.idx(t, x, z)]
    }

    /// Continuation cost G̃(t, y, z) = C̃(t, y) + e^{-δ} E Ṽ(t+1, (y − D)⁺, z).
    /// Only meaningful before the stop epoch.
    pub fn continuation(&self, t: usize, y: usize, z: usize) -> f64 {
        self.continuation[self.idx(t, y, z)]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_max(&self) -> usize {
        self.x_max
    }

    pub fn layers(&self) -> usize {
        self.layers
    }
}

/// Optimal action per (t, x, z).
#[derive(Debug, Clone)]
pub struct PolicyTable {
    spec: ModelSpec,
    horizon: usize,
    x_max: usize,
    stop_epoch: usize,
    actions: Vec<Action>,
}

impl PolicyTable {
    fn idx(&self, t: usize, x: usize, z: usize) -> usize {
        (t * self.spec.layers() + z) * (self.x_max + 1) + x
    }

    /// A policy given by a rule, e.g. "never order" or "stop at once".
    /// Epochs from `stop_epoch` on always stop. Order targets must lie
    /// strictly above the current stock and within `x_max`, and orders
    /// only where `spec` allows them.
    pub fn from_fn<F>(spec: ModelSpec, horizon: usize, x_max: usize, stop_epoch: usize, mut rule: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> Action,
    {
        spec.validate()?;
        if stop_epoch > horizon {
            return Err(Error::InvalidInput(format!(
                "stop epoch {stop_epoch} exceeds the horizon {horizon}"
            )));
        }
        let layers = spec.layers();
        let mut actions = Vec::with_capacity((horizon + 1) * layers * (x_max + 1));
        for t in 0..=horizon {
            for z in 0..layers {
                for x in 0..=x_max {
                    let act = if t >= stop_epoch { Action::Stop } else { rule(t, x, z) };
                    match act {
                        Action::OrderUpTo(y) if y <= x || y > x_max || !spec.may_order(t, z) => {
                            return Err(Error::InvalidInput(format!(
                                "order to {y} from state (t = {t}, x = {x}, z = {z}) is not allowed"
                            )));
                        }
                        Action::Stop if t < stop_epoch && spec.stop != StopMode::Dynamic => {
                            return Err(Error::InvalidInput(format!(
                                "{spec} cannot stop at t = {t} before epoch {stop_epoch}"
                            )));
                        }
                        _ => {}
                    }
                    actions.push(act);
                }
            }
        }
        Ok(Self {
            spec,
            horizon,
            x_max,
            stop_epoch,
            actions,
        })
    }

    pub fn action(&self, t: usize, x: usize, z: usize) -> Result<Action> {
        if t > self.horizon || x > self.x_max || z >= self.spec.layers() {
            return Err(Error::UnreachableState { t, x, z });
        }
        Ok(self.actions[self.idx(t, x, z)])
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_max(&self) -> usize {
        self.x_max
    }

    /// Epoch at which stopping is forced: T, or the switching epoch of a
    /// static model.
    pub fn stop_epoch(&self) -> usize {
        self.stop_epoch
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueGrid,
    pub policy: PolicyTable,
    /// Ṽ(0, x₀) at the initial budget.
    pub reformulated_value: f64,
    pub a: f64,
    /// Ṽ(0, x₀) + A.
    pub total_cost: f64,
    pub x0: usize,
}

/// Which cost representation the recursion runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CostForm {
    /// C̃ per period and c₄x on stopping.
    Reformulated,
    /// C per period and S(k, x), including its outside-source integral.
    Original,
}

fn check_inputs(kernels: &KernelTable, params: &CostParameters, model: &IntensityModel, x0: usize) -> Result<()> {
    params.validate()?;
    if !params.same_kernels(kernels.params()) {
        return Err(Error::InvalidInput(
            "kernel table was built with different holding, penalty, scrap or discount parameters".into(),
        ));
    }
    if kernels.horizon() != model.horizon() {
        return Err(Error::InvalidInput(format!(
            "kernel horizon {} does not match intensity horizon {}",
            kernels.horizon(),
            model.horizon()
        )));
    }
    if x0 > kernels.x_max() {
        return Err(Error::InvalidInput(format!(
            "initial stock {x0} exceeds x_max {}",
            kernels.x_max()
        )));
    }
    Ok(())
}

/// One-period demand distributions with their cumulative sums.
pub(crate) struct DemandTable {
    pub pmf: Vec<Vec<f64>>,
    pub cdf: Vec<Vec<f64>>,
}

impl DemandTable {
    pub fn new(model: &IntensityModel) -> Self {
        let pmf: Vec<Vec<f64>> = model.rates().iter().map(|&r| poisson::truncated_pmf(r)).collect();
        let cdf = pmf
            .iter()
            .map(|p| {
                p.iter()
                    .scan(0.0, |acc, v| {
                        *acc += v;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Self { pmf, cdf }
    }

    /// out[y] = E next[(y − D_t)⁺]; mass beyond the truncation lands on 0.
    pub fn expect_into(&self, t: usize, next: &[f64], out: &mut [f64]) {
        let p = &self.pmf[t];
        let c = &self.cdf[t];
        let n_top = p.len() - 1;
        for (y, slot) in out.iter_mut().enumerate() {
            if y == 0 {
                *slot = next[0];
                continue;
            }
            let last = (y - 1).min(n_top);
            let mut acc = 0.0;
            for n in 0..=last {
                acc += p[n] * next[y - n];
            }
            *slot = acc + (1.0 - c[last]).max(0.0) * next[0];
        }
    }
}

fn run_dp(
    spec: ModelSpec,
    kernels: &KernelTable,
    params: &CostParameters,
    demand: &DemandTable,
    form: CostForm,
    stop_epoch: usize,
) -> Result<(ValueGrid, PolicyTable)> {
    let horizon = kernels.horizon();
    let x_max = kernels.x_max();
    let width = x_max + 1;
    let layers = spec.layers();
    let slab = layers * width;
    let mut values = vec![0.0; (horizon + 1) * slab];
    let mut continuation = vec![f64::NAN; (horizon + 1) * slab];
    let mut actions = vec![Action::Stop; (horizon + 1) * slab];

    let stop_value = |t: usize, x: usize| -> f64 {
        match form {
            CostForm::Reformulated => params.c4 * x as f64,
            CostForm::Original => kernels.stopping(t, x).expect("stopping cost inside the grid"),
        }
    };

    for t in stop_epoch..=horizon {
        for z in 0..layers {
            for x in 0..width {
                values[t * slab + z * width + x] = stop_value(t, x);
            }
        }
    }

    let discount = (-params.delta).exp();
    let may_stop = matches!(spec.stop, StopMode::Dynamic);
    let mut expect = vec![0.0; width];
    let mut g = vec![0.0; slab];
    let mut best_val = vec![0.0; width];
    let mut best_y = vec![0usize; width];

    for t in (0..stop_epoch).rev() {
        let cost_row: Vec<f64> = match form {
            CostForm::Reformulated => kernels.reformulated_row(t).to_vec(),
            CostForm::Original => kernels.one_period_row(t),
        };
        let next = (t + 1) * slab;
        for z in 0..layers {
            demand.expect_into(t, &values[next + z * width..next + (z + 1) * width], &mut expect);
            for y in 0..width {
                g[z * width + y] = cost_row[y] + discount * expect[y];
            }
        }
        continuation[t * slab..(t + 1) * slab].copy_from_slice(&g);

        for z in 0..layers {
            let can_order = spec.may_order(t, z);
            if can_order {
                let target = spec.after_order(z) * width;
                // best over y > x of c̄y + G̃(y); scanning downward with `<=`
                // keeps the smallest y among ties.
                let mut run_val = f64::INFINITY;
                let mut run_y = x_max;
                for x in (0..width).rev() {
                    best_val[x] = run_val;
                    best_y[x] = run_y;
                    let cand = params.c_bar * x as f64 + g[target + x];
                    if cand <= run_val {
                        run_val = cand;
                        run_y = x;
                    }
                }
            }
            for x in 0..width {
                let g_here = g[z * width + x];
                let (mut v, mut act) = (g_here, Action::Continue);
                if can_order && x < x_max {
                    let j1 = params.setup_cost - params.c_bar * x as f64 + best_val[x];
                    if j1 < g_here {
                        v = j1;
                        act = Action::OrderUpTo(best_y[x]);
                    }
                }
                if may_stop {
                    let s = stop_value(t, x);
                    if s <= v {
                        v = s;
                        act = Action::Stop;
                    }
                }
                if act == Action::OrderUpTo(x_max) {
                    return Err(Error::CapSaturated { t, x_max });
                }
                values[t * slab + z * width + x] = v;
                actions[t * slab + z * width + x] = act;
            }
        }
    }

    Ok((
        ValueGrid {
            horizon,
            x_max,
            layers,
            values,
            continuation,
        },
        PolicyTable {
            spec,
            horizon,
            x_max,
            stop_epoch,
            actions,
        },
    ))
}

/// Ṽ(0, x) for every x, plus the chosen switching epochs for static models.
#[derive(Debug, Clone)]
pub struct InitialValues {
    pub reformulated: Vec<f64>,
    pub a: f64,
    /// Best switching epoch per x (static models only).
    pub switch_epoch: Option<Vec<usize>>,
}

impl InitialValues {
    /// Ṽ(0, x) + A.
    pub fn total(&self, x: usize) -> f64 {
        self.reformulated[x] + self.a
    }
}

fn initial_values_in(
    spec: ModelSpec,
    kernels: &KernelTable,
    params: &CostParameters,
    demand: &DemandTable,
    form: CostForm,
) -> Result<(Vec<f64>, Option<Vec<usize>>)> {
    let horizon = kernels.horizon();
    let z0 = spec.initial_budget();
    let width = kernels.x_max() + 1;
    match spec.stop {
        StopMode::Dynamic | StopMode::Never => {
            let (grid, _) = run_dp(spec, kernels, params, demand, form, horizon)?;
            Ok(((0..width).map(|x| grid.value(0, x, z0)).collect(), None))
        }
        StopMode::Static => {
            let mut best = vec![f64::INFINITY; width];
            let mut epoch = vec![0usize; width];
            for k in 0..=horizon {
                let (grid, _) = run_dp(spec, kernels, params, demand, form, k)?;
                for x in 0..width {
                    let v = grid.value(0, x, z0);
                    if v < best[x] {
                        best[x] = v;
                        epoch[x] = k;
                    }
                }
            }
            Ok((best, Some(epoch)))
        }
    }
}

/// Ṽ(0, x) for all x ∈ 0..=x_max. A static model sweeps every switching
/// epoch and keeps, per x, the best one (earliest on ties).
pub fn initial_values(
    spec: ModelSpec,
    kernels: &KernelTable,
    params: &CostParameters,
    model: &IntensityModel,
) -> Result<InitialValues> {
    spec.validate()?;
    check_inputs(kernels, params, model, 0)?;
    let demand = DemandTable::new(model);
    let (reformulated, switch_epoch) = initial_values_in(spec, kernels, params, &demand, CostForm::Reformulated)?;
    Ok(InitialValues {
        reformulated,
        a: kernels.a(),
        switch_epoch,
    })
}

/// Solve the model for initial stock `x0`.
pub fn solve(
    spec: ModelSpec,
    kernels: &KernelTable,
    params: &CostParameters,
    model: &IntensityModel,
    x0: usize,
) -> Result<Solution> {
    spec.validate()?;
    check_inputs(kernels, params, model, x0)?;
    let demand = DemandTable::new(model);
    let stop_epoch = match spec.stop {
        StopMode::Static => {
            let (_, epochs) = initial_values_in(spec, kernels, params, &demand, CostForm::Reformulated)?;
            epochs.expect("static sweep reports epochs")[x0]
        }
        _ => kernels.horizon(),
    };
    let (values, policy) = run_dp(spec, kernels, params, &demand, CostForm::Reformulated, stop_epoch)?;
    let reformulated_value = values.value(0, x0, spec.initial_budget());
    let a = kernels.a();
    Ok(Solution {
        values,
        policy,
        reformulated_value,
        a,
        total_cost: reformulated_value + a,
        x0,
    })
}

/// V(0, x0) from the recursion on C and S(k, x) without the reformulation.
/// Intended for cross-checking `solve` on small instances.
pub fn solve_original_form(
    spec: ModelSpec,
    kernels: &KernelTable,
    params: &CostParameters,
    model: &IntensityModel,
    x0: usize,
) -> Result<f64> {
    spec.validate()?;
    check_inputs(kernels, params, model, x0)?;
    let demand = DemandTable::new(model);
    let (values, _) = initial_values_in(spec, kernels, params, &demand, CostForm::Original)?;
    Ok(values[x0])
}

/// Stop, order and continue sets of one epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Regions {
    pub stop: Vec<usize>,
    /// (x, order-up-to level y(x)).
    pub order: Vec<(usize, usize)>,
    pub cont: Vec<usize>,
}

/// Regions at epoch `t` for the initial order budget.
pub fn extract_regions(policy: &PolicyTable, t: usize) -> Result<Regions> {
    extract_regions_at(policy, t, policy.spec().initial_budget())
}

pub fn extract_regions_at(policy: &PolicyTable, t: usize, z: usize) -> Result<Regions> {
    let mut regions = Regions::default();
    for x in 0..=policy.x_max() {
        match policy.action(t, x, z)? {
            Action::Stop => regions.stop.push(x),
            Action::Continue => regions.cont.push(x),
            Action::OrderUpTo(y) => regions.order.push((x, y)),
        }
    }
    Ok(regions)
}

/// Per epoch t ∈ 0..T, the map x ↦ y(x) over the ordering set at the
/// initial budget.
pub fn order_up_to_profile(policy: &PolicyTable) -> Vec<BTreeMap<usize, usize>> {
    let z = policy.spec().initial_budget();
    (0..policy.horizon())
        .map(|t| {
            (0..=policy.x_max())
                .filter_map(|x| match policy.action(t, x, z) {
                    Ok(Action::OrderUpTo(y)) => Some((x, y)),
                    _ => None,
                })
                .collect()
        })
        .collect()
}
