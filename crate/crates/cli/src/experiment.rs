//! Comparison grids and multi-setting sweeps.

use eol_core::costkernel::{build_kernel_table, CostParameters, KernelTable, LostSalesConvention};
use eol_core::demand::IntensityModel;
use eol_core::solver::{initial_values, InitialValues, ModelSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::settings::Setting;
use crate::CliError;

/// A solved problem instance: the intensity, K-free costs and kernel table.
pub struct Problem {
    pub model: IntensityModel,
    pub params: CostParameters,
    pub kernels: KernelTable,
}

impl Problem {
    pub fn new(
        model: IntensityModel,
        params: CostParameters,
        convention: LostSalesConvention,
        x_max: usize,
    ) -> Result<Self, CliError> {
        let kernels = build_kernel_table(&params, &model, convention, x_max)?;
        Ok(Self { model, params, kernels })
    }

    pub fn for_setting(id: u32, convention: LostSalesConvention, x_max: usize) -> Result<Self, CliError> {
        let s = Setting::from_id(id)?;
        Self::new(s.model()?, s.params(), convention, x_max)
    }

    /// Ṽ(0, ·) + A for one model and setup cost.
    pub fn values(&self, spec: ModelSpec, setup_cost: f64) -> Result<InitialValues, CliError> {
        let params = self.params.with_setup_cost(setup_cost);
        Ok(initial_values(spec, &self.kernels, &params, &self.model)?)
    }
}

/// Values in the (K × x) layout of the result tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub setup_costs: Vec<f64>,
    pub x0: Vec<usize>,
    /// cells[i][j] belongs to setup_costs[i] and x0[j].
    pub cells: Vec<Vec<f64>>,
}

impl Grid {
    pub fn get(&self, k_index: usize, x_index: usize) -> f64 {
        self.cells[k_index][x_index]
    }

    /// Largest absolute cell-wise gap to `other` (same shape).
    pub fn max_abs_diff<R: AsRef<[f64]>>(&self, other: &[R]) -> f64 {
        self.cells
            .iter()
            .zip(other.iter())
            .flat_map(|(a, b)| a.iter().zip(b.as_ref()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn percent_increase(a: f64, b: f64) -> f64 {
    100.0 * (a - b) / b
}

/// 100·(V_a − V_b)/V_b on every (K, x₀) cell.
pub fn compare(
    problem: &Problem,
    model_a: ModelSpec,
    model_b: ModelSpec,
    setup_costs: &[f64],
    x0: &[usize],
) -> Result<Grid, CliError> {
    let cells = setup_costs
        .par_iter()
        .map(|&k| {
            let (va, vb) = rayon::join(|| problem.values(model_a, k), || problem.values(model_b, k));
            let (va, vb) = (va?, vb?);
            Ok(x0.iter().map(|&x| percent_increase(va.total(x), vb.total(x))).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, CliError>>()?;
    Ok(Grid {
        setup_costs: setup_costs.to_vec(),
        x0: x0.to_vec(),
        cells,
    })
}

/// Total costs Ṽ(0, x₀) + A of one model over the grid.
pub fn value_grid(problem: &Problem, spec: ModelSpec, setup_costs: &[f64], x0: &[usize]) -> Result<Grid, CliError> {
    let cells = setup_costs
        .par_iter()
        .map(|&k| {
            let v = problem.values(spec, k)?;
            Ok(x0.iter().map(|&x| v.total(x)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, CliError>>()?;
    Ok(Grid {
        setup_costs: setup_costs.to_vec(),
        x0: x0.to_vec(),
        cells,
    })
}

/// Max, average and min of one cell over a set of settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSummary {
    pub setup_cost: f64,
    pub x0: usize,
    pub max: f64,
    pub max_setting: u32,
    pub avg: f64,
    pub min: f64,
    pub min_setting: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub settings: Vec<u32>,
    pub model_a: ModelSpec,
    pub model_b: ModelSpec,
    pub convention: LostSalesConvention,
    /// Per setting, the comparison grid.
    pub grids: Vec<Grid>,
    pub cells: Vec<CellSummary>,
}

impl SweepResult {
    pub fn cell(&self, setup_cost: f64, x0: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.setup_cost == setup_cost && c.x0 == x0)
    }
}

/// Compare two models over several settings and summarise each cell.
/// Ties for max or min go to the setting listed first.
pub fn sweep(
    settings: &[u32],
    model_a: ModelSpec,
    model_b: ModelSpec,
    setup_costs: &[f64],
    x0: &[usize],
    convention: LostSalesConvention,
    x_max: usize,
) -> Result<SweepResult, CliError> {
    if settings.is_empty() {
        return Err(CliError::Validation("sweep needs at least one setting".into()));
    }
    let grids = settings
        .par_iter()
        .map(|&id| {
            let problem = Problem::for_setting(id, convention, x_max)?;
            compare(&problem, model_a, model_b, setup_costs, x0)
        })
        .collect::<Result<Vec<Grid>, CliError>>()?;

    let mut cells = Vec::new();
    for (i, &k) in setup_costs.iter().enumerate() {
        for (j, &x) in x0.iter().enumerate() {
            let mut summary = CellSummary {
                setup_cost: k,
                x0: x,
                max: f64::NEG_INFINITY,
                max_setting: settings[0],
                avg: 0.0,
                min: f64::INFINITY,
                min_setting: settings[0],
            };
            for (g, &id) in grids.iter().zip(settings) {
                let v = g.get(i, j);
                summary.avg += v / settings.len() as f64;
                if v > summary.max {
                    summary.max = v;
                    summary.max_setting = id;
                }
                if v < summary.min {
                    summary.min = v;
                    summary.min_setting = id;
                }
            }
            cells.push(summary);
        }
    }
    Ok(SweepResult {
        settings: settings.to_vec(),
        model_a,
        model_b,
        convention,
        grids,
        cells,
    })
}
