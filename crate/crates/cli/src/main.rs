use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eol_cli::config::ExperimentConfig;
use eol_cli::experiment::{compare, sweep, Problem};
use eol_cli::report::{self, fmt_value, Manifest};
use eol_cli::settings::{parse_id_list, Setting};
use eol_cli::CliError;
use eol_core::analytics;
use eol_core::costkernel::LostSalesConvention;
use eol_core::sim;
use eol_core::solver::{self, Action, ModelSpec, StopMode};

#[derive(Parser)]
#[command(name = "eol", version, about = "End-of-life spare parts inventory: solve, compare and inspect stop/order policies")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Experiment config (JSON). Without one, the base case is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV reports and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo paths.
    #[arg(long, global = true, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, global = true)]
    convention: Option<LostSalesConvention>,
    /// Largest inventory level on the grid.
    #[arg(long, global = true)]
    xmax: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal total cost per model, setup cost and initial stock.
    Solve {
        /// Models to solve; defaults to the config's list.
        #[arg(long = "model")]
        models: Vec<ModelSpec>,
    },
    /// Percentage increase 100·(V_a − V_b)/V_b over the (K × x) grid.
    Compare {
        #[arg(long)]
        a: ModelSpec,
        #[arg(long)]
        b: ModelSpec,
    },
    /// A comparison over several numbered settings, summarised per cell.
    Sweep {
        #[arg(long)]
        a: ModelSpec,
        #[arg(long)]
        b: ModelSpec,
        /// Setting numbers, e.g. "1-128" or "1,11,24".
        #[arg(long, default_value = "1-128")]
        settings: String,
    },
    /// Stop, order and continue regions of an optimal policy.
    Regions {
        #[arg(long)]
        model: ModelSpec,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        /// Single epoch to print; every epoch goes to the CSV.
        #[arg(long, default_value_t = 0)]
        t: usize,
    },
    /// Distribution of the optimal stopping epoch.
    Taudist {
        #[arg(long, default_value = "D/inf/F")]
        model: ModelSpec,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        #[arg(long, default_value_t = 0)]
        x0: usize,
        /// Also simulate the policy and report empirical frequencies.
        #[arg(long)]
        empirical: bool,
    },
    /// Switching-time bounds and the switching cost curve for stock x.
    Bounds {
        #[arg(long)]
        x: usize,
    },
    /// Monte Carlo evaluation of an optimal policy against its DP value.
    Simulate {
        #[arg(long, default_value = "D/inf/F")]
        model: ModelSpec,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        #[arg(long, default_value_t = 0)]
        x0: usize,
    },
    /// The numbered parameter settings.
    Settings {
        #[command(subcommand)]
        action: SettingsAction,
    },
}

#[derive(Subcommand)]
enum SettingsAction {
    List,
}

fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::base_case(),
    };
    if let Some(c) = global.convention {
        config.convention = c;
    }
    if let Some(x) = global.xmax {
        config.x_max = x;
    }
    if global.out.is_some() {
        config.output_dir = global.out.clone();
    }
    config.validate_shape()?;
    Ok(config)
}

fn problem(config: &ExperimentConfig) -> Result<Problem, CliError> {
    let (model, params) = config.problem()?;
    Problem::new(model, params, config.convention, config.x_max)
}

fn finish(mut manifest: Manifest, out: Option<&Path>, files: Vec<PathBuf>) -> Result<(), CliError> {
    if let Some(dir) = out {
        manifest.outputs = files;
        let path = manifest.write(dir)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn action_label(a: Action) -> String {
    match a {
        Action::Stop => "stop".into(),
        Action::Continue => "continue".into(),
        Action::OrderUpTo(y) => format!("order up to {y}"),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Settings {
        action: SettingsAction::List,
    } = cli.command
    {
        println!("{:>4} {:>9} {:>4} {:>6} {:>8} {:>8} {:>6}", "#", "lambda", "T", "c4", "gamma", "delta", "c2_bar");
        for s in Setting::all() {
            println!(
                "{:>4} {:>9} {:>4} {:>6} {:>8} {:>8} {:>6}",
                s.id,
                s.kind.label(),
                s.horizon,
                s.c4,
                s.gamma,
                s.delta,
                s.c2_bar
            );
        }
        return Ok(());
    }

    let global = &cli.global;
    let config = load_config(global)?;
    let out = config.output_dir.clone();
    let out = out.as_deref();
    let config_json = config.to_json();

    match cli.command {
        Command::Settings { .. } => unreachable!("handled above"),

        Command::Solve { models } => {
            let models = if models.is_empty() { config.models.clone() } else { models };
            if models.is_empty() {
                return Err(CliError::Validation("models: give --model or list models in the config".into()));
            }
            let mut manifest = Manifest::new("solve", &config_json, None);
            let problem = manifest.time("kernels", || problem(&config))?;
            let mut rows = Vec::new();
            println!("{:>10} {:>8} {:>6} {:>14} {:>8}", "model", "K", "x0", "total cost", "epoch");
            for spec in &models {
                for &k in &config.setup_costs {
                    let values = manifest.time(&format!("{spec} K={k}"), || problem.values(*spec, k))?;
                    for &x in &config.x0 {
                        let epoch = values.switch_epoch.as_ref().map(|e| e[x].to_string()).unwrap_or_default();
                        println!("{:>10} {:>8} {:>6} {:>14.2} {:>8}", spec.to_string(), k, x, values.total(x), epoch);
                        rows.push(vec![
                            spec.to_string(),
                            fmt_value(k, 0),
                            x.to_string(),
                            fmt_value(values.total(x), 4),
                            fmt_value(values.reformulated[x], 4),
                            fmt_value(values.a, 4),
                            epoch,
                        ]);
                    }
                }
            }
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join("values.csv");
                report::write_csv(&path, &["model", "K", "x0", "total", "reformulated", "A", "switch_epoch"], rows)?;
                files.push(path);
            }
            finish(manifest, out, files)
        }

        Command::Compare { a, b } => {
            let mut manifest = Manifest::new("compare", &config_json, None);
            let problem = manifest.time("kernels", || problem(&config))?;
            let grid = manifest.time("solve", || compare(&problem, a, b, &config.setup_costs, &config.x0))?;
            print!("{}", report::render_grid(&format!("100*({a} - {b})/{b}"), &grid, 2));
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join(format!("compare_{}_vs_{}.csv", file_tag(a), file_tag(b)));
                report::write_grid(&path, &grid, 4)?;
                files.push(path);
            }
            finish(manifest, out, files)
        }

        Command::Sweep { a, b, settings } => {
            let ids = parse_id_list(&settings)?;
            let mut manifest = Manifest::new("sweep", &config_json, None);
            let result = manifest.time("sweep", || {
                sweep(&ids, a, b, &config.setup_costs, &config.x0, config.convention, config.x_max)
            })?;
            println!("100*({a} - {b})/{b} over {} settings ({})", ids.len(), config.convention);
            println!("{:>8} {:>6} {:>9} {:>5} {:>9} {:>9} {:>5}", "K", "x", "max", "set", "avg", "min", "set");
            for c in &result.cells {
                println!(
                    "{:>8} {:>6} {:>9.2} {:>5} {:>9.2} {:>9.2} {:>5}",
                    c.setup_cost, c.x0, c.max, c.max_setting, c.avg, c.min, c.min_setting
                );
            }
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join(format!("sweep_{}_vs_{}.csv", file_tag(a), file_tag(b)));
                report::write_sweep(&path, &result)?;
                files.push(path);
            }
            finish(manifest, out, files)
        }

        Command::Regions { model, k, t } => {
            let mut manifest = Manifest::new("regions", &config_json, None);
            let problem = manifest.time("kernels", || problem(&config))?;
            let params = problem.params.with_setup_cost(k);
            let x0 = config.x0.first().copied().unwrap_or(0);
            let sol = manifest.time("solve", || solver::solve(model, &problem.kernels, &params, &problem.model, x0))?;
            if t >= sol.policy.horizon() {
                return Err(CliError::Validation(format!(
                    "t: epoch {t} is not a review epoch before the horizon {}",
                    sol.policy.horizon()
                )));
            }
            let mut rows = Vec::new();
            for epoch in 0..sol.policy.horizon() {
                let runs = action_runs(&sol.policy, epoch)?;
                if epoch == t {
                    println!("{model} K={k} epoch {t}:");
                    for (from, to, act) in &runs {
                        println!("  x in [{from}, {to}]: {}", action_label(*act));
                    }
                }
                for (from, to, act) in runs {
                    let (kind, target) = match act {
                        Action::Stop => ("stop", String::new()),
                        Action::Continue => ("continue", String::new()),
                        Action::OrderUpTo(y) => ("order", y.to_string()),
                    };
                    rows.push(vec![epoch.to_string(), kind.into(), from.to_string(), to.to_string(), target]);
                }
            }
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join(format!("regions_{}.csv", file_tag(model)));
                report::write_csv(&path, &["t", "region", "x_from", "x_to", "order_up_to"], rows)?;
                files.push(path);
            }
            finish(manifest, out, files)
        }

        Command::Taudist { model, k, x0, empirical } => {
            let mut manifest = Manifest::new("taudist", &config_json, empirical.then_some(global.seed));
            let problem = manifest.time("kernels", || problem(&config))?;
            let params = problem.params.with_setup_cost(k);
            let sol = manifest.time("solve", || solver::solve(model, &problem.kernels, &params, &problem.model, x0))?;
            let dist = manifest.time("distribution", || {
                analytics::stopping_time_distribution(&sol.policy, &problem.model, x0)
            })?;
            let hist = if empirical {
                let outcomes = manifest.time("simulate", || {
                    sim::simulate(&sol.policy, &params, &problem.model, x0, global.paths, global.seed)
                })?;
                Some(sim::stop_histogram(&outcomes, sol.policy.horizon()))
            } else {
                None
            };
            println!("{model} K={k} x0={x0}: mean stopping epoch {:.3}", dist.mean());
            let mut rows = Vec::new();
            for (m, p) in dist.mass.iter().enumerate() {
                let emp = hist.as_ref().map(|h| fmt_value(h[m], 6)).unwrap_or_default();
                if *p > 5e-4 {
                    println!("  {m:>4} {p:.4} {emp}");
                }
                rows.push(vec![m.to_string(), fmt_value(*p, 10), emp]);
            }
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join(format!("taudist_{}.csv", file_tag(model)));
                report::write_csv(&path, &["m", "probability", "empirical"], rows)?;
                files.push(path);
            }
            finish(manifest, out, files)
        }

        Command::Bounds { x } => {
            let mut manifest = Manifest::new("bounds", &config_json, None);
            let (model, params) = config.problem()?;
            let report = analytics::validate_assumptions(&params, &model);
            for line in &report.failures {
                eprintln!("{line}");
            }
            let bounds = analytics::switch_time_bounds_with_step(&params, &model, x, config.tau_step)?;
            let curve = manifest.time("curve", || analytics::switch_cost_curve(&params, &model, x, config.tau_step))?;
            let (tau, cost) = curve.argmin();
            println!("x = {x}: tau_lb = {:.2}, tau_ub = {:.2}", bounds.lb, bounds.ub);
            println!("grid minimum of C(x, tau): tau = {tau:.2}, cost = {cost:.2}");
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join(format!("switch_cost_x{x}.csv"));
                let rows = (0..curve.tau_grid.len()).map(|i| {
                    vec![
                        fmt_value(curve.tau_grid[i], 4),
                        fmt_value(curve.values[i], 6),
                        fmt_value(curve.first_differences[i], 6),
                        fmt_value(curve.second_differences[i], 8),
                    ]
                });
                report::write_csv(&path, &["tau", "cost", "delta_x", "delta2_x"], rows)?;
                files.push(path);
            }
            finish(manifest, out, files)
        }

        Command::Simulate { model, k, x0 } => {
            let mut manifest = Manifest::new("simulate", &config_json, Some(global.seed));
            let problem = manifest.time("kernels", || problem(&config))?;
            let params = problem.params.with_setup_cost(k);
            let sol = manifest.time("solve", || solver::solve(model, &problem.kernels, &params, &problem.model, x0))?;
            let est = manifest.time("simulate", || {
                sim::evaluate_policy(&sol.policy, &params, &problem.model, x0, global.paths, global.seed)
            })?;
            println!("{model} K={k} x0={x0}");
            println!("  dynamic program: {:.2}", sol.total_cost);
            println!(
                "  simulation:      {:.2} +/- {:.2} ({} paths), z = {:.2}",
                est.mean,
                est.std_error,
                est.paths,
                est.z_score(sol.total_cost)
            );
            if model.stop == StopMode::Static {
                println!("  switching epoch: {}", sol.policy.stop_epoch());
            }
            let mut files = Vec::new();
            if let Some(dir) = out {
                let path = dir.join("simulate.csv");
                report::write_csv(
                    &path,
                    &["model", "K", "x0", "dp", "mean", "std_error", "paths", "seed"],
                    [vec![
                        model.to_string(),
                        fmt_value(k, 0),
                        x0.to_string(),
                        fmt_value(sol.total_cost, 4),
                        fmt_value(est.mean, 4),
                        fmt_value(est.std_error, 4),
                        est.paths.to_string(),
                        est.seed.to_string(),
                    ]],
                )?;
                files.push(path);
            }
            finish(manifest, out, files)
        }
    }
}

/// Maximal runs of equal actions over x at one epoch, as (from, to, action).
fn action_runs(policy: &solver::PolicyTable, t: usize) -> Result<Vec<(usize, usize, Action)>, CliError> {
    let z = policy.spec().initial_budget();
    let mut runs: Vec<(usize, usize, Action)> = Vec::new();
    for x in 0..=policy.x_max() {
        let act = policy.action(t, x, z)?;
        match runs.last_mut() {
            Some((_, to, prev)) if *prev == act => *to = x,
            _ => runs.push((x, x, act)),
        }
    }
    Ok(runs)
}

fn file_tag(spec: ModelSpec) -> String {
    spec.to_string().replace('/', "")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
