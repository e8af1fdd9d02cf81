//! Non-homogeneous Poisson demand with intensity constant on unit periods.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson;

/// How an intensity model was constructed. Carries no semantics beyond that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityKind {
    Convex,
    Concave,
    Linear,
    Constant,
    Custom,
}

impl IntensityKind {
    pub fn label(self) -> &'static str {
        match self {
            IntensityKind::Convex => "convex",
            IntensityKind::Concave => "concave",
            IntensityKind::Linear => "linear",
            IntensityKind::Constant => "constant",
            IntensityKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for IntensityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "convex" => Ok(IntensityKind::Convex),
            "concave" => Ok(IntensityKind::Concave),
            "linear" => Ok(IntensityKind::Linear),
            "constant" => Ok(IntensityKind::Constant),
            "custom" => Ok(IntensityKind::Custom),
            other => Err(Error::InvalidInput(format!("unknown intensity kind '{other}'"))),
        }
    }
}

/// Piecewise-constant intensity: `rates[t]` is the demand rate on `[t, t+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityModel {
    kind: IntensityKind,
    rates: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

/// Arrival times of one demand realisation, strictly increasing in `(0, T]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSample {
    pub arrivals: Vec<f64>,
}

impl PathSample {
    /// Number of arrivals in the half-open window `(a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        let lo = self.arrivals.partition_point(|&t| t <= a);
        let hi = self.arrivals.partition_point(|&t| t <= b);
        hi - lo
    }
}

impl IntensityModel {
    /// Wrap an explicit rate table.
    pub fn from_rates(rates: Vec<f64>) -> Result<Self> {
        Self::with_kind(IntensityKind::Custom, rates)
    }

    fn with_kind(kind: IntensityKind, rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidInput("intensity needs at least one period".into()));
        }
        if let Some((t, r)) = rates.iter().enumerate().find(|(_, r)| !r.is_finite() || **r < 0.0) {
            return Err(Error::InvalidInput(format!("rate {r} on period {t} is not a non-negative number")));
        }
        let mut cumulative = Vec::with_capacity(rates.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for r in &rates {
            acc += r;
            cumulative.push(acc);
        }
        Ok(Self {
            kind,
            rates,
            cumulative,
        })
    }

    /// Parse a plain-text table with one rate per line. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut rates = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let r: f64 = line
                .parse()
                .map_err(|_| Error::InvalidInput(format!("line {}: '{line}' is not a number", lineno + 1)))?;
            rates.push(r);
        }
        Self::from_rates(rates)
    }

    /// One of the four named shapes, scaled so that expected total demand
    /// over the horizon equals `total_demand`.
    ///
    /// At horizons 50 and 100 the shapes are
    ///
    /// | kind     | T = 50               | T = 100              |
    /// |----------|----------------------|----------------------|
    /// | convex   | λ0 · 0.9^t           | λ0 · 0.96^t          |
    /// | concave  | λ0 − (0.045 t)^3     | λ0 − (0.015 t)^3     |
    /// | linear   | λ0 − 0.392 t         | λ0 − 0.099 t         |
    /// | constant | λ0                   | λ0                   |
    ///
    /// evaluated at t = 0..T−1. Other horizons borrow the shape of the nearer
    /// of the two (50 below 75, otherwise 100) and choose the shape coefficient
    /// so that the ratio between the last and first rate is the same as in
    /// that reference shape.
    pub fn named(kind: IntensityKind, horizon: usize, total_demand: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least one period".into()));
        }
        if !(total_demand > 0.0 && total_demand.is_finite()) {
            return Err(Error::InvalidInput(format!("total demand must be positive, got {total_demand}")));
        }
        let fail = || Error::NonNormalizable {
            horizon,
            total: total_demand,
        };
        let rates = match (kind, horizon) {
            (IntensityKind::Custom, _) => {
                return Err(Error::InvalidInput("custom intensities are built from a rate table".into()))
            }
            (IntensityKind::Constant, _) | (_, 1) => vec![total_demand / horizon as f64; horizon],
            (_, 50) | (_, 100) => reference_shape(kind, horizon, total_demand),
            _ => {
                let t_ref = if horizon < 75 { 50 } else { 100 };
                let reference = reference_shape(kind, t_ref, total_demand);
                if reference.iter().any(|r| *r < 0.0) {
                    return Err(fail());
                }
                let ratio = reference[t_ref - 1] / reference[0];
                matched_shape(kind, horizon, total_demand, ratio).ok_or_else(fail)?
            }
        };
        if rates.iter().any(|r| *r < 0.0 || !r.is_finite()) || rates[0] <= 0.0 {
            return Err(fail());
        }
        Self::with_kind(kind, rates)
    }

    pub fn kind(&self) -> IntensityKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Expected demand over the whole horizon.
    pub fn total(&self) -> f64 {
        self.cumulative[self.rates.len()]
    }

    /// λ(u), right-continuous; λ(T) is taken as the rate on the last period.
    pub fn rate_at(&self, u: f64) -> f64 {
        let t = (u.max(0.0).floor() as usize).min(self.rates.len() - 1);
        self.rates[t]
    }

    /// Λ(t) = ∫_0^t λ(u) du.
    pub fn mean_value(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(0.0..=horizon as f64).contains(&t) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        Ok(self.mean_value_unchecked(t))
    }

    pub(crate) fn mean_value_unchecked(&self, t: f64) -> f64 {
        let n = self.horizon();
        if t >= n as f64 {
            return self.cumulative[n];
        }
        let k = t.floor() as usize;
        self.cumulative[k] + self.rates[k] * (t - k as f64)
    }

    /// P{N_to − N_from = i}.
    pub fn increment_pmf(&self, from: f64, to: f64, i: usize) -> Result<f64> {
        if from > to {
            return Err(Error::InvalidInput(format!("increment window [{from}, {to}] is reversed")));
        }
        let mu = self.mean_value(to)? - self.mean_value(from)?;
        Ok(poisson::pmf(i, mu))
    }

    /// True when rates never increase from one period to the next.
    pub fn is_non_increasing(&self) -> bool {
        self.rates.windows(2).all(|w| w[1] <= w[0])
    }

    /// One realisation of the arrival process, reproducible from `seed`.
    pub fn sample_path(&self, seed: u64) -> PathSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_path_with(&mut rng)
    }

    /// Draw a Poisson count per period and scatter the arrivals uniformly
    /// inside it. Conditioned on the count, arrival times of a Poisson process
    /// are uniform order statistics, so this is exact.
    pub fn sample_path_with<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSample {
        let mut arrivals = Vec::new();
        for (t, &rate) in self.rates.iter().enumerate() {
            if rate <= 0.0 {
                continue;
            }
            let count = Poisson::new(rate).expect("rate is positive").sample(rng) as usize;
            let start = arrivals.len();
            for _ in 0..count {
                // 1 - U lies in (0, 1], keeping arrivals inside (t, t+1].
                let u: f64 = rng.random();
                arrivals.push(t as f64 + (1.0 - u));
            }
            arrivals[start..].sort_by(|a, b| a.total_cmp(b));
        }
        PathSample { arrivals }
    }
}

fn reference_shape(kind: IntensityKind, horizon: usize, total: f64) -> Vec<f64> {
    let n = horizon as f64;
    let ts = (0..horizon).map(|t| t as f64);
    match kind {
        IntensityKind::Convex => {
            let r: f64 = if horizon == 50 { 0.9 } else { 0.96 };
            let lambda0 = total * (1.0 - r) / (1.0 - r.powi(horizon as i32));
            ts.map(|t| lambda0 * r.powf(t)).collect()
        }
        IntensityKind::Concave => {
            let a = if horizon == 50 { 0.045 } else { 0.015 };
            cubic_shape(horizon, total, a)
        }
        IntensityKind::Linear => {
            let b = if horizon == 50 { 0.392 } else { 0.099 };
            let lambda0 = total / n + b * (n - 1.0) / 2.0;
            ts.map(|t| lambda0 - b * t).collect()
        }
        IntensityKind::Constant | IntensityKind::Custom => vec![total / n; horizon],
    }
}

fn cubic_shape(horizon: usize, total: f64, a: f64) -> Vec<f64> {
    let n = horizon as f64;
    let cubes: f64 = (0..horizon).map(|t| (a * t as f64).powi(3)).sum();
    let lambda0 = (total + cubes) / n;
    (0..horizon).map(|t| lambda0 - (a * t as f64).powi(3)).collect()
}

/// Shape of the same family with rates[T−1] / rates[0] equal to `ratio`.
fn matched_shape(kind: IntensityKind, horizon: usize, total: f64, ratio: f64) -> Option<Vec<f64>> {
    let n = horizon as f64;
    let last = n - 1.0;
    match kind {
        IntensityKind::Convex => {
            let r = ratio.powf(1.0 / last);
            let lambda0 = if (1.0 - r).abs() < 1e-15 {
                total / n
            } else {
                total * (1.0 - r) / (1.0 - r.powi(horizon as i32))
            };
            Some((0..horizon).map(|t| lambda0 * r.powi(t as i32)).collect())
        }
        IntensityKind::Linear => {
            let lambda0 = 2.0 * total / (n * (1.0 + ratio));
            let b = (1.0 - ratio) * lambda0 / last;
            Some((0..horizon).map(|t| lambda0 - b * t as f64).collect())
        }
        IntensityKind::Concave => {
            let end_ratio = |a: f64| {
                let r = cubic_shape(horizon, total, a);
                r[horizon - 1] / r[0]
            };
            // The ratio falls monotonically as the cubic coefficient grows.
            let mut hi = 1e-3;
            while end_ratio(hi) > ratio {
                hi *= 2.0;
                if hi > 1e6 {
                    return None;
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if end_ratio(mid) > ratio {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(cubic_shape(horizon, total, 0.5 * (lo + hi)))
        }
        IntensityKind::Constant | IntensityKind::Custom => Some(vec![total / n; horizon]),
    }
}
