//! The 128 numbered parameter settings of the numerical study.
//!
//! Numbers run over a full factorial design; from the outermost factor in:
//! intensity kind (convex, concave, linear, constant), horizon (50, 100),
//! scrap cost (25, −25), outside-source decline γ (0.01, 1e-6), discount δ
//! (0.005, 1e-6) and lost-sales premium c̄₂ (200, 1000). Every setting is
//! further crossed with the setup costs 0, 1000 and 5000, giving 384 cases.

use eol_core::costkernel::CostParameters;
use eol_core::demand::{IntensityKind, IntensityModel};
use serde::Serialize;

use crate::CliError;

pub const SETTING_COUNT: u32 = 128;
pub const STUDY_SETUP_COSTS: [f64; 3] = [0.0, 1000.0, 5000.0];
pub const STUDY_TOTAL_DEMAND: f64 = 500.0;

const KINDS: [IntensityKind; 4] = [
    IntensityKind::Convex,
    IntensityKind::Concave,
    IntensityKind::Linear,
    IntensityKind::Constant,
];
const HORIZONS: [usize; 2] = [50, 100];
const SCRAP: [f64; 2] = [25.0, -25.0];
const GAMMAS: [f64; 2] = [0.01, 1e-6];
const DELTAS: [f64; 2] = [0.005, 1e-6];
const PREMIUMS: [f64; 2] = [200.0, 1000.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Setting {
    pub id: u32,
    pub kind: IntensityKind,
    pub horizon: usize,
    pub c4: f64,
    pub gamma: f64,
    pub delta: f64,
    pub c2_bar: f64,
}

fn position<T: PartialEq>(values: &[T], v: &T) -> Option<u32> {
    values.iter().position(|x| x == v).map(|i| i as u32)
}

impl Setting {
    pub fn from_id(id: u32) -> Result<Self, CliError> {
        if !(1..=SETTING_COUNT).contains(&id) {
            return Err(CliError::Validation(format!(
                "setting number {id} is outside 1..={SETTING_COUNT}"
            )));
        }
        let mut rest = id - 1;
        let mut digit = |base: u32| {
            let d = rest % base;
            rest /= base;
            d as usize
        };
        // Innermost factor first.
        let c2_bar = PREMIUMS[digit(2)];
        let delta = DELTAS[digit(2)];
        let gamma = GAMMAS[digit(2)];
        let c4 = SCRAP[digit(2)];
        let horizon = HORIZONS[digit(2)];
        let kind = KINDS[digit(4)];
        Ok(Self {
            id,
            kind,
            horizon,
            c4,
            gamma,
            delta,
            c2_bar,
        })
    }

    /// Number of the setting with these factor levels, if it is one.
    pub fn id_of(kind: IntensityKind, horizon: usize, c4: f64, gamma: f64, delta: f64, c2_bar: f64) -> Option<u32> {
        let digits = [
            (position(&KINDS, &kind)?, 4),
            (position(&HORIZONS, &horizon)?, 2),
            (position(&SCRAP, &c4)?, 2),
            (position(&GAMMAS, &gamma)?, 2),
            (position(&DELTAS, &delta)?, 2),
            (position(&PREMIUMS, &c2_bar)?, 2),
        ];
        Some(digits.iter().fold(0, |acc, &(d, base)| acc * base + d) + 1)
    }

    pub fn all() -> impl Iterator<Item = Setting> {
        (1..=SETTING_COUNT).map(|id| Setting::from_id(id).expect("ids in range"))
    }

    /// Cost parameters with K = 0: c̄ = 100, c₁ = 1 and c̄₃ = 200 throughout.
    pub fn params(&self) -> CostParameters {
        CostParameters {
            c4: self.c4,
            gamma: self.gamma,
            delta: self.delta,
            c2_bar: self.c2_bar,
            ..CostParameters::base_case()
        }
    }

    pub fn model(&self) -> Result<IntensityModel, CliError> {
        Ok(IntensityModel::named(self.kind, self.horizon, STUDY_TOTAL_DEMAND)?)
    }
}

/// Parse "1-128", "1,11,24" or a mix such as "1-4,9".
pub fn parse_id_list(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = |part: &str| CliError::Validation(format!("cannot read setting list entry '{part}'"));
    let mut ids = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: u32 = a.trim().parse().map_err(|_| bad(part))?;
            let b: u32 = b.trim().parse().map_err(|_| bad(part))?;
            if a > b {
                return Err(bad(part));
            }
            ids.extend(a..=b);
        } else {
            ids.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    for &id in &ids {
        Setting::from_id(id)?;
    }
    if ids.is_empty() {
        return Err(CliError::Validation("empty setting list".into()));
    }
    Ok(ids)
}
