//! One-parameter ablation sweeps over the scheduled, heatmap-driven run.
//!
//! Every grid value is evaluated under three arms with the same master seed:
//!
//! - `random_crop`: the plan with update frequency 0 (no refreshes),
//! - `localization_only`: the configured plan with `alpha = 1`,
//! - `contrastive_crop`: the configured plan and sampler as given.
//!
//! Rows are ordered by grid value, then arm.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::StatsRow;
use crate::simulator::{run_stats, Arm, SceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    K,
    Alpha,
    Freq,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::Alpha => "alpha",
            Axis::Freq => "freq",
        }
    }

    /// `base` with this axis set to `value`, validated.
    pub fn apply(&self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let cfg = match self {
            Axis::K => RunConfig {
                crop: crate::sampling::CropConfig {
                    k: value,
                    ..base.crop
                },
                ..*base
            },
            Axis::Alpha => RunConfig {
                crop: base.crop.with_alpha(value),
                ..*base
            },
            Axis::Freq => base.with_update_freq(value),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(Axis::K),
            "alpha" => Ok(Axis::Alpha),
            "freq" | "update_freq" => Ok(Axis::Freq),
            other => Err(Error::config(
                "axis",
                format!("`{other}` is not one of k, alpha, freq"),
            )),
        }
    }
}

fn arm_config(arm: Arm, cfg: &RunConfig) -> RunConfig {
    match arm {
        Arm::RandomCrop => cfg.with_update_freq(0.0),
        Arm::LocalizationOnly => RunConfig {
            crop: cfg.crop.with_alpha(1.0),
            ..*cfg
        },
        Arm::ContrastiveCrop => *cfg,
    }
}

/// Runs the sweep. The whole grid is validated before any simulation starts.
pub fn sweep(
    axis: Axis,
    grid: &[f64],
    base: &RunConfig,
    scenes: &[SceneSpec],
    pairs_per_scene_per_epoch: usize,
    tau: f64,
    seed: u64,
) -> Result<Vec<StatsRow>> {
    if grid.is_empty() {
        return Err(Error::config("grid", "needs at least one value"));
    }
    if scenes.is_empty() {
        return Err(Error::config("scenes", "needs at least one scene"));
    }
    if pairs_per_scene_per_epoch == 0 {
        return Err(Error::config("pairs", "must be >= 1"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::config("tau", "must lie in [0, 1]"));
    }
    for s in scenes {
        s.validate()?;
    }
    let configs = grid
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Arm)> = (0..grid.len())
        .flat_map(|i| Arm::ALL.into_iter().map(move |a| (i, a)))
        .collect();
    jobs.par_iter()
        .map(|&(i, arm)| {
            let cfg = arm_config(arm, &configs[i]);
            let stats = run_stats(
                seed,
                &cfg.plan,
                &cfg.crop,
                scenes,
                pairs_per_scene_per_epoch,
                tau,
            )?;
            Ok(StatsRow::new(
                axis.as_str(),
                grid[i],
                arm.as_str(),
                &stats,
                seed,
            ))
        })
        .collect()
}
