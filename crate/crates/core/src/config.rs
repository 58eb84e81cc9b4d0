//! Flat `key = value` configuration for the sampler and the training plan.
//!
//! ```text
//! # defaults shown
//! scale_min = 0.2
//! scale_max = 1.0
//! ratio_min = 3/4
//! ratio_max = 4/3
//! k = 0.1
//! alpha = 0.6
//! update_freq = 0.2
//! total_epochs = 100
//! ```
//!
//! Real values accept a plain decimal or an `a/b` fraction. Unknown and
//! repeated keys are errors; omitted keys keep their defaults.

use crate::error::{Error, Result};
use crate::sampling::CropConfig;
use crate::schedule::TrainPlan;

pub const KEYS: [&str; 8] = [
    "scale_min",
    "scale_max",
    "ratio_min",
    "ratio_max",
    "k",
    "alpha",
    "update_freq",
    "total_epochs",
];

/// Sampler settings plus the plan they run under. `update_freq` is kept in
/// sync between the two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub crop: CropConfig,
    pub plan: TrainPlan,
}

impl Default for RunConfig {
    fn default() -> Self {
        let crop = CropConfig::default();
        Self {
            crop,
            plan: TrainPlan {
                update_freq: crop.update_freq,
                ..TrainPlan::default()
            },
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.crop.validate()?;
        self.plan.validate()?;
        if self.crop.update_freq != self.plan.update_freq {
            return Err(Error::config(
                "update_freq",
                "sampler and plan disagree on the update frequency",
            ));
        }
        Ok(())
    }

    pub fn with_update_freq(mut self, f: f64) -> Self {
        self.crop.update_freq = f;
        self.plan.update_freq = f;
        self
    }

    /// Applies one setting without validating the result.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if key == "total_epochs" {
            self.plan.total_epochs = value
                .parse()
                .map_err(|_| Error::config(key, format!("`{value}` is not a whole number")))?;
            return Ok(());
        }
        let slot = match key {
            "scale_min" => &mut self.crop.scale_min,
            "scale_max" => &mut self.crop.scale_max,
            "ratio_min" => &mut self.crop.ratio_min,
            "ratio_max" => &mut self.crop.ratio_max,
            "k" => &mut self.crop.k,
            "alpha" => &mut self.crop.alpha,
            "update_freq" => &mut self.crop.update_freq,
            _ => return Err(Error::UnknownKey(key.to_string())),
        };
        *slot = parse_real(value).map_err(|reason| Error::config(key, reason))?;
        self.plan.update_freq = self.crop.update_freq;
        Ok(())
    }

    /// Builds a validated config from key/value pairs applied over the defaults.
    pub fn from_pairs<K, V, I>(pairs: I) -> Result<Self>
    where
        K: AsRef<str>,
        V: AsRef<str>,
        I: IntoIterator<Item = (K, V)>,
    {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (k, v) in pairs {
            let key = k.as_ref().trim();
            if seen.contains(&key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            cfg.set(key, v.as_ref())?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn to_text(&self) -> String {
        let c = &self.crop;
        format!(
            "scale_min = {}\nscale_max = {}\nratio_min = {}\nratio_max = {}\nk = {}\nalpha = {}\nupdate_freq = {}\ntotal_epochs = {}\n",
            c.scale_min,
            c.scale_max,
            c.ratio_min,
            c.ratio_max,
            c.k,
            c.alpha,
            c.update_freq,
            self.plan.total_epochs
        )
    }
}

fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let num = |t: &str| -> std::result::Result<f64, String> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{text}` is not a number"))
    };
    let v = match text.split_once('/') {
        Some((a, b)) => {
            let d = num(b)?;
            if d == 0.0 {
                return Err(format!("`{text}` divides by zero"));
            }
            num(a)? / d
        }
        None => num(text)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}
