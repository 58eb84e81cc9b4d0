//! Training-time schedule: when localization boxes refresh and which
//! sampler is active in each epoch.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::heatmap::{localize, Heatmap};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainPlan {
    pub total_epochs: usize,
    /// Fraction of training between box refreshes, in `[0, 0.5]`.
    pub update_freq: f64,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            total_epochs: 100,
            update_freq: 0.2,
        }
    }
}

impl TrainPlan {
    pub fn new(total_epochs: usize, update_freq: f64) -> Result<Self> {
        let plan = Self {
            total_epochs,
            update_freq,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_epochs == 0 {
            return Err(Error::config("total_epochs", "must be >= 1"));
        }
        if !(0.0..=0.5).contains(&self.update_freq) {
            return Err(Error::config("update_freq", "must lie in [0, 0.5]"));
        }
        Ok(())
    }

    pub fn update_epochs(&self) -> Vec<usize> {
        update_epochs(self)
    }

    pub fn sampler_for_epoch(&self, epoch: usize) -> SamplerKind {
        sampler_for_epoch(self, epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    RandomCrop,
    ContrastiveCrop,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::RandomCrop => "random_crop",
            SamplerKind::ContrastiveCrop => "contrastive_crop",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Epochs (0-based) at which boxes are refreshed: `round(i * f * T)` for
/// `i = 1..=floor(1/f)`, restricted to `[1, T - 1]`.
pub fn update_epochs(plan: &TrainPlan) -> Vec<usize> {
    let f = plan.update_freq;
    let total = plan.total_epochs;
    if f <= 0.0 || total < 2 {
        return Vec::new();
    }
    // 1/0.2 lands a hair under 5 in binary; nudge before flooring
    let marks = (1.0 / f + 1e-9).floor() as usize;
    let mut epochs: Vec<usize> = (1..=marks)
        .map(|i| round_half_up(i as f64 * f * total as f64))
        .filter(|&e| e >= 1 && e < total)
        .collect();
    epochs.dedup();
    epochs
}

fn round_half_up(x: f64) -> usize {
    // absorb binary noise such as 2.5000000000000004 vs 2.4999999999999996
    (x + 0.5 + 1e-9).floor() as usize
}

/// RandomCrop until the first refresh, ContrastiveCrop from then on.
pub fn sampler_for_epoch(plan: &TrainPlan, epoch: usize) -> SamplerKind {
    match update_epochs(plan).first() {
        Some(&first) if epoch >= first => SamplerKind::ContrastiveCrop,
        _ => SamplerKind::RandomCrop,
    }
}

/// Per-sample localization boxes. Unseen samples map to the whole image.
///
/// Refreshes happen between epochs and reads within them; the owner of the
/// store is responsible for that phasing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoxStore<T> {
    boxes: BTreeMap<String, Rect<T>>,
}

impl<T: Scalar> BoxStore<T> {
    pub fn new() -> Self {
        Self {
            boxes: BTreeMap::new(),
        }
    }

    pub fn get(&self, sample_id: &str) -> Rect<T> {
        self.boxes
            .get(sample_id)
            .copied()
            .unwrap_or_else(Rect::unit)
    }

    pub fn set(&mut self, sample_id: impl Into<String>, rect: Rect<T>) {
        self.boxes.insert(sample_id.into(), rect);
    }

    /// Normalizes `heatmap`, localizes it at threshold `k` and stores the box.
    pub fn refresh(&mut self, sample_id: impl Into<String>, heatmap: &Heatmap<T>, k: T) -> Rect<T> {
        let rect = localize(&heatmap.normalize().heatmap, k);
        self.set(sample_id, rect);
        rect
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rect<T>)> {
        self.boxes.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// One `id x0 y0 x1 y1` line per sample, sorted by id.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        for (id, r) in &self.boxes {
            writeln!(out, "{id} {} {} {} {}", r.x0(), r.y0(), r.x1(), r.y1()).unwrap();
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut store = Self::new();
        for (i, line) in text.lines().enumerate() {
            let lno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [id, rest @ ..] = &fields[..] else {
                unreachable!("non-empty line has a first field");
            };
            if rest.len() != 4 {
                return Err(Error::parse(lno, "expected `id x0 y0 x1 y1`"));
            }
            let mut c = [T::zero(); 4];
            for (slot, tok) in c.iter_mut().zip(rest) {
                let v = f64::from_str(tok)
                    .map_err(|_| Error::parse(lno, format!("bad number `{tok}`")))?;
                *slot = T::lit(v);
            }
            let rect =
                Rect::new(c[0], c[1], c[2], c[3]).map_err(|e| Error::parse(lno, e.to_string()))?;
            if store.boxes.insert(id.to_string(), rect).is_some() {
                return Err(Error::parse(lno, format!("duplicate id `{id}`")));
            }
        }
        Ok(store)
    }
}
