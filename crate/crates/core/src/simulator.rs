//! Synthetic scenes and the Monte-Carlo harness.
//!
//! A scene is one ground-truth object box plus a model of how the learned
//! heatmap evolves over training: every grid cell that overlaps the object
//! carries `sharpness(progress)`, cells outside decay with the distance from
//! their center to the object (`spread` is the Gaussian length scale, 0 means
//! a hard edge), and
//! uniform noise on `[0, noise)` is added everywhere before normalization.
//!
//! Every random draw comes from a stream keyed by what it is for (pairs or
//! heatmap, scene index, epoch or block), so results do not depend on how
//! work is scheduled across threads.
//!
//! # Scene files
//!
//! ```text
//! # comments and blank lines are ignored
//! [scene]
//! object = 0.25 0.25 0.75 0.75     # x0 y0 x1 y1, required
//! grid = 16 16                     # rows cols, required, at least 2x2
//! noise = 0.2                      # default 0
//! spread = 0.05                    # default 0
//! sharpness = 0:0 1:5              # progress:value breakpoints, default 0:0 1:5
//! ```
//!
//! Each `[scene]` header starts a new record. Unknown keys and repeated keys
//! are errors.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{intersection_area, Rect};
use crate::heatmap::Heatmap;
use crate::metrics::PairStats;
use crate::rng::{stream_key, RngStream};
use crate::sampling::{
    contrastive_crop, place_in_box, place_uniform, random_crop, BetaSymmetric, CropConfig,
    CropDraws,
};
use crate::schedule::{BoxStore, SamplerKind, TrainPlan};

const TAG_PAIRS: u8 = 1;
const TAG_HEATMAP: u8 = 2;
const TAG_ORACLE: u8 = 3;
const TAG_SCENES: u8 = 4;

/// Pairs per independent stream in [`compare_samplers`].
pub const BLOCK_PAIRS: usize = 8192;

/// Piecewise-linear map from training progress in `[0, 1]` to signal
/// strength, constant beyond the first and last breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessSchedule {
    points: Vec<(f64, f64)>,
}

impl Default for SharpnessSchedule {
    fn default() -> Self {
        Self {
            points: vec![(0.0, 0.0), (1.0, 5.0)],
        }
    }
}

impl SharpnessSchedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("sharpness", "needs at least one breakpoint"));
        }
        for &(p, v) in &points {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(
                    "sharpness",
                    format!("progress {p} outside [0, 1]"),
                ));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    "sharpness",
                    format!("value {v} must be >= 0"),
                ));
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config(
                "sharpness",
                "breakpoints must be strictly increasing in progress",
            ));
        }
        Ok(Self { points })
    }

    /// Constant schedule.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![(0.0, value)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn at(&self, progress: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if progress <= first.0 {
            return first.1;
        }
        if progress >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|&(p, _)| p <= progress);
        let (p0, v0) = pts[i - 1];
        let (p1, v1) = pts[i];
        v0 + (v1 - v0) * (progress - p0) / (p1 - p0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub object_box: Rect<f64>,
    pub heatmap_rows: usize,
    pub heatmap_cols: usize,
    pub noise_level: f64,
    /// Length scale of the falloff outside the object, in normalized units.
    pub spread: f64,
    pub sharpness: SharpnessSchedule,
}

impl SceneSpec {
    pub fn new(object_box: Rect<f64>, heatmap_rows: usize, heatmap_cols: usize) -> Self {
        Self {
            object_box,
            heatmap_rows,
            heatmap_cols,
            noise_level: 0.0,
            spread: 0.0,
            sharpness: SharpnessSchedule::default(),
        }
    }

    pub fn with_noise(self, noise_level: f64) -> Self {
        Self {
            noise_level,
            ..self
        }
    }

    pub fn with_spread(self, spread: f64) -> Self {
        Self { spread, ..self }
    }

    pub fn with_sharpness(self, sharpness: SharpnessSchedule) -> Self {
        Self { sharpness, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heatmap_rows < 2 || self.heatmap_cols < 2 {
            return Err(Error::config("grid", "must be at least 2x2"));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::config("noise", "must be a finite value >= 0"));
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return Err(Error::config("spread", "must be a finite value >= 0"));
        }
        Ok(())
    }

    pub fn object_area(&self) -> f64 {
        self.object_box.area()
    }
}

/// Draws a scene with object area uniform on `[area_min, area_max]`, aspect
/// ratio log-uniform on `[1/2, 2]` and position uniform over the image.
pub fn random_scene(rng: &mut RngStream, area_min: f64, area_max: f64) -> Result<SceneSpec> {
    if !(0.0 < area_min && area_min <= area_max && area_max <= 1.0) {
        return Err(Error::config("area", "need 0 < area_min <= area_max <= 1"));
    }
    let area = rng.uniform(area_min, area_max);
    let ratio = rng.uniform(0.5f64.ln(), 2.0f64.ln()).exp();
    let h = (area * ratio).sqrt().min(1.0);
    let w = (area / h).min(1.0);
    let x0 = rng.next_f64() * (1.0 - w);
    let y0 = rng.next_f64() * (1.0 - h);
    let object = Rect::new(x0, y0, (x0 + w).min(1.0), (y0 + h).min(1.0))?;
    Ok(SceneSpec::new(object, 16, 16)
        .with_noise(0.2)
        .with_spread(0.05))
}

/// `n` scenes from [`random_scene`], each on its own stream.
pub fn random_scenes(seed: u64, n: usize, area_min: f64, area_max: f64) -> Result<Vec<SceneSpec>> {
    (0..n)
        .map(|i| {
            random_scene(
                &mut RngStream::new(seed, stream_key(TAG_SCENES, 0, i as u64)),
                area_min,
                area_max,
            )
        })
        .collect()
}

fn point_distance((x, y): (f64, f64), r: &Rect<f64>) -> f64 {
    let dx = (r.x0() - x).max(x - r.x1()).max(0.0);
    let dy = (r.y0() - y).max(y - r.y1()).max(0.0);
    dx.hypot(dy)
}

/// Normalized heatmap for `scene` at training `progress`.
///
/// Draws exactly one noise value per cell, row-major, even when the noise
/// level is zero.
pub fn synth_heatmap(
    rng: &mut RngStream,
    scene: &SceneSpec,
    progress: f64,
) -> Result<Heatmap<f64>> {
    scene.validate()?;
    let (rows, cols) = (scene.heatmap_rows, scene.heatmap_cols);
    let strength = scene.sharpness.at(progress.clamp(0.0, 1.0));
    let object = &scene.object_box;
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let cell = Rect::new(
                c as f64 / cols as f64,
                r as f64 / rows as f64,
                (c + 1) as f64 / cols as f64,
                (r + 1) as f64 / rows as f64,
            )?;
            let signal = if intersection_area(&cell, object) > 0.0 {
                strength
            } else if scene.spread > 0.0 {
                let d = point_distance(cell.center(), object) / scene.spread;
                strength * (-0.5 * d * d).exp()
            } else {
                0.0
            };
            let noise = rng.next_f64() * scene.noise_level;
            values.push(signal + noise);
        }
    }
    Ok(Heatmap::new(rows, cols, values)?.normalize().heatmap)
}

/// Two views of one scene sampled in the same epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub scene: usize,
    pub epoch: usize,
    pub kind: SamplerKind,
    pub crop_a: Rect<f64>,
    pub crop_b: Rect<f64>,
}

fn check_crop(crop: &Rect<f64>) -> Result<()> {
    if Rect::unit().contains_rect(crop) && crop.area() > 0.0 {
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!(
            "crop {:?} leaves the image",
            crop.to_array()
        )))
    }
}

fn check_inputs(plan: &TrainPlan, cfg: &CropConfig, pairs_per_epoch: usize) -> Result<()> {
    plan.validate()?;
    cfg.validate()?;
    if pairs_per_epoch == 0 {
        return Err(Error::config("pairs", "must be >= 1"));
    }
    Ok(())
}

/// Runs the schedule for one scene, feeding every pair to `sink` in epoch
/// order. Boxes refresh at the plan's update epochs from a synthetic heatmap
/// at progress `epoch / total_epochs`.
pub fn simulate_scene<F>(
    master_seed: u64,
    plan: &TrainPlan,
    cfg: &CropConfig,
    scene_index: usize,
    scene: &SceneSpec,
    pairs_per_epoch: usize,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(PairSample) -> Result<()>,
{
    check_inputs(plan, cfg, pairs_per_epoch)?;
    scene.validate()?;
    let updates = plan.update_epochs();
    let id = format!("scene-{scene_index}");
    let mut store = BoxStore::<f64>::new();
    let scene_key = scene_index as u64;
    for epoch in 0..plan.total_epochs {
        if updates.binary_search(&epoch).is_ok() {
            let mut rng = RngStream::new(
                master_seed,
                stream_key(TAG_HEATMAP, scene_key, epoch as u64),
            );
            let progress = epoch as f64 / plan.total_epochs as f64;
            let heatmap = synth_heatmap(&mut rng, scene, progress)?;
            store.refresh(id.as_str(), &heatmap, cfg.k);
        }
        let kind = plan.sampler_for_epoch(epoch);
        let bbox = store.get(&id);
        let mut rng = RngStream::new(master_seed, stream_key(TAG_PAIRS, scene_key, epoch as u64));
        for _ in 0..pairs_per_epoch {
            let (crop_a, crop_b) = match kind {
                SamplerKind::RandomCrop => {
                    (random_crop(&mut rng, cfg)?, random_crop(&mut rng, cfg)?)
                }
                SamplerKind::ContrastiveCrop => (
                    contrastive_crop(&mut rng, cfg, &bbox)?,
                    contrastive_crop(&mut rng, cfg, &bbox)?,
                ),
            };
            check_crop(&crop_a)?;
            check_crop(&crop_b)?;
            sink(PairSample {
                scene: scene_index,
                epoch,
                kind,
                crop_a,
                crop_b,
            })?;
        }
    }
    Ok(())
}

/// Full scheduled run over all scenes, epoch-major: all pairs of epoch 0
/// (scene by scene), then epoch 1, and so on.
pub fn run_experiment(
    master_seed: u64,
    plan: &TrainPlan,
    cfg: &CropConfig,
    scenes: &[SceneSpec],
    pairs_per_scene_per_epoch: usize,
) -> Result<Vec<PairSample>> {
    check_inputs(plan, cfg, pairs_per_scene_per_epoch)?;
    let per_scene: Vec<Vec<PairSample>> = scenes
        .par_iter()
        .enumerate()
        .map(|(i, scene)| {
            let mut out = Vec::with_capacity(plan.total_epochs * pairs_per_scene_per_epoch);
            simulate_scene(
                master_seed,
                plan,
                cfg,
                i,
                scene,
                pairs_per_scene_per_epoch,
                |p| {
                    out.push(p);
                    Ok(())
                },
            )?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let p = pairs_per_scene_per_epoch;
    let mut pairs = Vec::with_capacity(per_scene.iter().map(Vec::len).sum());
    for epoch in 0..plan.total_epochs {
        for scene_pairs in &per_scene {
            pairs.extend_from_slice(&scene_pairs[epoch * p..(epoch + 1) * p]);
        }
    }
    Ok(pairs)
}

/// Scheduled run summarized per scene and sampler kind, in scene order with
/// RandomCrop before ContrastiveCrop. Kinds that never ran are omitted.
pub fn evaluate_run(
    master_seed: u64,
    plan: &TrainPlan,
    cfg: &CropConfig,
    scenes: &[SceneSpec],
    pairs_per_scene_per_epoch: usize,
    tau: f64,
) -> Result<Vec<(usize, SamplerKind, PairStats)>> {
    check_inputs(plan, cfg, pairs_per_scene_per_epoch)?;
    let per_scene: Vec<[PairStats; 2]> = scenes
        .par_iter()
        .enumerate()
        .map(|(i, scene)| {
            let mut acc = [PairStats::default(); 2];
            simulate_scene(
                master_seed,
                plan,
                cfg,
                i,
                scene,
                pairs_per_scene_per_epoch,
                |p| {
                    let slot = match p.kind {
                        SamplerKind::RandomCrop => 0,
                        SamplerKind::ContrastiveCrop => 1,
                    };
                    acc[slot].record(&p.crop_a, &p.crop_b, &scene.object_box, tau);
                    Ok(())
                },
            )?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let kinds = [SamplerKind::RandomCrop, SamplerKind::ContrastiveCrop];
    Ok(per_scene
        .into_iter()
        .enumerate()
        .flat_map(|(i, acc)| {
            kinds
                .into_iter()
                .zip(acc)
                .filter(|(_, s)| s.n_pairs() > 0)
                .map(move |(k, s)| (i, k, s))
        })
        .collect())
}

/// Scheduled run reduced to one [`PairStats`] over every pair of every scene.
pub fn run_stats(
    master_seed: u64,
    plan: &TrainPlan,
    cfg: &CropConfig,
    scenes: &[SceneSpec],
    pairs_per_scene_per_epoch: usize,
    tau: f64,
) -> Result<PairStats> {
    check_inputs(plan, cfg, pairs_per_scene_per_epoch)?;
    let per_scene: Vec<PairStats> = scenes
        .par_iter()
        .enumerate()
        .map(|(i, scene)| {
            let mut acc = PairStats::default();
            simulate_scene(
                master_seed,
                plan,
                cfg,
                i,
                scene,
                pairs_per_scene_per_epoch,
                |p| {
                    acc.record(&p.crop_a, &p.crop_b, &scene.object_box, tau);
                    Ok(())
                },
            )?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = PairStats::default();
    per_scene.iter().for_each(|s| total.merge(s));
    Ok(total)
}

/// The three samplers being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    /// Uniform placement over the whole image.
    RandomCrop,
    /// Center uniform inside the localization box (Beta(1, 1)).
    LocalizationOnly,
    /// Center from Beta(alpha, alpha) inside the localization box.
    ContrastiveCrop,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::RandomCrop, Arm::LocalizationOnly, Arm::ContrastiveCrop];

    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::RandomCrop => "random_crop",
            Arm::LocalizationOnly => "localization_only",
            Arm::ContrastiveCrop => "contrastive_crop",
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-scene statistics of each arm, indexed like [`Arm::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneComparison {
    pub arms: [PairStats; 3],
}

impl SceneComparison {
    pub fn arm(&self, arm: Arm) -> &PairStats {
        &self.arms[arm as usize]
    }
}

/// Samples `n_pairs` pairs per scene and arm with the ground-truth object box
/// as the localization box. All arms read the same streams, so scale, ratio
/// and placement draws are shared across arms pair by pair.
pub fn compare_samplers(
    master_seed: u64,
    cfg: &CropConfig,
    scenes: &[SceneSpec],
    n_pairs: usize,
    tau: f64,
) -> Result<Vec<SceneComparison>> {
    cfg.validate()?;
    if n_pairs == 0 {
        return Err(Error::config("pairs", "must be >= 1"));
    }
    let uniform_beta = BetaSymmetric::new(1.0)?;
    let beta = BetaSymmetric::new(cfg.alpha)?;
    let blocks = n_pairs.div_ceil(BLOCK_PAIRS);
    let jobs: Vec<(usize, Arm, usize)> = (0..scenes.len())
        .flat_map(|s| {
            Arm::ALL
                .into_iter()
                .flat_map(move |a| (0..blocks).map(move |b| (s, a, b)))
        })
        .collect();
    let partials: Vec<PairStats> = jobs
        .par_iter()
        .map(|&(s, arm, block)| {
            let object = &scenes[s].object_box;
            let len = BLOCK_PAIRS.min(n_pairs - block * BLOCK_PAIRS);
            let mut rng =
                RngStream::new(master_seed, stream_key(TAG_ORACLE, s as u64, block as u64));
            let mut acc = PairStats::default();
            let crop = |rng: &mut RngStream| -> Result<Rect<f64>> {
                let r = match arm {
                    Arm::RandomCrop => place_uniform(&CropDraws::uniform(rng, cfg))?,
                    Arm::LocalizationOnly => place_in_box(
                        &CropDraws::center_suppressed(rng, cfg, &uniform_beta),
                        object,
                    )?,
                    Arm::ContrastiveCrop => {
                        place_in_box(&CropDraws::center_suppressed(rng, cfg, &beta), object)?
                    }
                };
                check_crop(&r)?;
                Ok(r)
            };
            for _ in 0..len {
                let a = crop(&mut rng)?;
                let b = crop(&mut rng)?;
                acc.record(&a, &b, object, tau);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![
        SceneComparison {
            arms: [PairStats::default(); 3]
        };
        scenes.len()
    ];
    for (&(s, arm, _), part) in jobs.iter().zip(&partials) {
        out[s].arms[arm as usize].merge(part);
    }
    Ok(out)
}

/// Serializes scenes in the scene-file format.
pub fn scenes_to_text(scenes: &[SceneSpec]) -> String {
    let mut out = String::new();
    for (i, s) in scenes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let [x0, y0, x1, y1] = s.object_box.to_array();
        writeln!(out, "[scene]").unwrap();
        writeln!(out, "object = {x0} {y0} {x1} {y1}").unwrap();
        writeln!(out, "grid = {} {}", s.heatmap_rows, s.heatmap_cols).unwrap();
        writeln!(out, "noise = {}", s.noise_level).unwrap();
        writeln!(out, "spread = {}", s.spread).unwrap();
        let pts: Vec<String> = s
            .sharpness
            .points()
            .iter()
            .map(|(p, v)| format!("{p}:{v}"))
            .collect();
        writeln!(out, "sharpness = {}", pts.join(" ")).unwrap();
    }
    out
}

#[derive(Default)]
struct SceneDraft {
    start_line: usize,
    object: Option<Rect<f64>>,
    grid: Option<(usize, usize)>,
    noise: Option<f64>,
    spread: Option<f64>,
    sharpness: Option<SharpnessSchedule>,
}

impl SceneDraft {
    fn finish(self) -> Result<SceneSpec> {
        let line = self.start_line;
        let object = self
            .object
            .ok_or_else(|| Error::parse(line, "scene is missing `object`"))?;
        let (rows, cols) = self
            .grid
            .ok_or_else(|| Error::parse(line, "scene is missing `grid`"))?;
        let scene = SceneSpec {
            object_box: object,
            heatmap_rows: rows,
            heatmap_cols: cols,
            noise_level: self.noise.unwrap_or(0.0),
            spread: self.spread.unwrap_or(0.0),
            sharpness: self.sharpness.unwrap_or_default(),
        };
        scene
            .validate()
            .map_err(|e| Error::parse(line, e.to_string()))?;
        Ok(scene)
    }
}

fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number `{tok}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("`{tok}` is not finite")))
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(Error::parse(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

/// Parses a scene file.
pub fn parse_scenes(text: &str) -> Result<Vec<SceneSpec>> {
    let mut scenes = Vec::new();
    let mut current: Option<SceneDraft> = None;
    for (i, raw) in text.lines().enumerate() {
        let lno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[scene]" {
            if let Some(draft) = current.take() {
                scenes.push(draft.finish()?);
            }
            current = Some(SceneDraft {
                start_line: lno,
                ..SceneDraft::default()
            });
            continue;
        }
        let draft = current
            .as_mut()
            .ok_or_else(|| Error::parse(lno, "expected `[scene]` before fields"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(lno, "expected `key = value`"))?;
        let key = key.trim();
        let toks: Vec<&str> = value.split_whitespace().collect();
        match key {
            "object" => {
                let [a, b, c, d] = toks[..] else {
                    return Err(Error::parse(lno, "`object` takes x0 y0 x1 y1"));
                };
                let r = Rect::new(
                    parse_f64(lno, a)?,
                    parse_f64(lno, b)?,
                    parse_f64(lno, c)?,
                    parse_f64(lno, d)?,
                )
                .map_err(|e| Error::parse(lno, e.to_string()))?;
                set_once(&mut draft.object, r, key, lno)?;
            }
            "grid" => {
                let [a, b] = toks[..] else {
                    return Err(Error::parse(lno, "`grid` takes rows cols"));
                };
                let dim = |t: &str| {
                    t.parse::<usize>()
                        .map_err(|_| Error::parse(lno, format!("bad grid size `{t}`")))
                };
                set_once(&mut draft.grid, (dim(a)?, dim(b)?), key, lno)?;
            }
            "noise" | "spread" => {
                let [a] = toks[..] else {
                    return Err(Error::parse(lno, format!("`{key}` takes one number")));
                };
                let v = parse_f64(lno, a)?;
                let slot = if key == "noise" {
                    &mut draft.noise
                } else {
                    &mut draft.spread
                };
                set_once(slot, v, key, lno)?;
            }
            "sharpness" => {
                let pts = toks
                    .iter()
                    .map(|t| {
                        let (p, v) = t
                            .split_once(':')
                            .ok_or_else(|| Error::parse(lno, format!("bad breakpoint `{t}`")))?;
                        Ok((parse_f64(lno, p)?, parse_f64(lno, v)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sched =
                    SharpnessSchedule::new(pts).map_err(|e| Error::parse(lno, e.to_string()))?;
                set_once(&mut draft.sharpness, sched, key, lno)?;
            }
            other => return Err(Error::parse(lno, format!("unknown key `{other}`"))),
        }
    }
    if let Some(draft) = current.take() {
        scenes.push(draft.finish()?);
    }
    Ok(scenes)
}
