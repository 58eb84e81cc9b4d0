//! Crop samplers.
//!
//! A crop is produced in two phases: random draws ([`CropDraws`]) and a
//! deterministic placement ([`place_uniform`] / [`place_in_box`]). Keeping the
//! placement pure lets callers inject draws directly, and every sampler
//! consumes the same number of stream words per crop: one each for scale,
//! ratio, horizontal position and vertical position.

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::rng::{splitmix64, RngStream};
use crate::scalar::Scalar;

/// Sampler hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropConfig {
    /// Crop area as a fraction of the image area.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Aspect ratio bounds, height over width.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Heatmap activation threshold.
    pub k: f64,
    /// Beta(alpha, alpha) parameter for the crop center.
    pub alpha: f64,
    /// Fraction of training between localization refreshes; 0 disables them.
    pub update_freq: f64,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            scale_min: 0.2,
            scale_max: 1.0,
            ratio_min: 3.0 / 4.0,
            ratio_max: 4.0 / 3.0,
            k: 0.1,
            alpha: 0.6,
            update_freq: 0.2,
        }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} is not finite")))
            }
        };
        finite("scale_min", self.scale_min)?;
        finite("scale_max", self.scale_max)?;
        finite("ratio_min", self.ratio_min)?;
        finite("ratio_max", self.ratio_max)?;
        finite("k", self.k)?;
        finite("update_freq", self.update_freq)?;
        if self.scale_min <= 0.0 {
            return Err(Error::config("scale_min", "must be > 0"));
        }
        if !(self.scale_min <= self.scale_max && self.scale_max <= 1.0) {
            return Err(Error::config(
                "scale_max",
                "need scale_min <= scale_max <= 1",
            ));
        }
        if self.ratio_min <= 0.0 {
            return Err(Error::config("ratio_min", "must be > 0"));
        }
        if self.ratio_min > self.ratio_max {
            return Err(Error::config("ratio_max", "need ratio_min <= ratio_max"));
        }
        check_alpha(self.alpha)?;
        if !(0.0..=1.0).contains(&self.k) {
            return Err(Error::config("k", "must lie in [0, 1]"));
        }
        if !(0.0..=0.5).contains(&self.update_freq) {
            return Err(Error::config("update_freq", "must lie in [0, 0.5]"));
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    /// Pins scale and ratio to single values.
    pub fn with_fixed_shape(self, scale: f64, ratio: f64) -> Self {
        Self {
            scale_min: scale,
            scale_max: scale,
            ratio_min: ratio,
            ratio_max: ratio,
            ..self
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Symmetric Beta(alpha, alpha) distribution.
///
/// Each draw consumes exactly one word from the caller's stream. That word
/// seeds a private SplitMix64 generator which drives a Gamma-ratio sampler
/// (Marsaglia-Tsang, with the `U^(1/a)` boost for `a < 1`). The acceptance
/// loop runs on the private generator only, so the caller's stream position
/// after `n` draws is always `n` words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSymmetric {
    alpha: f64,
}

impl BetaSymmetric {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mean(&self) -> f64 {
        0.5
    }

    pub fn variance(&self) -> f64 {
        1.0 / (4.0 * (2.0 * self.alpha + 1.0))
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let mut local = LocalGen(rng.next_u64());
        let ln_x = ln_gamma_variate(&mut local, self.alpha);
        let ln_y = ln_gamma_variate(&mut local, self.alpha);
        // X / (X + Y) in log space; small alpha underflows the plain ratio
        let v = 1.0 / (1.0 + (ln_y - ln_x).exp());
        v.clamp(0.0, 1.0)
    }
}

/// One Beta(alpha, alpha) draw in `[0, 1]`.
pub fn beta_symmetric<T: Scalar>(rng: &mut RngStream, alpha: f64) -> Result<T> {
    Ok(T::lit(BetaSymmetric::new(alpha)?.sample(rng)))
}

struct LocalGen(u64);

impl LocalGen {
    /// Uniform on `(0, 1]`.
    #[inline]
    fn open_unit(&mut self) -> f64 {
        ((splitmix64(&mut self.0) >> 11) + 1) as f64 / (1u64 << 53) as f64
    }

    #[inline]
    fn standard_normal(&mut self) -> f64 {
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Log of a Gamma(shape, 1) variate.
fn ln_gamma_variate(g: &mut LocalGen, shape: f64) -> f64 {
    if shape < 1.0 {
        let boosted = ln_gamma_variate(g, shape + 1.0);
        return boosted + g.open_unit().ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = g.standard_normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = g.open_unit();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// Scale uniform on `[scale_min, scale_max]`, ratio log-uniform on
/// `[ratio_min, ratio_max]`.
pub fn sample_scale_ratio<T: Scalar>(rng: &mut RngStream, cfg: &CropConfig) -> (T, T) {
    let s = rng.uniform(cfg.scale_min, cfg.scale_max);
    let log_r = rng.uniform(cfg.ratio_min.ln(), cfg.ratio_max.ln());
    let r = if cfg.ratio_min == cfg.ratio_max {
        cfg.ratio_min
    } else {
        log_r.exp()
    };
    (T::lit(s), T::lit(r))
}

/// Height and width of a crop with area `s` and ratio `r = h / w`.
pub fn crop_dims<T: Scalar>(s: T, r: T) -> (T, T) {
    ((s * r).sqrt(), (s / r).sqrt())
}

/// Clamps oversized dims to the image, keeping the area.
fn fit_dims<T: Scalar>(s: T, h: T, w: T) -> (T, T) {
    let one = T::one();
    if h > one {
        (one, s.min(one))
    } else if w > one {
        (s.min(one), one)
    } else {
        (h, w)
    }
}

/// Random inputs of one crop: scale, ratio and two placement coordinates in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropDraws<T> {
    pub scale: T,
    pub ratio: T,
    pub u: T,
    pub v: T,
}

impl<T: Scalar> CropDraws<T> {
    /// Placement coordinates uniform on `[0, 1)`.
    pub fn uniform(rng: &mut RngStream, cfg: &CropConfig) -> Self {
        let (scale, ratio) = sample_scale_ratio(rng, cfg);
        let u = T::lit(rng.next_f64());
        let v = T::lit(rng.next_f64());
        Self { scale, ratio, u, v }
    }

    /// Placement coordinates from Beta(alpha, alpha).
    pub fn center_suppressed(rng: &mut RngStream, cfg: &CropConfig, beta: &BetaSymmetric) -> Self {
        let (scale, ratio) = sample_scale_ratio(rng, cfg);
        let u = T::lit(beta.sample(rng));
        let v = T::lit(beta.sample(rng));
        Self { scale, ratio, u, v }
    }

    /// Crop height and width after clamping to the image.
    pub fn dims(&self) -> (T, T) {
        let (h, w) = crop_dims(self.scale, self.ratio);
        fit_dims(self.scale, h, w)
    }
}

fn crop_rect<T: Scalar>(cx: T, cy: T, h: T, w: T) -> Result<Rect<T>> {
    let zero = T::zero();
    let one = T::one();
    let half = T::half();
    let x0 = (cx - w * half).max(zero).min(one - w);
    let y0 = (cy - h * half).max(zero).min(one - h);
    let x1 = (x0 + w).min(one);
    let y1 = (y0 + h).min(one);
    Rect::new(x0.max(zero), y0.max(zero), x1, y1)
        .map_err(|e| Error::InvariantViolation(format!("crop placement produced {e}")))
}

/// Places a crop uniformly among all positions that keep it inside the image.
pub fn place_uniform<T: Scalar>(draws: &CropDraws<T>) -> Result<Rect<T>> {
    let (h, w) = draws.dims();
    let one = T::one();
    let half = T::half();
    let cx = w * half + (one - w) * draws.u;
    let cy = h * half + (one - h) * draws.v;
    crop_rect(cx, cy, h, w)
}

/// Center coordinate along one axis: inside `[lo, hi]` (the box) and inside
/// `[extent / 2, 1 - extent / 2]` (the positions that keep the crop in the
/// image). When the two intervals are disjoint the crop is pushed to the
/// image edge nearest to the box.
fn center_in<T: Scalar>(lo: T, hi: T, extent: T, t: T) -> T {
    let half_extent = extent * T::half();
    let fit_lo = half_extent;
    let fit_hi = T::one() - half_extent;
    let a = lo.max(fit_lo);
    let b = hi.min(fit_hi);
    if a <= b {
        a + (b - a) * t
    } else {
        (lo + (hi - lo) * t).max(fit_lo).min(fit_hi)
    }
}

/// Places a crop whose center is drawn inside `bbox` using the draws' `u, v`.
pub fn place_in_box<T: Scalar>(draws: &CropDraws<T>, bbox: &Rect<T>) -> Result<Rect<T>> {
    let (h, w) = draws.dims();
    let cx = center_in(bbox.x0(), bbox.x1(), w, draws.u);
    let cy = center_in(bbox.y0(), bbox.y1(), h, draws.v);
    crop_rect(cx, cy, h, w)
}

/// Standard random resized crop: uniform placement fully inside the image.
pub fn random_crop<T: Scalar>(rng: &mut RngStream, cfg: &CropConfig) -> Result<Rect<T>> {
    place_uniform(&CropDraws::uniform(rng, cfg))
}

/// Crop with its center drawn from Beta(alpha, alpha) across `bbox`.
pub fn contrastive_crop<T: Scalar>(
    rng: &mut RngStream,
    cfg: &CropConfig,
    bbox: &Rect<T>,
) -> Result<Rect<T>> {
    let beta = BetaSymmetric::new(cfg.alpha)?;
    place_in_box(&CropDraws::center_suppressed(rng, cfg, &beta), bbox)
}
