//! Activation heatmaps and box localization.
//!
//! A heatmap is the channel-summed feature map of an image, min-max
//! normalized to `[0, 1]`. [`localize`] thresholds it and returns the
//! rectangular closure of the cells above the threshold.
//!
//! Text format: the first line is `rows cols`, followed by `rows` lines of
//! `cols` whitespace-separated non-negative decimals.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{grid_box_to_rect, rectangular_closure, Rect};
use crate::scalar::Scalar;

/// Row-major grid of non-negative, finite activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> Heatmap<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidHeatmap(format!(
                "grid must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidHeatmap(format!(
                "expected {} values for a {rows}x{cols} grid, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < T::zero())
        {
            return Err(Error::InvalidHeatmap(format!(
                "value {v} at cell ({}, {}) is not a finite non-negative number",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidHeatmap("ragged rows".into()));
        }
        Self::new(n_rows, n_cols, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    /// Min-max normalization to `[0, 1]`.
    pub fn normalize(&self) -> Normalized<T> {
        normalize(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `rows cols` header"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let [r, c] = dims[..] else {
            return Err(Error::parse(hline, "header must be `rows cols`"));
        };
        let rows: usize = r
            .parse()
            .map_err(|_| Error::parse(hline, format!("bad row count `{r}`")))?;
        let cols: usize = c
            .parse()
            .map_err(|_| Error::parse(hline, format!("bad column count `{c}`")))?;
        let mut values = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            let (lno, line) = lines
                .next()
                .ok_or_else(|| Error::parse(hline + row + 1, format!("missing row {row}")))?;
            let before = values.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(lno, format!("bad number `{tok}`")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(
                        lno,
                        format!("`{tok}` is not a finite non-negative number"),
                    ));
                }
                values.push(T::lit(v));
            }
            if values.len() - before != cols {
                return Err(Error::parse(
                    lno,
                    format!("expected {cols} values, got {}", values.len() - before),
                ));
            }
        }
        if let Some((lno, _)) = lines.next() {
            return Err(Error::parse(lno, "trailing data after last row"));
        }
        Self::new(rows, cols, values).map_err(|e| Error::parse(hline, e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for row in self.values.chunks(self.cols) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Result of [`normalize`]. `degenerate` is set for constant inputs, which
/// normalize to all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized<T> {
    pub heatmap: Heatmap<T>,
    pub degenerate: bool,
}

/// Elementwise sum over channels.
pub fn reduce_features<T: Scalar>(channels: &[Heatmap<T>]) -> Result<Heatmap<T>> {
    let (first, rest) = channels.split_first().ok_or(Error::EmptyStack)?;
    let mut acc = first.clone();
    for ch in rest {
        if ch.rows != acc.rows || ch.cols != acc.cols {
            return Err(Error::ShapeMismatch {
                expected_rows: acc.rows,
                expected_cols: acc.cols,
                rows: ch.rows,
                cols: ch.cols,
            });
        }
        for (a, v) in acc.values.iter_mut().zip(&ch.values) {
            *a = *a + *v;
        }
    }
    if acc.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidHeatmap("channel sum overflowed".into()));
    }
    Ok(acc)
}

pub fn normalize<T: Scalar>(m: &Heatmap<T>) -> Normalized<T> {
    let (lo, hi) = m
        .values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return Normalized {
            heatmap: Heatmap {
                rows: m.rows,
                cols: m.cols,
                values: vec![T::zero(); m.values.len()],
            },
            degenerate: true,
        };
    }
    let span = hi - lo;
    let values = m
        .values
        .iter()
        .map(|&v| ((v - lo) / span).min(T::one()))
        .collect();
    Normalized {
        heatmap: Heatmap {
            rows: m.rows,
            cols: m.cols,
            values,
        },
        degenerate: false,
    }
}

/// Box around every cell whose value is strictly above `k`, or the whole
/// image when no cell is.
pub fn localize<T: Scalar>(m: &Heatmap<T>, k: T) -> Rect<T> {
    let cols = m.cols;
    let active = m
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > k)
        .map(|(i, _)| (i / cols, i % cols));
    match rectangular_closure(active, m.rows, m.cols) {
        Ok(b) => grid_box_to_rect(&b, m.rows, m.cols).expect("closure lies inside the grid"),
        Err(_) => Rect::unit(),
    }
}
