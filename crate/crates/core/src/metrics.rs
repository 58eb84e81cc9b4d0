//! Pair statistics and the CSV table format.
//!
//! Two proxies stand in for learned-representation measurements: pair IoU
//! (how similar the two views of a positive pair are) and object coverage,
//! `intersection(crop, object) / area(object)` (how much of the object a
//! view carries).
//!
//! CSV columns, in order: `axis_name, axis_value, arm, n_pairs, fp_strict,
//! fp_tau, mean_iou, se_iou, mean_cov, se_cov, seed`. Decimals carry at most
//! nine significant digits; lines end in `\n`.

use std::io;

use crate::error::{Error, Result};
use crate::geometry::{intersection_area, Rect};
use crate::simulator::PairSample;
use crate::stats::Moments;

/// Default coverage threshold for the thresholded false-positive rate.
pub const DEFAULT_TAU: f64 = 0.05;

/// Fraction of `object` covered by `crop`.
pub fn object_coverage(crop: &Rect<f64>, object: &Rect<f64>) -> f64 {
    (intersection_area(crop, object) / object.area()).min(1.0)
}

/// Streaming statistics over positive pairs.
///
/// A pair is a strict false positive when at least one view misses the
/// object entirely, and a thresholded one when at least one view covers
/// less than `tau` of it. Coverage is averaged per pair before entering the
/// running moments so the standard error is over independent pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairStats {
    fp_strict: u64,
    fp_tau: u64,
    iou: Moments,
    coverage: Moments,
}

impl PairStats {
    pub fn record(&mut self, a: &Rect<f64>, b: &Rect<f64>, object: &Rect<f64>, tau: f64) {
        let ia = intersection_area(a, object);
        let ib = intersection_area(b, object);
        if ia <= 0.0 || ib <= 0.0 {
            self.fp_strict += 1;
        }
        let ca = (ia / object.area()).min(1.0);
        let cb = (ib / object.area()).min(1.0);
        if ca < tau || cb < tau {
            self.fp_tau += 1;
        }
        self.iou.push(a.iou(b));
        self.coverage.push(0.5 * (ca + cb));
    }

    /// Folds another partial in. Counts combine exactly.
    pub fn merge(&mut self, other: &PairStats) {
        self.fp_strict += other.fp_strict;
        self.fp_tau += other.fp_tau;
        self.iou.merge(&other.iou);
        self.coverage.merge(&other.coverage);
    }

    pub fn n_pairs(&self) -> u64 {
        self.iou.count()
    }

    pub fn fp_strict_count(&self) -> u64 {
        self.fp_strict
    }

    pub fn fp_tau_count(&self) -> u64 {
        self.fp_tau
    }

    pub fn fp_rate_strict(&self) -> f64 {
        ratio(self.fp_strict, self.n_pairs())
    }

    pub fn fp_rate_thresholded(&self) -> f64 {
        ratio(self.fp_tau, self.n_pairs())
    }

    /// Binomial standard error of the strict false-positive rate.
    pub fn se_fp_strict(&self) -> f64 {
        let n = self.n_pairs();
        if n == 0 {
            return 0.0;
        }
        let p = self.fp_rate_strict();
        (p * (1.0 - p) / n as f64).sqrt()
    }

    pub fn mean_pair_iou(&self) -> f64 {
        self.iou.mean()
    }

    pub fn se_pair_iou(&self) -> f64 {
        self.iou.std_error()
    }

    pub fn mean_object_coverage(&self) -> f64 {
        self.coverage.mean()
    }

    pub fn se_object_coverage(&self) -> f64 {
        self.coverage.std_error()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Single pass over `pairs` against one ground-truth object.
pub fn aggregate<'a, I>(pairs: I, object_box: &Rect<f64>, tau: f64) -> Result<PairStats>
where
    I: IntoIterator<Item = &'a PairSample>,
{
    let mut stats = PairStats::default();
    for p in pairs {
        stats.record(&p.crop_a, &p.crop_b, object_box, tau);
    }
    if stats.n_pairs() == 0 {
        return Err(Error::EmptyStream);
    }
    Ok(stats)
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub axis_name: String,
    pub axis_value: f64,
    pub arm: String,
    pub n_pairs: u64,
    pub fp_strict: f64,
    pub fp_tau: f64,
    pub mean_iou: f64,
    pub se_iou: f64,
    pub mean_cov: f64,
    pub se_cov: f64,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 11] = [
    "axis_name",
    "axis_value",
    "arm",
    "n_pairs",
    "fp_strict",
    "fp_tau",
    "mean_iou",
    "se_iou",
    "mean_cov",
    "se_cov",
    "seed",
];

impl StatsRow {
    pub fn new(axis_name: &str, axis_value: f64, arm: &str, stats: &PairStats, seed: u64) -> Self {
        Self {
            axis_name: axis_name.to_string(),
            axis_value,
            arm: arm.to_string(),
            n_pairs: stats.n_pairs(),
            fp_strict: stats.fp_rate_strict(),
            fp_tau: stats.fp_rate_thresholded(),
            mean_iou: stats.mean_pair_iou(),
            se_iou: stats.se_pair_iou(),
            mean_cov: stats.mean_object_coverage(),
            se_cov: stats.se_object_coverage(),
            seed,
        }
    }

    fn fields(&self) -> [String; 11] {
        [
            self.axis_name.clone(),
            format_decimal(self.axis_value),
            self.arm.clone(),
            self.n_pairs.to_string(),
            format_decimal(self.fp_strict),
            format_decimal(self.fp_tau),
            format_decimal(self.mean_iou),
            format_decimal(self.se_iou),
            format_decimal(self.mean_cov),
            format_decimal(self.se_cov),
            self.seed.to_string(),
        ]
    }
}

/// Rounds to nine significant digits and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_csv<W: io::Write>(rows: &[StatsRow], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()
}

pub fn csv_string(rows: &[StatsRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<StatsRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::parse(1, "unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        let num = |idx: usize| -> Result<f64> {
            rec[idx]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad {} `{}`", CSV_HEADER[idx], &rec[idx])))
        };
        let int = |idx: usize| -> Result<u64> {
            rec[idx]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad {} `{}`", CSV_HEADER[idx], &rec[idx])))
        };
        rows.push(StatsRow {
            axis_name: rec[0].to_string(),
            axis_value: num(1)?,
            arm: rec[2].to_string(),
            n_pairs: int(3)?,
            fp_strict: num(4)?,
            fp_tau: num(5)?,
            mean_iou: num(6)?,
            se_iou: num(7)?,
            mean_cov: num(8)?,
            se_cov: num(9)?,
            seed: int(10)?,
        });
    }
    Ok(rows)
}
