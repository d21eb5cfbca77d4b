//! Datasets for logistic regression: CSV loading and a synthetic 3-vs-8
//! digit generator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Feature count of a 14×14 image.
pub const FEATURES: usize = 196;

/// Samples with labels in {−1, +1}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Checks that every row has `features` entries and a ±1 label.
    pub fn validate(&self, features: usize) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        if let Some((i, row)) = self.features.iter().enumerate().find(|(_, r)| r.len() != features) {
            return Err(Error::Dataset(format!("row {i} has {} features, expected {features}", row.len())));
        }
        if let Some(i) = self.labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::Dataset(format!("row {i} label {} is not ±1", self.labels[i])));
        }
        Ok(())
    }

    /// First `len − holdout` rows for training, the rest held out.
    pub fn split(&self, holdout: usize) -> Result<(Dataset, Dataset)> {
        if holdout >= self.len() {
            return Err(Error::Dataset(format!("holdout {holdout} of {} samples", self.len())));
        }
        let cut = self.len() - holdout;
        let part = |r: std::ops::Range<usize>| Dataset {
            features: self.features[r.clone()].to_vec(),
            labels: self.labels[r].to_vec(),
        };
        Ok((part(0..cut), part(cut..self.len())))
    }

    pub fn take(&self, count: usize) -> Dataset {
        let k = count.min(self.len());
        Dataset {
            features: self.features[..k].to_vec(),
            labels: self.labels[..k].to_vec(),
        }
    }

    /// One row per sample: label first, then the features. A header row
    /// is skipped when its first field is not a number.
    pub fn load_csv(path: &Path, features: usize) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let mut ds = Dataset::default();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let first = rec.get(0).unwrap_or("");
            if i == 0 && first.parse::<f64>().is_err() {
                continue;
            }
            let label: f64 = first
                .parse()
                .map_err(|_| Error::Dataset(format!("line {}: bad label {first:?}", i + 1)))?;
            let row = rec
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Dataset(format!("line {}: {e}", i + 1)))?;
            ds.labels.push(label as i8);
            ds.features.push(row);
        }
        ds.validate(features)?;
        Ok(ds)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        for (y, x) in self.labels.iter().zip(&self.features) {
            let mut row = vec![y.to_string()];
            row.extend(x.iter().map(|v| format!("{v}")));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Dataset(format!("{other:?}")),
    }
}

/// 2×2 average pooling of a square image stored row-major.
pub fn avg_pool2(img: &[f64], side: usize) -> Vec<f64> {
    let half = side / 2;
    let mut out = vec![0.0; half * half];
    for r in 0..half {
        for c in 0..half {
            let at = |dr: usize, dc: usize| img[(2 * r + dr) * side + 2 * c + dc];
            out[r * half + c] = (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4.0;
        }
    }
    out
}

/// Handwriting-like 28×28 renderings of the digits 3 (label +1) and 8
/// (label −1), pooled to 14×14. Stroke position, size, slant and width
/// vary per sample, plus pixel noise.
pub fn synthetic_digits(samples: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.08).expect("valid sigma");
    let mut ds = Dataset::default();
    for _ in 0..samples {
        let three = rng.random_bool(0.5);
        let img = render_digit(three, &mut rng, &noise);
        ds.features.push(avg_pool2(&img, 28));
        ds.labels.push(if three { 1 } else { -1 });
    }
    ds
}

fn render_digit(three: bool, rng: &mut ChaCha20Rng, noise: &Normal<f64>) -> Vec<f64> {
    use std::f64::consts::PI;
    let cx = 14.0 + rng.random_range(-2.0..2.0);
    let cy = 14.0 + rng.random_range(-1.5..1.5);
    let size = rng.random_range(0.85..1.15);
    let slant = rng.random_range(-0.25..0.25);
    let width = rng.random_range(1.2..2.2);
    let r_top = 4.6 * size * rng.random_range(0.9..1.1);
    let r_bot = 5.2 * size * rng.random_range(0.9..1.1);
    // Loops: (centre y offset, radius). A 3 keeps only the right side of
    // each loop, sweeping a bit past vertical at the ends.
    let loops = [(-r_top, r_top), (r_bot, r_bot)];
    let (a0, a1) = if three { (-0.6 * PI, 0.6 * PI) } else { (-PI, PI) };
    let mut pts = Vec::new();
    for (dy, r) in loops {
        let steps = 64;
        for k in 0..=steps {
            let a = a0 + (a1 - a0) * k as f64 / steps as f64;
            let y = dy - r * a.sin();
            let x = r * a.cos() * 0.85;
            pts.push((cx + x + slant * y, cy + y));
        }
    }
    let mut img = vec![0.0; 28 * 28];
    for (i, px) in img.iter_mut().enumerate() {
        let (py, pxx) = ((i / 28) as f64, (i % 28) as f64);
        let d2 = pts
            .iter()
            .map(|&(x, y)| (x - pxx).powi(2) + (y - py).powi(2))
            .fold(f64::INFINITY, f64::min);
        let ink = (-d2 / (2.0 * width * width)).exp();
        *px = (ink + noise.sample(rng)).clamp(0.0, 1.0);
    }
    img
}
