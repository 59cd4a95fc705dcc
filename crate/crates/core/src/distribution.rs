//! Difficulty intervals, histograms and sampling plans.
//!
//! The difficulty range is cut into ten intervals of width 0.1. Interval `k`
//! covers `[k/10, (k+1)/10)`, except the last which is closed: `[0.9, 1.0]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INTERVALS: usize = 10;

/// Lower edge, upper edge and midpoint of interval `k`.
pub fn interval_bounds(k: usize) -> (f64, f64) {
    assert!(k < INTERVALS, "interval {k} out of range");
    (k as f64 / 10.0, (k + 1) as f64 / 10.0)
}

pub fn interval_midpoint(k: usize) -> f64 {
    (2 * k + 1) as f64 / 20.0
}

/// Interval index of a difficulty value.
pub fn bin_index(d: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::domain(format!("difficulty {d} is outside [0, 1]")));
    }
    let mut k = ((d * 10.0).floor() as usize).min(INTERVALS - 1);
    // d * 10 can round across an edge; compare against the edges themselves.
    if d < k as f64 / 10.0 {
        k -= 1;
    } else if k + 1 < INTERVALS && d >= (k + 1) as f64 / 10.0 {
        k += 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyHistogram {
    pub label: String,
    pub counts: [u64; INTERVALS],
    pub total: u64,
}

impl DifficultyHistogram {
    pub fn from_counts(label: impl Into<String>, counts: [u64; INTERVALS]) -> Self {
        DifficultyHistogram {
            label: label.into(),
            counts,
            total: counts.iter().sum(),
        }
    }

    /// Counts divided by the total; all zeros for an empty histogram.
    pub fn normalized(&self) -> [f64; INTERVALS] {
        let mut out = [0.0; INTERVALS];
        if self.total > 0 {
            for (o, &c) in out.iter_mut().zip(&self.counts) {
                *o = c as f64 / self.total as f64;
            }
        }
        out
    }

    pub fn as_f64(&self) -> [f64; INTERVALS] {
        self.counts.map(|c| c as f64)
    }
}

pub fn histogram<I>(label: impl Into<String>, difficulties: I) -> Result<DifficultyHistogram>
where
    I: IntoIterator<Item = f64>,
{
    let mut counts = [0u64; INTERVALS];
    for d in difficulties {
        counts[bin_index(d)?] += 1;
    }
    Ok(DifficultyHistogram::from_counts(label, counts))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub label: String,
    pub targets: [u64; INTERVALS],
    pub ipc: u64,
}

/// Largest-remainder (Hamilton) apportionment of `seats` proportional to
/// `weights`. Quotas are compared in exact integer arithmetic; equal
/// remainders go to the lower index.
pub fn apportion(weights: &[u64], seats: u64) -> Result<Vec<u64>> {
    let total: u128 = weights.iter().map(|&w| u128::from(w)).sum();
    if total == 0 {
        return Err(Error::degenerate("all weights are zero"));
    }
    let seats_wide = u128::from(seats);
    let mut out = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (k, &w) in weights.iter().enumerate() {
        let exact = seats_wide * u128::from(w);
        out.push((exact / total) as u64);
        remainders.push((exact % total, k));
    }
    let assigned: u64 = out.iter().sum();
    let left = (seats - assigned) as usize;
    // Largest remainder first, lower index on ties.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in remainders.iter().take(left) {
        out[k] += 1;
    }
    Ok(out)
}

/// Scales a class histogram to `ipc` items.
pub fn scale_to_ipc(hist: &DifficultyHistogram, ipc: u64) -> Result<SamplingPlan> {
    if ipc == 0 {
        return Err(Error::domain("ipc must be positive"));
    }
    if hist.total == 0 {
        return Err(Error::degenerate(format!(
            "histogram of {:?} is empty",
            hist.label
        )));
    }
    let targets = apportion(&hist.counts, ipc)?;
    Ok(SamplingPlan {
        label: hist.label.clone(),
        targets: targets.try_into().expect("ten intervals"),
        ipc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Hill,
    Ground,
    Slope,
    Cliff,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Hill, Shape::Ground, Shape::Slope, Shape::Cliff];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Hill => "hill",
            Shape::Ground => "ground",
            Shape::Slope => "slope",
            Shape::Cliff => "cliff",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown shape {s:?}")))
    }
}

/// Interval weights for the predefined sampling distributions, easiest
/// interval first. The defaults put an increasing share of mass on easy
/// items going from hill to cliff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeTemplates {
    pub hill: [u64; INTERVALS],
    pub ground: [u64; INTERVALS],
    pub slope: [u64; INTERVALS],
    pub cliff: [u64; INTERVALS],
}

impl Default for ShapeTemplates {
    fn default() -> Self {
        ShapeTemplates {
            hill: [1, 2, 3, 4, 5, 5, 4, 3, 2, 1],
            ground: [1; INTERVALS],
            slope: [10, 9, 8, 7, 6, 5, 4, 3, 2, 1],
            cliff: [40, 20, 10, 5, 2, 1, 1, 1, 0, 0],
        }
    }
}

impl ShapeTemplates {
    pub fn weights(&self, shape: Shape) -> &[u64; INTERVALS] {
        match shape {
            Shape::Hill => &self.hill,
            Shape::Ground => &self.ground,
            Shape::Slope => &self.slope,
            Shape::Cliff => &self.cliff,
        }
    }
}

pub fn predefined_plan(label: impl Into<String>, shape: Shape, ipc: u64) -> Result<SamplingPlan> {
    predefined_plan_with(&ShapeTemplates::default(), label, shape, ipc)
}

pub fn predefined_plan_with(
    templates: &ShapeTemplates,
    label: impl Into<String>,
    shape: Shape,
    ipc: u64,
) -> Result<SamplingPlan> {
    if ipc == 0 {
        return Err(Error::domain("ipc must be positive"));
    }
    let targets = apportion(templates.weights(shape), ipc)?;
    Ok(SamplingPlan {
        label: label.into(),
        targets: targets.try_into().expect("ten intervals"),
        ipc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule of thumb.
    Auto,
    Fixed(f64),
}

/// Used when Silverman's rule yields zero (one value, or all values equal).
pub const MIN_AUTO_BANDWIDTH: f64 = 0.02;

pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return MIN_AUTO_BANDWIDTH,
    };
    (0.9 * spread * n.powf(-0.2)).max(MIN_AUTO_BANDWIDTH)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Gaussian kernel density estimate on `points` evenly spaced grid points over `[0, 1]`.
pub fn kde_curve(values: &[f64], bandwidth: Bandwidth, points: usize) -> Result<Vec<(f64, f64)>> {
    kde_curve_on(values, bandwidth, 0.0, 1.0, points)
}

/// Gaussian kernel density estimate on an even grid over `[lo, hi]`. The
/// density integrates to one over the real line.
pub fn kde_curve_on(
    values: &[f64],
    bandwidth: Bandwidth,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::domain("kde needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("kde values must be finite"));
    }
    if points < 2 || hi <= lo {
        return Err(Error::domain(
            "kde grid needs at least two points over a nonempty range",
        ));
    }
    let h = match bandwidth {
        Bandwidth::Auto => silverman_bandwidth(values),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => {
            return Err(Error::domain(format!("bandwidth {h} must be positive")))
        }
    };
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            };
            let density = values
                .iter()
                .map(|v| (-0.5 * ((x - v) / h).powi(2)).exp())
                .sum::<f64>()
                * norm;
            (x, density)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0).unwrap(), 0);
        assert_eq!(bin_index(0.1).unwrap(), 1);
        assert_eq!(bin_index(1.0).unwrap(), 9);
        assert_eq!(bin_index(0.9).unwrap(), 9);
        assert_eq!(bin_index(0.0999999).unwrap(), 0);
        for k in 0..10 {
            assert_eq!(bin_index(k as f64 / 10.0).unwrap(), k, "edge {k}");
            assert_eq!(bin_index(interval_midpoint(k)).unwrap(), k);
        }
        assert!(bin_index(-1e-12).is_err());
        assert!(bin_index(1.0 + 1e-12).is_err());
        assert!(bin_index(f64::NAN).is_err());
    }

    #[test]
    fn histogram_counts() {
        let h = histogram("c", []).unwrap();
        assert_eq!(h.counts, [0; 10]);
        assert_eq!(h.total, 0);
        let h = histogram("c", [0.05, 0.15, 0.15]).unwrap();
        assert_eq!(h.counts, [1, 2, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(h.total, 3);
        assert!(histogram("c", [0.5, 2.0]).is_err());
    }

    #[test]
    fn scale_examples() {
        let h = DifficultyHistogram::from_counts("c", [60, 30, 10, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(
            scale_to_ipc(&h, 10).unwrap().targets,
            [6, 3, 1, 0, 0, 0, 0, 0, 0, 0]
        );
        let h = DifficultyHistogram::from_counts("c", [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(
            scale_to_ipc(&h, 2).unwrap().targets,
            [1, 1, 0, 0, 0, 0, 0, 0, 0, 0]
        );
        let h = DifficultyHistogram::from_counts("c", [5, 0, 5, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(
            scale_to_ipc(&h, 7).unwrap().targets,
            [4, 0, 3, 0, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn scale_errors() {
        let empty = DifficultyHistogram::from_counts("c", [0; 10]);
        assert!(matches!(scale_to_ipc(&empty, 3), Err(Error::Degenerate(_))));
        let h = DifficultyHistogram::from_counts("c", [1; 10]);
        assert!(matches!(scale_to_ipc(&h, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn predefined_examples() {
        assert_eq!(
            predefined_plan("c", Shape::Ground, 10).unwrap().targets,
            [1; 10]
        );
        assert_eq!(
            predefined_plan("c", Shape::Ground, 20).unwrap().targets,
            [2; 10]
        );
        assert_eq!(
            predefined_plan("c", Shape::Slope, 55).unwrap().targets,
            [10, 9, 8, 7, 6, 5, 4, 3, 2, 1]
        );
        assert!(matches!("mountain".parse::<Shape>(), Err(Error::Domain(_))));
        assert_eq!("cliff".parse::<Shape>().unwrap(), Shape::Cliff);
        assert!(predefined_plan("c", Shape::Hill, 0).is_err());
    }

    #[test]
    fn easy_mass_increases_hill_to_cliff() {
        let t = ShapeTemplates::default();
        let share = |s: Shape| {
            let w = t.weights(s);
            w[0] as f64 / w.iter().sum::<u64>() as f64
        };
        assert!(share(Shape::Hill) < share(Shape::Ground));
        assert!(share(Shape::Ground) < share(Shape::Slope));
        assert!(share(Shape::Slope) < share(Shape::Cliff));
    }

    #[test]
    fn kde_single_value_is_symmetric_with_peak_at_value() {
        let curve = kde_curve(&[0.5], Bandwidth::Fixed(0.1), 101).unwrap();
        let (peak_x, _) = curve
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((peak_x - 0.5).abs() < 1e-12);
        for i in 0..50 {
            assert!((curve[i].1 - curve[100 - i].1).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_duplicate_values_give_same_curve() {
        let one = kde_curve(&[0.3], Bandwidth::Auto, 50).unwrap();
        let two = kde_curve(&[0.3, 0.3], Bandwidth::Auto, 50).unwrap();
        for (a, b) in one.iter().zip(&two) {
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_integrates_to_one_on_wide_grid() {
        // Trapezoid rule over a range far wider than the kernel support.
        let values = [0.05, 0.1, 0.12, 0.4, 0.41, 0.9, 0.99];
        let curve = kde_curve_on(&values, Bandwidth::Auto, -2.0, 3.0, 5001).unwrap();
        let mass: f64 = curve
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        assert!((mass - 1.0).abs() < 1e-2, "mass {mass}");
    }

    #[test]
    fn kde_errors() {
        assert!(kde_curve(&[], Bandwidth::Auto, 10).is_err());
        assert!(kde_curve(&[0.2], Bandwidth::Fixed(0.0), 10).is_err());
        assert!(kde_curve(&[0.2], Bandwidth::Fixed(-1.0), 10).is_err());
    }
}
