//! Interval discretization of continuous measurements and the deterministic
//! sum node built on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open bins `[lower, cuts[0]), [cuts[0], cuts[1]), ..., [cuts[k-1], upper)`.
/// A value equal to a boundary falls into the upper bin. `upper = None` is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMeta {
    pub unit: String,
    pub lower: f64,
    pub cuts: Vec<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl BinMeta {
    pub fn new(unit: &str, lower: f64, cuts: &[f64], upper: Option<f64>) -> Result<Self> {
        let meta = BinMeta { unit: unit.to_string(), lower, cuts: cuts.to_vec(), upper };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = self.boundaries();
        if bounds.iter().any(|b| b.is_nan()) || bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotoneBins(bounds));
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.cuts.len() + 1
    }

    /// All boundaries including the outer ones (`inf` when unbounded).
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.cuts.len() + 2);
        b.push(self.lower);
        b.extend_from_slice(&self.cuts);
        b.push(self.upper.unwrap_or(f64::INFINITY));
        b
    }

    /// Bin containing `value`, or `None` outside the covered range.
    pub fn bin_of(&self, value: f64) -> Option<usize> {
        if value.is_nan() || value < self.lower {
            return None;
        }
        if matches!(self.upper, Some(u) if value >= u) {
            return None;
        }
        Some(self.cuts.partition_point(|&c| c <= value))
    }

    /// Midpoint of each bin; unbounded bins have none.
    pub fn midpoints(&self) -> Vec<Option<f64>> {
        let b = self.boundaries();
        b.windows(2)
            .map(|w| if w[1].is_finite() { Some((w[0] + w[1]) / 2.0) } else { None })
            .collect()
    }
}

/// How to choose bin boundaries for a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    /// Expert thresholds.
    Explicit(BinMeta),
    /// Cut points at the given cumulative levels of the empirical distribution.
    Quantiles { unit: String, levels: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    pub states: Vec<usize>,
    pub meta: BinMeta,
    pub warnings: Vec<String>,
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = level.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Assigns every value to a bin. Values outside an explicit cover are reported
/// by index through [`Error::UnparseableCell`] with column `column`.
pub fn discretize(column: &str, values: &[f64], spec: &BinSpec) -> Result<Discretized> {
    let mut warnings = Vec::new();
    let meta = match spec {
        BinSpec::Explicit(meta) => {
            meta.validate()?;
            meta.clone()
        }
        BinSpec::Quantiles { unit, levels } => {
            if levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
                return Err(Error::NonMonotoneBins(levels.clone()));
            }
            if values.is_empty() {
                return Err(Error::Dataset(format!("cannot take quantiles of empty column `{column}`")));
            }
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let cuts: Vec<f64> = levels.iter().map(|&l| quantile(&sorted, l)).collect();
            let meta = BinMeta { unit: unit.clone(), lower: sorted[0].min(0.0), cuts, upper: None };
            if meta.validate().is_err() {
                warnings.push(format!("column `{column}`: quantile boundaries coincide; bins collapse"));
            }
            meta
        }
    };
    let states = values
        .iter()
        .enumerate()
        .map(|(row, &v)| {
            meta.bin_of(v).ok_or_else(|| Error::UnparseableCell {
                row,
                column: column.to_string(),
                value: v.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let occupied = {
        let mut seen = vec![false; meta.bin_count()];
        states.iter().for_each(|&s| seen[s] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if occupied < meta.bin_count() && !values.is_empty() {
        warnings.push(format!("column `{column}`: {occupied} of {} bins occupied", meta.bin_count()));
    }
    Ok(Discretized { states, meta, warnings })
}

/// CPT of a child defined as the sum of two parents: each parent-bin pair maps
/// with probability one to the child bin containing the sum of the midpoints.
pub fn deterministic_sum_cpt(child: &str, a: &BinMeta, b: &BinMeta, out: &BinMeta) -> Result<Vec<Vec<f64>>> {
    if a.unit != b.unit {
        return Err(Error::UnitMismatch(a.unit.clone(), b.unit.clone()));
    }
    if a.unit != out.unit {
        return Err(Error::UnitMismatch(a.unit.clone(), out.unit.clone()));
    }
    let mids = |m: &BinMeta| -> Result<Vec<f64>> {
        m.midpoints()
            .into_iter()
            .map(|x| x.ok_or_else(|| Error::SchemaError(format!("`{child}`: parent bins must be bounded"))))
            .collect()
    };
    let (ma, mb) = (mids(a)?, mids(b)?);
    let mut table = Vec::with_capacity(ma.len() * mb.len());
    for x in &ma {
        for y in &mb {
            let sum = x + y;
            let bin = out
                .bin_of(sum)
                .ok_or_else(|| Error::SumOutOfRange { variable: child.to_string(), sum })?;
            let mut row = vec![0.0; out.bin_count()];
            row[bin] = 1.0;
            table.push(row);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_lookup() {
        let meta = BinMeta::new("s", 0.0, &[4.0, 8.0], None).unwrap();
        let d = discretize("x", &[1.0, 5.0, 9.0], &BinSpec::Explicit(meta.clone())).unwrap();
        assert_eq!(d.states, vec![0, 1, 2]);
        // boundary values go to the upper bin
        assert_eq!(meta.bin_of(4.0), Some(1));
        assert_eq!(meta.bin_of(-1.0), None);
    }

    #[test]
    fn non_monotone_rejected() {
        assert_eq!(BinMeta::new("s", 0.0, &[4.0, 4.0], None).unwrap_err().kind(), "NonMonotoneBins");
        assert_eq!(BinMeta::new("s", 0.0, &[5.0, 4.0], None).unwrap_err().kind(), "NonMonotoneBins");
    }

    #[test]
    fn constant_column_collapses_with_warning() {
        let spec = BinSpec::Quantiles { unit: "s".into(), levels: vec![0.25, 0.5, 0.75] };
        let d = discretize("x", &[3.0; 20], &spec).unwrap();
        let mut occupied = d.states.clone();
        occupied.dedup();
        assert_eq!(occupied.len(), 1);
        assert!(!d.warnings.is_empty());
    }

    #[test]
    fn sum_point_mass() {
        let parent = BinMeta::new("s", 0.0, &[2.0], Some(4.0)).unwrap();
        let child = BinMeta::new("s", 0.0, &[3.0, 6.0], None).unwrap();
        let table = deterministic_sum_cpt("c", &parent, &parent, &child).unwrap();
        // midpoints 1 + 1 = 2 -> first bin
        assert_eq!(table[0], vec![1.0, 0.0, 0.0]);
        // 1 + 3 and 3 + 1 both land in [3, 6)
        assert_eq!(table[1], table[2]);
        assert_eq!(table[3], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn sum_errors() {
        let secs = BinMeta::new("s", 0.0, &[2.0], Some(4.0)).unwrap();
        let bytes = BinMeta::new("bytes", 0.0, &[2.0], Some(4.0)).unwrap();
        assert_eq!(deterministic_sum_cpt("c", &secs, &bytes, &secs).unwrap_err().kind(), "UnitMismatch");
        let narrow = BinMeta::new("s", 0.0, &[1.0], Some(3.0)).unwrap();
        assert_eq!(deterministic_sum_cpt("c", &secs, &secs, &narrow).unwrap_err().kind(), "SumOutOfRange");
    }
}
