use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Region};
use crate::completeness::{reporting_scale, CompletenessCurve};

pub const DEFAULT_PAGE_SIZE: usize = 10;
pub const GRID_POINTS: usize = 101;

/// Cumulative completeness after the first page, on the 0-100 scale.
pub fn first_page_completeness(curve: &CompletenessCurve, page_size: usize) -> f64 {
    let n = page_size.max(1).min(curve.n_results());
    reporting_scale(curve.value_at(n).unwrap_or(0.0))
}

/// Fractions `0, 0.01, ..., 1`.
pub fn grid() -> Vec<f64> {
    (0..GRID_POINTS).map(|i| i as f64 / (GRID_POINTS - 1) as f64).collect()
}

/// Linear interpolation of the curve onto [`grid`].
pub fn resample(curve: &CompletenessCurve) -> Vec<f64> {
    let pts = &curve.points;
    let mut out = Vec::with_capacity(GRID_POINTS);
    let mut j = 0;
    for x in grid() {
        while j + 2 < pts.len() && pts[j + 1].fraction < x {
            j += 1;
        }
        let (a, b) = (pts[j], pts[(j + 1).min(pts.len() - 1)]);
        let span = b.fraction - a.fraction;
        let v = if span <= 0.0 {
            b.value
        } else {
            let t = ((x - a.fraction) / span).clamp(0.0, 1.0);
            a.value + t * (b.value - a.value)
        };
        out.push(v);
    }
    // grid endpoints land exactly on curve endpoints
    out[0] = pts[0].value;
    out[GRID_POINTS - 1] = curve.final_value();
    out
}

/// Trapezoid area over an evenly spaced grid on [0, 1].
pub fn trapezoid(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let h = 1.0 / (values.len() - 1) as f64;
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCurve {
    pub region: Region,
    pub fractions: Vec<f64>,
    pub values: Vec<f64>,
    pub auc: f64,
    pub n_curves: usize,
}

/// Pointwise mean of resampled curves per region, sorted by rising AUC.
pub fn region_curves<'a, I>(curves: I) -> Result<Vec<RegionCurve>, AnalyticsError>
where
    I: IntoIterator<Item = (Region, &'a CompletenessCurve)>,
{
    let mut sums: BTreeMap<Region, (Vec<f64>, usize)> = BTreeMap::new();
    for (region, curve) in curves {
        let entry = sums
            .entry(region)
            .or_insert_with(|| (vec![0.0; GRID_POINTS], 0));
        for (acc, v) in entry.0.iter_mut().zip(resample(curve)) {
            *acc += v;
        }
        entry.1 += 1;
    }
    if sums.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut out: Vec<RegionCurve> = sums
        .into_iter()
        .map(|(region, (sum, n))| {
            let values: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            RegionCurve {
                region,
                fractions: grid(),
                auc: trapezoid(&values),
                values,
                n_curves: n,
            }
        })
        .collect();
    out.sort_by(|a, b| a.auc.total_cmp(&b.auc).then(a.region.cmp(&b.region)));
    Ok(out)
}

/// Long format: region, fraction, value, auc.
pub fn region_curves_csv(curves: &[RegionCurve]) -> Result<String, AnalyticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| AnalyticsError::InvalidInput(e.to_string());
    w.write_record(["region", "fraction", "value", "auc"]).map_err(err)?;
    for c in curves {
        for (x, v) in c.fractions.iter().zip(&c.values) {
            w.write_record([c.region.as_str(), &x.to_string(), &v.to_string(), &c.auc.to_string()])
                .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| AnalyticsError::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}
