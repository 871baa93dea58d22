//! Scoring of an externally produced gridded product against the wells.

use crate::cv::{FoldSpec, SplitSpec};
use crate::error::{Error, Result};
use crate::geo::GridSpec;
use crate::gridstack::GridStack;
use crate::metrics::{Cells, FoldOutcome, MetricsReport, Role, Score, Split};
use crate::preprocess::{anomaly_normalize, PointObservationSet};
use crate::time::Month;

/// Samples channel `channel` of `product` at each well's cell,
/// anomaly-normalizes product and observations over `baseline`, and scores
/// both roles of `split` on every fold's train, val and test ranges.
///
/// Wells outside the grid or whose cell has any missing product value are
/// left out of the scores.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_external(
    product: &GridStack,
    channel: &str,
    obs: &PointObservationSet,
    grid: &GridSpec,
    baseline: (Month, Month),
    split: &SplitSpec,
    folds: &[FoldSpec],
    name: &str,
) -> Result<MetricsReport> {
    let c = product.channel_index(channel).ok_or_else(|| {
        Error::Config(format!(
            "product has no channel {channel:?} (has {:?})",
            product.channels()
        ))
    })?;
    if product.n_times() != obs.n_times() {
        return Err(Error::Alignment(format!(
            "product has {} timesteps, observations {}",
            product.n_times(),
            obs.n_times()
        )));
    }
    if [product.height(), product.width()] != [grid.n_rows, grid.n_cols] {
        return Err(Error::Alignment(format!(
            "product is {}x{}, grid is {}x{}",
            product.height(),
            product.width(),
            grid.n_rows,
            grid.n_cols
        )));
    }
    if !obs.is_complete() {
        return Err(Error::InsufficientData("observations must be gap-free".into()));
    }
    let obs = obs.map_values(|i, s| match anomaly_normalize(s, &obs.axis, baseline) {
        Ok(a) => a,
        Err(e) => {
            log::warn!("well {}: {e}", obs.points[i].id);
            vec![f64::NAN; s.len()]
        }
    });
    let sampled: Vec<Option<Vec<f64>>> = obs
        .points
        .iter()
        .map(|p| {
            let (r, col) = grid.cell_of(p)?;
            let s: Option<Vec<f64>> = (0..product.n_times()).map(|t| product.get(t, c, r, col)).collect();
            anomaly_normalize(&s?, &obs.axis, baseline).ok()
        })
        .collect();
    let index = |ids: &[String]| -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                obs.index_of(id)
                    .ok_or_else(|| Error::Config(format!("split names unknown well {id}")))
            })
            .collect()
    };
    let roles = [
        (Role::Prediction, index(&split.model_ids)?),
        (Role::Interpolation, index(&split.holdout_ids)?),
    ];

    let mut report = MetricsReport::default();
    for fold in folds {
        if fold.test.end > obs.n_times() {
            return Err(Error::Config(format!("fold {} extends past the time axis", fold.index)));
        }
        let mut cells = Cells::new();
        for (role, wells) in &roles {
            for s in Split::ALL {
                let mut p = Vec::new();
                let mut o = Vec::new();
                for &w in wells {
                    let Some(series) = &sampled[w] else { continue };
                    for t in fold.range(s) {
                        let v = obs.value(w, t).unwrap_or(f64::NAN);
                        if v.is_finite() {
                            p.push(series[t]);
                            o.push(v);
                        }
                    }
                }
                if !p.is_empty() {
                    cells.insert((*role, s), Score::of(&p, &o)?);
                }
            }
        }
        let result = if cells.is_empty() {
            Err("no well has product coverage".to_string())
        } else {
            Ok(cells)
        };
        report.outcomes.push(FoldOutcome {
            fold: fold.index,
            predictor: name.to_string(),
            result,
        });
    }
    Ok(report)
}
