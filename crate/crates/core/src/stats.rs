//! Group-difference tests on lexicon features and cross-fold coefficient
//! summaries.
//!
//! t statistics follow the (non-depressed - depressed) convention: a
//! negative t means the feature is higher in the depressed group.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::corpus::{Encounter, SpeakerConfig, Budget};
use crate::eval::mean_sd;
use crate::lexicon::{lexicon_feature_matrix, Lexicon};
use crate::model::TrainedModel;

/// Adjusted p-values below this are flagged significant.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("each group needs at least 2 values, got {a} and {b}")]
    GroupTooSmall { a: usize, b: usize },
    #[error("feature '{feature}': {source}")]
    Feature {
        feature: String,
        #[source]
        source: Box<StatsError>,
    },
    #[error("p-value {0} outside [0, 1]")]
    BadP(f64),
    #[error("fold models disagree on feature names")]
    MismatchedFeatures,
    #[error("no fold models supplied")]
    NoModels,
    #[error("top_k must be at least 1")]
    BadTopK,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let (m, sd) = mean_sd(v);
    (m, sd * sd)
}

/// Welch's unequal-variance two-sample t-test, two-sided.
///
/// When both groups have zero variance the statistic is undefined: equal
/// means give `t = 0, p = 1`; different means give `t = ±inf, p = 0`.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::GroupTooSmall {
            a: a.len(),
            b: b.len(),
        });
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            TTest { t: 0.0, df, p: 1.0 }
        } else {
            TTest {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p: 0.0,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, df, p })
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn adjust_p(p_values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::BadP(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let q = (p_values[i] * m as f64 / (rank + 1) as f64).max(p_values[i]);
        running = running.min(q).min(1.0);
        adjusted[i] = running;
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDiffRow {
    pub speaker_config: SpeakerConfig,
    pub feature: String,
    pub mean_non_depressed: f64,
    pub mean_depressed: f64,
    pub t: f64,
    pub df: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Welch tests of every lexicon feature between label groups, per speaker
/// configuration. Adjustment runs within each configuration's family; rows
/// are grouped by configuration (in the order given) and sorted by |t|
/// descending within it.
pub fn group_difference_table(
    encounters: &[Encounter],
    lexicon: &Lexicon,
    configs: &[SpeakerConfig],
) -> Result<Vec<GroupDiffRow>, StatsError> {
    let mut out = Vec::new();
    for &config in configs {
        let fm = lexicon_feature_matrix(encounters, lexicon, config, Budget::Full);
        let tests: Vec<(String, f64, f64, TTest)> = fm
            .feature_names
            .par_iter()
            .enumerate()
            .map(|(j, name)| {
                let (mut neg, mut pos) = (Vec::new(), Vec::new());
                for (row, label) in fm.rows.iter().zip(&fm.labels) {
                    if label.is_positive() {
                        pos.push(row[j]);
                    } else {
                        neg.push(row[j]);
                    }
                }
                let t = welch_t(&neg, &pos).map_err(|e| StatsError::Feature {
                    feature: name.clone(),
                    source: Box::new(e),
                })?;
                Ok((name.clone(), mean_sd(&neg).0, mean_sd(&pos).0, t))
            })
            .collect::<Result<_, StatsError>>()?;
        let raw: Vec<f64> = tests.iter().map(|x| x.3.p).collect();
        let adjusted = adjust_p(&raw)?;
        let mut rows: Vec<GroupDiffRow> = tests
            .into_iter()
            .zip(adjusted)
            .map(|((feature, mn, mp, t), pa)| GroupDiffRow {
                speaker_config: config,
                feature,
                mean_non_depressed: mn,
                mean_depressed: mp,
                t: t.t,
                df: t.df,
                p_raw: t.p,
                p_adjusted: pa,
                significant: pa < SIGNIFICANCE,
            })
            .collect();
        rows.sort_by(|a, b| {
            b.t.abs()
                .partial_cmp(&a.t.abs())
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.feature.cmp(&b.feature))
        });
        out.extend(rows);
    }
    Ok(out)
}

pub fn group_diff_csv(rows: &[GroupDiffRow]) -> String {
    let mut out = String::from(
        "speaker_config,feature,mean_non_depressed,mean_depressed,t,df,p_raw,p_adjusted,significant\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.speaker_config,
            r.feature,
            r.mean_non_depressed,
            r.mean_depressed,
            r.t,
            r.df,
            r.p_raw,
            r.p_adjusted,
            r.significant
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Toward,
    Away,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Toward => "toward",
            Direction::Away => "away",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub feature: String,
    pub mean: f64,
    pub sd: f64,
    /// Whether the feature pushes predictions toward or away from the
    /// positive (depressed) class.
    pub direction: Direction,
}

/// Mean and sample SD of each standardized coefficient across fold models,
/// keeping the `top_k` features by |mean|.
pub fn coefficient_summary(
    fold_models: &[TrainedModel],
    top_k: usize,
) -> Result<Vec<CoefficientSummary>, StatsError> {
    if top_k == 0 {
        return Err(StatsError::BadTopK);
    }
    let first = fold_models.first().ok_or(StatsError::NoModels)?;
    if fold_models
        .iter()
        .any(|m| m.feature_names != first.feature_names)
    {
        return Err(StatsError::MismatchedFeatures);
    }
    let mut out: Vec<CoefficientSummary> = first
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let v: Vec<f64> = fold_models.iter().map(|m| m.coefficients[j]).collect();
            let (mean, sd) = mean_sd(&v);
            CoefficientSummary {
                feature: name.clone(),
                mean,
                sd,
                direction: if mean > 0.0 {
                    Direction::Toward
                } else {
                    Direction::Away
                },
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean
            .abs()
            .total_cmp(&a.mean.abs())
            .then_with(|| a.feature.cmp(&b.feature))
    });
    out.truncate(top_k);
    Ok(out)
}

pub fn coefficient_csv(rows: &[CoefficientSummary]) -> String {
    let mut out = String::from("feature,mean,sd,direction\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.feature,
            r.mean,
            r.sd,
            r.direction.as_str()
        ));
    }
    out
}
