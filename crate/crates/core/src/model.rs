//! Standardization and class-weighted, L2-regularized logistic regression.
//!
//! The training objective is
//!
//! ```text
//! L(beta, b) = sum_i w_{y_i} * log(1 + exp(-s_i * (x_i . beta + b))) + |beta|^2 / (2C)
//! ```
//!
//! with `s_i` in {-1, +1} and an unpenalized intercept. It is minimized by
//! damped Newton steps with Armijo backtracking, so the loss never increases
//! between iterations. Rows are put into a canonical order before any
//! reduction, so the fitted model does not depend on input row order.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("need both classes, got {n_pos} positive and {n_neg} negative")]
    SingleClass { n_pos: usize, n_neg: usize },
    #[error("need at least 2 rows to standardize, got {0}")]
    TooFewRows(usize),
    #[error("non-finite value at row {row}, feature {feature}")]
    NonFinite { row: usize, feature: usize },
    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("{rows} rows but {labels} labels")]
    Misaligned { rows: usize, labels: usize },
    #[error("regularization strength C must be positive and finite, got {0}")]
    BadC(f64),
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid feature table: {0}")]
    Csv(String),
}

/// Per-encounter feature rows with aligned ids and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Writes `encounter_id,label,<features...>` with labels as 0/1.
    pub fn write_csv(&self, path: &Path) -> Result<(), ModelError> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = vec!["encounter_id".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for ((id, row), label) in self.ids.iter().zip(&self.rows).zip(&self.labels) {
            let mut rec = vec![id.clone(), u8::from(label.is_positive()).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix, ModelError> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.clone();
        if header.len() < 2 || &header[0] != "encounter_id" || &header[1] != "label" {
            return Err(ModelError::Csv(
                "header must start with encounter_id,label".into(),
            ));
        }
        let feature_names: Vec<String> = header.iter().skip(2).map(String::from).collect();
        let mut m = FeatureMatrix {
            ids: vec![],
            feature_names,
            rows: vec![],
            labels: vec![],
        };
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let line = i + 2;
            m.ids.push(rec[0].to_string());
            let label = match rec[1].trim() {
                "1" => Label::Positive,
                "0" => Label::Negative,
                other => return Err(ModelError::Csv(format!("bad label '{other}' at line {line}"))),
            };
            m.labels.push(label);
            let row = rec
                .iter()
                .skip(2)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| ModelError::Csv(format!("bad value '{v}' at line {line}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            m.rows.push(row);
        }
        Ok(m)
    }
}

fn csv_err(e: csv::Error) -> ModelError {
    ModelError::Csv(e.to_string())
}

/// Balanced class weights `N / (2 n_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights {
        positive: 1.0,
        negative: 1.0,
    };

    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::Positive => self.positive,
            Label::Negative => self.negative,
        }
    }
}

pub fn compute_class_weights(labels: &[Label]) -> Result<ClassWeights, ModelError> {
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ModelError::SingleClass { n_pos, n_neg });
    }
    let n = labels.len() as f64;
    Ok(ClassWeights {
        positive: n / (2.0 * n_pos as f64),
        negative: n / (2.0 * n_neg as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Sample standard deviations; 0 marks a constant column, which is only
    /// centered.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(n_features: usize) -> Self {
        Self {
            means: vec![0.0; n_features],
            stds: vec![1.0; n_features],
        }
    }

    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        if rows.len() < 2 {
            return Err(ModelError::TooFewRows(rows.len()));
        }
        let d = rows[0].len();
        check_rows(rows, d)?;
        let n = rows.len() as f64;
        let mut means = Vec::with_capacity(d);
        let mut stds = Vec::with_capacity(d);
        let mut col = vec![0.0; rows.len()];
        for j in 0..d {
            for (c, r) in col.iter_mut().zip(rows) {
                *c = r[j];
            }
            // sorted accumulation keeps the statistics independent of row order
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / n;
            let std = if col[0] == col[col.len() - 1] {
                0.0
            } else {
                let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (n - 1.0)).sqrt()
            };
            means.push(mean);
            stds.push(std);
        }
        Ok(Self { means, stds })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { v - m })
            .collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        check_rows(rows, self.means.len())?;
        Ok(rows.iter().map(|r| self.apply_row(r)).collect())
    }
}

fn check_rows(rows: &[Vec<f64>], d: usize) -> Result<(), ModelError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(ModelError::Dimension {
                expected: d,
                actual: r.len(),
            });
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: i, feature: j });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// Inverse regularization strength.
    pub c: f64,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

/// Raw solver output on already-standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after each accepted iterate, starting at the origin.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub class_weights: ClassWeights,
    pub c: f64,
    pub standardizer: Standardizer,
    pub converged: bool,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-m))` without overflow.
#[inline]
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

#[inline]
fn sign(label: Label) -> f64 {
    if label.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// Objective value and gradient at `(beta, intercept)`. The gradient has
/// the coefficient partials first and the intercept partial last.
pub fn objective(
    x: &[Vec<f64>],
    y: &[Label],
    weights: ClassWeights,
    c: f64,
    beta: &[f64],
    intercept: f64,
) -> (f64, Vec<f64>) {
    let d = beta.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &label) in x.iter().zip(y) {
        let s = sign(label);
        let w = weights.of(label);
        let z = dot(row, beta) + intercept;
        let m = s * z;
        loss += w * log1p_exp_neg(m);
        let dz = -w * s * sigmoid(-m);
        for (g, v) in grad.iter_mut().zip(row) {
            *g += dz * v;
        }
        grad[d] += dz;
    }
    loss += dot(beta, beta) / (2.0 * c);
    for (g, b) in grad.iter_mut().zip(beta) {
        *g += b / c;
    }
    (loss, grad)
}

fn loss_only(x: &[Vec<f64>], y: &[Label], weights: ClassWeights, c: f64, theta: &[f64]) -> f64 {
    let d = theta.len() - 1;
    let (beta, b) = (&theta[..d], theta[d]);
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        loss += weights.of(label) * log1p_exp_neg(sign(label) * (dot(row, beta) + b));
    }
    loss + dot(beta, beta) / (2.0 * c)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn canonical_order(x: &[Vec<f64>], y: &[Label]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        y[a].cmp(&y[b]).then_with(|| {
            x[a].iter()
                .zip(&x[b])
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    idx
}

/// Minimizes the weighted, L2-penalized logistic loss on `x`.
///
/// `x` is expected to be standardized already; see [`fit`] for the full
/// standardize-then-train path.
pub fn train_logreg(
    x: &[Vec<f64>],
    y: &[Label],
    weights: ClassWeights,
    config: &LogRegConfig,
) -> Result<LogRegFit, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::Misaligned {
            rows: x.len(),
            labels: y.len(),
        });
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(ModelError::BadC(config.c));
    }
    let n_pos = y.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(ModelError::SingleClass {
            n_pos,
            n_neg: y.len() - n_pos,
        });
    }
    let d = x.first().map_or(0, Vec::len);
    check_rows(x, d)?;

    let order = canonical_order(x, y);
    let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let ys: Vec<Label> = order.iter().map(|&i| y[i]).collect();

    let p = d + 1;
    let mut theta = vec![0.0; p];
    let mut loss_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut hess = vec![0.0; p * p];

    loop {
        let (loss, grad) = objective(&xs, &ys, weights, config.c, &theta[..d], theta[d]);
        loss_trace.push(loss);
        let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gmax < config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        iterations += 1;

        hess.iter_mut().for_each(|h| *h = 0.0);
        for (row, &label) in xs.iter().zip(&ys) {
            let z = dot(row, &theta[..d]) + theta[d];
            let s = sigmoid(z);
            let h = weights.of(label) * s * (1.0 - s);
            if h == 0.0 {
                continue;
            }
            for a in 0..p {
                let va = if a < d { row[a] } else { 1.0 };
                let ha = h * va;
                for b in 0..=a {
                    let vb = if b < d { row[b] } else { 1.0 };
                    hess[a * p + b] += ha * vb;
                }
            }
        }
        for a in 0..d {
            hess[a * p + a] += 1.0 / config.c;
        }
        for a in 0..p {
            for b in 0..a {
                hess[b * p + a] = hess[a * p + b];
            }
        }

        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = solve_spd(&hess, p, &neg_grad).unwrap_or_else(|| neg_grad.clone());
        let slope = dot(&grad, &step);
        // Newton decrement below the loss's floating-point resolution
        let resolution = 64.0 * f64::EPSILON * loss.abs().max(1.0);
        if -slope <= resolution {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let cand_loss = loss_only(&xs, &ys, weights, config.c, &cand);
            if cand_loss <= loss + 1e-4 * t * slope {
                theta = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no representable decrease along the Newton direction
            converged = gmax < config.tol;
            break;
        }
    }

    Ok(LogRegFit {
        coefficients: theta[..d].to_vec(),
        intercept: theta[d],
        converged,
        iterations,
        loss_trace,
    })
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, n x n).
/// Adds diagonal jitter if the factorization breaks down.
fn solve_spd(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max).max(1.0);
    for jitter in [0.0, 1e-12, 1e-9, 1e-6] {
        if let Some(l) = cholesky(a, n, jitter * scale) {
            let mut z = vec![0.0; n];
            for i in 0..n {
                let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
                z[i] = (b[i] - s) / l[i * n + i];
            }
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
                x[i] = (z[i] - s) / l[i * n + i];
            }
            return Some(x);
        }
    }
    None
}

fn cholesky(a: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let v = a[i * n + i] + jitter - s;
                if v <= 0.0 || !v.is_finite() {
                    return None;
                }
                l[i * n + j] = v.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Fits the standardizer, balanced class weights, and the regression on one
/// training split.
pub fn fit(train: &FeatureMatrix, config: &LogRegConfig) -> Result<TrainedModel, ModelError> {
    let standardizer = Standardizer::fit(&train.rows)?;
    let x = standardizer.apply(&train.rows)?;
    let class_weights = compute_class_weights(&train.labels)?;
    let sol = train_logreg(&x, &train.labels, class_weights, config)?;
    if !sol.converged {
        tracing::warn!(iterations = sol.iterations, "logistic regression did not converge");
    }
    Ok(TrainedModel {
        feature_names: train.feature_names.clone(),
        coefficients: sol.coefficients,
        intercept: sol.intercept,
        class_weights,
        c: config.c,
        standardizer,
        converged: sol.converged,
    })
}

impl TrainedModel {
    pub fn decision_function(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let x = self.standardizer.apply(rows)?;
        Ok(x.iter()
            .map(|r| dot(r, &self.coefficients) + self.intercept)
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let file = File::create(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::to_writer_pretty(BufWriter::new(file), &ModelFile::from(self))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file = File::open(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mf: ModelFile = serde_json::from_reader(BufReader::new(file))?;
        mf.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str::<ModelFile>(s)?.try_into()
    }
}

/// Probabilities `sigmoid(x . beta + b)` after standardization, kept strictly
/// inside (0, 1).
pub fn predict_proba(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    Ok(model
        .decision_function(rows)?
        .into_iter()
        .map(|z| sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
        .collect())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    feature_names: Vec<String>,
    coefficients: Vec<f64>,
    intercept: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
    #[serde(rename = "C")]
    c: f64,
    #[serde(default = "unit_weights")]
    class_weights: ClassWeights,
}

fn unit_weights() -> ClassWeights {
    ClassWeights::UNIT
}

impl From<&TrainedModel> for ModelFile {
    fn from(m: &TrainedModel) -> Self {
        Self {
            feature_names: m.feature_names.clone(),
            coefficients: m.coefficients.clone(),
            intercept: m.intercept,
            means: m.standardizer.means.clone(),
            stds: m.standardizer.stds.clone(),
            c: m.c,
            class_weights: m.class_weights,
        }
    }
}

impl TryFrom<ModelFile> for TrainedModel {
    type Error = ModelError;

    fn try_from(f: ModelFile) -> Result<Self, ModelError> {
        let d = f.coefficients.len();
        for len in [f.feature_names.len(), f.means.len(), f.stds.len()] {
            if len != d {
                return Err(ModelError::Dimension {
                    expected: d,
                    actual: len,
                });
            }
        }
        if !(f.c > 0.0 && f.c.is_finite()) {
            return Err(ModelError::BadC(f.c));
        }
        Ok(TrainedModel {
            feature_names: f.feature_names,
            coefficients: f.coefficients,
            intercept: f.intercept,
            class_weights: f.class_weights,
            c: f.c,
            standardizer: Standardizer {
                means: f.means,
                stds: f.stds,
            },
            converged: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Negative as N, Positive as P};

    fn model_with(beta: Vec<f64>, b: f64) -> TrainedModel {
        let d = beta.len();
        TrainedModel {
            feature_names: (0..d).map(|i| format!("f{i}")).collect(),
            coefficients: beta,
            intercept: b,
            class_weights: ClassWeights::UNIT,
            c: 1.0,
            standardizer: Standardizer::identity(d),
            converged: true,
        }
    }

    #[test]
    fn balanced_weights() {
        let mut labels = vec![P; 253];
        labels.extend(vec![N; 855]);
        let w = compute_class_weights(&labels).unwrap();
        assert!((w.positive - 1108.0 / 506.0).abs() < 1e-12);
        assert!((w.negative - 1108.0 / 1710.0).abs() < 1e-12);
        assert!((w.positive - 2.18972).abs() < 1e-5);
        assert!((w.negative - 0.64795).abs() < 1e-5);
        let total: f64 = labels.iter().map(|&l| w.of(l)).sum();
        assert!((total - 1108.0).abs() < 1e-9);

        let mut even = vec![P; 10];
        even.extend(vec![N; 10]);
        assert_eq!(compute_class_weights(&even).unwrap(), ClassWeights::UNIT);
        assert!(compute_class_weights(&[P, P]).is_err());
    }

    #[test]
    fn standardizer_cases() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.means, vec![2.0, 5.0]);
        assert!((s.stds[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.stds[1], 0.0);
        let t = s.apply(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert!((t[0][0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((t[1][0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(t[0][1], 0.0);
        // held-out rows use the training statistics
        let h = s.apply(&[vec![2.0 + 2f64.sqrt(), 7.0]]).unwrap();
        assert!((h[0][0] - 1.0).abs() < 1e-12);
        assert_eq!(h[0][1], 2.0);
        assert!(matches!(
            Standardizer::fit(&[vec![1.0]]),
            Err(ModelError::TooFewRows(1))
        ));
        let c = Standardizer::fit(&[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        assert_eq!(c.apply(&[vec![5.0]]).unwrap()[0][0], 0.0);
    }

    #[test]
    fn separable_one_dimensional() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![N, P];
        let fit = train_logreg(&x, &y, ClassWeights::UNIT, &LogRegConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients[0] > 0.0);
        let m = model_with(fit.coefficients, fit.intercept);
        let p = predict_proba(&m, &x).unwrap();
        assert!(p[0] < 0.5 && p[1] > 0.5);
    }

    #[test]
    fn intercept_only_recovers_prevalence() {
        let x: Vec<Vec<f64>> = vec![vec![]; 8];
        let y = vec![P, N, N, N, P, N, N, N];
        let fit = train_logreg(&x, &y, ClassWeights::UNIT, &LogRegConfig::default()).unwrap();
        let m = model_with(vec![], fit.intercept);
        for p in predict_proba(&m, &x).unwrap() {
            assert!((p - 0.25).abs() < 1e-9, "{p}");
        }
    }

    #[test]
    fn proba_hand_cases() {
        let m = model_with(vec![0.0, 0.0], 0.0);
        assert!(predict_proba(&m, &[vec![3.0, -2.0]]).unwrap()[0] == 0.5);
        let m = model_with(vec![1.0], 0.0);
        let p = predict_proba(&m, &[vec![3f64.ln()]]).unwrap()[0];
        assert!((p - 0.75).abs() < 1e-15);
        assert!(matches!(
            predict_proba(&m, &[vec![1.0, 2.0]]),
            Err(ModelError::Dimension { expected: 1, actual: 2 })
        ));
        let mut last = 0.0;
        for b in [-50.0, -1.0, 0.0, 1.0, 10.0, 40.0, 800.0] {
            let p = predict_proba(&model_with(vec![], b), &[vec![]]).unwrap()[0];
            assert!(p > 0.0 && p < 1.0);
            assert!(p >= last);
            last = p;
        }
        assert!(last > 1.0 - 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_single_class() {
        let x = vec![vec![f64::NAN], vec![1.0]];
        assert!(matches!(
            train_logreg(&x, &[N, P], ClassWeights::UNIT, &LogRegConfig::default()),
            Err(ModelError::NonFinite { row: 0, feature: 0 })
        ));
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_logreg(&x, &[P, P], ClassWeights::UNIT, &LogRegConfig::default()),
            Err(ModelError::SingleClass { .. })
        ));
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let m = TrainedModel {
            standardizer: Standardizer {
                means: vec![0.1, -3.3],
                stds: vec![0.7, 0.0],
            },
            ..model_with(vec![0.123456789, -1.0 / 3.0], 0.1 + 0.2)
        };
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.coefficients, m.coefficients);
        let rows = vec![vec![1.0, 2.0], vec![-0.5, 9.0]];
        let a = predict_proba(&m, &rows).unwrap();
        let b = predict_proba(&back, &rows).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}
