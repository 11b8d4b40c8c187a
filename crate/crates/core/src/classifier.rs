//! Soft-margin C-SVM with an RBF kernel, trained by sequential minimal
//! optimization on the dual problem.
//!
//! The solver is Platt-style SMO: pick a KKT-violating multiplier, pair it
//! with a second one, solve the two-variable subproblem analytically, clip
//! to the box, repeat until every multiplier satisfies the KKT conditions
//! within `kkt_tol` or the pass budget runs out. Inputs are z-scored with
//! statistics from the training set before they reach the kernel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::Label;

/// Per-dimension z-score transform fitted on training data.
///
/// Zero-variance dimensions get std = 1 so they pass through centered but
/// unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Standardizer> {
        let dim = rows.first().map_or(0, |r| r.len());
        Standardizer::fit_iter(rows.iter().map(|r| r.as_slice()), dim)
    }

    pub fn fit_iter<'a>(
        rows: impl Iterator<Item = &'a [f64]> + Clone,
        dim: usize,
    ) -> Result<Standardizer> {
        let n = rows.clone().count();
        if n == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let mut mean = vec![0.0; dim];
        for row in rows.clone() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .iter()
            .map(|&s| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

/// Radial basis kernel `exp(-gamma * ||a - b||^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-gamma * d2).exp())
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// None resolves to `1 / (dim * mean feature variance)`, computed on
    /// the standardized training matrix the kernel actually sees.
    pub gamma: Option<f64>,
    pub kkt_tol: f64,
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> SvmParams {
        SvmParams {
            c: 1.0,
            gamma: None,
            kkt_tol: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidParams(format!("C must be > 0, got {}", self.c)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "gamma must be > 0, got {}",
                    g
                )));
            }
        }
        if !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "kkt_tol must be > 0, got {}",
                self.kkt_tol
            )));
        }
        Ok(())
    }
}

/// Outcome of the SMO run. A model is returned even without convergence;
/// callers can inspect the violation count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub kkt_violations: usize,
    pub passes: usize,
    pub dual_objective: f64,
}

/// A trained classifier: retained support vectors (in standardized space),
/// their dual coefficients, the bias, and the input scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub c: f64,
    pub gamma: f64,
    pub bias: f64,
    pub scaler: Standardizer,
    pub support_vectors: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    /// Class label (+-1) per support vector.
    pub labels: Vec<f64>,
    pub kkt_tol: f64,
    pub convergence: Convergence,
}

#[derive(Serialize, Deserialize)]
struct ModelWire {
    #[serde(rename = "C")]
    c: f64,
    gamma: f64,
    bias: f64,
    scaler: Standardizer,
    sv: Vec<Vec<f64>>,
    alpha_y: Vec<f64>,
}

impl SvmModel {
    /// Decision value for one raw input vector.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let z = self.scaler.apply(x)?;
        let mut sum = self.bias;
        for ((sv, &a), &y) in self.support_vectors.iter().zip(&self.alpha).zip(&self.labels) {
            sum += a * y * rbf_kernel(sv, &z, self.gamma)?;
        }
        Ok(sum)
    }

    /// Predicted label and decision value. A decision value of exactly zero
    /// maps to HighRisk.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        let v = self.decision_value(x)?;
        Ok((Label::from_decision_value(v), v))
    }

    /// Dual feasibility: every alpha in [0, C] and sum(alpha*y) within 1e-8.
    pub fn check_dual_feasibility(&self) -> Result<()> {
        for &a in &self.alpha {
            if !(0.0..=self.c + 1e-12).contains(&a) {
                return Err(Error::InvalidParams(format!("alpha {} outside [0, C]", a)));
            }
        }
        let s: f64 = self.alpha.iter().zip(&self.labels).map(|(a, y)| a * y).sum();
        if s.abs() > 1e-8 {
            return Err(Error::InvalidParams(format!("sum(alpha*y) = {} != 0", s)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let wire = ModelWire {
            c: self.c,
            gamma: self.gamma,
            bias: self.bias,
            scaler: self.scaler.clone(),
            sv: self.support_vectors.clone(),
            alpha_y: self
                .alpha
                .iter()
                .zip(&self.labels)
                .map(|(a, y)| a * y)
                .collect(),
        };
        serde_json::to_string(&wire).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<SvmModel> {
        let wire: ModelWire = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("invalid model JSON: {}", e)))?;
        let alpha: Vec<f64> = wire.alpha_y.iter().map(|v| v.abs()).collect();
        let labels: Vec<f64> = wire
            .alpha_y
            .iter()
            .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
            .collect();
        Ok(SvmModel {
            c: wire.c,
            gamma: wire.gamma,
            bias: wire.bias,
            scaler: wire.scaler,
            support_vectors: wire.sv,
            alpha,
            labels,
            kkt_tol: SvmParams::default().kkt_tol,
            convergence: Convergence {
                converged: true,
                kkt_violations: 0,
                passes: 0,
                dual_objective: f64::NAN,
            },
        })
    }
}

/// Fits the scaler on training vectors (spec name for [`Standardizer::fit`]).
pub fn standardize_fit(x: &[Vec<f64>]) -> Result<Standardizer> {
    Standardizer::fit(x)
}

/// Applies a fitted scaler to one vector.
pub fn standardize_apply(scaler: &Standardizer, x: &[f64]) -> Result<Vec<f64>> {
    scaler.apply(x)
}

struct Smo<'a> {
    kernel: Vec<Vec<f64>>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    bias: f64,
}

impl Smo<'_> {
    fn decision(&self, i: usize) -> f64 {
        let mut sum = self.bias;
        for (j, &a) in self.alpha.iter().enumerate() {
            if a > 0.0 {
                sum += a * self.y[j] * self.kernel[j][i];
            }
        }
        sum
    }

    fn error(&self, i: usize) -> f64 {
        self.decision(i) - self.y[i]
    }

    /// Analytic two-variable update. Returns true on progress.
    fn take_step(&mut self, i1: usize, i2: usize, e2: f64) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let e1 = self.error(i1);
        let s = y1 * y2;

        let (lo, hi) = if s < 0.0 {
            let d = a2_old - a1_old;
            (d.max(0.0), (self.c + d).min(self.c))
        } else {
            let sum = a1_old + a2_old;
            ((sum - self.c).max(0.0), sum.min(self.c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.kernel[i1][i1];
        let k12 = self.kernel[i1][i2];
        let k22 = self.kernel[i2][i2];
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Degenerate curvature: evaluate the objective at both ends.
            let f1 = y1 * (e1 + self.bias) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 + self.bias) - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let lo_obj =
                l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            let hi_obj =
                h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if lo_obj < hi_obj - 1e-12 {
                lo
            } else if lo_obj > hi_obj + 1e-12 {
                hi
            } else {
                return false;
            }
        };
        // Snap to the box to keep feasibility exact.
        if a2 < 1e-12 {
            a2 = 0.0;
        } else if a2 > self.c - 1e-12 {
            a2 = self.c;
        }
        if (a2 - a2_old).abs() < 1e-10 * (a2 + a2_old + 1e-10) {
            return false;
        }
        let a1 = a1_old + s * (a2_old - a2);
        let a1 = a1.clamp(0.0, self.c);

        // Keep the decision correct at whichever update point stays interior.
        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        self.bias = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        true
    }

    /// KKT residual of point i: how far it violates its complementarity case.
    fn kkt_residual(&self, i: usize) -> f64 {
        let margin = self.y[i] * self.decision(i);
        let a = self.alpha[i];
        if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= self.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        }
    }

    fn examine(&mut self, i2: usize, rng: &mut ChaCha8Rng) -> bool {
        let y2 = self.y[i2];
        let a2 = self.alpha[i2];
        let e2 = self.error(i2);
        let r2 = e2 * y2;
        let violates = (r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0);
        if !violates {
            return false;
        }
        let n = self.alpha.len();

        // Second-choice heuristic: the multiplier with the largest |E1 - E2|
        // among non-bound points.
        let mut best: Option<(usize, f64)> = None;
        for i1 in 0..n {
            if i1 == i2 || self.alpha[i1] <= 0.0 || self.alpha[i1] >= self.c {
                continue;
            }
            let gap = (self.error(i1) - e2).abs();
            if best.map_or(true, |(_, g)| gap > g) {
                best = Some((i1, gap));
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2, e2) {
                return true;
            }
        }
        // Fall back to scanning non-bound, then all, from a seeded offset.
        let start = rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.alpha[i1] > 0.0 && self.alpha[i1] < self.c && self.take_step(i1, i2, e2) {
                return true;
            }
        }
        let start = rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.take_step(i1, i2, e2) {
                return true;
            }
        }
        false
    }

    fn dual_objective(&self) -> f64 {
        let mut linear = 0.0;
        let mut quad = 0.0;
        for (i, &ai) in self.alpha.iter().enumerate() {
            linear += ai;
            if ai == 0.0 {
                continue;
            }
            for (j, &aj) in self.alpha.iter().enumerate() {
                if aj != 0.0 {
                    quad += ai * aj * self.y[i] * self.y[j] * self.kernel[i][j];
                }
            }
        }
        linear - 0.5 * quad
    }
}

fn resolve_gamma(standardized: &[Vec<f64>], explicit: Option<f64>) -> f64 {
    if let Some(g) = explicit {
        return g;
    }
    let dim = standardized[0].len();
    let n = standardized.len() as f64;
    let mut mean_var = 0.0;
    for d in 0..dim {
        let mean: f64 = standardized.iter().map(|r| r[d]).sum::<f64>() / n;
        let var: f64 = standardized.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
        mean_var += var / dim as f64;
    }
    if mean_var > 0.0 {
        1.0 / (dim as f64 * mean_var)
    } else {
        1.0 / dim as f64
    }
}

/// Trains a C-SVM on raw vectors with +-1 labels.
///
/// Standardization is fitted on `x` and baked into the returned model.
/// The run is deterministic for a fixed seed. Non-convergence within
/// `max_passes` is not an error: the model is returned with its final KKT
/// violation count in [`SvmModel::convergence`].
pub fn svm_train(x: &[Vec<f64>], y: &[f64], params: &SvmParams, seed: u64) -> Result<SvmModel> {
    params.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    for &label in y {
        if label != 1.0 && label != -1.0 {
            return Err(Error::InvalidParams(format!(
                "labels must be +-1, got {}",
                label
            )));
        }
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClassTraining);
    }

    let scaler = Standardizer::fit(x)?;
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|row| scaler.apply(row))
        .collect::<Result<_>>()?;
    let gamma = resolve_gamma(&z, params.gamma);

    let n = z.len();
    let mut kernel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let k = rbf_kernel(&z[i], &z[j], gamma)?;
            kernel[i][j] = k;
            kernel[j][i] = k;
        }
    }

    let mut smo = Smo {
        kernel,
        y,
        c: params.c,
        tol: params.kkt_tol,
        alpha: vec![0.0; n],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut examine_all = true;
    let mut num_changed = 1;
    let mut passes = 0;
    while (num_changed > 0 || examine_all) && passes < params.max_passes {
        num_changed = 0;
        for i in 0..n {
            if examine_all || (smo.alpha[i] > 0.0 && smo.alpha[i] < smo.c) {
                if smo.examine(i, &mut rng) {
                    num_changed += 1;
                }
            }
        }
        if examine_all {
            examine_all = false;
        } else if num_changed == 0 {
            examine_all = true;
        }
        passes += 1;
    }

    let kkt_violations = (0..n)
        .filter(|&i| smo.kkt_residual(i) > params.kkt_tol)
        .count();
    let convergence = Convergence {
        converged: kkt_violations == 0,
        kkt_violations,
        passes,
        dual_objective: smo.dual_objective(),
    };

    let mut support_vectors = Vec::new();
    let mut alpha = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        if smo.alpha[i] > 0.0 {
            support_vectors.push(z[i].clone());
            alpha.push(smo.alpha[i]);
            labels.push(y[i]);
        }
    }

    let model = SvmModel {
        c: params.c,
        gamma,
        bias: smo.bias,
        scaler,
        support_vectors,
        alpha,
        labels,
        kkt_tol: params.kkt_tol,
        convergence,
    };
    debug_assert!(model.check_dual_feasibility().is_ok());
    Ok(model)
}

/// Inner grid search over C and gamma, scored by cross-validation on the
/// training vectors only, then refit on everything with the winner.
///
/// Candidates: C in {0.1, 1, 10, 100}, gamma in {0.01, 0.1, 1, 10} times
/// the resolved default. Ties prefer smaller C, then smaller gamma. Falls
/// back to `base` untuned when a class is too small to stratify.
pub fn svm_train_tuned(
    x: &[Vec<f64>],
    y: &[f64],
    base: &SvmParams,
    seed: u64,
    cv_folds: usize,
) -> Result<(SvmModel, SvmParams)> {
    let scaler = Standardizer::fit(x)?;
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|row| scaler.apply(row))
        .collect::<Result<_>>()?;
    let default_gamma = resolve_gamma(&z, None);

    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
    let folds = cv_folds.max(2).min(pos.len()).min(neg.len());
    if folds < 2 {
        let model = svm_train(x, y, base, seed)?;
        return Ok((model, base.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    use rand::seq::SliceRandom;
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let fold_of = |rank: usize| rank % folds;

    let mut assignments = vec![0usize; y.len()];
    for (rank, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignments[i] = fold_of(rank);
    }

    let c_grid = [0.1, 1.0, 10.0, 100.0];
    let gamma_grid = [0.01, 0.1, 1.0, 10.0];
    let mut best: Option<(f64, SvmParams)> = None;
    for &c in &c_grid {
        for &gm in &gamma_grid {
            let candidate = SvmParams {
                c,
                gamma: Some(gm * default_gamma),
                ..base.clone()
            };
            let mut correct = 0usize;
            let mut total = 0usize;
            for fold in 0..folds {
                let mut xt = Vec::new();
                let mut yt = Vec::new();
                let mut xv = Vec::new();
                let mut yv = Vec::new();
                for i in 0..y.len() {
                    if assignments[i] == fold {
                        xv.push(x[i].clone());
                        yv.push(y[i]);
                    } else {
                        xt.push(x[i].clone());
                        yt.push(y[i]);
                    }
                }
                let model = svm_train(&xt, &yt, &candidate, seed)?;
                for (xi, &yi) in xv.iter().zip(&yv) {
                    let (_, v) = model.predict(xi)?;
                    let predicted = if v < 0.0 { -1.0 } else { 1.0 };
                    if predicted == yi {
                        correct += 1;
                    }
                    total += 1;
                }
            }
            let acc = correct as f64 / total as f64;
            if best.as_ref().map_or(true, |(b, _)| acc > *b) {
                best = Some((acc, candidate));
            }
        }
    }
    let (_, winner) = best.expect("grid is non-empty");
    let model = svm_train(x, y, &winner, seed)?;
    Ok((model, winner))
}
