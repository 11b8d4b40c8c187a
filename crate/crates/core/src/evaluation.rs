//! Leave-one-subject-out evaluation with repeated randomized runs.
//!
//! Per fold, every fitted object (feature scaler, k-means codebook, SVM)
//! sees training-fold data only; the held-out subject's sessions are
//! encoded against those objects and predicted. An audit log records which
//! sessions touched each fitted object so subject leakage is checkable
//! after the fact, not just assumed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{svm_train, SvmParams};
use crate::encoding::{build_feature_vector, Codebook, KmeansOptions, Point4};
use crate::error::{Error, Result};
use crate::features::GaitFeatures;
use crate::pipeline::{extract_session_features, PipelineParams};
use crate::seeding::derive_seed;
use crate::skeleton::{Label, LabeledDataset};

/// One leave-one-subject-out fold: indices into the dataset's sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoFold {
    pub held_out_subject: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits the dataset into one fold per subject, ordered by subject id.
pub fn loso_split(dataset: &LabeledDataset) -> Result<Vec<LosoFold>> {
    let subjects = dataset.subjects();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects {
            got: subjects.len(),
        });
    }
    let mut folds = Vec::with_capacity(subjects.len());
    for subject in subjects {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..dataset.sessions.len()).partition(|&i| dataset.sessions[i].subject_id == subject);
        folds.push(LosoFold {
            held_out_subject: subject.to_string(),
            train,
            test,
        });
    }
    Ok(folds)
}

/// 2x2 confusion counts: rows = true label, columns = predicted, ordered
/// [LowRisk, HighRisk]. Entries are f64 so entrywise averages over
/// repetitions use the same type.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[f64; 2]; 2],
}

fn class_index(label: Label) -> usize {
    match label {
        Label::LowRisk => 0,
        _ => 1,
    }
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        self.counts[class_index(truth)][class_index(predicted)] += 1.0;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> f64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// Fraction of samples on the diagonal.
    pub fn accuracy(&self) -> f64 {
        self.trace() / self.total()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for r in 0..2 {
            for c in 0..2 {
                self.counts[r][c] += other.counts[r][c];
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> ConfusionMatrix {
        let mut out = *self;
        for row in &mut out.counts {
            for v in row {
                *v *= factor;
            }
        }
        out
    }
}

/// A test sample that could not be processed and was counted as
/// misclassified rather than silently dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedSample {
    pub session: String,
    pub reason: String,
}

/// Provenance of one fold's fitted objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub held_out_subject: String,
    pub train_subjects: Vec<String>,
    /// Sessions whose frames fitted the scaler, codebook, and SVM.
    pub fitted_on_sessions: Vec<String>,
    pub test_sessions: Vec<String>,
    /// Train sessions skipped because extraction failed.
    pub skipped_train_sessions: Vec<String>,
}

/// Audit log for a whole evaluation. `violations` is empty when the
/// protocol held: no subject leakage and every sample tested exactly once.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditLog {
    pub folds: Vec<FoldAudit>,
    pub violations: Vec<String>,
}

/// Result of one repetition (one full LOSO pass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub seed: u64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub flagged: Vec<FlaggedSample>,
}

/// Snapshot of everything that parameterized an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub svm: SvmParams,
    pub pipeline: PipelineParams,
    pub n_reps: usize,
    pub base_seed: u64,
}

/// Aggregated evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub per_repetition: Vec<RepetitionResult>,
    pub mean_accuracy: f64,
    /// Population standard deviation over repetition accuracies.
    pub std_accuracy: f64,
    pub mean_confusion: ConfusionMatrix,
    pub audit: AuditLog,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report's internal consistency identity:
    /// mean accuracy equals trace/total of the mean confusion matrix.
    pub fn check_consistency(&self) -> Result<()> {
        let identity = self.mean_confusion.accuracy();
        if (identity - self.mean_accuracy).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "mean accuracy {} != trace/total {}",
                self.mean_accuracy, identity
            )));
        }
        Ok(())
    }
}

/// Per-session extraction output, shared by every fold and repetition.
struct Processed {
    subject: String,
    session_id: String,
    label: Label,
    features: std::result::Result<(GaitFeatures, Vec<Point4>), Error>,
}

fn process_all(dataset: &LabeledDataset, pipeline: &PipelineParams) -> Vec<Processed> {
    dataset
        .sessions
        .par_iter()
        .map(|session| Processed {
            subject: session.subject_id.clone(),
            session_id: session.id(),
            label: session.label,
            features: extract_session_features(session, pipeline)
                .map(|f| (f.gait, f.anatomical)),
        })
        .collect()
}

fn audit_folds(processed: &[Processed], folds: &[LosoFold]) -> AuditLog {
    let mut log = AuditLog::default();
    let mut tested = vec![0usize; processed.len()];
    for fold in folds {
        let mut train_subjects: Vec<String> = fold
            .train
            .iter()
            .map(|&i| processed[i].subject.clone())
            .collect();
        train_subjects.sort();
        train_subjects.dedup();
        if train_subjects.iter().any(|s| *s == fold.held_out_subject) {
            log.violations.push(format!(
                "subject leakage: {} appears in its own training fold",
                fold.held_out_subject
            ));
        }
        let mut fitted = Vec::new();
        let mut skipped = Vec::new();
        for &i in &fold.train {
            match &processed[i].features {
                Ok(_) => fitted.push(processed[i].session_id.clone()),
                Err(_) => skipped.push(processed[i].session_id.clone()),
            }
        }
        for &i in &fold.test {
            tested[i] += 1;
            if processed[i].subject != fold.held_out_subject {
                log.violations.push(format!(
                    "fold {}: test session {} belongs to {}",
                    fold.held_out_subject, processed[i].session_id, processed[i].subject
                ));
            }
        }
        log.folds.push(FoldAudit {
            held_out_subject: fold.held_out_subject.clone(),
            train_subjects,
            fitted_on_sessions: fitted,
            test_sessions: fold.test.iter().map(|&i| processed[i].session_id.clone()).collect(),
            skipped_train_sessions: skipped,
        });
    }
    for (i, &count) in tested.iter().enumerate() {
        if count != 1 {
            log.violations.push(format!(
                "coverage: session {} tested {} times",
                processed[i].session_id, count
            ));
        }
    }
    log
}

struct FoldOutcome {
    confusion: ConfusionMatrix,
    flagged: Vec<FlaggedSample>,
}

fn run_fold(
    processed: &[Processed],
    fold: &LosoFold,
    k: usize,
    svm: &SvmParams,
    fold_seed: u64,
) -> Result<FoldOutcome> {
    let fold_err = |source: Error| Error::FoldFailure {
        subject: fold.held_out_subject.clone(),
        source: Box::new(source),
    };

    // Codebook on training-fold frames only.
    let mut train_frames: Vec<Point4> = Vec::new();
    let mut train_vectors_src = Vec::new();
    for &i in &fold.train {
        if let Ok((gait, anat)) = &processed[i].features {
            train_frames.extend_from_slice(anat);
            train_vectors_src.push((gait, anat, processed[i].label));
        }
    }
    let codebook =
        Codebook::fit(&train_frames, k, fold_seed, &KmeansOptions::default()).map_err(fold_err)?;

    let mut x = Vec::with_capacity(train_vectors_src.len());
    let mut y = Vec::with_capacity(train_vectors_src.len());
    for (gait, anat, label) in train_vectors_src {
        let hist = codebook.histogram(anat).map_err(fold_err)?;
        x.push(build_feature_vector(gait, &hist));
        y.push(label.signed().expect("labeled dataset"));
    }
    let model = svm_train(&x, &y, svm, derive_seed(fold_seed, 1)).map_err(fold_err)?;

    let mut outcome = FoldOutcome {
        confusion: ConfusionMatrix::default(),
        flagged: Vec::new(),
    };
    for &i in &fold.test {
        let truth = processed[i].label;
        let prediction = match &processed[i].features {
            Ok((gait, anat)) => codebook
                .histogram(anat)
                .and_then(|hist| model.predict(&build_feature_vector(gait, &hist)))
                .map(|(label, _)| label),
            Err(e) => Err(e.clone()),
        };
        match prediction {
            Ok(label) => outcome.confusion.record(truth, label),
            Err(e) => {
                // A sample that cannot be processed counts against accuracy.
                let wrong = match truth {
                    Label::LowRisk => Label::HighRisk,
                    _ => Label::LowRisk,
                };
                outcome.confusion.record(truth, wrong);
                outcome.flagged.push(FlaggedSample {
                    session: processed[i].session_id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(outcome)
}

fn run_loso_processed(
    processed: &[Processed],
    folds: &[LosoFold],
    k: usize,
    svm: &SvmParams,
    seed: u64,
) -> Result<RepetitionResult> {
    let outcomes: Vec<Result<FoldOutcome>> = folds
        .par_iter()
        .enumerate()
        .map(|(idx, fold)| run_fold(processed, fold, k, svm, derive_seed(seed, idx as u64)))
        .collect();

    let mut confusion = ConfusionMatrix::default();
    let mut flagged = Vec::new();
    for outcome in outcomes {
        let o = outcome?;
        confusion.add(&o.confusion);
        flagged.extend(o.flagged);
    }
    Ok(RepetitionResult {
        seed,
        accuracy: confusion.accuracy(),
        confusion,
        flagged,
    })
}

/// One full LOSO pass: fit on each training fold, predict the held-out
/// subject, accumulate the confusion matrix across folds.
pub fn run_loso(
    dataset: &LabeledDataset,
    k: usize,
    svm: &SvmParams,
    pipeline: &PipelineParams,
    seed: u64,
) -> Result<(f64, ConfusionMatrix)> {
    let folds = loso_split(dataset)?;
    let processed = process_all(dataset, pipeline);
    let rep = run_loso_processed(&processed, &folds, k, svm, seed)?;
    Ok((rep.accuracy, rep.confusion))
}

/// Repeats the whole LOSO procedure with fresh k-means initializations per
/// repetition (seeds `base_seed .. base_seed + n_reps`) and aggregates
/// mean/std accuracy and the entrywise-mean confusion matrix.
pub fn repeat_evaluation(
    dataset: &LabeledDataset,
    k: usize,
    svm: &SvmParams,
    pipeline: &PipelineParams,
    n_reps: usize,
    base_seed: u64,
) -> Result<EvalReport> {
    if n_reps == 0 {
        return Err(Error::InvalidParams("n_reps must be >= 1".into()));
    }
    let folds = loso_split(dataset)?;
    let processed = process_all(dataset, pipeline);
    let audit = audit_folds(&processed, &folds);

    let mut per_repetition = Vec::with_capacity(n_reps);
    for rep in 0..n_reps {
        per_repetition.push(run_loso_processed(
            &processed,
            &folds,
            k,
            svm,
            base_seed + rep as u64,
        )?);
    }

    let accs: Vec<f64> = per_repetition.iter().map(|r| r.accuracy).collect();
    let mean_accuracy = accs.iter().sum::<f64>() / accs.len() as f64;
    let variance =
        accs.iter().map(|a| (a - mean_accuracy).powi(2)).sum::<f64>() / accs.len() as f64;
    let mut summed = ConfusionMatrix::default();
    for r in &per_repetition {
        summed.add(&r.confusion);
    }
    let mean_confusion = summed.scaled(1.0 / n_reps as f64);

    let report = EvalReport {
        config: EvalConfig {
            k,
            svm: svm.clone(),
            pipeline: pipeline.clone(),
            n_reps,
            base_seed,
        },
        per_repetition,
        mean_accuracy,
        std_accuracy: variance.sqrt(),
        mean_confusion,
        audit,
    };
    debug_assert!(report.check_consistency().is_ok());
    Ok(report)
}

/// One row of a cluster sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// K with the best mean accuracy; ties break to the smaller K.
    pub best_k: usize,
}

/// Runs [`repeat_evaluation`] for every K in the range.
pub fn sweep_clusters(
    dataset: &LabeledDataset,
    k_range: std::ops::RangeInclusive<usize>,
    svm: &SvmParams,
    pipeline: &PipelineParams,
    n_reps: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    let mut rows = Vec::new();
    for k in k_range {
        let report = repeat_evaluation(dataset, k, svm, pipeline, n_reps, base_seed)?;
        rows.push(SweepRow {
            k,
            mean_accuracy: report.mean_accuracy,
            std_accuracy: report.std_accuracy,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParams("empty K range".into()));
    }
    let best_k = rows
        .iter()
        .max_by(|a, b| {
            a.mean_accuracy
                .partial_cmp(&b.mean_accuracy)
                .unwrap()
                .then(b.k.cmp(&a.k))
        })
        .expect("non-empty rows")
        .k;
    Ok(SweepResult { rows, best_k })
}

/// Sweep rows as `K,mean_acc,std_acc` CSV.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("K,mean_acc,std_acc\n");
    for row in &result.rows {
        let _ = writeln!(out, "{},{},{}", row.k, row.mean_accuracy, row.std_accuracy);
    }
    out
}

/// Randomly permutes the per-subject labels (the label multiset is
/// preserved). Used as a permutation null: a pipeline free of leakage
/// should score near chance on the shuffled cohort.
pub fn shuffle_subject_labels(dataset: &LabeledDataset, seed: u64) -> LabeledDataset {
    let mut by_subject: BTreeMap<String, Label> = BTreeMap::new();
    for s in &dataset.sessions {
        by_subject.insert(s.subject_id.clone(), s.label);
    }
    let subjects: Vec<String> = by_subject.keys().cloned().collect();
    let mut labels: Vec<Label> = subjects.iter().map(|s| by_subject[s]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);
    let remap: BTreeMap<&String, Label> = subjects.iter().zip(labels).collect();
    let mut out = dataset.clone();
    for s in &mut out.sessions {
        s.label = remap[&s.subject_id];
    }
    out
}
