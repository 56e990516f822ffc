//! Cross-validation drivers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::addfs::{select_count, FeatureRanking};
use crate::dataset::LabeledDataset;
use crate::features::{extract_matrix_with, peak_feature_names, PeakParams, FEATURE_NAMES};
use crate::ingest::Flow;
use crate::stats::{mean, population_std};
use crate::Exec;

use super::{
    stratified_kfold, wilcoxon_signed_rank, ClassifierSpec, ConfusionMatrix, EvalError, FeatureSelector, Fold,
    PValueMethod, Selector,
};

/// Shared cross-validation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub classifier: ClassifierSpec,
    pub folds: usize,
    pub seed: u64,
    /// Rank features once on the whole dataset instead of per training fold.
    pub leaky: bool,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        EvalConfig {
            classifier: ClassifierSpec::default(),
            folds: 10,
            seed,
            leaky: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldScore {
    pub accuracy: f64,
    pub f1: f64,
}

/// Cross-validated result for one feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub selector: String,
    pub fraction: f64,
    pub n_features: usize,
    pub per_fold: Vec<FoldScore>,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub std_accuracy: f64,
    pub std_f1: f64,
    /// Sum of the per-fold confusion matrices.
    pub confusion: ConfusionMatrix,
    pub config: EvalConfig,
}

impl EvalReport {
    fn new(
        selector: String,
        fraction: f64,
        n_features: usize,
        folds: Vec<(FoldScore, ConfusionMatrix)>,
        n_classes: usize,
        config: EvalConfig,
    ) -> Self {
        let acc: Vec<f64> = folds.iter().map(|f| f.0.accuracy).collect();
        let f1: Vec<f64> = folds.iter().map(|f| f.0.f1).collect();
        let mut confusion = ConfusionMatrix::new(n_classes);
        for (_, cm) in &folds {
            confusion.merge(cm);
        }
        EvalReport {
            selector,
            fraction,
            n_features,
            per_fold: folds.into_iter().map(|f| f.0).collect(),
            mean_accuracy: mean(&acc),
            mean_f1: mean(&f1),
            std_accuracy: population_std(&acc),
            std_f1: population_std(&f1),
            confusion,
            config,
        }
    }

    /// `selector,fraction,n_features,mean_acc,mean_f1,std_acc,std_f1`.
    pub fn write_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["selector", "fraction", "n_features", "mean_acc", "mean_f1", "std_acc", "std_f1"])?;
        for r in reports {
            w.write_record([
                r.selector.clone(),
                r.fraction.to_string(),
                r.n_features.to_string(),
                r.mean_accuracy.to_string(),
                r.mean_f1.to_string(),
                r.std_accuracy.to_string(),
                r.std_f1.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn fit_and_score(
    data: &LabeledDataset,
    fold: &Fold,
    cols: &[usize],
    classifier: &ClassifierSpec,
) -> Result<(FoldScore, ConfusionMatrix), EvalError> {
    let train = data.subset(&fold.train).select_features(cols)?;
    let model = classifier.fit(&train)?;
    let mut cm = ConfusionMatrix::new(data.n_classes());
    let mut row = Vec::with_capacity(cols.len());
    for &i in &fold.test {
        row.clear();
        row.extend(cols.iter().map(|&c| data.value(i, c)));
        cm.record(data.labels()[i], model.predict(&row));
    }
    let score = FoldScore {
        accuracy: cm.accuracy()?,
        f1: cm.f1_macro()?,
    };
    Ok((score, cm))
}

fn folds_of(data: &LabeledDataset, config: &EvalConfig) -> Result<Vec<Fold>, EvalError> {
    stratified_kfold(data.labels(), config.folds, config.seed)
}

/// Cross-validates a fixed feature subset.
pub fn cross_validate(
    data: &LabeledDataset,
    cols: &[usize],
    config: &EvalConfig,
    exec: Exec,
) -> Result<EvalReport, EvalError> {
    let folds = folds_of(data, config)?;
    let per_fold = exec.try_map_range(folds.len(), |f| {
        fit_and_score(data, &folds[f], cols, &config.classifier).map_err(|e| e.context(format!("fold {f}")))
    })?;
    let fraction = cols.len() as f64 / data.n_features().max(1) as f64;
    Ok(EvalReport::new("fixed".into(), fraction, cols.len(), per_fold, data.n_classes(), *config))
}

/// For every fraction, keeps the top-ranked share of the features and
/// cross-validates the classifier on them. Ranking uses only the training
/// rows of each fold unless `config.leaky` is set.
pub fn run_sweep(
    data: &LabeledDataset,
    selector: &dyn FeatureSelector,
    fractions: &[f64],
    config: &EvalConfig,
    exec: Exec,
) -> Result<Vec<EvalReport>, EvalError> {
    if fractions.is_empty() {
        return Err(EvalError::NoFractions);
    }
    let counts = fractions
        .iter()
        .map(|&f| select_count(data.n_features(), f))
        .collect::<Result<Vec<_>, _>>()?;
    let folds = folds_of(data, config)?;
    let global: Option<FeatureRanking> = if config.leaky {
        Some(selector.rank(data, config.seed, exec)?)
    } else {
        None
    };
    let per_fold = exec.try_map_range(folds.len(), |f| {
        let fold = &folds[f];
        let ranking = match &global {
            Some(r) => r.clone(),
            None => selector
                .rank(&data.subset(&fold.train), config.seed.wrapping_add(f as u64), exec)
                .map_err(|e| e.context(format!("fold {f}")))?,
        };
        counts
            .iter()
            .zip(fractions)
            .map(|(&k, &fr)| {
                fit_and_score(data, fold, &ranking.order[..k], &config.classifier)
                    .map_err(|e| e.context(format!("fraction {fr}, fold {f}")))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(fractions
        .iter()
        .enumerate()
        .map(|(p, &fr)| {
            let folds = per_fold.iter().map(|f| f[p].clone()).collect();
            EvalReport::new(selector.name(), fr, counts[p], folds, data.n_classes(), *config)
        })
        .collect())
}

/// Full feature set against the set without peak-point features, on the
/// same folds.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub full: EvalReport,
    pub reduced: EvalReport,
    pub delta_accuracy: f64,
    pub delta_f1: f64,
}

impl AblationReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature_set", "n_features", "mean_acc", "mean_f1", "std_acc", "std_f1"])?;
        for (name, r) in [("FS", &self.full), ("FS-PP", &self.reduced)] {
            w.write_record([
                name.to_string(),
                r.n_features.to_string(),
                r.mean_accuracy.to_string(),
                r.mean_f1.to_string(),
                r.std_accuracy.to_string(),
                r.std_f1.to_string(),
            ])?;
        }
        w.write_record([
            "delta".to_string(),
            (self.full.n_features - self.reduced.n_features).to_string(),
            self.delta_accuracy.to_string(),
            self.delta_f1.to_string(),
            String::new(),
            String::new(),
        ])?;
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn ablation_peak_features(
    data: &LabeledDataset,
    config: &EvalConfig,
    exec: Exec,
) -> Result<AblationReport, EvalError> {
    let names = data.feature_names();
    let position = |n: &str| {
        names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| EvalError::MissingColumn(n.to_string()))
    };
    let full = FEATURE_NAMES.iter().map(|n| position(n)).collect::<Result<Vec<_>, _>>()?;
    let peaks = peak_feature_names();
    let reduced: Vec<usize> = FEATURE_NAMES
        .iter()
        .zip(&full)
        .filter(|(n, _)| !peaks.contains(n))
        .map(|(_, &c)| c)
        .collect();
    let mut full_report = cross_validate(data, &full, config, exec)?;
    full_report.selector = "FS".into();
    let mut reduced_report = cross_validate(data, &reduced, config, exec)?;
    reduced_report.selector = "FS-PP".into();
    Ok(AblationReport {
        delta_accuracy: full_report.mean_accuracy - reduced_report.mean_accuracy,
        delta_f1: full_report.mean_f1 - reduced_report.mean_f1,
        full: full_report,
        reduced: reduced_report,
    })
}

/// One point of a peak-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub parameter: String,
    pub value: f64,
    pub params: PeakParams,
    pub report: EvalReport,
}

impl ParamPoint {
    /// `parameter,value,n_features,mean_acc,mean_f1,std_acc,std_f1`.
    pub fn write_csv<W: Write>(points: &[ParamPoint], out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "value", "n_features", "mean_acc", "mean_f1", "std_acc", "std_f1"])?;
        for p in points {
            let r = &p.report;
            w.write_record([
                p.parameter.clone(),
                p.value.to_string(),
                r.n_features.to_string(),
                r.mean_accuracy.to_string(),
                r.mean_f1.to_string(),
                r.std_accuracy.to_string(),
                r.std_f1.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Re-extracts the features of labeled `flows` under each parameter set
/// and cross-validates the full feature set. `points` pairs a swept
/// parameter name and value with the parameters to use.
pub fn param_sweep(
    flows: &[Flow],
    points: &[(String, f64, PeakParams)],
    config: &EvalConfig,
    exec: Exec,
) -> Result<Vec<ParamPoint>, EvalError> {
    points
        .iter()
        .map(|(name, value, params)| {
            let ctx = |e: EvalError| e.context(format!("{name}={value}"));
            let matrix = extract_matrix_with(flows, params, exec).map_err(|e| ctx(e.into()))?;
            let data = LabeledDataset::from_feature_matrix(&matrix).map_err(|e| ctx(e.into()))?;
            let cols: Vec<usize> = (0..data.n_features()).collect();
            let report = cross_validate(&data, &cols, config, exec).map_err(ctx)?;
            Ok(ParamPoint {
                parameter: name.clone(),
                value: *value,
                params: *params,
                report,
            })
        })
        .collect()
}

/// Pairwise signed-rank test of the first selector against another.
#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonRow {
    pub fraction: f64,
    pub vs: String,
    /// `None` when every paired difference is zero.
    pub result: Option<super::WilcoxonResult>,
}

/// Accuracies of every selector on every dataset at every fraction, and a
/// Wilcoxon test of the first selector against each other one per
/// fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(dataset, selector, fraction, mean accuracy)`.
    pub rows: Vec<(String, String, f64, f64)>,
    pub wilcoxon: Vec<WilcoxonRow>,
}

impl Comparison {
    /// `dataset,selector,fraction,accuracy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "selector", "fraction", "accuracy"])?;
        for (d, s, f, a) in &self.rows {
            w.write_record([d.clone(), s.clone(), f.to_string(), a.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// `vs,R+,R-,p` for one fraction; an all-zero comparison prints `NA`.
    pub fn write_wilcoxon_csv<W: Write>(&self, fraction: f64, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vs", "R+", "R-", "p"])?;
        for row in self.wilcoxon.iter().filter(|r| r.fraction == fraction) {
            let cells = match &row.result {
                Some(r) => [r.r_plus.to_string(), r.r_minus.to_string(), r.p_value.to_string()],
                None => ["NA".into(), "NA".into(), "NA".into()],
            };
            w.write_record([row.vs.clone(), cells[0].clone(), cells[1].clone(), cells[2].clone()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn compare(
    datasets: &[(String, LabeledDataset)],
    selectors: &[Selector],
    fractions: &[f64],
    config: &EvalConfig,
    exec: Exec,
) -> Result<Comparison, EvalError> {
    // acc[d][s][f]
    let mut acc = Vec::with_capacity(datasets.len());
    for (name, data) in datasets {
        let per_sel = selectors
            .iter()
            .map(|s| {
                run_sweep(data, s, fractions, config, exec)
                    .map(|r| r.iter().map(|e| e.mean_accuracy).collect::<Vec<_>>())
                    .map_err(|e| e.context(format!("dataset {name}, selector {}", s.name())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        acc.push(per_sel);
    }
    let mut rows = Vec::new();
    for (d, (name, _)) in datasets.iter().enumerate() {
        for (s, sel) in selectors.iter().enumerate() {
            for (f, &fr) in fractions.iter().enumerate() {
                rows.push((name.clone(), sel.name(), fr, acc[d][s][f]));
            }
        }
    }
    let mut wilcoxon = Vec::new();
    if datasets.len() >= 2 {
        for (f, &fr) in fractions.iter().enumerate() {
            let base: Vec<f64> = acc.iter().map(|a| a[0][f]).collect();
            for (s, sel) in selectors.iter().enumerate().skip(1) {
                let other: Vec<f64> = acc.iter().map(|a| a[s][f]).collect();
                let result = match wilcoxon_signed_rank(&base, &other, PValueMethod::Auto) {
                    Ok(r) => Some(r),
                    Err(EvalError::AllZeroDifferences) => None,
                    Err(e) => return Err(e),
                };
                wilcoxon.push(WilcoxonRow {
                    fraction: fr,
                    vs: format!("{} vs {}", selectors[0].name(), sel.name()),
                    result,
                });
            }
        }
    }
    Ok(Comparison { rows, wilcoxon })
}
