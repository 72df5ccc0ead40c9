//! Per-problem result rows and batch experiment summaries.
//!
//! A [`ProblemRow`] carries the exact relative condition number, the
//! relative bound ladder and the spectral diagnostics for one problem; a
//! failed analysis becomes a machine-readable [`ErrorRow`] instead of
//! aborting the batch. Serialization is deterministic: fixed CSV column
//! order, fixed float formatting, fixed metric order in summaries.

use serde::{Deserialize, Serialize};

use crate::bounds::bound_report;
use crate::conditioning::{kappa_closed, kappa_kronecker, DEFAULT_K_ENTRY_CAP};
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::tls::{solve_from_spectral, spectral_data, TlsProblem, DEFAULT_TOL_GAP};

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub tol_gap: f64,
    /// Entry cap for the materialized Jacobian route.
    pub k_entry_cap: usize,
    /// Attempt the Jacobian route at all (still subject to the cap).
    pub include_kronecker: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            tol_gap: DEFAULT_TOL_GAP,
            k_entry_cap: DEFAULT_K_ENTRY_CAP,
            include_kronecker: true,
        }
    }
}

/// One analyzed problem: relative condition number, relative bounds and
/// diagnostics. `None` means the bound is inapplicable for this problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemRow {
    pub id: String,
    pub m: usize,
    pub n: usize,
    /// Exact relative condition number (closed formula).
    pub kappa_rel: f64,
    /// Cross-check from the materialized Jacobian, when under the cap.
    pub kappa_kronecker_rel: Option<f64>,
    pub lower2_rel: f64,
    pub upper2_rel: Option<f64>,
    pub upper1_rel: f64,
    pub lower1_rel: Option<f64>,
    pub bg_rel: f64,
    pub gvl_rel: Option<f64>,
    pub sigma_np1_over_sigma_n: f64,
    pub sigma_np1_over_sigma_hat_n: f64,
    pub sigma_1_over_sigma_hat_n: f64,
    pub alpha: f64,
    pub gap: f64,
    pub consistent: bool,
}

/// Machine-readable failure record for one problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRow {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AnalysisRecord {
    Ok(ProblemRow),
    Error(ErrorRow),
}

impl AnalysisRecord {
    pub fn row(&self) -> Option<&ProblemRow> {
        match self {
            AnalysisRecord::Ok(row) => Some(row),
            AnalysisRecord::Error(_) => None,
        }
    }
}

pub const CSV_HEADER: &str = "id,m,n,kappa_rel,kappa_kronecker_rel,lower2_rel,upper2_rel,\
upper1_rel,lower1_rel,bg_rel,gvl_rel,sigma_np1_over_sigma_n,sigma_np1_over_sigma_hat_n,\
sigma_1_over_sigma_hat_n,alpha,gap,consistent,error";

/// 17 significant digits: round-trips f64 exactly and keeps reruns
/// byte-identical.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl ProblemRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
            self.id,
            self.m,
            self.n,
            fmt_f64(self.kappa_rel),
            fmt_opt(self.kappa_kronecker_rel),
            fmt_f64(self.lower2_rel),
            fmt_opt(self.upper2_rel),
            fmt_f64(self.upper1_rel),
            fmt_opt(self.lower1_rel),
            fmt_f64(self.bg_rel),
            fmt_opt(self.gvl_rel),
            fmt_f64(self.sigma_np1_over_sigma_n),
            fmt_f64(self.sigma_np1_over_sigma_hat_n),
            fmt_f64(self.sigma_1_over_sigma_hat_n),
            fmt_f64(self.alpha),
            fmt_f64(self.gap),
            self.consistent,
        )
    }
}

impl ErrorRow {
    pub fn to_csv_line(&self) -> String {
        format!("{},{},{},,,,,,,,,,,,,,,{}", self.id, self.m, self.n, self.code)
    }
}

impl AnalysisRecord {
    pub fn to_csv_line(&self) -> String {
        match self {
            AnalysisRecord::Ok(row) => row.to_csv_line(),
            AnalysisRecord::Error(err) => err.to_csv_line(),
        }
    }
}

/// Analyze one problem into a result or error row.
pub fn analyze_problem(p: &TlsProblem, id: &str, opts: &AnalyzeOptions) -> AnalysisRecord {
    match try_analyze(p, id, opts) {
        Ok(row) => AnalysisRecord::Ok(row),
        Err(err) => AnalysisRecord::Error(ErrorRow {
            id: id.to_string(),
            m: p.nrows(),
            n: p.ncols(),
            code: err.code().to_string(),
            message: err.to_string(),
        }),
    }
}

fn try_analyze(p: &TlsProblem, id: &str, opts: &AnalyzeOptions) -> Result<ProblemRow> {
    let sd = spectral_data(p)?;
    let sol = solve_from_spectral(p, &sd, opts.tol_gap)?;
    let scale = sd.frobenius_augmented() / sol.norm_x();

    let kappa_rel = kappa_closed(&sd)? * scale;
    let bounds = bound_report(&sd, &sol)?;

    let kappa_kronecker_rel = if opts.include_kronecker {
        kappa_kronecker(p, &sol, opts.k_entry_cap).ok().map(|k| k * scale)
    } else {
        None
    };

    Ok(ProblemRow {
        id: id.to_string(),
        m: p.nrows(),
        n: p.ncols(),
        kappa_rel,
        kappa_kronecker_rel,
        lower2_rel: bounds.lower2 * scale,
        upper2_rel: bounds.upper2.map(|v| v * scale),
        upper1_rel: bounds.upper1 * scale,
        lower1_rel: bounds.lower1.map(|v| v * scale),
        bg_rel: bounds.bg_upper_rel,
        gvl_rel: bounds.gvl_rel,
        sigma_np1_over_sigma_n: bounds.rho,
        sigma_np1_over_sigma_hat_n: sd.sigma_np1() / sd.sigma_hat_n(),
        sigma_1_over_sigma_hat_n: sd.sigma_1() / sd.sigma_hat_n(),
        alpha: sd.alpha,
        gap: sol.gap,
        consistent: sol.is_consistent(sd.sigma_1()),
    })
}

/// Mean statistics for one metric over the successful samples of an
/// experiment. `count` is the number of samples where the metric was
/// applicable; `log10_mean` averages `log10` of the positive values
/// (the quantity plotted by log-scale figures).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub log10_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub id: String,
    pub samples_requested: usize,
    pub samples_ok: usize,
    pub failures: usize,
    pub base_seed: u64,
    pub metrics: Vec<MetricSummary>,
}

pub const SUMMARY_CSV_HEADER: &str = "metric,count,mean,log10_mean";

impl ExperimentSummary {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_CSV_HEADER);
        out.push('\n');
        for m in &self.metrics {
            out.push_str(&format!(
                "{},{},{},{}\n",
                m.metric,
                m.count,
                fmt_f64(m.mean),
                fmt_f64(m.log10_mean)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Experiment {
    pub summary: ExperimentSummary,
    pub records: Vec<AnalysisRecord>,
}

/// Metric extraction order for summaries; fixed so serialized output is
/// stable.
const METRICS: &[(&str, fn(&ProblemRow) -> Option<f64>)] = &[
    ("kappa_rel", |r| Some(r.kappa_rel)),
    ("lower2_rel", |r| Some(r.lower2_rel)),
    ("upper2_rel", |r| r.upper2_rel),
    ("upper1_rel", |r| Some(r.upper1_rel)),
    ("lower1_rel", |r| r.lower1_rel),
    ("bg_rel", |r| Some(r.bg_rel)),
    ("gvl_rel", |r| r.gvl_rel),
    ("sigma_np1_over_sigma_n", |r| Some(r.sigma_np1_over_sigma_n)),
    ("sigma_np1_over_sigma_hat_n", |r| Some(r.sigma_np1_over_sigma_hat_n)),
    ("one_minus_sigma_np1_over_sigma_hat_n", |r| Some(1.0 - r.sigma_np1_over_sigma_hat_n)),
    ("sigma_1_over_sigma_hat_n", |r| Some(r.sigma_1_over_sigma_hat_n)),
    ("alpha", |r| Some(r.alpha)),
    ("gap", |r| Some(r.gap)),
];

/// Generate `samples` problems with seeds `base_seed + i`, analyze each,
/// and aggregate per-metric arithmetic and log10-domain means over the
/// successful rows. Deterministic for fixed inputs.
pub fn run_experiment(
    spec: &GeneratorSpec,
    samples: usize,
    base_seed: u64,
    opts: &AnalyzeOptions,
) -> Result<Experiment> {
    if samples < 1 {
        return Err(Error::InvalidInput("experiment needs at least one sample".into()));
    }
    let seeded = spec.clone().with_seed(base_seed);
    let mut records = Vec::with_capacity(samples);
    for i in 0..samples as u64 {
        let sample_spec = seeded.clone().with_seed(seeded.derived_seed(i));
        let id = sample_spec.id();
        match sample_spec.generate() {
            Ok(p) => records.push(analyze_problem(&p, &id, opts)),
            Err(err) => records.push(AnalysisRecord::Error(ErrorRow {
                id,
                m: spec.m,
                n: spec.n.unwrap_or(0),
                code: err.code().to_string(),
                message: err.to_string(),
            })),
        }
    }

    let rows: Vec<&ProblemRow> = records.iter().filter_map(|r| r.row()).collect();
    let metrics = METRICS
        .iter()
        .map(|(name, extract)| {
            let values: Vec<f64> = rows.iter().filter_map(|r| extract(r)).collect();
            let count = values.len();
            let mean = if count > 0 {
                values.iter().sum::<f64>() / count as f64
            } else {
                f64::NAN
            };
            let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
            let log10_mean = if positive.is_empty() {
                f64::NAN
            } else {
                positive.iter().map(|v| v.log10()).sum::<f64>() / positive.len() as f64
            };
            MetricSummary { metric: name.to_string(), count, mean, log10_mean }
        })
        .collect();

    let summary = ExperimentSummary {
        id: seeded.id(),
        samples_requested: samples,
        samples_ok: rows.len(),
        failures: samples - rows.len(),
        base_seed,
        metrics,
    };
    Ok(Experiment { summary, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn vanhuffel_row_has_all_bounds() {
        let spec = GeneratorSpec::vanhuffel(50);
        let p = spec.generate().unwrap();
        let record = analyze_problem(&p, &spec.id(), &AnalyzeOptions::default());
        let row = record.row().expect("analysis should succeed");
        assert!(row.kappa_rel > 0.0);
        assert!(row.upper2_rel.is_some(), "alpha = 1/7 <= 1/2");
        assert!(row.lower1_rel.is_some());
        assert!(row.gvl_rel.is_some());
        assert!(!row.consistent);
        // Sandwich sanity at the row level.
        assert!(row.lower2_rel <= row.kappa_rel * (1.0 + 1e-10));
        assert!(row.kappa_rel <= row.upper1_rel * (1.0 + 1e-10));
    }

    #[test]
    fn degenerate_input_becomes_error_row() {
        let p = TlsProblem::new(
            DMatrix::from_column_slice(2, 1, &[2.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        let record = analyze_problem(&p, "degenerate", &AnalyzeOptions::default());
        match record {
            AnalysisRecord::Error(err) => assert_eq!(err.code, "DegenerateSolution"),
            AnalysisRecord::Ok(_) => panic!("expected an error row"),
        }
    }

    #[test]
    fn single_sample_experiment_equals_row() {
        let spec = GeneratorSpec::gaussian(12, 3, 7);
        let exp = run_experiment(&spec, 1, 7, &AnalyzeOptions::default()).unwrap();
        assert_eq!(exp.summary.samples_ok, 1);
        let row = exp.records[0].row().unwrap();
        let kappa = exp.summary.metric("kappa_rel").unwrap();
        assert_relative_eq!(kappa.mean, row.kappa_rel);
        assert_relative_eq!(kappa.log10_mean, row.kappa_rel.log10());
    }

    #[test]
    fn experiments_are_reproducible() {
        let spec = GeneratorSpec::gaussian(10, 3, 0);
        let opts = AnalyzeOptions::default();
        let a = run_experiment(&spec, 5, 3, &opts).unwrap();
        let b = run_experiment(&spec, 5, 3, &opts).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
        let csv_a: Vec<String> = a.records.iter().map(|r| r.to_csv_line()).collect();
        let csv_b: Vec<String> = b.records.iter().map(|r| r.to_csv_line()).collect();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn zero_samples_rejected() {
        let spec = GeneratorSpec::gaussian(10, 3, 0);
        assert!(run_experiment(&spec, 0, 0, &AnalyzeOptions::default()).is_err());
    }

    #[test]
    fn csv_column_count_matches_header() {
        let columns = CSV_HEADER.split(',').count();
        let spec = GeneratorSpec::vanhuffel(20);
        let p = spec.generate().unwrap();
        let record = analyze_problem(&p, &spec.id(), &AnalyzeOptions::default());
        assert_eq!(record.to_csv_line().split(',').count(), columns);
        let err = ErrorRow {
            id: "x".into(),
            m: 2,
            n: 1,
            code: "NonGeneric".into(),
            message: String::new(),
        };
        assert_eq!(err.to_csv_line().split(',').count(), columns);
    }
}
