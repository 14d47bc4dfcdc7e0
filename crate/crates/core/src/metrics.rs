//! Accuracy metrics, relative-to-naive tabulation, and the snapshot
//! robustness study.
//!
//! Error metrics live on the count scale. Percentage metrics skip months
//! with zero observed cases and record how many were excluded, rather
//! than blowing up a whole report on one quiet month.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::models::{run_model, ModelConfig, ModelKind, NowcastTrace};
use crate::month::MonthRange;
use crate::panel::MonthlyPanel;

/// The five accuracy metrics for one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSet {
    pub rmse: f64,
    pub mae: f64,
    pub rmspe: f64,
    pub mape: f64,
    /// Pearson correlation on the count scale; missing when either series
    /// has zero variance.
    pub corr: Option<f64>,
    /// months entering the percentage metrics
    pub n_used: usize,
    /// months skipped by the percentage metrics because observed == 0
    pub n_excluded_zero: usize,
}

/// Compute the metric set for one trace.
pub fn compute_metrics(trace: &NowcastTrace) -> Result<MetricSet> {
    let n = trace.len();
    if n == 0 {
        return Err(Error::Validation("empty trace".into()));
    }
    if trace.observed.len() != n || trace.predicted.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "trace {} has misaligned series",
            trace.kind
        )));
    }

    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut sq_pct = 0.0;
    let mut abs_pct = 0.0;
    let mut n_used = 0usize;
    for (&p, &o) in trace.predicted.iter().zip(&trace.observed) {
        let e = p - o;
        sq += e * e;
        abs += e.abs();
        if o > 0.0 {
            let pct = e / o;
            sq_pct += pct * pct;
            abs_pct += pct.abs();
            n_used += 1;
        }
    }
    let nf = n as f64;
    let rmse = (sq / nf).sqrt();
    let mae = abs / nf;
    let (rmspe, mape) = if n_used > 0 {
        let uf = n_used as f64;
        ((sq_pct / uf).sqrt(), abs_pct / uf)
    } else {
        (0.0, 0.0)
    };

    Ok(MetricSet {
        rmse,
        mae,
        rmspe,
        mape,
        corr: pearson(&trace.predicted, &trace.observed),
        n_used,
        n_excluded_zero: n - n_used,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Error-metric ratios against the naive baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeErrors {
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub rmspe: Option<f64>,
    pub mape: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BestFlags {
    pub rmse: bool,
    pub mae: bool,
    pub rmspe: bool,
    pub mape: bool,
    pub corr: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub kind: ModelKind,
    pub absolute: MetricSet,
    pub relative: RelativeErrors,
    pub best: BestFlags,
}

/// Metric table across models: absolute values, ratios to the naive
/// baseline, and best-in-column flags. Correlation is passed through as
/// an absolute value, never as a ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub window: MonthRange,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, kind: ModelKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    pub fn naive_absolute(&self) -> &MetricSet {
        &self
            .row(ModelKind::Naive)
            .expect("reports always carry the naive row")
            .absolute
    }
}

fn ratio(value: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| value / baseline)
}

/// Build the relative-to-naive report for traces sharing one evaluation
/// window. The naive trace must be present; its error ratios are exactly 1.
pub fn relative_report(traces: &[NowcastTrace]) -> Result<EvalReport> {
    if traces.is_empty() {
        return Err(Error::Validation("no traces to report on".into()));
    }
    let window = traces[0]
        .range()
        .ok_or_else(|| Error::Validation("empty trace".into()))?;
    for t in traces {
        if t.range() != Some(window) {
            return Err(Error::WindowMismatch(format!(
                "{} covers {:?}, expected {window}",
                t.kind,
                t.range()
            )));
        }
    }
    let naive = traces
        .iter()
        .find(|t| t.kind == ModelKind::Naive)
        .ok_or(Error::NaiveMissing)?;
    let naive_metrics = compute_metrics(naive)?;

    let mut rows = Vec::with_capacity(traces.len());
    for trace in traces {
        let absolute = compute_metrics(trace)?;
        let relative = if trace.kind == ModelKind::Naive {
            RelativeErrors {
                rmse: Some(1.0),
                mae: Some(1.0),
                rmspe: Some(1.0),
                mape: Some(1.0),
            }
        } else {
            RelativeErrors {
                rmse: ratio(absolute.rmse, naive_metrics.rmse),
                mae: ratio(absolute.mae, naive_metrics.mae),
                rmspe: ratio(absolute.rmspe, naive_metrics.rmspe),
                mape: ratio(absolute.mape, naive_metrics.mape),
            }
        };
        rows.push(ReportRow {
            kind: trace.kind,
            absolute,
            relative,
            best: BestFlags::default(),
        });
    }
    flag_best(&mut rows);
    Ok(EvalReport { window, rows })
}

/// Mark the strict best value per column; ties flag every tied row.
fn flag_best(rows: &mut [ReportRow]) {
    let min_of = |f: fn(&MetricSet) -> f64, rows: &[ReportRow]| {
        rows.iter().map(|r| f(&r.absolute)).fold(f64::INFINITY, f64::min)
    };
    let best_rmse = min_of(|m| m.rmse, rows);
    let best_mae = min_of(|m| m.mae, rows);
    let best_rmspe = min_of(|m| m.rmspe, rows);
    let best_mape = min_of(|m| m.mape, rows);
    let best_corr = rows
        .iter()
        .filter_map(|r| r.absolute.corr)
        .fold(f64::NEG_INFINITY, f64::max);
    for r in rows {
        r.best.rmse = r.absolute.rmse == best_rmse;
        r.best.mae = r.absolute.mae == best_mae;
        r.best.rmspe = r.absolute.rmspe == best_rmspe;
        r.best.mape = r.absolute.mape == best_mape;
        r.best.corr = r.absolute.corr.is_some_and(|c| c == best_corr);
    }
}

/// Per-model mean and standard deviation of the absolute metrics across
/// search-data snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessSummary {
    pub kind: ModelKind,
    pub mean: MetricSet,
    pub std: MetricSet,
    pub n_snapshots: usize,
}

/// Run every model on every snapshot panel and summarize the spread of
/// each metric. Snapshots must share the identical case series (and gdt
/// column), differing only in their query columns.
pub fn robustness_study(
    panels: &[MonthlyPanel],
    configs: &[ModelConfig],
    eval: MonthRange,
) -> Result<Vec<RobustnessSummary>> {
    if panels.len() < 2 {
        return Err(Error::Validation(
            "robustness study needs at least two snapshot panels".into(),
        ));
    }
    let base = &panels[0];
    for (i, p) in panels.iter().enumerate().skip(1) {
        if p.cases() != base.cases() || p.start() != base.start() {
            return Err(Error::SnapshotMismatch(format!(
                "snapshot {i} differs from snapshot 0 in its case series"
            )));
        }
        if p.gdt() != base.gdt() {
            return Err(Error::SnapshotMismatch(format!(
                "snapshot {i} differs from snapshot 0 in its gdt column"
            )));
        }
    }

    let mut per_model: BTreeMap<&'static str, (ModelKind, Vec<MetricSet>)> = BTreeMap::new();
    for config in configs {
        let mut sets = Vec::with_capacity(panels.len());
        for panel in panels {
            let trace = run_model(panel, config, eval)?;
            sets.push(compute_metrics(&trace)?);
        }
        per_model.insert(config.kind.label(), (config.kind, sets));
    }

    let summaries = configs
        .iter()
        .map(|config| {
            let (kind, sets) = &per_model[config.kind.label()];
            let (mean, std) = summarize(sets);
            RobustnessSummary {
                kind: *kind,
                mean,
                std,
                n_snapshots: panels.len(),
            }
        })
        .collect();
    Ok(summaries)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    // bit-identical runs must report a spread of exactly zero
    if values.windows(2).all(|p| p[0] == p[1]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(sets: &[MetricSet]) -> (MetricSet, MetricSet) {
    let collect = |f: fn(&MetricSet) -> f64| sets.iter().map(f).collect::<Vec<_>>();
    let (rmse_m, rmse_s) = mean_std(&collect(|m| m.rmse));
    let (mae_m, mae_s) = mean_std(&collect(|m| m.mae));
    let (rmspe_m, rmspe_s) = mean_std(&collect(|m| m.rmspe));
    let (mape_m, mape_s) = mean_std(&collect(|m| m.mape));
    let corrs: Vec<f64> = sets.iter().filter_map(|m| m.corr).collect();
    let corr_stats = (corrs.len() == sets.len()).then(|| mean_std(&corrs));
    let n_used = sets[0].n_used;
    let n_excluded = sets[0].n_excluded_zero;
    (
        MetricSet {
            rmse: rmse_m,
            mae: mae_m,
            rmspe: rmspe_m,
            mape: mape_m,
            corr: corr_stats.map(|(m, _)| m),
            n_used,
            n_excluded_zero: n_excluded,
        },
        MetricSet {
            rmse: rmse_s,
            mae: mae_s,
            rmspe: rmspe_s,
            mape: mape_s,
            corr: corr_stats.map(|(_, s)| s),
            n_used,
            n_excluded_zero: n_excluded,
        },
    )
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt3).unwrap_or_else(|| "NA".into())
}

/// Emit the relative table: one row per model, relative error values with
/// the naive absolute values parenthesized, correlation absolute, and `*`
/// marking the best value per column.
pub fn report_table_csv(report: &EvalReport) -> String {
    let mut out = String::from("model,rmse,mae,rmspe,mape,corr\n");
    for row in &report.rows {
        let star = |b: bool| if b { "*" } else { "" };
        let cell = |rel: Option<f64>, abs: f64, best: bool, is_naive: bool| {
            if is_naive {
                format!("1 ({}){}", fmt3(abs), star(best))
            } else {
                format!("{}{}", fmt_opt(rel), star(best))
            }
        };
        let is_naive = row.kind == ModelKind::Naive;
        out.push_str(&format!(
            "{},{},{},{},{},{}{}\n",
            row.kind,
            cell(row.relative.rmse, row.absolute.rmse, row.best.rmse, is_naive),
            cell(row.relative.mae, row.absolute.mae, row.best.mae, is_naive),
            cell(row.relative.rmspe, row.absolute.rmspe, row.best.rmspe, is_naive),
            cell(row.relative.mape, row.absolute.mape, row.best.mape, is_naive),
            fmt_opt(row.absolute.corr),
            star(row.best.corr),
        ));
    }
    out
}

/// Machine-readable variant: absolute and relative values plus the
/// percentage-metric exclusion counts.
pub fn report_full_csv(report: &EvalReport) -> String {
    let mut out =
        String::from("model,metric,absolute,relative,best,n_used,n_excluded_zero\n");
    for row in &report.rows {
        let mut push = |metric: &str, abs: f64, rel: Option<f64>, best: bool| {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.kind,
                metric,
                abs,
                rel.map(|r| r.to_string()).unwrap_or_else(|| "NA".into()),
                best,
                row.absolute.n_used,
                row.absolute.n_excluded_zero,
            ));
        };
        push("rmse", row.absolute.rmse, row.relative.rmse, row.best.rmse);
        push("mae", row.absolute.mae, row.relative.mae, row.best.mae);
        push("rmspe", row.absolute.rmspe, row.relative.rmspe, row.best.rmspe);
        push("mape", row.absolute.mape, row.relative.mape, row.best.mape);
        match row.absolute.corr {
            Some(c) => push("corr", c, None, row.best.corr),
            None => out.push_str(&format!(
                "{},corr,NA,NA,{},{},{}\n",
                row.kind, row.best.corr, row.absolute.n_used, row.absolute.n_excluded_zero
            )),
        }
    }
    out
}

/// Emit the robustness table in `mean(std)` cell format.
pub fn robustness_csv(summaries: &[RobustnessSummary]) -> String {
    let mut out = String::from("model,rmse,mae,rmspe,mape,corr\n");
    for s in summaries {
        let cell = |mean: f64, std: f64| format!("{}({})", fmt3(mean), fmt3(std));
        let corr_cell = match (s.mean.corr, s.std.corr) {
            (Some(m), Some(sd)) => cell(m, sd),
            _ => "NA".into(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.kind,
            cell(s.mean.rmse, s.std.rmse),
            cell(s.mean.mae, s.std.mae),
            cell(s.mean.rmspe, s.std.rmspe),
            cell(s.mean.mape, s.std.mape),
            corr_cell,
        ));
    }
    out
}
