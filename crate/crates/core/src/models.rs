//! The model zoo and the rolling retrospective nowcasting harness.
//!
//! Every model is refit immediately before each evaluation month on a
//! sliding window of the preceding `window_months` targets, predicts that
//! month out of sample, and never touches any value dated at or after the
//! month being predicted. Case-scale predictions are clipped at zero.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::month::{Month, MonthRange};
use crate::panel::{inverse_log1p, LogPanel, MonthlyPanel};
use crate::solver::{
    self, default_lambda_grid, FitResult, OlsFit, PenaltySpec,
};

/// Ordered set of autoregressive lags, in months.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagSet(Vec<usize>);

impl LagSet {
    pub fn new(mut lags: Vec<usize>) -> Result<Self> {
        if lags.iter().any(|l| *l == 0) {
            return Err(Error::Validation("lags must be positive".into()));
        }
        lags.sort_unstable();
        lags.dedup();
        Ok(Self(lags))
    }

    /// The most recent twelve months plus the month two years back.
    pub fn argo_default() -> Self {
        let mut lags: Vec<usize> = (1..=12).collect();
        lags.push(24);
        Self(lags)
    }

    /// Three recent lags plus two seasonal ones: {1, 2, 3, 12, 24}.
    pub fn seasonal() -> Self {
        Self(vec![1, 2, 3, 12, 24])
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn lags(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_lag(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Argo,
    Gt,
    Sar,
    SarGdt,
    GdtRescale,
    Naive,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Argo => "argo",
            ModelKind::Gt => "gt",
            ModelKind::Sar => "sar",
            ModelKind::SarGdt => "sar-gdt",
            ModelKind::GdtRescale => "gdt-rescale",
            ModelKind::Naive => "naive",
        }
    }

    pub fn all() -> [ModelKind; 6] {
        [
            ModelKind::Argo,
            ModelKind::Gt,
            ModelKind::Sar,
            ModelKind::SarGdt,
            ModelKind::GdtRescale,
            ModelKind::Naive,
        ]
    }

    pub fn uses_queries(&self) -> bool {
        matches!(self, ModelKind::Argo | ModelKind::Gt)
    }

    pub fn uses_gdt(&self) -> bool {
        matches!(self, ModelKind::SarGdt | ModelKind::GdtRescale)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "argo" => Ok(ModelKind::Argo),
            "gt" => Ok(ModelKind::Gt),
            "sar" => Ok(ModelKind::Sar),
            "sar-gdt" | "sar_gdt" | "sargdt" => Ok(ModelKind::SarGdt),
            "gdt-rescale" | "gdt_rescale" | "gdt" => Ok(ModelKind::GdtRescale),
            "naive" => Ok(ModelKind::Naive),
            other => Err(Error::Validation(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Named penalty layouts plus an escape hatch for explicit multipliers.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyScheme {
    /// Lags 1-3 and the first three query columns unpenalized, everything
    /// else under the common penalty.
    SchemeA,
    /// Lags 1-3 unpenalized, every query column penalized.
    SchemeB,
    /// Common penalty on every coefficient.
    Common,
    Explicit {
        lags: Vec<f64>,
        queries: Vec<f64>,
    },
}

impl PenaltyScheme {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "scheme-a" | "scheme_a" | "a" => Ok(PenaltyScheme::SchemeA),
            "scheme-b" | "scheme_b" | "b" => Ok(PenaltyScheme::SchemeB),
            "common" => Ok(PenaltyScheme::Common),
            other => Err(Error::Validation(format!(
                "unknown penalty scheme {other:?} (expected scheme-a, scheme-b, or common)"
            ))),
        }
    }

    pub fn materialize(&self, lag_set: &LagSet, n_queries: usize) -> Result<PenaltySpec> {
        let free_recent = |lag: &usize| if *lag <= 3 { 0.0 } else { 1.0 };
        match self {
            PenaltyScheme::SchemeA => PenaltySpec::new(
                lag_set.lags().iter().map(free_recent).collect(),
                (0..n_queries).map(|k| if k < 3 { 0.0 } else { 1.0 }).collect(),
            ),
            PenaltyScheme::SchemeB => PenaltySpec::new(
                lag_set.lags().iter().map(free_recent).collect(),
                vec![1.0; n_queries],
            ),
            PenaltyScheme::Common => PenaltySpec::new(
                vec![1.0; lag_set.len()],
                vec![1.0; n_queries],
            ),
            PenaltyScheme::Explicit { lags, queries } => {
                if lags.len() != lag_set.len() || queries.len() != n_queries {
                    return Err(Error::DimensionMismatch(format!(
                        "explicit multipliers cover {}+{} coefficients, model has {}+{}",
                        lags.len(),
                        queries.len(),
                        lag_set.len(),
                        n_queries
                    )));
                }
                PenaltySpec::new(lags.clone(), queries.clone())
            }
        }
    }
}

/// Lambda grid description: either explicit points or a logarithmic grid
/// anchored at the window's lambda_max.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGridSpec {
    pub size: usize,
    pub min_ratio: f64,
    pub explicit: Option<Vec<f64>>,
}

impl Default for LambdaGridSpec {
    fn default() -> Self {
        Self {
            size: 30,
            min_ratio: 1e-4,
            explicit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub lag_set: LagSet,
    pub scheme: PenaltyScheme,
    pub window_months: usize,
    pub lambda: LambdaGridSpec,
    /// SAR and SAR+GDT fit an intercept by default even though the
    /// classical formulation omits it; set false for the literal form.
    pub intercept: bool,
    /// Rescale against the intensity signal on the log scale instead of
    /// the raw count scale.
    pub gdt_log_scale: bool,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        let lag_set = match kind {
            ModelKind::Argo => LagSet::argo_default(),
            ModelKind::Sar | ModelKind::SarGdt => LagSet::seasonal(),
            _ => LagSet::empty(),
        };
        let scheme = match kind {
            ModelKind::Gt => PenaltyScheme::Common,
            _ => PenaltyScheme::SchemeA,
        };
        Self {
            kind,
            lag_set,
            scheme,
            window_months: 24,
            lambda: LambdaGridSpec::default(),
            intercept: true,
            gdt_log_scale: false,
        }
    }

    /// Months of history required before the first evaluation month.
    pub fn history_requirement(&self) -> usize {
        match self.kind {
            ModelKind::Argo | ModelKind::Sar | ModelKind::SarGdt => {
                self.window_months + self.lag_set.max_lag()
            }
            ModelKind::Gt | ModelKind::GdtRescale => self.window_months,
            ModelKind::Naive => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoteKind {
    /// singular sliding-window design solved with a small ridge jitter
    RidgeJitter,
    /// zero-variance intensity signal in the window; used the window mean
    DegenerateGdt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceNote {
    pub month: Month,
    pub note: NoteKind,
}

/// Out-of-sample predictions for one model over an evaluation window,
/// paired with the observed truth.
#[derive(Debug, Clone, PartialEq)]
pub struct NowcastTrace {
    pub kind: ModelKind,
    pub months: Vec<Month>,
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
    pub fits: Option<Vec<FitResult>>,
    pub notes: Vec<TraceNote>,
}

impl NowcastTrace {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn range(&self) -> Option<MonthRange> {
        match (self.months.first(), self.months.last()) {
            (Some(&start), Some(&end)) => Some(MonthRange { start, end }),
            _ => None,
        }
    }
}

/// Predictor row for target month index `t`: lagged log-counts in
/// ascending lag order, then query columns in panel order, then the log
/// intensity signal when requested.
pub fn build_design(
    panel: &LogPanel,
    t: usize,
    lag_set: &LagSet,
    use_queries: bool,
    use_gdt: bool,
) -> Result<Vec<f64>> {
    if t >= panel.len() {
        return Err(Error::Validation(format!(
            "target index {t} outside panel of {} months",
            panel.len()
        )));
    }
    let max_lag = lag_set.max_lag();
    if t < max_lag {
        return Err(Error::InsufficientHistory {
            model: "design".into(),
            earliest: panel.month_at(max_lag),
            requested: panel.month_at(t),
        });
    }
    let width = lag_set.len()
        + if use_queries { panel.n_queries() } else { 0 }
        + usize::from(use_gdt);
    let mut row = Vec::with_capacity(width);
    for lag in lag_set.lags() {
        row.push(panel.y()[t - lag]);
    }
    if use_queries {
        for k in 0..panel.n_queries() {
            row.push(panel.x(k)[t]);
        }
    }
    if use_gdt {
        let gdt = panel
            .gdt()
            .ok_or_else(|| Error::Validation("panel has no gdt column".into()))?;
        row.push(gdt[t]);
    }
    Ok(row)
}

fn eval_indices(panel: &MonthlyPanel, eval: MonthRange) -> Result<Vec<usize>> {
    let start = panel.index_of(eval.start).ok_or_else(|| {
        Error::Validation(format!(
            "evaluation start {} outside panel range {}",
            eval.start,
            panel.range()
        ))
    })?;
    let end = panel.index_of(eval.end).ok_or_else(|| {
        Error::Validation(format!(
            "evaluation end {} outside panel range {}",
            eval.end,
            panel.range()
        ))
    })?;
    Ok((start..=end).collect())
}

fn validate_history(panel: &MonthlyPanel, config: &ModelConfig, eval: MonthRange) -> Result<()> {
    let required = config.history_requirement();
    let earliest = panel.start().plus(required as i64);
    if eval.start < earliest {
        return Err(Error::InsufficientHistory {
            model: config.kind.label().into(),
            earliest,
            requested: eval.start,
        });
    }
    if config.kind.uses_gdt() && !panel.has_gdt() {
        return Err(Error::Validation(format!(
            "{} requires the gdt column",
            config.kind
        )));
    }
    if config.kind.uses_queries() && panel.n_queries() == 0 {
        return Err(Error::Validation(format!(
            "{} requires at least one query column",
            config.kind
        )));
    }
    Ok(())
}

/// Shared engine for the regression models: assemble the sliding-window
/// design for each evaluation month, fit, and predict that month.
fn rolling_regression(
    panel: &MonthlyPanel,
    config: &ModelConfig,
    eval: MonthRange,
    use_queries: bool,
    use_gdt: bool,
) -> Result<NowcastTrace> {
    validate_history(panel, config, eval)?;
    let log = LogPanel::from_panel(panel);
    let indices = eval_indices(panel, eval)?;
    let window = config.window_months;
    let width = config.lag_set.len()
        + if use_queries { panel.n_queries() } else { 0 }
        + usize::from(use_gdt);

    let penalized = matches!(config.kind, ModelKind::Argo | ModelKind::Gt);
    let spec = if penalized {
        let n_q = if use_queries { panel.n_queries() } else { 0 };
        Some(config.scheme.materialize(&config.lag_set, n_q)?)
    } else {
        None
    };

    let mut months = Vec::with_capacity(indices.len());
    let mut observed = Vec::with_capacity(indices.len());
    let mut predicted = Vec::with_capacity(indices.len());
    let mut fits = Vec::with_capacity(indices.len());
    let mut notes = Vec::new();

    for &t in &indices {
        let month = panel.month_at(t);
        let at = |e: Error| e.at_month(config.kind.label(), month);

        let mut design = Array2::<f64>::zeros((window, width));
        let mut target = Array1::<f64>::zeros(window);
        for (i, u) in (t - window..t).enumerate() {
            let row = build_design(&log, u, &config.lag_set, use_queries, use_gdt).map_err(at)?;
            design.row_mut(i).assign(&Array1::from(row));
            target[i] = log.y()[u];
        }
        let probe = build_design(&log, t, &config.lag_set, use_queries, use_gdt).map_err(at)?;
        let train_window = MonthRange {
            start: panel.month_at(t - window),
            end: panel.month_at(t - 1),
        };

        let fit = match &spec {
            Some(spec) => {
                let grid = match &config.lambda.explicit {
                    Some(points) => points.clone(),
                    None => {
                        let lmax =
                            solver::lambda_max(design.view(), target.view(), spec).map_err(at)?;
                        default_lambda_grid(lmax, config.lambda.size, config.lambda.min_ratio)
                    }
                };
                let lambda = if grid.len() == 1 {
                    grid[0]
                } else {
                    solver::select_lambda(design.view(), target.view(), spec, &grid).map_err(at)?
                };
                solver::fit_penalized(design.view(), target.view(), spec, lambda).map_err(at)?
            }
            None => {
                let ols_fit: OlsFit =
                    solver::ols(design.view(), target.view(), config.intercept).map_err(at)?;
                if ols_fit.jittered {
                    notes.push(TraceNote {
                        month,
                        note: NoteKind::RidgeJitter,
                    });
                }
                let n_lags = config.lag_set.len();
                let (alpha, beta) = ols_fit.coefficients.split_at(n_lags);
                let mut ssr = 0.0;
                for i in 0..window {
                    let row: Vec<f64> = design.row(i).to_vec();
                    let e = target[i] - ols_fit.predict_row(&row);
                    ssr += e * e;
                }
                FitResult {
                    intercept: ols_fit.intercept,
                    alpha: alpha.to_vec(),
                    beta: beta.to_vec(),
                    lambda: 0.0,
                    window: None,
                    objective: ssr,
                    sweeps: 0,
                }
            }
        }
        .with_window(train_window);

        let y_hat = fit.predict_row(&probe);
        months.push(month);
        observed.push(panel.cases()[t]);
        predicted.push(inverse_log1p(y_hat).max(0.0));
        fits.push(fit);
    }

    Ok(NowcastTrace {
        kind: config.kind,
        months,
        observed,
        predicted,
        fits: Some(fits),
        notes,
    })
}

/// Autoregression with search-query exogenous features under the
/// differential L1 penalty.
pub fn run_argo(panel: &MonthlyPanel, config: &ModelConfig, eval: MonthRange) -> Result<NowcastTrace> {
    rolling_regression(panel, config, eval, true, false)
}

/// Query-only penalized regression: the lag-free variant with a common
/// penalty on every query coefficient.
pub fn run_gt(panel: &MonthlyPanel, config: &ModelConfig, eval: MonthRange) -> Result<NowcastTrace> {
    rolling_regression(panel, config, eval, true, false)
}

/// Seasonal autoregression on lags {1, 2, 3, 12, 24}, ordinary least
/// squares on the sliding window.
pub fn run_sar(panel: &MonthlyPanel, config: &ModelConfig, eval: MonthRange) -> Result<NowcastTrace> {
    rolling_regression(panel, config, eval, false, false)
}

/// Seasonal autoregression plus the log intensity signal as an exogenous
/// column.
pub fn run_sar_gdt(
    panel: &MonthlyPanel,
    config: &ModelConfig,
    eval: MonthRange,
) -> Result<NowcastTrace> {
    rolling_regression(panel, config, eval, false, true)
}

/// Dynamic rescaling of the 0-1 intensity signal to case counts by a
/// sliding univariate regression.
pub fn run_gdt_rescale(
    panel: &MonthlyPanel,
    config: &ModelConfig,
    eval: MonthRange,
) -> Result<NowcastTrace> {
    validate_history(panel, config, eval)?;
    let indices = eval_indices(panel, eval)?;
    let gdt = panel
        .gdt()
        .ok_or_else(|| Error::Validation("panel has no gdt column".into()))?;
    let window = config.window_months;

    let transform = |v: f64| if config.gdt_log_scale { v.ln_1p() } else { v };
    let cases: Vec<f64> = panel.cases().iter().map(|c| transform(*c)).collect();
    let signal: Vec<f64> = gdt.iter().map(|g| transform(*g)).collect();

    let mut months = Vec::with_capacity(indices.len());
    let mut observed = Vec::with_capacity(indices.len());
    let mut predicted = Vec::with_capacity(indices.len());
    let mut notes = Vec::new();

    for &t in &indices {
        let month = panel.month_at(t);
        let lo = t - window;
        let g_mean = signal[lo..t].iter().sum::<f64>() / window as f64;
        let c_mean = cases[lo..t].iter().sum::<f64>() / window as f64;
        let mut cov = 0.0;
        let mut var = 0.0;
        for u in lo..t {
            cov += (signal[u] - g_mean) * (cases[u] - c_mean);
            var += (signal[u] - g_mean).powi(2);
        }
        let value = if var == 0.0 {
            notes.push(TraceNote {
                month,
                note: NoteKind::DegenerateGdt,
            });
            c_mean
        } else {
            let slope = cov / var;
            c_mean + slope * (signal[t] - g_mean)
        };
        let pred = if config.gdt_log_scale {
            inverse_log1p(value)
        } else {
            value
        };
        months.push(month);
        observed.push(panel.cases()[t]);
        predicted.push(pred.max(0.0));
    }

    Ok(NowcastTrace {
        kind: config.kind,
        months,
        observed,
        predicted,
        fits: None,
        notes,
    })
}

/// Persistence baseline: this month's estimate is last month's count.
pub fn run_naive(panel: &MonthlyPanel, eval: MonthRange) -> Result<NowcastTrace> {
    let config = ModelConfig::new(ModelKind::Naive);
    validate_history(panel, &config, eval)?;
    let indices = eval_indices(panel, eval)?;
    let months: Vec<Month> = indices.iter().map(|&t| panel.month_at(t)).collect();
    Ok(NowcastTrace {
        kind: ModelKind::Naive,
        observed: indices.iter().map(|&t| panel.cases()[t]).collect(),
        predicted: indices.iter().map(|&t| panel.cases()[t - 1]).collect(),
        months,
        fits: None,
        notes: Vec::new(),
    })
}

/// Run whichever model the config names.
pub fn run_model(panel: &MonthlyPanel, config: &ModelConfig, eval: MonthRange) -> Result<NowcastTrace> {
    match config.kind {
        ModelKind::Argo => run_argo(panel, config, eval),
        ModelKind::Gt => run_gt(panel, config, eval),
        ModelKind::Sar => run_sar(panel, config, eval),
        ModelKind::SarGdt => run_sar_gdt(panel, config, eval),
        ModelKind::GdtRescale => run_gdt_rescale(panel, config, eval),
        ModelKind::Naive => run_naive(panel, eval),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn month(s: &str) -> Month {
        s.parse().unwrap()
    }

    fn flat_panel(n: usize, value: f64, k: usize) -> MonthlyPanel {
        MonthlyPanel::new(
            "test",
            month("2000-01"),
            vec![value; n],
            (0..k).map(|i| format!("q{i}")).collect(),
            (0..k).map(|i| vec![0.5 + i as f64; n]).collect(),
            Some(vec![0.5; n]),
        )
        .unwrap()
    }

    #[test]
    fn design_row_single_lag() {
        let log = LogPanel::new(month("2000-01"), vec![5.0, 7.0], vec![], None).unwrap();
        let lags = LagSet::new(vec![1]).unwrap();
        let row = build_design(&log, 1, &lags, false, false).unwrap();
        assert_eq!(row, vec![5.0]);
    }

    #[test]
    fn design_row_default_lags_earliest_feasible() {
        let y: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let log = LogPanel::new(month("2000-01"), y, vec![], None).unwrap();
        let lags = LagSet::argo_default();
        // index 24 is the earliest target with the two-year lag available
        let row = build_design(&log, 24, &lags, false, false).unwrap();
        assert_eq!(row.len(), 13);
        assert_eq!(row[0], 23.0); // lag 1
        assert_eq!(row[12], 0.0); // lag 24
        let err = build_design(&log, 23, &lags, false, false).unwrap_err();
        match err {
            Error::InsufficientHistory { earliest, .. } => {
                assert_eq!(earliest, month("2002-01"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn design_row_width_with_queries() {
        let n = 30;
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64; n]).collect();
        let log = LogPanel::new(month("2000-01"), y, x, None).unwrap();
        let row = build_design(&log, 24, &LagSet::argo_default(), true, false).unwrap();
        assert_eq!(row.len(), 23);
    }

    #[test]
    fn naive_shifts_by_one_month() {
        let panel = MonthlyPanel::new(
            "t",
            month("2000-01"),
            vec![10.0, 20.0, 30.0],
            vec![],
            vec![],
            None,
        )
        .unwrap();
        let eval = MonthRange::new(month("2000-02"), month("2000-03")).unwrap();
        let trace = run_naive(&panel, eval).unwrap();
        assert_eq!(trace.predicted, vec![10.0, 20.0]);
        assert_eq!(trace.observed, vec![20.0, 30.0]);
    }

    #[test]
    fn naive_rejects_eval_at_panel_start() {
        let panel = MonthlyPanel::new(
            "t",
            month("2000-01"),
            vec![10.0, 20.0],
            vec![],
            vec![],
            None,
        )
        .unwrap();
        let eval = MonthRange::new(month("2000-01"), month("2000-02")).unwrap();
        assert!(matches!(
            run_naive(&panel, eval),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn argo_requires_forty_eight_months() {
        // 47 months of history before the evaluation start is one short
        let panel = flat_panel(60, 100.0, 2);
        let eval_start = panel.start().plus(47);
        let eval = MonthRange::new(eval_start, panel.end()).unwrap();
        let config = ModelConfig::new(ModelKind::Argo);
        assert!(matches!(
            run_argo(&panel, &config, eval),
            Err(Error::InsufficientHistory { .. })
        ));
        let eval_ok = MonthRange::new(panel.start().plus(48), panel.end()).unwrap();
        assert!(run_argo(&panel, &config, eval_ok).is_ok());
    }

    #[test]
    fn sar_on_constant_series_predicts_the_constant() {
        let panel = flat_panel(80, 100.0, 0);
        let eval = MonthRange::new(panel.start().plus(48), panel.end()).unwrap();
        let config = ModelConfig::new(ModelKind::Sar);
        let trace = run_sar(&panel, &config, eval).unwrap();
        for p in &trace.predicted {
            assert!((p - 100.0).abs() < 1e-6, "prediction {p}");
        }
    }

    #[test]
    fn sar_gdt_design_width_is_six() {
        let panel = flat_panel(80, 100.0, 0);
        let log = LogPanel::from_panel(&panel);
        let row = build_design(&log, 48, &LagSet::seasonal(), false, true).unwrap();
        assert_eq!(row.len(), 6);
    }

    #[test]
    fn gt_design_width_is_query_count() {
        let panel = flat_panel(80, 100.0, 7);
        let log = LogPanel::from_panel(&panel);
        let row = build_design(&log, 30, &LagSet::empty(), true, false).unwrap();
        assert_eq!(row.len(), 7);
    }

    #[test]
    fn gt_constant_query_gives_intercept_only_fit() {
        // a constant query column carries no signal: every prediction is
        // the window-mean constant on the log scale
        let mut cases = Vec::new();
        for i in 0..60 {
            cases.push(if i % 2 == 0 { 100.0 } else { 120.0 });
        }
        let panel = MonthlyPanel::new(
            "t",
            month("2000-01"),
            cases,
            vec!["q0".into()],
            vec![vec![0.7; 60]],
            None,
        )
        .unwrap();
        let eval = MonthRange::new(panel.start().plus(24), panel.end()).unwrap();
        let config = ModelConfig::new(ModelKind::Gt);
        let trace = run_gt(&panel, &config, eval).unwrap();
        let fits = trace.fits.as_ref().unwrap();
        for fit in fits {
            assert_eq!(fit.beta, vec![0.0]);
        }
        // prediction equals exp(mean log-count) - 1 for the window
        let log = LogPanel::from_panel(&panel);
        let mean: f64 = log.y()[0..24].iter().sum::<f64>() / 24.0;
        assert!((trace.predicted[0] - inverse_log1p(mean)).abs() < 1e-9);
    }

    #[test]
    fn gdt_rescale_recovers_exact_affine_relation() {
        let n = 60;
        let cases: Vec<f64> = (0..n).map(|i| 1000.0 + 100.0 * ((i % 12) as f64)).collect();
        let gdt: Vec<f64> = cases.iter().map(|c| c / 10000.0).collect();
        let panel =
            MonthlyPanel::new("t", month("2000-01"), cases, vec![], vec![], Some(gdt)).unwrap();
        let eval = MonthRange::new(panel.start().plus(24), panel.end()).unwrap();
        let config = ModelConfig::new(ModelKind::GdtRescale);
        let trace = run_gdt_rescale(&panel, &config, eval).unwrap();
        for (p, o) in trace.predicted.iter().zip(&trace.observed) {
            assert!((p - o).abs() < 1e-6, "{p} vs {o}");
        }
        assert!(trace.notes.is_empty());
    }

    #[test]
    fn gdt_rescale_flat_signal_falls_back_to_window_mean() {
        let n = 60;
        let cases: Vec<f64> = (0..n).map(|i| 50.0 + (i % 5) as f64).collect();
        let panel = MonthlyPanel::new(
            "t",
            month("2000-01"),
            cases.clone(),
            vec![],
            vec![],
            Some(vec![0.5; n]),
        )
        .unwrap();
        let eval = MonthRange::new(panel.start().plus(24), panel.start().plus(24)).unwrap();
        let config = ModelConfig::new(ModelKind::GdtRescale);
        let trace = run_gdt_rescale(&panel, &config, eval).unwrap();
        let mean: f64 = cases[0..24].iter().sum::<f64>() / 24.0;
        assert!((trace.predicted[0] - mean).abs() < 1e-9);
        assert_eq!(trace.notes.len(), 1);
        assert_eq!(trace.notes[0].note, NoteKind::DegenerateGdt);
    }

    #[test]
    fn predictions_are_never_negative() {
        let panel = flat_panel(80, 0.0, 2);
        let eval = MonthRange::new(panel.start().plus(48), panel.end()).unwrap();
        for kind in ModelKind::all() {
            let config = ModelConfig::new(kind);
            let trace = run_model(&panel, &config, eval).unwrap();
            assert!(trace.predicted.iter().all(|p| *p >= 0.0), "{kind}");
        }
    }

    #[test]
    fn missing_gdt_column_is_rejected() {
        let panel = MonthlyPanel::new(
            "t",
            month("2000-01"),
            vec![10.0; 80],
            vec!["q".into()],
            vec![vec![1.0; 80]],
            None,
        )
        .unwrap();
        let eval = MonthRange::new(panel.start().plus(48), panel.end()).unwrap();
        for kind in [ModelKind::SarGdt, ModelKind::GdtRescale] {
            let config = ModelConfig::new(kind);
            assert!(run_model(&panel, &config, eval).is_err(), "{kind}");
        }
    }
}
