//! Aligned monthly series of case counts and search volumes.
//!
//! A [`MonthlyPanel`] holds one region's contiguous monthly case counts,
//! K named search-volume columns, and an optional 0-1 search-intensity
//! column. Panels are immutable after construction and safe to share
//! across workers. [`LogPanel`] is the log(·+1) view the models fit on.

use chrono::{Datelike, Duration, NaiveDate};

use crate::error::{Error, Result};
use crate::month::{Month, MonthRange};

/// log(c + 1) for a nonnegative count or search fraction.
///
/// Monotone, maps 0 to 0, and inverts exactly via [`inverse_log1p`].
pub fn log1p_counts(c: f64) -> Result<f64> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Validation(format!(
            "log1p_counts requires a finite nonnegative value, got {c}"
        )));
    }
    Ok(c.ln_1p())
}

/// Inverse of [`log1p_counts`]: exp(y) − 1.
pub fn inverse_log1p(y: f64) -> f64 {
    y.exp_m1()
}

/// One weekly observation: a start date, a span in days, and a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeeklyValue {
    pub week_start: NaiveDate,
    pub week_length_days: u32,
    pub value: f64,
}

impl WeeklyValue {
    pub fn new(week_start: NaiveDate, week_length_days: u32, value: f64) -> Result<Self> {
        if week_length_days == 0 {
            return Err(Error::Validation(format!(
                "week starting {week_start} has zero length"
            )));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Validation(format!(
                "week starting {week_start} has invalid value {value}"
            )));
        }
        Ok(Self {
            week_start,
            week_length_days,
            value,
        })
    }

    fn end_exclusive(&self) -> NaiveDate {
        self.week_start + Duration::days(self.week_length_days as i64)
    }
}

/// One month's share of an aggregated weekly series.
///
/// `complete` is false when some day of the month is not covered by any
/// week, which biases the sum for boundary months.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedMonth {
    pub month: Month,
    pub value: f64,
    pub complete: bool,
}

fn month_of(date: NaiveDate) -> Month {
    Month::new(date.year(), date.month()).expect("chrono months are 1-12")
}

/// Distribute weekly values over calendar months.
///
/// Each week contributes `days inside the month / week length` of its
/// value to every month it overlaps, so the total mass of the weekly
/// series is conserved. Weeks must be ordered and non-overlapping.
pub fn weekly_to_monthly(weeks: &[WeeklyValue]) -> Result<Vec<AggregatedMonth>> {
    if weeks.is_empty() {
        return Ok(Vec::new());
    }
    for pair in weeks.windows(2) {
        if pair[1].week_start < pair[0].end_exclusive() {
            return Err(Error::OverlappingWeeks {
                week_start: pair[1].week_start,
            });
        }
    }

    let first_month = month_of(weeks[0].week_start);
    let last_month = month_of(weeks.last().unwrap().end_exclusive() - Duration::days(1));
    let n_months = (last_month.offset_from(first_month) + 1) as usize;
    let mut values = vec![0.0f64; n_months];
    let mut covered_days = vec![0u32; n_months];

    for week in weeks {
        let mut day = week.week_start;
        let end = week.end_exclusive();
        while day < end {
            let month = month_of(day);
            // all days of `day`'s month that this week covers
            let month_end = NaiveDate::from_ymd_opt(month.year(), month.month(), 1)
                .unwrap()
                .checked_add_months(chrono::Months::new(1))
                .unwrap();
            let segment_end = end.min(month_end);
            let days = (segment_end - day).num_days() as u32;
            let idx = month.offset_from(first_month) as usize;
            // multiply before dividing so exact splits like 3/7 of 70 stay exact
            values[idx] += week.value * days as f64 / week.week_length_days as f64;
            covered_days[idx] += days;
            day = segment_end;
        }
    }

    Ok((0..n_months)
        .map(|i| {
            let month = first_month.plus(i as i64);
            AggregatedMonth {
                month,
                value: values[i],
                complete: covered_days[i] == month.days_in_month(),
            }
        })
        .collect())
}

/// Aligned monthly panel for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyPanel {
    region: String,
    start: Month,
    cases: Vec<f64>,
    query_names: Vec<String>,
    /// column-major: one vector per query term, aligned with `cases`
    queries: Vec<Vec<f64>>,
    gdt: Option<Vec<f64>>,
}

impl MonthlyPanel {
    pub fn new(
        region: impl Into<String>,
        start: Month,
        cases: Vec<f64>,
        query_names: Vec<String>,
        queries: Vec<Vec<f64>>,
        gdt: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = cases.len();
        if n == 0 {
            return Err(Error::Validation("panel has no months".into()));
        }
        if query_names.len() != queries.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} query names for {} query columns",
                query_names.len(),
                queries.len()
            )));
        }
        for (name, col) in query_names.iter().zip(&queries) {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "query column {name:?} has {} rows, cases has {n}",
                    col.len()
                )));
            }
            if let Some(bad) = col.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Validation(format!(
                    "query column {name:?} contains invalid value {bad}"
                )));
            }
        }
        if let Some(bad) = cases.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!(
                "case series contains invalid value {bad}"
            )));
        }
        if let Some(g) = &gdt {
            if g.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "gdt column has {} rows, cases has {n}",
                    g.len()
                )));
            }
            if let Some(bad) = g.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
                return Err(Error::Validation(format!(
                    "gdt value {bad} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            region: region.into(),
            start,
            cases,
            query_names,
            queries,
            gdt,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn start(&self) -> Month {
        self.start
    }

    pub fn end(&self) -> Month {
        self.start.plus(self.len() as i64 - 1)
    }

    pub fn range(&self) -> MonthRange {
        MonthRange {
            start: self.start(),
            end: self.end(),
        }
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn month_at(&self, index: usize) -> Month {
        self.start.plus(index as i64)
    }

    /// Index of `month` within the panel, if covered.
    pub fn index_of(&self, month: Month) -> Option<usize> {
        let off = month.offset_from(self.start);
        (off >= 0 && (off as usize) < self.len()).then_some(off as usize)
    }

    pub fn cases(&self) -> &[f64] {
        &self.cases
    }

    pub fn query_names(&self) -> &[String] {
        &self.query_names
    }

    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn query_column(&self, k: usize) -> &[f64] {
        &self.queries[k]
    }

    pub fn gdt(&self) -> Option<&[f64]> {
        self.gdt.as_deref()
    }

    pub fn has_gdt(&self) -> bool {
        self.gdt.is_some()
    }

    /// A copy with one query column's values replaced (snapshot studies).
    pub fn with_query_column(&self, k: usize, values: Vec<f64>) -> Result<Self> {
        let mut queries = self.queries.clone();
        queries[k] = values;
        Self::new(
            self.region.clone(),
            self.start,
            self.cases.clone(),
            self.query_names.clone(),
            queries,
            self.gdt.clone(),
        )
    }

    /// A copy with one case count replaced (leakage probes in tests).
    pub fn with_case(&self, index: usize, value: f64) -> Result<Self> {
        let mut cases = self.cases.clone();
        cases[index] = value;
        Self::new(
            self.region.clone(),
            self.start,
            cases,
            self.query_names.clone(),
            self.queries.clone(),
            self.gdt.clone(),
        )
    }
}

/// log(·+1) view of a panel: y_t for cases, one column per query term,
/// and the search-intensity column when present.
#[derive(Debug, Clone)]
pub struct LogPanel {
    start: Month,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    gdt: Option<Vec<f64>>,
}

impl LogPanel {
    /// Assemble a log-scale panel directly from already-transformed series.
    pub fn new(
        start: Month,
        y: Vec<f64>,
        x: Vec<Vec<f64>>,
        gdt: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = y.len();
        if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("log series must be finite and >= 0".into()));
        }
        if x.iter().any(|col| col.len() != n) || gdt.as_ref().is_some_and(|g| g.len() != n) {
            return Err(Error::DimensionMismatch(
                "log panel columns must all share the case series length".into(),
            ));
        }
        Ok(Self { start, y, x, gdt })
    }

    pub fn from_panel(panel: &MonthlyPanel) -> Self {
        let log = |v: &[f64]| v.iter().map(|c| c.ln_1p()).collect::<Vec<_>>();
        Self {
            start: panel.start(),
            y: log(panel.cases()),
            x: (0..panel.n_queries())
                .map(|k| log(panel.query_column(k)))
                .collect(),
            gdt: panel.gdt().map(log),
        }
    }

    pub fn start(&self) -> Month {
        self.start
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n_queries(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.x[k]
    }

    pub fn gdt(&self) -> Option<&[f64]> {
        self.gdt.as_deref()
    }

    pub fn month_at(&self, index: usize) -> Month {
        self.start.plus(index as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn log1p_of_zero_is_zero() {
        assert_eq!(log1p_counts(0.0).unwrap(), 0.0);
    }

    #[test]
    fn log1p_of_e_minus_one_is_one() {
        let v = log1p_counts(std::f64::consts::E - 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log1p_round_trips() {
        for c in [1.0, 100.0, 30560.0] {
            let back = inverse_log1p(log1p_counts(c).unwrap());
            assert!((back - c).abs() / c < 1e-12, "c={c} back={back}");
        }
    }

    #[test]
    fn log1p_rejects_negative_and_non_finite() {
        assert!(log1p_counts(-1.0).is_err());
        assert!(log1p_counts(f64::NAN).is_err());
        assert!(log1p_counts(f64::INFINITY).is_err());
    }

    #[test]
    fn week_inside_one_month() {
        let weeks = [WeeklyValue::new(date(2015, 6, 7), 7, 70.0).unwrap()];
        let months = weekly_to_monthly(&weeks).unwrap();
        assert_eq!(months.len(), 1);
        assert_eq!(months[0].month, Month::new(2015, 6).unwrap());
        assert_eq!(months[0].value, 70.0);
        assert!(!months[0].complete);
    }

    #[test]
    fn week_split_across_month_boundary() {
        // Jun 28 - Jul 4: 3 days in June, 4 in July
        let weeks = [WeeklyValue::new(date(2015, 6, 28), 7, 70.0).unwrap()];
        let months = weekly_to_monthly(&weeks).unwrap();
        assert_eq!(months.len(), 2);
        assert_eq!(months[0].value, 30.0);
        assert_eq!(months[1].value, 40.0);
    }

    #[test]
    fn overlapping_weeks_rejected() {
        let weeks = [
            WeeklyValue::new(date(2015, 6, 1), 7, 1.0).unwrap(),
            WeeklyValue::new(date(2015, 6, 5), 7, 1.0).unwrap(),
        ];
        assert!(matches!(
            weekly_to_monthly(&weeks),
            Err(Error::OverlappingWeeks { .. })
        ));
    }

    #[test]
    fn fully_tiled_month_is_complete() {
        // June 2015 has 30 days; weeks of 6 days tile it exactly
        let weeks: Vec<_> = (0..5)
            .map(|i| WeeklyValue::new(date(2015, 6, 1 + 6 * i), 6, 12.0).unwrap())
            .collect();
        let months = weekly_to_monthly(&weeks).unwrap();
        assert_eq!(months.len(), 1);
        assert!(months[0].complete);
        assert!((months[0].value - 60.0).abs() < 1e-12);
    }

    #[test]
    fn panel_rejects_gdt_outside_unit_interval() {
        let start = Month::new(2010, 1).unwrap();
        let err = MonthlyPanel::new(
            "r",
            start,
            vec![1.0, 2.0],
            vec![],
            vec![],
            Some(vec![0.5, 1.5]),
        );
        assert!(err.is_err());
    }

    #[test]
    fn panel_rejects_ragged_columns() {
        let start = Month::new(2010, 1).unwrap();
        let err = MonthlyPanel::new(
            "r",
            start,
            vec![1.0, 2.0],
            vec!["a".into()],
            vec![vec![1.0]],
            None,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn log_panel_matches_transform() {
        let start = Month::new(2010, 1).unwrap();
        let panel = MonthlyPanel::new(
            "r",
            start,
            vec![0.0, 99.0],
            vec!["q".into()],
            vec![vec![3.0, 0.0]],
            None,
        )
        .unwrap();
        let log = LogPanel::from_panel(&panel);
        assert_eq!(log.y()[0], 0.0);
        assert!((log.y()[1] - 100f64.ln()).abs() < 1e-15);
        assert!((log.x(0)[0] - 4f64.ln()).abs() < 1e-15);
        assert_eq!(log.x(0)[1], 0.0);
    }
}
