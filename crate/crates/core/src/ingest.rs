//! CSV ingestion and emission for monthly panels.
//!
//! Dates are either `YYYY-MM` (monthly rows) or `YYYY-MM-DD` (weekly rows,
//! interpreted as week starts of 7-day weeks and aggregated to months).
//! All files are restricted to the intersection of their month ranges and
//! contiguity is enforced, so a panel that ingests cleanly is gap-free.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::month::Month;
use crate::panel::{weekly_to_monthly, MonthlyPanel, WeeklyValue};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub region: String,
    /// Keep weekly-aggregated boundary months that are only partially
    /// covered instead of dropping them.
    pub keep_partial_months: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            region: "panel".into(),
            keep_partial_months: false,
        }
    }
}

/// One parsed CSV: named value columns over a contiguous month range.
struct MonthlyTable {
    start: Month,
    columns: Vec<String>,
    /// column-major, aligned with months from `start`
    values: Vec<Vec<f64>>,
}

impl MonthlyTable {
    fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    fn end(&self) -> Month {
        self.start.plus(self.len() as i64 - 1)
    }

    fn slice(&self, start: Month, end: Month) -> MonthlyTable {
        let from = start.offset_from(self.start) as usize;
        let to = end.offset_from(self.start) as usize + 1;
        MonthlyTable {
            start,
            columns: self.columns.clone(),
            values: self.values.iter().map(|c| c[from..to].to_vec()).collect(),
        }
    }
}

enum DateKind {
    Monthly(Month),
    Weekly(NaiveDate),
}

fn parse_date(raw: &str) -> Result<DateKind> {
    let raw = raw.trim();
    match raw.bytes().filter(|b| *b == b'-').count() {
        1 => Ok(DateKind::Monthly(raw.parse()?)),
        2 => NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map(DateKind::Weekly)
            .map_err(|_| Error::Validation(format!("cannot parse date {raw:?}"))),
        _ => Err(Error::Validation(format!("cannot parse date {raw:?}"))),
    }
}

fn read_table(path: &Path, opts: &IngestOptions) -> Result<MonthlyTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    if headers.is_empty() || headers.get(0).map(str::trim) != Some("date") {
        return Err(Error::Validation(format!(
            "{}: first column must be named 'date'",
            path.display()
        )));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    if columns.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no value columns",
            path.display()
        )));
    }

    let mut monthly_rows: Vec<(Month, Vec<f64>)> = Vec::new();
    let mut weekly_rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let row = i + 2; // 1-based, counting the header line
        if record.len() != columns.len() + 1 {
            return Err(Error::Validation(format!(
                "{}: row {row} has {} fields, expected {}",
                path.display(),
                record.len(),
                columns.len() + 1
            )));
        }
        let date = parse_date(record.get(0).unwrap())?;
        let mut values = Vec::with_capacity(columns.len());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                path: path.to_path_buf(),
                row,
                column: columns[j].clone(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        match date {
            DateKind::Monthly(m) => monthly_rows.push((m, values)),
            DateKind::Weekly(d) => weekly_rows.push((d, values)),
        }
    }

    match (monthly_rows.is_empty(), weekly_rows.is_empty()) {
        (true, true) => Err(Error::Validation(format!(
            "{}: no data rows",
            path.display()
        ))),
        (false, true) => build_monthly(columns, monthly_rows),
        (true, false) => build_weekly(columns, weekly_rows, opts),
        (false, false) => Err(Error::Validation(format!(
            "{}: mixes monthly and weekly date formats",
            path.display()
        ))),
    }
}

fn build_monthly(columns: Vec<String>, mut rows: Vec<(Month, Vec<f64>)>) -> Result<MonthlyTable> {
    rows.sort_by_key(|(m, _)| *m);
    for pair in rows.windows(2) {
        let (a, b) = (pair[0].0, pair[1].0);
        if a == b {
            return Err(Error::DuplicateMonth { month: a });
        }
        if b.offset_from(a) > 1 {
            return Err(Error::MonthGap { month: a.next() });
        }
    }
    let start = rows[0].0;
    let mut values = vec![Vec::with_capacity(rows.len()); columns.len()];
    for (_, row) in rows {
        for (j, v) in row.into_iter().enumerate() {
            values[j].push(v);
        }
    }
    Ok(MonthlyTable {
        start,
        columns,
        values,
    })
}

fn build_weekly(
    columns: Vec<String>,
    mut rows: Vec<(NaiveDate, Vec<f64>)>,
    opts: &IngestOptions,
) -> Result<MonthlyTable> {
    rows.sort_by_key(|(d, _)| *d);
    let mut per_column: Vec<Vec<crate::panel::AggregatedMonth>> = Vec::with_capacity(columns.len());
    for j in 0..columns.len() {
        let weeks: Vec<WeeklyValue> = rows
            .iter()
            .map(|(d, row)| WeeklyValue::new(*d, 7, row[j]))
            .collect::<Result<_>>()?;
        per_column.push(weekly_to_monthly(&weeks)?);
    }
    // coverage is identical across columns since the week dates are shared
    let agg = &per_column[0];
    let mut first = 0;
    let mut last = agg.len();
    if !opts.keep_partial_months {
        while first < last && !agg[first].complete {
            first += 1;
        }
        while last > first && !agg[last - 1].complete {
            last -= 1;
        }
        if first == last {
            return Err(Error::Validation(
                "weekly series covers no complete month".into(),
            ));
        }
        if let Some(hole) = agg[first..last].iter().find(|m| !m.complete) {
            return Err(Error::Validation(format!(
                "weekly series leaves {} only partially covered",
                hole.month
            )));
        }
    }
    Ok(MonthlyTable {
        start: agg[first].month,
        columns,
        values: per_column
            .iter()
            .map(|col| col[first..last].iter().map(|m| m.value).collect())
            .collect(),
    })
}

/// Read cases, query, and optional search-intensity CSVs into one panel
/// restricted to the intersection of their month ranges.
pub fn ingest_panel(
    cases_csv: &Path,
    queries_csv: &Path,
    gdt_csv: Option<&Path>,
    opts: &IngestOptions,
) -> Result<MonthlyPanel> {
    let cases = read_table(cases_csv, opts)?;
    if cases.columns.len() != 1 {
        return Err(Error::Validation(format!(
            "{}: expected a single 'cases' column, found {:?}",
            cases_csv.display(),
            cases.columns
        )));
    }
    let queries = read_table(queries_csv, opts)?;
    let gdt = gdt_csv.map(|p| read_table(p, opts)).transpose()?;
    if let Some(g) = &gdt {
        if g.columns.len() != 1 {
            return Err(Error::Validation(format!(
                "gdt file must have a single value column, found {:?}",
                g.columns
            )));
        }
    }

    let mut start = cases.start.max(queries.start);
    let mut end = cases.end().min(queries.end());
    if let Some(g) = &gdt {
        start = start.max(g.start);
        end = end.min(g.end());
    }
    if end < start {
        return Err(Error::Validation(
            "input series share no common month range".into(),
        ));
    }

    let cases = cases.slice(start, end);
    let queries = queries.slice(start, end);
    let gdt = gdt.map(|g| g.slice(start, end));

    MonthlyPanel::new(
        opts.region.clone(),
        start,
        cases.values.into_iter().next().unwrap(),
        queries.columns,
        queries.values,
        gdt.map(|g| g.values.into_iter().next().unwrap()),
    )
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io_err)?;
    writeln!(f, "{}", header.join(",")).map_err(io_err)?;
    for row in rows {
        writeln!(f, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Emit a panel back to `cases.csv`, `queries.csv`, and `gdt.csv` under
/// `dir`, in the same format [`ingest_panel`] consumes.
pub fn write_panel_csvs(panel: &MonthlyPanel, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();

    let cases_path = dir.join("cases.csv");
    write_csv(
        &cases_path,
        &["date", "cases"],
        (0..panel.len()).map(|i| vec![panel.month_at(i).to_string(), panel.cases()[i].to_string()]),
    )?;
    written.push(cases_path);

    let queries_path = dir.join("queries.csv");
    let mut header = vec!["date"];
    let names: Vec<&str> = panel.query_names().iter().map(String::as_str).collect();
    header.extend(names);
    write_csv(
        &queries_path,
        &header,
        (0..panel.len()).map(|i| {
            let mut row = vec![panel.month_at(i).to_string()];
            row.extend((0..panel.n_queries()).map(|k| panel.query_column(k)[i].to_string()));
            row
        }),
    )?;
    written.push(queries_path);

    if let Some(gdt) = panel.gdt() {
        let gdt_path = dir.join("gdt.csv");
        write_csv(
            &gdt_path,
            &["date", "gdt"],
            (0..panel.len()).map(|i| vec![panel.month_at(i).to_string(), gdt[i].to_string()]),
        )?;
        written.push(gdt_path);
    }
    Ok(written)
}
