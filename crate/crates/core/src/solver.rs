//! Differentially penalized L1 linear regression.
//!
//! Minimizes
//!
//! ```text
//!   sum_t (y_t - mu - sum_j w_j x_{t,j})^2  +  lambda * sum_j m_j |w~_j|
//! ```
//!
//! by cyclic coordinate descent, where `m_j` is the per-coefficient
//! penalty multiplier (0 = unpenalized, 1 = common penalty) and `w~_j`
//! is the coefficient for the standardized predictor. Penalized columns
//! are z-scored within the fit so the shared multiplier treats
//! heterogeneous predictors equally; unpenalized columns and the
//! intercept are centered only. Coefficients are reported back on the
//! original predictor scale.
//!
//! The scalar `lambda` is selected by leave-one-out cross-validation over
//! a descending warm-started grid, and every fit can be certified by the
//! stationarity check in [`kkt_check`].

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::month::MonthRange;

/// Tolerance for declaring coordinate-descent convergence: maximum
/// coefficient change per sweep, on the standardized scale.
pub const CONVERGENCE_TOL: f64 = 1e-7;

/// Stationarity tolerance for the optimality certificate.
pub const KKT_TOL: f64 = 1e-5;

/// Default cap on coordinate-descent sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// sign(z) * max(|z| - gamma, 0)
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Per-coefficient L1 penalty multipliers. The effective penalty on
/// coefficient j is `lambda * multiplier_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    lag_multipliers: Vec<f64>,
    query_multipliers: Vec<f64>,
}

impl PenaltySpec {
    pub fn new(lag_multipliers: Vec<f64>, query_multipliers: Vec<f64>) -> Result<Self> {
        for m in lag_multipliers.iter().chain(&query_multipliers) {
            if !m.is_finite() || *m < 0.0 {
                return Err(Error::Validation(format!(
                    "penalty multipliers must be finite and nonnegative, got {m}"
                )));
            }
        }
        Ok(Self {
            lag_multipliers,
            query_multipliers,
        })
    }

    pub fn lag_multipliers(&self) -> &[f64] {
        &self.lag_multipliers
    }

    pub fn query_multipliers(&self) -> &[f64] {
        &self.query_multipliers
    }

    pub fn n_lags(&self) -> usize {
        self.lag_multipliers.len()
    }

    pub fn n_queries(&self) -> usize {
        self.query_multipliers.len()
    }

    pub fn n_columns(&self) -> usize {
        self.n_lags() + self.n_queries()
    }

    /// Multipliers in design-column order: lags first, then queries.
    pub fn column_multipliers(&self) -> Vec<f64> {
        let mut m = self.lag_multipliers.clone();
        m.extend_from_slice(&self.query_multipliers);
        m
    }
}

/// One fitted model: intercept, lag and query coefficients on the
/// original predictor scale, the penalty that produced them, and the
/// achieved penalized objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub window: Option<MonthRange>,
    pub objective: f64,
    pub sweeps: usize,
}

impl FitResult {
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha.iter().chain(&self.beta).copied()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn with_window(mut self, window: MonthRange) -> Self {
        self.window = Some(window);
        self
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_sweeps: usize,
    pub tol: f64,
    /// Starting coefficients on the standardized scale, e.g. the previous
    /// solution of a descending lambda grid.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: CONVERGENCE_TOL,
            warm_start: None,
        }
    }
}

/// Centered/scaled working copy of a design. Penalized columns are
/// z-scored with the population standard deviation; unpenalized columns
/// keep their scale. Zero-variance columns become inert (coefficient 0).
struct Standardized {
    n: usize,
    cols: Vec<Vec<f64>>,
    col_sq: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    multipliers: Vec<f64>,
    y_centered: Vec<f64>,
    y_mean: f64,
}

impl Standardized {
    fn build(design: ArrayView2<f64>, target: ArrayView1<f64>, spec: &PenaltySpec) -> Result<Self> {
        let n = design.nrows();
        let p = design.ncols();
        if target.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows, target has {}",
                target.len()
            )));
        }
        if p != spec.n_columns() {
            return Err(Error::DimensionMismatch(format!(
                "design has {p} columns, penalty spec describes {}",
                spec.n_columns()
            )));
        }
        if design.iter().any(|v| !v.is_finite()) || target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "design or target contains non-finite entries".into(),
            ));
        }

        let multipliers = spec.column_multipliers();
        let y_mean = target.sum() / n as f64;
        let y_centered: Vec<f64> = target.iter().map(|v| v - y_mean).collect();

        let mut cols = Vec::with_capacity(p);
        let mut col_sq = Vec::with_capacity(p);
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let col = design.column(j);
            let mean = col.sum() / n as f64;
            let mut z: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let var = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let scale = if multipliers[j] > 0.0 && var > 0.0 {
                let s = var.sqrt();
                for v in &mut z {
                    *v /= s;
                }
                s
            } else {
                1.0
            };
            let sq = z.iter().map(|v| v * v).sum::<f64>();
            means.push(mean);
            scales.push(scale);
            col_sq.push(sq);
            cols.push(z);
        }
        Ok(Self {
            n,
            cols,
            col_sq,
            means,
            scales,
            multipliers,
            y_centered,
            y_mean,
        })
    }

    fn p(&self) -> usize {
        self.cols.len()
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        let mut r = self.y_centered.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if w[j] != 0.0 {
                for (r_t, z_t) in r.iter_mut().zip(col) {
                    *r_t -= w[j] * z_t;
                }
            }
        }
        r
    }

    fn objective(&self, w: &[f64], lambda: f64, r: &[f64]) -> f64 {
        let ssr: f64 = r.iter().map(|v| v * v).sum();
        let penalty: f64 = w
            .iter()
            .zip(&self.multipliers)
            .map(|(w_j, m_j)| lambda * m_j * w_j.abs())
            .sum();
        ssr + penalty
    }

    /// Max stationarity violation over coefficients and intercept for the
    /// standardized-scale coefficients `w` with residual `r`.
    fn stationarity_violation(&self, w: &[f64], lambda: f64, r: &[f64]) -> f64 {
        let mut worst: f64 = (2.0 * r.iter().sum::<f64>()).abs();
        for (j, col) in self.cols.iter().enumerate() {
            if self.col_sq[j] == 0.0 {
                continue;
            }
            let g = -2.0 * dot(col, r);
            let pen = lambda * self.multipliers[j];
            let viol = if w[j] != 0.0 {
                (g + pen * w[j].signum()).abs()
            } else {
                (g.abs() - pen).max(0.0)
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Map standardized-scale coefficients back to the original scale.
    fn into_fit(&self, w: &[f64], lambda: f64, objective: f64, sweeps: usize, spec: &PenaltySpec) -> FitResult {
        let original: Vec<f64> = w
            .iter()
            .zip(&self.scales)
            .map(|(w_j, s_j)| w_j / s_j)
            .collect();
        let intercept = self.y_mean
            - original
                .iter()
                .zip(&self.means)
                .map(|(w_j, mu_j)| w_j * mu_j)
                .sum::<f64>();
        let (alpha, beta) = original.split_at(spec.n_lags());
        FitResult {
            intercept,
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            lambda,
            window: None,
            objective,
            sweeps,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct CdOutcome {
    w: Vec<f64>,
    residual: Vec<f64>,
    sweeps: usize,
    converged: bool,
    last_change: f64,
    sweep_objectives: Vec<f64>,
}

/// Cyclic coordinate descent on the standardized problem. Runs until the
/// per-sweep coefficient change drops below `tol` and the stationarity
/// residual is safely inside the certificate tolerance.
fn coordinate_descent(std: &Standardized, lambda: f64, opts: &FitOptions) -> CdOutcome {
    let p = std.p();
    let mut w = match &opts.warm_start {
        Some(w0) if w0.len() == p => w0.clone(),
        _ => vec![0.0; p],
    };
    let mut r = std.residual(&w);
    let mut objectives = Vec::new();
    let mut prev_obj = f64::INFINITY;
    let mut last_change = f64::INFINITY;

    for sweep in 1..=opts.max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..p {
            if std.col_sq[j] == 0.0 {
                continue;
            }
            let col = &std.cols[j];
            let old = w[j];
            let rho = dot(col, &r) + std.col_sq[j] * old;
            let new = soft_threshold(rho, lambda * std.multipliers[j] / 2.0) / std.col_sq[j];
            if new != old {
                let delta = new - old;
                for (r_t, z_t) in r.iter_mut().zip(col) {
                    *r_t -= delta * z_t;
                }
                w[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        last_change = max_delta;

        if sweep % 50 == 0 {
            r = std.residual(&w); // shed incremental-update drift
        }

        let obj = std.objective(&w, lambda, &r);
        debug_assert!(
            obj <= prev_obj * (1.0 + 1e-12) + 1e-12,
            "objective rose from {prev_obj} to {obj} on sweep {sweep}"
        );
        prev_obj = obj;
        objectives.push(obj);

        if max_delta < opts.tol {
            // polish until the emitted certificate holds with margin
            if std.stationarity_violation(&w, lambda, &r) <= KKT_TOL / 2.0 {
                return CdOutcome {
                    w,
                    residual: r,
                    sweeps: sweep,
                    converged: true,
                    last_change,
                    sweep_objectives: objectives,
                };
            }
        }
    }
    CdOutcome {
        w: w.clone(),
        residual: std.residual(&w),
        sweeps: opts.max_sweeps,
        converged: false,
        last_change,
        sweep_objectives: objectives,
    }
}

/// Cholesky solve of the symmetric positive-definite system `a x = b`.
/// `a` is given row-major, dimension `p`. Returns None when a pivot
/// collapses (singular or indefinite).
fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    // forward then back substitution
    let mut x = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            x[i] -= l[i * p + k] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            x[i] -= l[k * p + i] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    Some(x)
}

/// Least squares on a subset of standardized columns (used for the
/// unpenalized block and for the lambda = 0 fast path).
fn least_squares_on(std: &Standardized, active: &[usize]) -> Option<Vec<f64>> {
    let p = active.len();
    if p == 0 {
        return Some(Vec::new());
    }
    let mut gram = vec![0.0f64; p * p];
    let mut rhs = vec![0.0f64; p];
    for (i, &ji) in active.iter().enumerate() {
        for (j, &jj) in active.iter().enumerate().take(i + 1) {
            let v = dot(&std.cols[ji], &std.cols[jj]);
            gram[i * p + j] = v;
            gram[j * p + i] = v;
        }
        rhs[i] = dot(&std.cols[ji], &std.y_centered);
    }
    cholesky_solve(&gram, &rhs, p)
}

/// Minimize the penalized objective for a fixed scalar `lambda`.
pub fn fit_penalized(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
    lambda: f64,
) -> Result<FitResult> {
    fit_penalized_with(design, target, spec, lambda, &FitOptions::default())
}

pub fn fit_penalized_with(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
    lambda: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    if design.nrows() < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 rows to fit, got {}",
            design.nrows()
        )));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Validation(format!("invalid lambda {lambda}")));
    }
    let std = Standardized::build(design, target, spec)?;

    // With no effective penalty the problem is plain least squares; solve
    // it directly so ill-conditioned designs do not grind through CD.
    let penalty_free = lambda == 0.0 || std.multipliers.iter().all(|m| *m == 0.0);
    if penalty_free {
        let active: Vec<usize> = (0..std.p()).filter(|j| std.col_sq[*j] > 0.0).collect();
        if let Some(sol) = least_squares_on(&std, &active) {
            let mut w = vec![0.0; std.p()];
            for (idx, &j) in active.iter().enumerate() {
                w[j] = sol[idx];
            }
            let r = std.residual(&w);
            let obj = std.objective(&w, lambda, &r);
            return Ok(std.into_fit(&w, lambda, obj, 0, spec));
        }
        // singular normal equations: fall through to coordinate descent,
        // which still converges to a least-squares point
    }

    let out = coordinate_descent(&std, lambda, opts);
    let obj = std.objective(&out.w, lambda, &out.residual);
    let fit = std.into_fit(&out.w, lambda, obj, out.sweeps, spec);
    if !out.converged {
        return Err(Error::NonConvergence {
            sweeps: out.sweeps,
            last_change: out.last_change,
            last_iterate: Box::new(fit),
        });
    }
    Ok(fit)
}

/// Warm-started fits over a descending lambda grid. The grid is sorted
/// descending internally and fits are returned in that order.
pub fn fit_path(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
    grid: &[f64],
) -> Result<Vec<FitResult>> {
    if design.nrows() < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 rows to fit, got {}",
            design.nrows()
        )));
    }
    let mut descending: Vec<f64> = grid.to_vec();
    descending.sort_by(|a, b| b.partial_cmp(a).unwrap());
    descending.dedup();
    let std = Standardized::build(design, target, spec)?;
    let opts = FitOptions::default();
    let mut warm: Option<Vec<f64>> = None;
    let mut fits = Vec::with_capacity(descending.len());
    for &lambda in &descending {
        let opts = FitOptions {
            warm_start: warm.take(),
            ..opts.clone()
        };
        let out = coordinate_descent(&std, lambda, &opts);
        let obj = std.objective(&out.w, lambda, &out.residual);
        let fit = std.into_fit(&out.w, lambda, obj, out.sweeps, spec);
        if !out.converged {
            return Err(Error::NonConvergence {
                sweeps: out.sweeps,
                last_change: out.last_change,
                last_iterate: Box::new(fit),
            });
        }
        warm = Some(out.w);
        fits.push(fit);
    }
    Ok(fits)
}

/// Per-sweep objective values for one fit, exposed for the monotonicity
/// property tests.
#[cfg(test)]
pub(crate) fn sweep_objectives(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
    lambda: f64,
) -> Vec<f64> {
    let std = Standardized::build(design, target, spec).unwrap();
    coordinate_descent(&std, lambda, &FitOptions::default()).sweep_objectives
}

/// Smallest scalar penalty at which every penalized coefficient is zero.
pub fn lambda_max(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
) -> Result<f64> {
    let std = Standardized::build(design, target, spec)?;
    let unpenalized: Vec<usize> = (0..std.p())
        .filter(|j| std.multipliers[*j] == 0.0 && std.col_sq[*j] > 0.0)
        .collect();
    let mut w = vec![0.0; std.p()];
    match least_squares_on(&std, &unpenalized) {
        Some(sol) => {
            for (idx, &j) in unpenalized.iter().enumerate() {
                w[j] = sol[idx];
            }
        }
        None => {
            // degenerate unpenalized block: let CD find a least-squares point
            let huge = f64::MAX / 4.0;
            let opts = FitOptions::default();
            let out = coordinate_descent(&std, huge, &opts);
            w = out.w;
        }
    }
    let r = std.residual(&w);
    let mut lmax = 0.0f64;
    for j in 0..std.p() {
        if std.multipliers[j] > 0.0 && std.col_sq[j] > 0.0 {
            lmax = lmax.max(2.0 * dot(&std.cols[j], &r).abs() / std.multipliers[j]);
        }
    }
    Ok(lmax)
}

/// Logarithmic grid of `size` points from `min_ratio * lmax` up to `lmax`,
/// ascending. Collapses to `[0]` when there is nothing to penalize.
pub fn default_lambda_grid(lmax: f64, size: usize, min_ratio: f64) -> Vec<f64> {
    if lmax <= 0.0 || size == 0 {
        return vec![0.0];
    }
    if size == 1 {
        return vec![lmax];
    }
    let lo = (min_ratio * lmax).ln();
    let hi = lmax.ln();
    (0..size)
        .map(|i| (lo + (hi - lo) * i as f64 / (size - 1) as f64).exp())
        .collect()
}

/// Relative slack under which a sparser (larger-lambda) model is treated
/// as tied with the cross-validation minimum.
const CV_NEAR_TIE: f64 = 0.01;

/// Pick lambda by leave-one-out cross-validation on the training window.
///
/// The grid is swept descending with warm starts inside each fold. Ties
/// and near-ties are resolved toward the larger lambda, i.e. the more
/// parsimonious model.
pub fn select_lambda(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
    grid: &[f64],
) -> Result<f64> {
    let n = design.nrows();
    if n < 5 {
        return Err(Error::Validation(format!(
            "leave-one-out selection needs at least 5 rows, got {n}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::Validation("empty lambda grid".into()));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Validation("lambda grid must be nonnegative".into()));
    }
    let mut descending: Vec<f64> = grid.to_vec();
    descending.sort_by(|a, b| b.partial_cmp(a).unwrap());
    descending.dedup();

    let p = design.ncols();
    let mut cv_sse = vec![0.0f64; descending.len()];
    let mut fold_design = ndarray::Array2::<f64>::zeros((n - 1, p));
    let mut fold_target = ndarray::Array1::<f64>::zeros(n - 1);
    for holdout in 0..n {
        let mut keep = 0;
        for row in 0..n {
            if row == holdout {
                continue;
            }
            fold_design.row_mut(keep).assign(&design.row(row));
            fold_target[keep] = target[row];
            keep += 1;
        }
        let std = Standardized::build(fold_design.view(), fold_target.view(), spec)?;
        let mut opts = FitOptions::default();
        let probe: Vec<f64> = design.row(holdout).to_vec();
        for (idx, &lambda) in descending.iter().enumerate() {
            let out = coordinate_descent(&std, lambda, &opts);
            let fit = std.into_fit(
                &out.w,
                lambda,
                std.objective(&out.w, lambda, &out.residual),
                out.sweeps,
                spec,
            );
            let err = fit.predict_row(&probe) - target[holdout];
            cv_sse[idx] += err * err;
            opts.warm_start = Some(out.w);
        }
    }

    let best = cv_sse.iter().cloned().fold(f64::INFINITY, f64::min);
    let threshold = best * (1.0 + CV_NEAR_TIE);
    let pick = descending
        .iter()
        .zip(&cv_sse)
        .find(|(_, sse)| **sse <= threshold)
        .map(|(l, _)| *l)
        .expect("grid is nonempty");
    Ok(pick)
}

/// Leave-one-out mean squared error of the penalized fit at one lambda;
/// the exhaustive-evaluation companion to [`select_lambda`].
pub fn loo_error(
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
    lambda: f64,
) -> Result<f64> {
    let n = design.nrows();
    let p = design.ncols();
    let mut sse = 0.0;
    let mut fold_design = ndarray::Array2::<f64>::zeros((n - 1, p));
    let mut fold_target = ndarray::Array1::<f64>::zeros(n - 1);
    for holdout in 0..n {
        let mut keep = 0;
        for row in 0..n {
            if row == holdout {
                continue;
            }
            fold_design.row_mut(keep).assign(&design.row(row));
            fold_target[keep] = target[row];
            keep += 1;
        }
        let fit = fit_penalized(fold_design.view(), fold_target.view(), spec, lambda)?;
        let err = fit.predict_row(&design.row(holdout).to_vec()) - target[holdout];
        sse += err * err;
    }
    Ok(sse / n as f64)
}

/// Stationarity certificate for a fit: the smooth-part gradient must sit
/// inside the penalty subdifferential at every coefficient, and must
/// vanish at unpenalized coefficients and the intercept.
pub fn kkt_check(
    result: &FitResult,
    design: ArrayView2<f64>,
    target: ArrayView1<f64>,
    spec: &PenaltySpec,
) -> Result<bool> {
    if result.alpha.len() != spec.n_lags() || result.beta.len() != spec.n_queries() {
        return Err(Error::DimensionMismatch(format!(
            "fit has {}+{} coefficients, spec describes {}+{}",
            result.alpha.len(),
            result.beta.len(),
            spec.n_lags(),
            spec.n_queries()
        )));
    }
    let std = Standardized::build(design, target, spec)?;

    // residual straight from the reported original-scale parameters, so a
    // corrupted intercept or coefficient shows up in the gradient
    let coefs: Vec<f64> = result.coefficients().collect();
    let n = design.nrows();
    let mut r = Vec::with_capacity(n);
    for t in 0..n {
        let mut pred = result.intercept;
        for (j, w_j) in coefs.iter().enumerate() {
            pred += w_j * design[(t, j)];
        }
        r.push(target[t] - pred);
    }

    if (2.0 * r.iter().sum::<f64>()).abs() > KKT_TOL {
        return Ok(false);
    }
    for j in 0..std.p() {
        if std.col_sq[j] == 0.0 {
            continue;
        }
        let g = -2.0 * dot(&std.cols[j], &r);
        let pen = result.lambda * std.multipliers[j];
        let w_std = coefs[j] * std.scales[j];
        let ok = if w_std != 0.0 {
            (g + pen * w_std.signum()).abs() <= KKT_TOL
        } else {
            g.abs() <= pen + KKT_TOL
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Ordinary least squares fit via the normal equations.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// true when a singular design forced a small ridge jitter
    pub jittered: bool,
}

impl OlsFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + dot(&self.coefficients, row)
    }
}

pub fn ols(design: ArrayView2<f64>, target: ArrayView1<f64>, with_intercept: bool) -> Result<OlsFit> {
    let n = design.nrows();
    let p = design.ncols();
    if target.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, target has {}",
            target.len()
        )));
    }
    if n == 0 || (with_intercept && n < 2) {
        return Err(Error::Validation("not enough rows for least squares".into()));
    }

    let (col_means, y_mean) = if with_intercept {
        (
            (0..p)
                .map(|j| design.column(j).sum() / n as f64)
                .collect::<Vec<_>>(),
            target.sum() / n as f64,
        )
    } else {
        (vec![0.0; p], 0.0)
    };

    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| design.column(j).iter().map(|v| v - col_means[j]).collect())
        .collect();
    let y: Vec<f64> = target.iter().map(|v| v - y_mean).collect();

    let mut gram = vec![0.0f64; p * p];
    let mut rhs = vec![0.0f64; p];
    for i in 0..p {
        for j in 0..=i {
            let v = dot(&cols[i], &cols[j]);
            gram[i * p + j] = v;
            gram[j * p + i] = v;
        }
        rhs[i] = dot(&cols[i], &y);
    }

    let (solution, jittered) = match cholesky_solve(&gram, &rhs, p) {
        Some(sol) => (sol, false),
        None => {
            let mean_diag = (0..p).map(|i| gram[i * p + i]).sum::<f64>() / p.max(1) as f64;
            let jitter = 1e-8 * mean_diag.max(1.0);
            for i in 0..p {
                gram[i * p + i] += jitter;
            }
            let sol = cholesky_solve(&gram, &rhs, p).ok_or_else(|| {
                Error::Validation("normal equations singular even after jitter".into())
            })?;
            (sol, true)
        }
    };

    let intercept = if with_intercept {
        y_mean - dot(&solution, &col_means)
    } else {
        0.0
    };
    Ok(OlsFit {
        intercept,
        coefficients: solution,
        jittered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn common_spec(p: usize) -> PenaltySpec {
        PenaltySpec::new(vec![], vec![1.0; p]).unwrap()
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
        let design = Array2::from_shape_fn((n, p), |_| rng.gen::<f64>() * 2.0 - 1.0);
        let target = Array1::from_shape_fn(n, |_| rng.gen::<f64>() * 2.0 - 1.0);
        (design, target)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(0.0, 0.0), 0.0);
    }

    #[test]
    fn lambda_max_zeroes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (design, target) = random_problem(&mut rng, 24, 8);
        let spec = common_spec(8);
        let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
        let fit = fit_penalized(design.view(), target.view(), &spec, lmax * 1.0001).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0), "{:?}", fit.beta);
    }

    #[test]
    fn lambda_above_max_leaves_unpenalized_at_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (design, target) = random_problem(&mut rng, 24, 6);
        // first two columns unpenalized
        let spec = PenaltySpec::new(vec![0.0, 0.0], vec![1.0; 4]).unwrap();
        let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
        let fit = fit_penalized(design.view(), target.view(), &spec, lmax * 2.0).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));

        let reduced = design.slice(ndarray::s![.., ..2]).to_owned();
        let ols_fit = ols(reduced.view(), target.view(), true).unwrap();
        for (a, b) in fit.alpha.iter().zip(&ols_fit.coefficients) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!((fit.intercept - ols_fit.intercept).abs() < 1e-6);
    }

    #[test]
    fn constant_target_gives_intercept_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (design, _) = random_problem(&mut rng, 10, 4);
        let target = Array1::from_elem(10, 42.0);
        let spec = common_spec(4);
        let fit = fit_penalized(design.view(), target.view(), &spec, 0.5).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert!((fit.intercept - 42.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows_rejected() {
        let design = array![[1.0, 2.0], [2.0, 1.0]];
        let target = array![1.0, 2.0];
        let spec = common_spec(2);
        assert!(fit_penalized(design.view(), target.view(), &spec, 0.1).is_err());
    }

    #[test]
    fn objective_is_monotone_over_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let (design, target) = random_problem(&mut rng, 24, 10);
            let spec = common_spec(10);
            let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
            let objs = sweep_objectives(design.view(), target.view(), &spec, 0.1 * lmax);
            for pair in objs.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn scale_equivariance_of_reported_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let (design, target) = random_problem(&mut rng, 24, 6);
        let spec = PenaltySpec::new(vec![0.0], vec![1.0; 5]).unwrap();
        let fit = fit_penalized(design.view(), target.view(), &spec, 0.3).unwrap();

        let mut scaled = design.clone();
        for factor_col in [(0usize, 7.5f64), (3, 0.002)] {
            scaled.column_mut(factor_col.0).mapv_inplace(|v| v * factor_col.1);
        }
        let fit2 = fit_penalized(scaled.view(), target.view(), &spec, 0.3).unwrap();

        for t in 0..design.nrows() {
            let row: Vec<f64> = design.row(t).to_vec();
            let row2: Vec<f64> = scaled.row(t).to_vec();
            let p1 = fit.predict_row(&row);
            let p2 = fit2.predict_row(&row2);
            assert!((p1 - p2).abs() < 1e-9, "{p1} vs {p2}");
        }
    }

    #[test]
    fn sparsity_never_grows_with_lambda_on_orthogonal_designs() {
        // On orthogonal columns each coefficient is an independent
        // soft-threshold, so the active set can only grow as lambda falls.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let n = 24;
            let p = 8;
            let mut design = Array2::zeros((n, p));
            for j in 0..p {
                for t in 0..n {
                    // even-frequency sine columns: zero-mean and mutually
                    // orthogonal, and still orthogonal after centering
                    let k = (2 * (j + 1)) as f64;
                    design[(t, j)] =
                        ((t + 1) as f64 * k * std::f64::consts::PI / (n + 1) as f64).sin();
                }
            }
            let target = Array1::from_shape_fn(n, |_| rng.gen::<f64>() * 2.0 - 1.0);
            let spec = common_spec(p);
            let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
            let grid = default_lambda_grid(lmax, 30, 1e-4);
            let fits = fit_path(design.view(), target.view(), &spec, &grid).unwrap();
            let mut nnz_prev = 0usize; // at lambda_max everything is zero
            for fit in &fits {
                let nnz = fit.beta.iter().filter(|b| **b != 0.0).count();
                assert!(
                    nnz >= nnz_prev,
                    "support shrank from {nnz_prev} to {nnz} while lambda decreased"
                );
                nnz_prev = nnz;
            }
        }
    }

    #[test]
    fn penalized_norm_never_grows_with_lambda() {
        // More penalty always means a smaller weighted L1 norm of the
        // standardized coefficients, on any design.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let (design, target) = random_problem(&mut rng, 24, 12);
            let spec = common_spec(12);
            let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
            let grid = default_lambda_grid(lmax, 30, 1e-4);
            let fits = fit_path(design.view(), target.view(), &spec, &grid).unwrap();
            // fits are in descending-lambda order; measure on the scale the
            // penalty acts on
            let norms: Vec<f64> = fits
                .iter()
                .map(|fit| {
                    let mut norm = 0.0;
                    for (j, w) in fit.beta.iter().enumerate() {
                        let col = design.column(j);
                        let mean = col.sum() / 24.0;
                        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 24.0;
                        norm += (w * var.sqrt()).abs();
                    }
                    norm
                })
                .collect();
            for pair in norms.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9, "norm fell as lambda decreased");
            }
        }
    }

    #[test]
    fn kkt_accepts_converged_fit_and_rejects_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (design, target) = random_problem(&mut rng, 24, 8);
        let spec = common_spec(8);
        let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
        let fit = fit_penalized(design.view(), target.view(), &spec, 0.2 * lmax).unwrap();
        assert!(kkt_check(&fit, design.view(), target.view(), &spec).unwrap());

        let mut corrupted = fit.clone();
        corrupted.beta[0] += 0.1;
        assert!(!kkt_check(&corrupted, design.view(), target.view(), &spec).unwrap());

        let mut bad_intercept = fit;
        bad_intercept.intercept += 0.1;
        assert!(!kkt_check(&bad_intercept, design.view(), target.view(), &spec).unwrap());
    }

    #[test]
    fn kkt_at_zero_lambda_is_residual_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let (design, target) = random_problem(&mut rng, 20, 5);
        let spec = common_spec(5);
        let fit = fit_penalized(design.view(), target.view(), &spec, 0.0).unwrap();
        assert!(kkt_check(&fit, design.view(), target.view(), &spec).unwrap());

        // orthogonality holds column by column on the raw design
        let coefs: Vec<f64> = fit.coefficients().collect();
        for j in 0..5 {
            let mut g = 0.0;
            for t in 0..20 {
                let mut pred = fit.intercept;
                for (jj, w) in coefs.iter().enumerate() {
                    pred += w * design[(t, jj)];
                }
                g += design[(t, j)] * (target[t] - pred);
            }
            assert!(g.abs() < 1e-8, "column {j} gradient {g}");
        }
    }

    #[test]
    fn select_lambda_singleton_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let (design, target) = random_problem(&mut rng, 12, 4);
        let spec = common_spec(4);
        let l = select_lambda(design.view(), target.view(), &spec, &[0.3]).unwrap();
        assert_eq!(l, 0.3);
    }

    #[test]
    fn select_lambda_needs_five_rows() {
        let design = Array2::zeros((4, 2));
        let target = Array1::zeros(4);
        let spec = common_spec(2);
        assert!(select_lambda(design.view(), target.view(), &spec, &[0.1]).is_err());
    }

    #[test]
    fn ols_handles_singular_design_with_jitter() {
        // duplicate columns
        let design = array![
            [1.0, 1.0],
            [2.0, 2.0],
            [3.0, 3.0],
            [4.0, 4.0],
        ];
        let target = array![2.0, 4.0, 6.0, 8.0];
        let fit = ols(design.view(), target.view(), true).unwrap();
        assert!(fit.jittered);
        // predictions still recover the target
        for t in 0..4 {
            let row: Vec<f64> = design.row(t).to_vec();
            assert!((fit.predict_row(&row) - target[t]).abs() < 1e-4);
        }
    }

    #[test]
    fn warm_start_changes_nothing_but_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let (design, target) = random_problem(&mut rng, 24, 10);
        let spec = common_spec(10);
        let lmax = lambda_max(design.view(), target.view(), &spec).unwrap();
        let cold = fit_penalized(design.view(), target.view(), &spec, 0.05 * lmax).unwrap();
        let warm_opts = FitOptions {
            warm_start: Some(vec![0.1; 10]),
            ..FitOptions::default()
        };
        let warm =
            fit_penalized_with(design.view(), target.view(), &spec, 0.05 * lmax, &warm_opts)
                .unwrap();
        for (a, b) in cold.coefficients().zip(warm.coefficients()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
