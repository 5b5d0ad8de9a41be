//! Locating the divergence of `zeta_q(s)` by nested extrapolation.
//!
//! For a proxy value `zdiv` and a truncation of the Euler product, `s_div`
//! solves `zeta_q(s_div) = zdiv`. Since `ln zeta_q = ln_q zeta_1`, this is the
//! classical condition `zeta_1(s_div) = e_q^{ln zdiv}`, and the truncated
//! classical product is strictly decreasing in s, so bisection finds the
//! unique root.
//!
//! Each curve of `s_div` against a scale `t` (number of primes or `zdiv`) is
//! straightened by the change of variable `x = 1/[log10 t]^e`. The exponent
//! `e` is the one for which the least-squares parabola `a + b x + c x^2` has
//! `c = 0`, and `a` is the extrapolation to `t -> inf`. Two such stages,
//! applied in either order, give `s_div(inf)`.

use rayon::prelude::*;

use crate::error::{QError, Result};
use crate::primes::PrimeTable;
use crate::qfunctions::{ln_q_exp, QParam};
use crate::scalar::Scalar;
use crate::zeta::log_classical_product;

/// `zdiv = 10^3, ..., 10^8`.
pub const DEFAULT_ZDIV_GRID: [f64; 6] = [1e3, 1e4, 1e5, 1e6, 1e7, 1e8];
/// `10^3, ..., 10^6` primes.
pub const DEFAULT_PRIMES_GRID: [usize; 4] = [1_000, 10_000, 100_000, 1_000_000];
/// Exponents scanned for a zero-curvature fit.
pub const DEFAULT_EXPONENT_BRACKET: (f64, f64) = (0.2, 5.0);
/// Initial s bracket for [`find_s_div`], widened on demand.
pub const DEFAULT_S_BRACKET: (f64, f64) = (0.05, 40.0);

const S_TOLERANCE: f64 = 1e-12;
const S_FLOOR: f64 = 1e-9;
const S_CEILING: f64 = 1e6;
const EXPONENT_SCAN_STEP: f64 = 1e-2;
const EXPONENT_FALLBACK_STEP: f64 = 1e-4;

/// Solve `zeta_q(s) = zdiv` with the first `n_primes` primes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceQuery<T> {
    pub q: QParam<T>,
    pub zdiv: T,
    pub n_primes: usize,
    pub s_bracket: (T, T),
}

impl<T: Scalar> DivergenceQuery<T> {
    pub fn new(q: QParam<T>, zdiv: T, n_primes: usize) -> Self {
        Self {
            q,
            zdiv,
            n_primes,
            s_bracket: (T::lit(DEFAULT_S_BRACKET.0), T::lit(DEFAULT_S_BRACKET.1)),
        }
    }
}

/// `ln e_q^{ln zdiv}`: the value `ln zeta_1` must reach.
pub fn classical_target_log<T: Scalar>(q: &QParam<T>, zdiv: T) -> Result<T> {
    if !(zdiv > T::zero()) || !zdiv.is_finite() {
        return Err(QError::domain(
            "find_s_div",
            format!("zdiv = {zdiv} must be positive"),
        ));
    }
    ln_q_exp(zdiv.ln(), q).ok_or_else(|| {
        QError::domain(
            "find_s_div",
            format!(
                "zdiv = {zdiv} lies above the bound e^(1/(q-1)) for q = {}",
                q.q()
            ),
        )
    })
}

/// `s_div` for the query, by bisection to an interval below `1e-12`.
pub fn find_s_div<T: Scalar>(query: &DivergenceQuery<T>, primes: &PrimeTable) -> Result<T> {
    let lp = primes.log_primes::<T>(query.n_primes).ok_or_else(|| {
        QError::domain(
            "find_s_div",
            format!(
                "{} primes requested, table holds {}",
                query.n_primes,
                primes.len()
            ),
        )
    })?;
    find_s_div_with_logs(&query.q, query.zdiv, &lp, query.s_bracket)
}

/// [`find_s_div`] over precomputed `ln p`.
pub fn find_s_div_with_logs<T: Scalar>(
    q: &QParam<T>,
    zdiv: T,
    log_primes: &[T],
    bracket: (T, T),
) -> Result<T> {
    if log_primes.is_empty() {
        return Err(QError::domain("find_s_div", "need at least one prime"));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > T::zero() && hi > lo) {
        return Err(QError::domain(
            "find_s_div",
            "bracket must satisfy 0 < lo < hi",
        ));
    }
    let target = classical_target_log(q, zdiv)?;
    let f = |s: T| log_classical_product(s, log_primes).map(|l| l - target);

    let two = T::lit(2.0);
    let mut f_lo = f(lo)?;
    while f_lo <= T::zero() && lo > T::lit(S_FLOOR) {
        lo = lo / two;
        f_lo = f(lo)?;
    }
    let mut f_hi = f(hi)?;
    while f_hi >= T::zero() && hi < T::lit(S_CEILING) {
        hi = hi * two;
        f_hi = f(hi)?;
    }
    if !(f_lo > T::zero() && f_hi < T::zero()) {
        return Err(QError::Bracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            target: target.as_f64(),
        });
    }

    let tol = T::lit(S_TOLERANCE);
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// `y = a + b x + c x^2` with the root-mean-square residual of the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaFit<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub residual: T,
}

impl<T: Scalar> ParabolaFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.a + x * (self.b + x * self.c)
    }
}

/// Least-squares quadratic; exact interpolation for three points.
///
/// Abscissae are centred and scaled before solving the normal equations, then
/// the coefficients are mapped back.
pub fn fit_parabola<T: Scalar>(points: &[(T, T)]) -> Result<ParabolaFit<T>> {
    let mut xs: Vec<T> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    xs.dedup();
    if xs.len() < 3 {
        return Err(QError::RankDeficient { distinct: xs.len() });
    }
    if points
        .iter()
        .any(|&(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(QError::NonFinite { op: "fit_parabola" });
    }
    let n = T::from_count(points.len() as u64);
    let mean = points.iter().fold(T::zero(), |acc, p| acc + p.0) / n;
    let scale = points
        .iter()
        .fold(T::zero(), |acc, p| acc.max((p.0 - mean).abs()));

    // normal equations in u = (x - mean) / scale
    let mut m = [[T::zero(); 4]; 3];
    for &(x, y) in points {
        let u = (x - mean) / scale;
        let basis = [T::one(), u, u * u];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = m[i][j] + basis[i] * basis[j];
            }
            m[i][3] = m[i][3] + basis[i] * y;
        }
    }
    let [alpha, beta, gamma] = solve3(m).ok_or(QError::RankDeficient { distinct: xs.len() })?;

    let c = gamma / (scale * scale);
    let b = beta / scale - T::lit(2.0) * gamma * mean / (scale * scale);
    let a = alpha - beta * mean / scale + gamma * mean * mean / (scale * scale);

    let sse = points.iter().fold(T::zero(), |acc, &(x, y)| {
        let u = (x - mean) / scale;
        let r = y - (alpha + u * (beta + u * gamma));
        acc + r * r
    });
    Ok(ParabolaFit {
        a,
        b,
        c,
        residual: (sse / n).sqrt(),
    })
}

/// Gaussian elimination with partial pivoting on an augmented 3x4 system.
fn solve3<T: Scalar>(mut m: [[T; 4]; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() <= T::epsilon() {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] = m[row][k] - f * m[col][k];
            }
        }
    }
    let mut x = [T::zero(); 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for k in i + 1..3 {
            acc = acc - m[i][k] * x[k];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

/// How the exponent was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentMethod {
    /// Bisection on a sign change of the fitted curvature.
    CurvatureRoot,
    /// No sign change; exponent of minimal `|c|` on a fine grid.
    MinCurvature,
}

/// One straightened curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSearchResult<T> {
    /// Power, rounded to four decimals.
    pub exponent: T,
    /// Coefficient `a` of the fit: the value extrapolated to `t -> inf`.
    pub intercept: T,
    /// Coefficient `c` at the refined exponent.
    pub curvature: T,
    pub method: ExponentMethod,
}

fn check_curve<T: Scalar>(curve: &[(T, T)]) -> Result<()> {
    if curve.len() < 3 {
        return Err(QError::RankDeficient {
            distinct: curve.len(),
        });
    }
    if curve.iter().any(|&(t, _)| !(t > T::one())) {
        return Err(QError::domain(
            "search_exponent",
            "scale variable t must exceed 1",
        ));
    }
    Ok(())
}

/// Parabola fit of `s_div` against `1/[log10 t]^e`.
pub fn fit_at_exponent<T: Scalar>(curve: &[(T, T)], e: T) -> Result<ParabolaFit<T>> {
    let pts: Vec<(T, T)> = curve
        .iter()
        .map(|&(t, y)| (T::one() / t.log10().powf(e), y))
        .collect();
    fit_parabola(&pts)
}

fn round4<T: Scalar>(e: T) -> T {
    let k = T::lit(1e4);
    (e * k).round() / k
}

/// Exponent with zero fitted curvature, by scan and bisection over `bracket`.
pub fn search_exponent<T: Scalar>(
    curve: &[(T, T)],
    bracket: (T, T),
) -> Result<ExponentSearchResult<T>> {
    check_curve(curve)?;
    let (lo, hi) = bracket;
    let c = |e: T| fit_at_exponent(curve, e).map(|f| f.c);
    let step = T::lit(EXPONENT_SCAN_STEP);
    let n = ((hi - lo) / step).ceil().to_usize().unwrap_or(0).max(1);

    let mut a = lo;
    let mut ca = c(a)?;
    for i in 1..=n {
        let b = (lo + step * T::from_count(i as u64)).min(hi);
        let cb = c(b)?;
        if ca == T::zero() {
            return finish(curve, a, ExponentMethod::CurvatureRoot);
        }
        if (ca < T::zero()) != (cb < T::zero()) {
            let root = bisect_curvature(&c, a, ca, b)?;
            return finish(curve, root, ExponentMethod::CurvatureRoot);
        }
        a = b;
        ca = cb;
    }
    Err(QError::NoCurvatureRoot {
        lo: lo.as_f64(),
        hi: hi.as_f64(),
        c_lo: c(lo)?.as_f64(),
        c_hi: c(hi)?.as_f64(),
    })
}

fn bisect_curvature<T: Scalar, F: Fn(T) -> Result<T>>(
    c: &F,
    mut lo: T,
    c_lo: T,
    mut hi: T,
) -> Result<T> {
    let lo_neg = c_lo < T::zero();
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi || hi - lo < T::lit(1e-12) {
            break;
        }
        let cm = c(mid)?;
        if cm == T::zero() {
            return Ok(mid);
        }
        if (cm < T::zero()) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

fn finish<T: Scalar>(
    curve: &[(T, T)],
    e: T,
    method: ExponentMethod,
) -> Result<ExponentSearchResult<T>> {
    let fit = fit_at_exponent(curve, e)?;
    Ok(ExponentSearchResult {
        exponent: round4(e),
        intercept: fit.a,
        curvature: fit.c,
        method,
    })
}

/// [`search_exponent`], falling back to minimal `|c|` on a `1e-4` grid.
pub fn search_exponent_or_min<T: Scalar>(
    curve: &[(T, T)],
    bracket: (T, T),
) -> Result<ExponentSearchResult<T>> {
    match search_exponent(curve, bracket) {
        Err(QError::NoCurvatureRoot { .. }) => {
            let (lo, hi) = bracket;
            let step = T::lit(EXPONENT_FALLBACK_STEP);
            let n = ((hi - lo) / step).round().to_usize().unwrap_or(0);
            let mut best = (lo, T::infinity());
            for i in 0..=n {
                let e = (lo + step * T::from_count(i as u64)).min(hi);
                let c = fit_at_exponent(curve, e)?.c.abs();
                if c < best.1 {
                    best = (e, c);
                }
            }
            finish(curve, best.0, ExponentMethod::MinCurvature)
        }
        other => other,
    }
}

/// Which limit is taken first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineOrder {
    /// Primes to infinity at fixed `zdiv` (exponent sigma), then `zdiv` (mu).
    PrimesFirst,
    /// `zdiv` to infinity at fixed primes (rho), then primes (nu).
    ZdivFirst,
}

impl PipelineOrder {
    pub fn tag(self) -> &'static str {
        match self {
            PipelineOrder::PrimesFirst => "primes-first",
            PipelineOrder::ZdivFirst => "zdiv-first",
        }
    }
}

impl std::str::FromStr for PipelineOrder {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primes-first" => Ok(PipelineOrder::PrimesFirst),
            "zdiv-first" => Ok(PipelineOrder::ZdivFirst),
            _ => Err(QError::domain(
                "PipelineOrder",
                format!("unknown order {s:?}"),
            )),
        }
    }
}

/// `s_div` on the full `zdiv x primes` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceGrid<T> {
    pub q: T,
    pub zdiv: Vec<T>,
    pub primes: Vec<usize>,
    /// `s_div[i][j]` for `zdiv[i]` and `primes[j]`.
    pub s_div: Vec<Vec<T>>,
}

impl<T: Scalar> DivergenceGrid<T> {
    /// `(n_primes, s_div)` at fixed `zdiv[i]`.
    pub fn curve_in_primes(&self, i: usize) -> Vec<(T, T)> {
        self.primes
            .iter()
            .zip(&self.s_div[i])
            .map(|(&k, &s)| (T::from_count(k as u64), s))
            .collect()
    }

    /// `(zdiv, s_div)` at fixed `primes[j]`.
    pub fn curve_in_zdiv(&self, j: usize) -> Vec<(T, T)> {
        self.zdiv
            .iter()
            .zip(&self.s_div)
            .map(|(&z, row)| (z, row[j]))
            .collect()
    }
}

/// Computes every grid cell; cells run concurrently and are assembled in grid order.
pub fn compute_grid<T: Scalar>(
    q: &QParam<T>,
    zdiv_grid: &[T],
    primes_grid: &[usize],
    table: &PrimeTable,
) -> Result<DivergenceGrid<T>> {
    if zdiv_grid.len() < 3 || primes_grid.len() < 3 {
        return Err(QError::RankDeficient {
            distinct: zdiv_grid.len().min(primes_grid.len()),
        });
    }
    let max_primes = primes_grid.iter().copied().max().unwrap_or(0);
    let lp = table.log_primes::<T>(max_primes).ok_or_else(|| {
        QError::domain(
            "compute_grid",
            format!("{max_primes} primes requested, table holds {}", table.len()),
        )
    })?;
    let bracket = (T::lit(DEFAULT_S_BRACKET.0), T::lit(DEFAULT_S_BRACKET.1));
    let cells: Vec<(usize, usize)> = (0..zdiv_grid.len())
        .flat_map(|i| (0..primes_grid.len()).map(move |j| (i, j)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| {
            find_s_div_with_logs(q, zdiv_grid[i], &lp[..primes_grid[j]], bracket).map_err(|e| {
                e.in_stage(format!(
                    "s_div at q = {}, zdiv = {}, primes = {}",
                    q.q(),
                    zdiv_grid[i],
                    primes_grid[j]
                ))
            })
        })
        .collect::<Result<Vec<T>>>()?;
    let s_div = values
        .chunks(primes_grid.len())
        .map(|row| row.to_vec())
        .collect();
    Ok(DivergenceGrid {
        q: q.q(),
        zdiv: zdiv_grid.to_vec(),
        primes: primes_grid.to_vec(),
        s_div,
    })
}

/// Extrapolation of one stage-1 curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageResult<T> {
    /// The fixed parameter of the curve: `zdiv` (primes-first) or number of primes (zdiv-first).
    pub parameter: T,
    pub fit: ExponentSearchResult<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport<T> {
    pub q: T,
    pub order: PipelineOrder,
    pub grid: DivergenceGrid<T>,
    /// sigma (primes-first) or rho (zdiv-first) fits, one per curve.
    pub stage1: Vec<StageResult<T>>,
    /// mu (primes-first) or nu (zdiv-first) fit of the stage-1 intercepts.
    pub final_fit: ExponentSearchResult<T>,
    pub s_div_infinity: T,
    pub error_vs_one: T,
}

/// Both extrapolation stages on a computed grid.
pub fn run_pipeline<T: Scalar>(
    grid: &DivergenceGrid<T>,
    order: PipelineOrder,
    exponent_bracket: (T, T),
) -> Result<PipelineReport<T>> {
    let q = grid.q;
    let mut stage1 = Vec::new();
    match order {
        PipelineOrder::PrimesFirst => {
            for (i, &z) in grid.zdiv.iter().enumerate() {
                let fit = search_exponent_or_min(&grid.curve_in_primes(i), exponent_bracket)
                    .map_err(|e| e.in_stage(format!("sigma at q = {q}, zdiv = {z}")))?;
                stage1.push(StageResult { parameter: z, fit });
            }
        }
        PipelineOrder::ZdivFirst => {
            for (j, &k) in grid.primes.iter().enumerate() {
                let fit = search_exponent_or_min(&grid.curve_in_zdiv(j), exponent_bracket)
                    .map_err(|e| e.in_stage(format!("rho at q = {q}, primes = {k}")))?;
                stage1.push(StageResult {
                    parameter: T::from_count(k as u64),
                    fit,
                });
            }
        }
    }
    let intercepts: Vec<(T, T)> = stage1
        .iter()
        .map(|r| (r.parameter, r.fit.intercept))
        .collect();
    let stage = match order {
        PipelineOrder::PrimesFirst => "mu",
        PipelineOrder::ZdivFirst => "nu",
    };
    let final_fit = search_exponent_or_min(&intercepts, exponent_bracket)
        .map_err(|e| e.in_stage(format!("{stage} at q = {q}")))?;
    let s_div_infinity = final_fit.intercept;
    Ok(PipelineReport {
        q,
        order,
        grid: grid.clone(),
        stage1,
        final_fit,
        s_div_infinity,
        error_vs_one: (s_div_infinity - T::one()).abs(),
    })
}

pub fn pipeline_primes_first<T: Scalar>(
    q: &QParam<T>,
    zdiv_grid: &[T],
    primes_grid: &[usize],
    table: &PrimeTable,
) -> Result<PipelineReport<T>> {
    let grid = compute_grid(q, zdiv_grid, primes_grid, table)?;
    run_pipeline(&grid, PipelineOrder::PrimesFirst, default_bracket())
}

pub fn pipeline_zdiv_first<T: Scalar>(
    q: &QParam<T>,
    zdiv_grid: &[T],
    primes_grid: &[usize],
    table: &PrimeTable,
) -> Result<PipelineReport<T>> {
    let grid = compute_grid(q, zdiv_grid, primes_grid, table)?;
    run_pipeline(&grid, PipelineOrder::ZdivFirst, default_bracket())
}

pub fn default_bracket<T: Scalar>() -> (T, T) {
    (
        T::lit(DEFAULT_EXPONENT_BRACKET.0),
        T::lit(DEFAULT_EXPONENT_BRACKET.1),
    )
}
