//! Truncated evaluations of the classical zeta function and its q-generalizations.
//!
//! Every variant reports `ln` of its value. Products are accumulated as sums
//! of `-ln(1 - u)` computed with `ln_1p`, since the factors approach 1 for
//! large primes. Sums are accumulated smallest term first.

use std::fmt;
use std::str::FromStr;

use crate::error::{QError, Result};
use crate::primes::PrimeTable;
use crate::qalgebra::{fold_sub, fold_sup, FoldOrder, SubOp, SupOp};
use crate::qfunctions::{q_log_of_ln, QNumber, QParam};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZetaVariant {
    /// `sum n^{-s}`
    ClassicalSum,
    /// `prod 1/(1 - p^{-s})`
    ClassicalProduct,
    /// `zeta_q(s) = <zeta(s)>_q`
    Qz,
    /// `sum 1/<n>_q^s`
    SumIel,
    /// `prod 1/(1 - <p>_q^{-s})`
    ProdIel,
    /// `1 (+)_q 2^{-s} (+)_q 3^{-s} ...`
    SumOel,
    /// `1/(1-2^{-s}) (x)_q 1/(1-3^{-s}) ...`
    ProdOel,
    /// `sum <n^{-s}>_q`
    SumIelTerm,
    /// `prod <1/(1 - p^{-s})>_q`
    ProdIelTerm,
}

impl ZetaVariant {
    pub const ALL: [ZetaVariant; 9] = [
        ZetaVariant::ClassicalSum,
        ZetaVariant::ClassicalProduct,
        ZetaVariant::Qz,
        ZetaVariant::SumIel,
        ZetaVariant::ProdIel,
        ZetaVariant::SumOel,
        ZetaVariant::ProdOel,
        ZetaVariant::SumIelTerm,
        ZetaVariant::ProdIelTerm,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ZetaVariant::ClassicalSum => "classical-sum",
            ZetaVariant::ClassicalProduct => "classical-product",
            ZetaVariant::Qz => "qz",
            ZetaVariant::SumIel => "sum-iel",
            ZetaVariant::ProdIel => "prod-iel",
            ZetaVariant::SumOel => "sum-oel",
            ZetaVariant::ProdOel => "prod-oel",
            ZetaVariant::SumIelTerm => "sum-iel-term",
            ZetaVariant::ProdIelTerm => "prod-iel-term",
        }
    }

    /// Truncated by number of primes rather than number of terms.
    pub fn is_product(self) -> bool {
        matches!(
            self,
            ZetaVariant::ClassicalProduct
                | ZetaVariant::Qz
                | ZetaVariant::ProdIel
                | ZetaVariant::ProdOel
                | ZetaVariant::ProdIelTerm
        )
    }
}

impl fmt::Display for ZetaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ZetaVariant {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        ZetaVariant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| QError::domain("ZetaVariant", format!("unknown tag {s:?}")))
    }
}

/// One truncated zeta evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEvaluation<T> {
    pub variant: ZetaVariant,
    pub q: T,
    pub s: T,
    /// Number of terms (sum forms) or primes (product forms).
    pub truncation: usize,
    pub log_value: T,
    /// `N^{1-s}/(s-1)` bound on the omitted tail of the classical sum, s > 1.
    pub tail_bound: Option<T>,
}

impl<T: Scalar> ZetaEvaluation<T> {
    /// `e^{log_value}` when `|log_value| < 700`.
    pub fn value(&self) -> Option<T> {
        (self.log_value.abs() < T::lit(700.0)).then(|| self.log_value.exp())
    }

    fn new(variant: ZetaVariant, q: T, s: T, truncation: usize, log_value: T) -> Result<Self> {
        if !log_value.is_finite() {
            return Err(QError::Overflow {
                op: "zeta",
                log_value: log_value.as_f64(),
            });
        }
        Ok(Self {
            variant,
            q,
            s,
            truncation,
            log_value,
            tail_bound: None,
        })
    }
}

fn require_positive_s<T: Scalar>(op: &'static str, s: T) -> Result<()> {
    if !s.is_finite() {
        return Err(QError::NonFinite { op });
    }
    if s <= T::zero() {
        return Err(QError::domain(op, format!("s = {s} must be positive")));
    }
    Ok(())
}

fn require_terms(op: &'static str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(QError::domain(op, "need at least one term"));
    }
    Ok(())
}

fn log_primes<T: Scalar>(op: &'static str, primes: &PrimeTable, n: usize) -> Result<Vec<T>> {
    primes.log_primes(n).ok_or_else(|| {
        QError::domain(
            op,
            format!("{n} primes requested, table holds {}", primes.len()),
        )
    })
}

/// `sum_i -ln(1 - exp(-s * x_i))` over log-bases `x_i > 0`.
fn log_euler_product<T: Scalar>(op: &'static str, s: T, log_bases: &[T]) -> Result<T> {
    let mut acc = T::zero();
    for &x in log_bases {
        let a = s * x;
        if !(a > T::zero()) {
            return Err(QError::domain(op, "factor argument reached 1"));
        }
        acc = acc - (-(-a).exp()).ln_1p();
    }
    Ok(acc)
}

/// `ln prod_{i} 1/(1 - p_i^{-s})` over precomputed `ln p_i`.
pub fn log_classical_product<T: Scalar>(s: T, log_primes: &[T]) -> Result<T> {
    require_positive_s("zeta_classical_product", s)?;
    log_euler_product("zeta_classical_product", s, log_primes)
}

/// Partial sum `sum_{n <= N} n^{-s}`; any real s is accepted.
pub fn zeta_classical_sum<T: Scalar>(s: T, n_terms: usize) -> Result<ZetaEvaluation<T>> {
    require_terms("zeta_classical_sum", n_terms)?;
    if !s.is_finite() {
        return Err(QError::NonFinite {
            op: "zeta_classical_sum",
        });
    }
    let sum = (1..=n_terms).rev().fold(T::zero(), |acc, n| {
        acc + (-s * T::from_count(n as u64).ln()).exp()
    });
    let mut ev = ZetaEvaluation::new(ZetaVariant::ClassicalSum, T::one(), s, n_terms, sum.ln())?;
    if s > T::one() {
        ev.tail_bound = Some(T::from_count(n_terms as u64).powf(T::one() - s) / (s - T::one()));
    }
    Ok(ev)
}

/// Euler product over the first `n_primes` primes.
pub fn zeta_classical_product<T: Scalar>(
    s: T,
    primes: &PrimeTable,
    n_primes: usize,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_classical_product", s)?;
    let lp = log_primes("zeta_classical_product", primes, n_primes)?;
    let l = log_classical_product(s, &lp)?;
    ZetaEvaluation::new(ZetaVariant::ClassicalProduct, T::one(), s, n_primes, l)
}

/// `ln zeta_q = ln_q(zeta_1)` given `L = ln zeta_1`.
pub fn log_zeta_q_from_classical<T: Scalar>(classical_log: T, q: &QParam<T>) -> T {
    q_log_of_ln(classical_log, q)
}

/// `ln(1/(q-1) - ln zeta_q)` for q > 1: the log of the gap below the bound `e^{1/(q-1)}`.
///
/// Equals `(1-q) L - ln(q-1)`; finite means the bound holds strictly even when
/// `ln zeta_q` itself rounds onto `1/(q-1)`.
pub fn zeta_q_bound_gap_log<T: Scalar>(classical_log: T, q: &QParam<T>) -> Option<T> {
    (q.q() > T::one() && !q.is_classical())
        .then(|| q.one_minus_q() * classical_log - (q.q() - T::one()).ln())
}

/// `zeta_q(s) = <zeta(s)>_q` through the truncated Euler product.
pub fn zeta_q<T: Scalar>(
    s: T,
    q: &QParam<T>,
    primes: &PrimeTable,
    n_primes: usize,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_q", s)?;
    let lp = log_primes("zeta_q", primes, n_primes)?;
    let l = log_classical_product(s, &lp)?;
    ZetaEvaluation::new(
        ZetaVariant::Qz,
        q.q(),
        s,
        n_primes,
        log_zeta_q_from_classical(l, q),
    )
}

/// `sum_{n <= N} exp(-s ln_q n)`.
pub fn zeta_sum_iel<T: Scalar>(s: T, q: &QParam<T>, n_terms: usize) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_sum_iel", s)?;
    require_terms("zeta_sum_iel", n_terms)?;
    let sum = (1..=n_terms).rev().fold(T::zero(), |acc, n| {
        acc + (-s * q_log_of_ln(T::from_count(n as u64).ln(), q)).exp()
    });
    ZetaEvaluation::new(ZetaVariant::SumIel, q.q(), s, n_terms, sum.ln())
}

/// `prod_p 1/(1 - <p>_q^{-s})` over the first `n_primes` primes.
pub fn zeta_prod_iel<T: Scalar>(
    s: T,
    q: &QParam<T>,
    primes: &PrimeTable,
    n_primes: usize,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_prod_iel", s)?;
    let lp: Vec<T> = log_primes::<T>("zeta_prod_iel", primes, n_primes)?
        .into_iter()
        .map(|l| q_log_of_ln(l, q))
        .collect();
    let l = log_euler_product("zeta_prod_iel", s, &lp)?;
    ZetaEvaluation::new(ZetaVariant::ProdIel, q.q(), s, n_primes, l)
}

/// `(+)_q`-fold of `n^{-s}`, n = 1..N.
pub fn zeta_sum_oel<T: Scalar>(
    s: T,
    q: &QParam<T>,
    n_terms: usize,
    order: FoldOrder,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_sum_oel", s)?;
    require_terms("zeta_sum_oel", n_terms)?;
    let terms: Vec<T> = (1..=n_terms)
        .map(|n| (-s * T::from_count(n as u64).ln()).exp())
        .collect();
    let v = fold_sub(SubOp::Add, &terms, q, order)?;
    ZetaEvaluation::new(ZetaVariant::SumOel, q.q(), s, n_terms, v.ln())
}

/// `(x)_q`-fold of `1/(1 - p^{-s})` in ascending prime order.
pub fn zeta_prod_oel<T: Scalar>(
    s: T,
    q: &QParam<T>,
    primes: &PrimeTable,
    n_primes: usize,
    order: FoldOrder,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_prod_oel", s)?;
    if n_primes == 0 {
        return ZetaEvaluation::new(ZetaVariant::ProdOel, q.q(), s, 0, T::zero());
    }
    let factors: Vec<T> = log_primes::<T>("zeta_prod_oel", primes, n_primes)?
        .into_iter()
        .map(|l| (-(-(-s * l).exp()).ln_1p()).exp())
        .collect();
    let v = fold_sub(SubOp::Mul, &factors, q, order)?;
    ZetaEvaluation::new(ZetaVariant::ProdOel, q.q(), s, n_primes, v.ln())
}

/// `sum_{n <= N} <n^{-s}>_q`.
pub fn zeta_sum_iel_term<T: Scalar>(
    s: T,
    q: &QParam<T>,
    n_terms: usize,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_sum_iel_term", s)?;
    require_terms("zeta_sum_iel_term", n_terms)?;
    let sum = (1..=n_terms).rev().fold(T::zero(), |acc, n| {
        acc + q_log_of_ln(-s * T::from_count(n as u64).ln(), q).exp()
    });
    ZetaEvaluation::new(ZetaVariant::SumIelTerm, q.q(), s, n_terms, sum.ln())
}

/// `prod_p <1/(1 - p^{-s})>_q`, accumulated as `sum ln_q` of the factors.
pub fn zeta_prod_iel_term<T: Scalar>(
    s: T,
    q: &QParam<T>,
    primes: &PrimeTable,
    n_primes: usize,
) -> Result<ZetaEvaluation<T>> {
    require_positive_s("zeta_prod_iel_term", s)?;
    let lp = log_primes::<T>("zeta_prod_iel_term", primes, n_primes)?;
    let l = lp.iter().fold(T::zero(), |acc, &l| {
        let ln_factor = -(-(-s * l).exp()).ln_1p();
        acc + q_log_of_ln(ln_factor, q)
    });
    ZetaEvaluation::new(ZetaVariant::ProdIelTerm, q.q(), s, n_primes, l)
}

/// Evaluates any variant. Sum forms use `n_terms`, product forms `n_primes`.
pub fn evaluate<T: Scalar>(
    variant: ZetaVariant,
    s: T,
    q: &QParam<T>,
    n_terms: usize,
    primes: &PrimeTable,
    n_primes: usize,
) -> Result<ZetaEvaluation<T>> {
    match variant {
        ZetaVariant::ClassicalSum => zeta_classical_sum(s, n_terms),
        ZetaVariant::ClassicalProduct => zeta_classical_product(s, primes, n_primes),
        ZetaVariant::Qz => zeta_q(s, q, primes, n_primes),
        ZetaVariant::SumIel => zeta_sum_iel(s, q, n_terms),
        ZetaVariant::ProdIel => zeta_prod_iel(s, q, primes, n_primes),
        ZetaVariant::SumOel => zeta_sum_oel(s, q, n_terms, FoldOrder::Ascending),
        ZetaVariant::ProdOel => zeta_prod_oel(s, q, primes, n_primes, FoldOrder::Ascending),
        ZetaVariant::SumIelTerm => zeta_sum_iel_term(s, q, n_terms),
        ZetaVariant::ProdIelTerm => zeta_prod_iel_term(s, q, primes, n_primes),
    }
}

/// Both sides of `<sum n^{-s}>_q = (+)^q-fold of <n^{-s}>_q`, as `ln` values.
///
/// The first entry folds q-numbers with `(+)^q`; the second maps the ordinary
/// partial sum once.
pub fn zeta_q_fold_crosscheck<T: Scalar>(s: T, q: &QParam<T>, n_terms: usize) -> Result<(T, T)> {
    require_terms("zeta_q_fold_crosscheck", n_terms)?;
    if !s.is_finite() {
        return Err(QError::NonFinite {
            op: "zeta_q_fold_crosscheck",
        });
    }
    let terms = (1..=n_terms)
        .map(|n| QNumber::new((-s * T::from_count(n as u64).ln()).exp(), *q))
        .collect::<Result<Vec<_>>>()?;
    let folded = fold_sup(SupOp::Add, &terms, FoldOrder::Ascending)?;
    let partial = zeta_classical_sum(s, n_terms)?.log_value.exp();
    let direct = QNumber::new(partial, *q)?;
    Ok((folded.qlog(), direct.qlog()))
}
