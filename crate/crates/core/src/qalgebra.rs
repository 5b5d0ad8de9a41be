//! The two algebras over q-numbers.
//!
//! The factorization-preserving family (`q_*_sup`) acts on pre-images, so
//! `<m>_q (x)^q <n>_q = <mn>_q` and the ring axioms hold by construction.
//! The factorization-violating family (`q_*_sub`) acts on raw values through
//! `ln_q`/`e_q` compositions, and `<2>_q (x)_q <3>_q != <6>_q` once q != 1.

use crate::error::{QError, Result};
use crate::primes;
use crate::qfunctions::{ln_q_exp, q_log_of_ln, QNumber, QParam};
use crate::scalar::{log_add_exp, Scalar};

/// Pre-images within this distance of an integer count as integral.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-9;

fn same_q<T: Scalar>(a: &QNumber<T>, b: &QNumber<T>) -> Result<QParam<T>> {
    if a.q() != b.q() {
        return Err(QError::MismatchedQ {
            left: a.q().as_f64(),
            right: b.q().as_f64(),
        });
    }
    Ok(a.qparam())
}

/// `<x>_q (+)^q <y>_q = <x + y>_q`.
pub fn q_add_sup<T: Scalar>(a: &QNumber<T>, b: &QNumber<T>) -> Result<QNumber<T>> {
    let q = same_q(a, b)?;
    QNumber::from_nonnegative(a.preimage() + b.preimage(), q)
}

/// `<x>_q (-)^q <y>_q = <x - y>_q`, defined while `x > y`.
pub fn q_sub_sup<T: Scalar>(a: &QNumber<T>, b: &QNumber<T>) -> Result<QNumber<T>> {
    let q = same_q(a, b)?;
    if a.preimage() <= b.preimage() {
        return Err(QError::domain(
            "q_sub_sup",
            format!(
                "{} - {} leaves the positive domain",
                a.preimage(),
                b.preimage()
            ),
        ));
    }
    QNumber::new(a.preimage() - b.preimage(), q)
}

/// `<x>_q (x)^q <y>_q = <x y>_q`.
pub fn q_mul_sup<T: Scalar>(a: &QNumber<T>, b: &QNumber<T>) -> Result<QNumber<T>> {
    let q = same_q(a, b)?;
    QNumber::from_nonnegative(a.preimage() * b.preimage(), q)
}

/// `ln` of the product via the closed form `<m><n> e^{(1-q) ln<m> ln<n>}`.
///
/// Independent of [`q_mul_sup`]; both must agree on `qlog`.
pub fn q_mul_sup_closed_form_log<T: Scalar>(a: &QNumber<T>, b: &QNumber<T>) -> Result<T> {
    let q = same_q(a, b)?;
    let k = if q.is_classical() {
        T::zero()
    } else {
        q.one_minus_q()
    };
    Ok(a.qlog() + b.qlog() + k * a.qlog() * b.qlog())
}

/// `<x>_q (/)^q <y>_q = <x / y>_q`.
pub fn q_div_sup<T: Scalar>(a: &QNumber<T>, b: &QNumber<T>) -> Result<QNumber<T>> {
    let q = same_q(a, b)?;
    if b.preimage() == T::zero() {
        return Err(QError::domain("q_div_sup", "division by <0>_q"));
    }
    QNumber::from_nonnegative(a.preimage() / b.preimage(), q)
}

/// `<x>_q ^q e = <x^e>_q`.
pub fn q_pow_sup<T: Scalar>(a: &QNumber<T>, e: T) -> Result<QNumber<T>> {
    if !e.is_finite() {
        return Err(QError::NonFinite { op: "q_pow_sup" });
    }
    if a.preimage() == T::zero() {
        return Err(QError::domain("q_pow_sup", "power of <0>_q"));
    }
    QNumber::new(a.preimage().powf(e), a.qparam())
}

/// Result of a factorization-violating operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubValue<T> {
    pub value: T,
    /// The q-exponential cutoff was hit and `value` is the conventional 0.
    pub cutoff: bool,
}

impl<T: Scalar> SubValue<T> {
    fn from_ln(ln: Option<T>) -> Self {
        match ln {
            Some(l) => Self {
                value: l.exp(),
                cutoff: false,
            },
            None => Self {
                value: T::zero(),
                cutoff: true,
            },
        }
    }

    /// The value, or a cutoff error.
    pub fn into_result(self, op: &'static str) -> Result<T> {
        if self.cutoff {
            Err(QError::Cutoff { op })
        } else {
            Ok(self.value)
        }
    }
}

/// `ln_q x` for `x >= 0`; `ln_q 0` is `-1/(1-q)` for q < 1 and `-inf` otherwise.
fn q_log_nonnegative<T: Scalar>(op: &'static str, x: T, q: &QParam<T>) -> Result<T> {
    if !x.is_finite() {
        return Err(QError::NonFinite { op });
    }
    if x < T::zero() {
        return Err(QError::domain(op, format!("argument {x} is negative")));
    }
    if x == T::zero() {
        return Ok(if q.q() < T::one() && !q.is_classical() {
            -T::one() / q.one_minus_q()
        } else {
            T::neg_infinity()
        });
    }
    Ok(q_log_of_ln(x.ln(), q))
}

/// `x (x)_q y = [x^{1-q} + y^{1-q} - 1]^{1/(1-q)} = e_q^{ln_q x + ln_q y}`.
pub fn q_mul_sub<T: Scalar>(x: T, y: T, q: &QParam<T>) -> Result<SubValue<T>> {
    let lx = q_log_nonnegative("q_mul_sub", x, q)?;
    let ly = q_log_nonnegative("q_mul_sub", y, q)?;
    if q.is_classical() {
        return Ok(SubValue {
            value: x * y,
            cutoff: false,
        });
    }
    let sum = lx + ly;
    if sum == T::neg_infinity() {
        return Ok(SubValue {
            value: T::zero(),
            cutoff: false,
        });
    }
    Ok(SubValue::from_ln(ln_q_exp(sum, q)))
}

/// `x (+)_q y = e_q^{ln[e^{ln_q x} + e^{ln_q y}]}`, the inner sum taken in log space.
pub fn q_add_sub<T: Scalar>(x: T, y: T, q: &QParam<T>) -> Result<SubValue<T>> {
    let lx = q_log_nonnegative("q_add_sub", x, q)?;
    let ly = q_log_nonnegative("q_add_sub", y, q)?;
    if q.is_classical() {
        return Ok(SubValue {
            value: x + y,
            cutoff: false,
        });
    }
    Ok(SubValue::from_ln(ln_q_exp(log_add_exp(lx, ly), q)))
}

/// `ln(x (x)_q y)` from `ln x` and `ln y`, as `ln(x^{1-q} + y^{1-q} - 1) / (1-q)`.
///
/// Works for operands whose values overflow. `None` marks the cutoff; `-inf`
/// inputs stand for zero operands.
pub fn q_mul_sub_log<T: Scalar>(lx: T, ly: T, q: &QParam<T>) -> Result<Option<T>> {
    if lx.is_nan() || ly.is_nan() || lx == T::infinity() || ly == T::infinity() {
        return Err(QError::NonFinite {
            op: "q_mul_sub_log",
        });
    }
    if q.is_classical() {
        return Ok(Some(lx + ly));
    }
    let k = q.one_minus_q();
    if k < T::zero() && (lx == T::neg_infinity() || ly == T::neg_infinity()) {
        return Ok(Some(T::neg_infinity()));
    }
    // m = ln(x^k + y^k); the bracket x^k + y^k - 1 must stay positive
    let m = log_add_exp(k * lx, k * ly);
    if m <= T::zero() {
        return Ok(None);
    }
    let ln_bracket = if m > T::one() {
        m + (-(-m).exp()).ln_1p()
    } else {
        m.exp_m1().ln()
    };
    Ok(Some(ln_bracket / k))
}

/// `ln(x (+)_q y)` from `ln x` and `ln y`; `None` marks the cutoff.
pub fn q_add_sub_log<T: Scalar>(lx: T, ly: T, q: &QParam<T>) -> Result<Option<T>> {
    if lx.is_nan() || ly.is_nan() || lx == T::infinity() || ly == T::infinity() {
        return Err(QError::NonFinite {
            op: "q_add_sub_log",
        });
    }
    if q.is_classical() {
        return Ok(Some(log_add_exp(lx, ly)));
    }
    let qlog = |l: T| {
        if l == T::neg_infinity() {
            q_log_nonnegative("q_add_sub_log", T::zero(), q)
        } else {
            Ok(q_log_of_ln(l, q))
        }
    };
    let w = log_add_exp(qlog(lx)?, qlog(ly)?);
    if !w.is_finite() {
        return Err(QError::Overflow {
            op: "q_add_sub_log",
            log_value: w.as_f64(),
        });
    }
    Ok(ln_q_exp(w, q))
}

/// Reduction order for iterated folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FoldOrder {
    #[default]
    Ascending,
    PairwiseTree,
}

/// Folds `terms` with a fallible associative operation.
///
/// Errors carry the index of the term whose combination failed (for the tree
/// order, the first index of the right-hand block).
pub fn q_fold<V, F>(terms: &[V], order: FoldOrder, op: F) -> Result<V>
where
    V: Clone,
    F: Fn(&V, &V) -> Result<V>,
{
    if terms.is_empty() {
        return Err(QError::domain("q_fold", "empty term sequence"));
    }
    match order {
        FoldOrder::Ascending => {
            let mut acc = terms[0].clone();
            for (i, t) in terms.iter().enumerate().skip(1) {
                acc = op(&acc, t).map_err(|e| QError::Fold {
                    index: i,
                    source: Box::new(e),
                })?;
            }
            Ok(acc)
        }
        FoldOrder::PairwiseTree => tree_fold(terms, 0, &op),
    }
}

fn tree_fold<V, F>(terms: &[V], offset: usize, op: &F) -> Result<V>
where
    V: Clone,
    F: Fn(&V, &V) -> Result<V>,
{
    if terms.len() == 1 {
        return Ok(terms[0].clone());
    }
    let mid = terms.len() / 2;
    let left = tree_fold(&terms[..mid], offset, op)?;
    let right = tree_fold(&terms[mid..], offset + mid, op)?;
    op(&left, &right).map_err(|e| match e {
        e @ QError::Fold { .. } => e,
        e => QError::Fold {
            index: offset + mid,
            source: Box::new(e),
        },
    })
}

/// Operations of the factorization-violating family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubOp {
    Add,
    Mul,
}

/// Operations of the factorization-preserving family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupOp {
    Add,
    Mul,
}

/// Folds raw values with `(+)_q` or `(x)_q`; a cutoff is reported as an error.
pub fn fold_sub<T: Scalar>(op: SubOp, values: &[T], q: &QParam<T>, order: FoldOrder) -> Result<T> {
    q_fold(values, order, |a, b| {
        let r = match op {
            SubOp::Add => q_add_sub(*a, *b, q)?,
            SubOp::Mul => q_mul_sub(*a, *b, q)?,
        };
        r.into_result(match op {
            SubOp::Add => "q_add_sub",
            SubOp::Mul => "q_mul_sub",
        })
    })
}

/// Folds q-numbers with `(+)^q` or `(x)^q`.
pub fn fold_sup<T: Scalar>(
    op: SupOp,
    values: &[QNumber<T>],
    order: FoldOrder,
) -> Result<QNumber<T>> {
    q_fold(values, order, |a, b| match op {
        SupOp::Add => q_add_sup(a, b),
        SupOp::Mul => q_mul_sup(a, b),
    })
}

fn integral_preimage<T: Scalar>(op: &'static str, v: &QNumber<T>) -> Result<u64> {
    let u = v.preimage().as_f64();
    let r = u.round();
    if !(r >= 1.0 && (u - r).abs() <= INTEGRALITY_TOLERANCE && r <= u64::MAX as f64) {
        return Err(QError::domain(
            op,
            format!("pre-image {u} is not a positive integer"),
        ));
    }
    Ok(r as u64)
}

/// Whether `<n>_q` is a q-prime, i.e. whether `n` is prime.
pub fn is_q_prime<T: Scalar>(v: &QNumber<T>) -> Result<bool> {
    Ok(primes::is_prime(integral_preimage("is_q_prime", v)?))
}

/// `<n>_q = prod^q (<p_i>_q ^q m_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QPrimeDecomposition<T> {
    q: QParam<T>,
    factors: Vec<(u64, u32)>,
}

impl<T: Scalar> QPrimeDecomposition<T> {
    pub fn q(&self) -> T {
        self.q.q()
    }

    /// `(p_i, m_i)` with strictly increasing primes.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// `(x)^q`-fold of `<p_i>_q ^q m_i`.
    pub fn recompose(&self) -> Result<QNumber<T>> {
        let powers = self
            .factors
            .iter()
            .map(|&(p, m)| q_pow_sup(&QNumber::from_integer(p, self.q)?, T::from_count(m as u64)))
            .collect::<Result<Vec<_>>>()?;
        fold_sup(SupOp::Mul, &powers, FoldOrder::Ascending)
    }
}

pub fn q_prime_decompose<T: Scalar>(v: &QNumber<T>) -> Result<QPrimeDecomposition<T>> {
    let n = integral_preimage("q_prime_decompose", v)?;
    if n < 2 {
        return Err(QError::domain(
            "q_prime_decompose",
            "pre-image must be at least 2",
        ));
    }
    Ok(QPrimeDecomposition {
        q: v.qparam(),
        factors: primes::factorize(n)?,
    })
}

/// Which sub-family fold a crossing is sought for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingFamily {
    SubProduct,
    SubSum,
}

/// Search window for [`solve_crossing_q`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingWindow<T> {
    pub q_min: T,
    pub q_max: T,
    /// Half-width of the excluded neighbourhood of q = 1.
    pub exclude_one: T,
    pub scan_step: T,
    pub bisection_steps: usize,
}

impl<T: Scalar> Default for CrossingWindow<T> {
    fn default() -> Self {
        Self {
            q_min: T::lit(-3.0),
            q_max: T::lit(3.0),
            exclude_one: T::lit(1e-3),
            scan_step: T::lit(1e-3),
            bisection_steps: 80,
        }
    }
}

/// `q_fold(op, [<t>_q.value]) - target`, `None` where a value overflows or the fold hits a cutoff.
pub fn crossing_residual<T: Scalar>(
    target: T,
    terms: &[u64],
    family: CrossingFamily,
    q: T,
) -> Option<T> {
    let qp = QParam::new(q).ok()?;
    let values = terms
        .iter()
        .map(|&t| QNumber::from_integer(t, qp).and_then(|v| v.value()))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    let op = match family {
        CrossingFamily::SubProduct => SubOp::Mul,
        CrossingFamily::SubSum => SubOp::Add,
    };
    let v = fold_sub(op, &values, &qp, FoldOrder::Ascending).ok()?;
    v.is_finite().then(|| v - target)
}

/// A q* != 1 at which the sub-family fold of `<t>_q` equals `target`.
///
/// Scans the window for a sign change of the residual, skipping segments that
/// touch undefined points, and bisects. Jumps across a cutoff look like sign
/// changes, so a bracket is accepted only if its bisected residual is below
/// `1e-9 * target`. The first accepted root from the left is returned.
pub fn solve_crossing_q<T: Scalar>(
    target: T,
    terms: &[u64],
    family: CrossingFamily,
    window: &CrossingWindow<T>,
) -> Result<T> {
    if !(target > T::zero()) {
        return Err(QError::domain(
            "solve_crossing_q",
            "target must be positive",
        ));
    }
    if terms.is_empty() {
        return Err(QError::domain("solve_crossing_q", "terms must be nonempty"));
    }
    let f = |q: T| crossing_residual(target, terms, family, q);
    let tol = T::lit(1e-9) * target;
    let excluded = |q: T| (q - T::one()).abs() < window.exclude_one;

    let steps = ((window.q_max - window.q_min) / window.scan_step)
        .ceil()
        .to_usize()
        .unwrap_or(0);
    let mut prev: Option<(T, T)> = None;
    for i in 0..=steps {
        let q = (window.q_min + window.scan_step * T::from_count(i as u64)).min(window.q_max);
        let cur = if excluded(q) {
            None
        } else {
            f(q).map(|v| (q, v))
        };
        if let (Some((qa, fa)), Some((qb, fb))) = (prev, cur) {
            if fa == T::zero() {
                return Ok(qa);
            }
            if (fa < T::zero()) != (fb < T::zero()) {
                if let Some(root) = bisect_crossing(&f, qa, fa, qb, window.bisection_steps) {
                    if let Some(r) = f(root) {
                        if r.abs() < tol {
                            return Ok(root);
                        }
                    }
                }
            }
        }
        prev = cur;
    }
    Err(QError::NoSignChange {
        lo: window.q_min.as_f64(),
        hi: window.q_max.as_f64(),
        f_lo: f(window.q_min).map_or(f64::NAN, |v| v.as_f64()),
        f_hi: f(window.q_max).map_or(f64::NAN, |v| v.as_f64()),
    })
}

fn bisect_crossing<T: Scalar, F: Fn(T) -> Option<T>>(
    f: &F,
    mut lo: T,
    f_lo: T,
    mut hi: T,
    steps: usize,
) -> Option<T> {
    let lo_neg = f_lo < T::zero();
    for _ in 0..steps {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Some(mid);
        }
        if (fm < T::zero()) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fl = f(lo)?.abs();
    let fh = f(hi)?.abs();
    Some(if fl <= fh { lo } else { hi })
}

/// Sub-family fold of the realized values `<t>_q`.
#[cfg(test)]
pub(crate) fn sub_fold_of_qintegers<T: Scalar>(
    op: SubOp,
    terms: &[u64],
    q: &QParam<T>,
) -> Result<T> {
    let values = terms
        .iter()
        .map(|&t| QNumber::from_integer(t, *q)?.value())
        .collect::<Result<Vec<_>>>()?;
    fold_sub(op, &values, q, FoldOrder::Ascending)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(q: f64) -> QParam<f64> {
        QParam::new(q).unwrap()
    }

    fn n(u: f64, q: f64) -> QNumber<f64> {
        QNumber::new(u, qp(q)).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    const QS: [f64; 7] = [-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 3.0];

    #[test]
    fn add_sup_examples() {
        for q in QS {
            let r = q_add_sup(&n(2.0, q), &n(3.0, q)).unwrap();
            assert_eq!(r, n(5.0, q));
        }
        assert!(close(
            q_add_sup(&n(4.0, 1.0), &n(6.0, 1.0))
                .unwrap()
                .value()
                .unwrap(),
            10.0,
            1e-15
        ));
        assert_eq!(
            q_add_sup(&n(1.5, 0.2), &n(2.5, 0.2)).unwrap().preimage(),
            4.0
        );
        assert!(matches!(
            q_add_sup(&n(2.0, 0.5), &n(3.0, 0.7)),
            Err(QError::MismatchedQ { .. })
        ));
    }

    #[test]
    fn sub_sup_examples() {
        assert_eq!(q_sub_sup(&n(5.0, 0.3), &n(3.0, 0.3)).unwrap(), n(2.0, 0.3));
        assert!(matches!(
            q_sub_sup(&n(3.0, 0.3), &n(3.0, 0.3)),
            Err(QError::Domain { .. })
        ));
        assert_eq!(
            q_sub_sup(&n(7.5, -1.0), &n(0.5, -1.0)).unwrap().preimage(),
            7.0
        );
    }

    #[test]
    fn mul_sup_examples() {
        for q in QS {
            assert_eq!(q_mul_sup(&n(2.0, q), &n(3.0, q)).unwrap(), n(6.0, q));
            let a = n(7.25, q);
            assert_eq!(q_mul_sup(&a, &QNumber::one(qp(q))).unwrap(), a);
        }
        let v = q_mul_sup(&n(2.0, 0.0), &n(3.0, 0.0))
            .unwrap()
            .value()
            .unwrap();
        assert!(close(v, 148.413_159_102_576_6, 1e-14));
    }

    #[test]
    fn closed_form_product_agrees_with_preimage_route() {
        for q in QS {
            for (a, b) in [(2.0, 3.0), (1.5, 40.0), (0.2, 7.0)] {
                let direct = q_mul_sup(&n(a, q), &n(b, q)).unwrap().qlog();
                let closed = q_mul_sup_closed_form_log(&n(a, q), &n(b, q)).unwrap();
                assert!(close(direct, closed, 1e-10), "q={q} a={a} b={b}");
            }
        }
    }

    #[test]
    fn div_sup_examples() {
        assert_eq!(q_div_sup(&n(6.0, 2.0), &n(3.0, 2.0)).unwrap(), n(2.0, 2.0));
        let a = n(4.5, -1.0);
        assert_eq!(q_div_sup(&a, &a).unwrap().preimage(), 1.0);
        assert_eq!(
            q_div_sup(&n(1.0, 0.5), &n(4.0, 0.5)).unwrap().preimage(),
            0.25
        );
        let a = n(3.7, 0.4);
        let b = n(1.3, 0.4);
        let back = q_mul_sup(&q_div_sup(&a, &b).unwrap(), &b).unwrap();
        assert!(close(back.preimage(), a.preimage(), 1e-15));
    }

    #[test]
    fn pow_sup_examples() {
        assert_eq!(q_pow_sup(&n(3.0, 0.4), 2.0).unwrap(), n(9.0, 0.4));
        let r = q_pow_sup(&q_pow_sup(&n(2.0, -1.0), 3.0).unwrap(), 1.0 / 3.0).unwrap();
        assert!(close(r.preimage(), 2.0, 1e-15));
        assert_eq!(q_pow_sup(&n(5.0, 0.4), 0.0).unwrap(), QNumber::one(qp(0.4)));
    }

    #[test]
    fn mul_sub_examples() {
        assert_eq!(q_mul_sub(2.0, 3.0, &qp(1.0)).unwrap().value, 6.0);
        let v = q_mul_sub(2.0, 3.0, &qp(0.5)).unwrap();
        assert!(!v.cutoff);
        assert!(close(v.value, 4.606_450_745_682_411_5, 1e-14));
        let q = qp(0.5);
        let two = n(2.0, 0.5).value().unwrap();
        let three = n(3.0, 0.5).value().unwrap();
        let six = n(6.0, 0.5).value().unwrap();
        assert!(!close(q_mul_sub(two, three, &q).unwrap().value, six, 1e-6));
    }

    #[test]
    fn mul_sub_cutoff_is_flagged() {
        // q = 3: x^-2 + y^-2 - 1 < 0 for x = y = 2
        let v = q_mul_sub(2.0, 2.0, &qp(3.0)).unwrap();
        assert!(v.cutoff);
        assert_eq!(v.value, 0.0);
        assert!(matches!(v.into_result("t"), Err(QError::Cutoff { .. })));
        // q = 0: x + y - 1 < 0 for small arguments
        assert!(q_mul_sub(0.2, 0.3, &qp(0.0)).unwrap().cutoff);
    }

    #[test]
    fn add_sub_examples() {
        assert_eq!(q_add_sub(2.0, 3.0, &qp(1.0)).unwrap().value, 5.0);
        let v = q_add_sub(2.0, 3.0, &qp(-1.0)).unwrap().value;
        assert!(close(v, 3.026_182_325_734_042_6, 1e-13), "{v}");
        for (x, y, q) in [(0.3, 7.0, 0.2), (2.0, 9.0, -1.5), (1.1, 1.2, 2.5)] {
            assert_eq!(
                q_add_sub(x, y, &qp(q)).unwrap(),
                q_add_sub(y, x, &qp(q)).unwrap()
            );
        }
        assert!(q_add_sub(-1.0, 2.0, &qp(0.5)).is_err());
        assert!(q_add_sub(f64::NAN, 2.0, &qp(0.5)).is_err());
    }

    #[test]
    fn add_sub_does_not_overflow_for_large_qlog() {
        // ln_{-1} 1e3 ~ 5e5; the inner exponentials would overflow
        let v = q_add_sub(1e3, 2e3, &qp(-1.0)).unwrap();
        assert!(!v.cutoff && close(v.value, 2e3, 1e-12), "{v:?}");
    }

    #[test]
    fn log_domain_sub_ops_agree_with_values() {
        for q in QS {
            let qq = qp(q);
            for (x, y) in [(0.7, 2.5), (3.0, 3.0), (1.2, 0.4)] {
                let v = q_mul_sub(x, y, &qq).unwrap();
                let l = q_mul_sub_log(f64::ln(x), f64::ln(y), &qq).unwrap();
                assert_eq!(v.cutoff, l.is_none(), "q={q} x={x} y={y}");
                if let Some(l) = l {
                    assert!(close(l.exp(), v.value, 1e-12), "q={q} x={x} y={y}");
                }
                let v = q_add_sub(x, y, &qq).unwrap();
                let l = q_add_sub_log(f64::ln(x), f64::ln(y), &qq).unwrap();
                assert_eq!(v.cutoff, l.is_none());
                if let Some(l) = l {
                    assert!(close(l.exp(), v.value, 1e-12), "q={q} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn log_domain_product_beyond_overflow() {
        // <18>_{-3} = e^{(18^4 - 1)/4}; x^4 + y^4 - 1 with x = <2>, y = <9>
        let q = qp(-3.0);
        let l2 = n(2.0, -3.0).qlog();
        let l9 = n(9.0, -3.0).qlog();
        let l = q_mul_sub_log(l2, l9, &q).unwrap().unwrap();
        let want = (((4.0 * l2).exp() + (4.0 * l9).exp() - 1.0).ln()) / 4.0;
        assert!(close(l, want, 1e-14));
        let l18 = n(18.0, -3.0).qlog();
        assert!(l18 > 700.0 && q_mul_sub_log(l, l, &q).unwrap().unwrap().is_finite());
    }

    #[test]
    fn sub_family_neutral_elements() {
        for q in [1.0, 1.5, 3.0] {
            let x = 0.8;
            assert!(close(q_add_sub(x, 0.0, &qp(q)).unwrap().value, x, 1e-14));
        }
        for q in QS {
            let x = 0.9;
            assert!(close(q_mul_sub(x, 1.0, &qp(q)).unwrap().value, x, 1e-14));
        }
    }

    #[test]
    fn fold_examples() {
        for q in QS {
            let terms: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&u| n(u, q)).collect();
            assert_eq!(
                fold_sup(SupOp::Add, &terms, FoldOrder::Ascending).unwrap(),
                n(6.0, q)
            );
        }
        let v = fold_sub(SubOp::Mul, &[2.0, 3.0, 3.0], &qp(1.0), FoldOrder::Ascending).unwrap();
        assert_eq!(v, 18.0);
        // ln_2 2 + 2 ln_2 3 = 11/6 exceeds 1/(q-1)
        assert!(matches!(
            sub_fold_of_qintegers(SubOp::Mul, &[2, 3, 3], &qp(2.0)),
            Err(QError::Fold { .. }) | Err(QError::Cutoff { .. })
        ));
        for q in [-1.0, 0.0, 0.5] {
            let qq = qp(q);
            let v = sub_fold_of_qintegers(SubOp::Mul, &[2, 3, 3], &qq).unwrap();
            assert!(!close(v, 18.0, 1e-6));
            assert!(!close(v.ln(), n(18.0, q).qlog(), 1e-6));
        }
    }

    #[test]
    fn fold_errors_carry_index() {
        let err = fold_sub(
            SubOp::Add,
            &[1.0, 2.0, -3.0],
            &qp(0.5),
            FoldOrder::Ascending,
        )
        .unwrap_err();
        assert!(matches!(err, QError::Fold { index: 2, .. }), "{err:?}");
        let err = fold_sub(
            SubOp::Add,
            &[1.0, 2.0, 3.0, -4.0],
            &qp(0.5),
            FoldOrder::PairwiseTree,
        )
        .unwrap_err();
        assert!(matches!(err, QError::Fold { index: 3, .. }), "{err:?}");
        let empty: [f64; 0] = [];
        assert!(fold_sub(SubOp::Add, &empty, &qp(0.5), FoldOrder::Ascending).is_err());
    }

    #[test]
    fn fold_orders_agree() {
        let values: Vec<f64> = (1..=200).map(|k| 1.0 / (k as f64).powi(2)).collect();
        for q in [-1.0, 0.0, 0.5, 1.0] {
            let a = fold_sub(SubOp::Add, &values, &qp(q), FoldOrder::Ascending).unwrap();
            let b = fold_sub(SubOp::Add, &values, &qp(q), FoldOrder::PairwiseTree).unwrap();
            assert!(close(a, b, 1e-9), "q={q} {a} {b}");
        }
    }

    #[test]
    fn q_primality() {
        assert!(is_q_prime(&n(7.0, -2.0)).unwrap());
        assert!(!is_q_prime(&n(18.0, 0.3)).unwrap());
        assert!(!is_q_prime(&QNumber::one(qp(0.7))).unwrap());
        assert!(is_q_prime(&n(2.5, 0.3)).is_err());
    }

    #[test]
    fn q_prime_decomposition_examples() {
        let d = q_prime_decompose(&n(18.0, 0.7)).unwrap();
        assert_eq!(d.factors(), &[(2, 1), (3, 2)]);
        assert_eq!(
            q_prime_decompose(&n(13.0, -1.0)).unwrap().factors(),
            &[(13, 1)]
        );
        let v = n(360.0, 1.5);
        let d = q_prime_decompose(&v).unwrap();
        assert_eq!(d.factors(), &[(2, 3), (3, 2), (5, 1)]);
        assert_eq!(d.recompose().unwrap().preimage(), 360.0);
        assert!(q_prime_decompose(&QNumber::one(qp(0.5))).is_err());
        assert!(q_prime_decompose(&n(4.5, 0.5)).is_err());
    }

    #[test]
    fn crossing_product_18() {
        let q: f64 = solve_crossing_q(
            18.0,
            &[2, 3, 3],
            CrossingFamily::SubProduct,
            &CrossingWindow::default(),
        )
        .unwrap();
        // oracle: dense scan + 100-step bisection at 50 digits
        assert!((q - -0.187_729_579_965_137_47).abs() < 1e-12, "{q}");
        let r = crossing_residual(18.0, &[2, 3, 3], CrossingFamily::SubProduct, q).unwrap();
        assert!(r.abs() < 1e-9 * 18.0);
    }

    #[test]
    fn crossing_sum_5() {
        let q: f64 = solve_crossing_q(
            5.0,
            &[2, 3],
            CrossingFamily::SubSum,
            &CrossingWindow::default(),
        )
        .unwrap();
        assert!((q - 0.458_699_469_104_824_1).abs() < 1e-12, "{q}");
    }

    #[test]
    fn crossing_calibrates_at_one() {
        let r: f64 = crossing_residual(6.0, &[2, 3], CrossingFamily::SubProduct, 1.0).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn crossing_reports_missing_root() {
        let w = CrossingWindow {
            q_min: 1.1,
            q_max: 1.4,
            ..CrossingWindow::default()
        };
        let err = solve_crossing_q(18.0, &[2, 3, 3], CrossingFamily::SubProduct, &w).unwrap_err();
        assert!(matches!(err, QError::NoSignChange { .. }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn qs() -> impl Strategy<Value = f64> {
            prop::sample::select(QS.to_vec())
        }

        proptest! {
            #[test]
            fn isomorphism_laws(m in 1u64..=10_000, k in 1u64..=10_000, q in qs()) {
                let qq = qp(q);
                let a = QNumber::from_integer(m, qq).unwrap();
                let b = QNumber::from_integer(k, qq).unwrap();
                let prod = q_mul_sup(&a, &b).unwrap();
                let want = QNumber::from_integer(m * k, qq).unwrap();
                prop_assert_eq!(prod.preimage(), want.preimage());
                prop_assert!(close(prod.qlog(), want.qlog(), 1e-10));
                let sum = q_add_sup(&a, &b).unwrap();
                let want = QNumber::from_integer(m + k, qq).unwrap();
                prop_assert_eq!(sum.preimage(), want.preimage());
                prop_assert!(close(sum.qlog(), want.qlog(), 1e-10));
            }

            #[test]
            fn power_laws(x in 0.1f64..10.0, a in -2.0f64..2.0, b in -2.0f64..2.0, q in -2.0f64..3.0) {
                let v = n(x, q);
                let lhs = q_pow_sup(&v, a + b).unwrap();
                let rhs = q_mul_sup(&q_pow_sup(&v, a).unwrap(), &q_pow_sup(&v, b).unwrap()).unwrap();
                prop_assert!(close(lhs.qlog(), rhs.qlog(), 1e-9) || (lhs.qlog() - rhs.qlog()).abs() < 1e-12);
                let lhs = q_pow_sup(&v, a * b).unwrap();
                let rhs = q_pow_sup(&q_pow_sup(&v, a).unwrap(), b).unwrap();
                let rhs2 = q_pow_sup(&q_pow_sup(&v, b).unwrap(), a).unwrap();
                prop_assert!(close(lhs.qlog(), rhs.qlog(), 1e-9) || (lhs.qlog() - rhs.qlog()).abs() < 1e-12);
                prop_assert!(close(lhs.qlog(), rhs2.qlog(), 1e-9) || (lhs.qlog() - rhs2.qlog()).abs() < 1e-12);
            }

            #[test]
            fn sub_ops_commute(x in 0.1f64..5.0, y in 0.1f64..5.0, q in -2.0f64..3.0) {
                let qq = qp(q);
                prop_assert_eq!(q_add_sub(x, y, &qq).unwrap(), q_add_sub(y, x, &qq).unwrap());
                prop_assert_eq!(q_mul_sub(x, y, &qq).unwrap(), q_mul_sub(y, x, &qq).unwrap());
            }
        }
    }
}
