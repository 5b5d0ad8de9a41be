//! q-logarithm, q-exponential and the q-number mappings built on them.
//!
//! A q-number `<u>_q = exp(ln_q u)` leaves double range quickly for q < 1
//! (`<40>_{-1}` is already `e^799.5`), so [`QNumber`] keeps the pre-image `u`
//! and `ln_q u` and only realizes the value on request.
//!
//! Only positive pre-images are constructible in general. At `u = 0` the
//! q-number depends on the sign of `1 - q`: it is `e^{-1/(1-q)}` for q < 1 and
//! `0` for q >= 1. The latter is exposed as [`QNumber::additive_identity`].

use crate::error::{QError, Result};
use crate::scalar::Scalar;

/// Default `|1 - q|` below which the classical `ln`/`exp` branch is taken.
pub const DEFAULT_EPSILON_ONE: f64 = 1e-8;

/// The deformation parameter together with its classical-limit threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParam<T> {
    q: T,
    epsilon_one: T,
}

impl<T: Scalar> QParam<T> {
    pub fn new(q: T) -> Result<Self> {
        Self::with_epsilon(q, T::lit(DEFAULT_EPSILON_ONE))
    }

    pub fn with_epsilon(q: T, epsilon_one: T) -> Result<Self> {
        if !q.is_finite() {
            return Err(QError::NonFinite { op: "QParam" });
        }
        if !(epsilon_one > T::zero() && epsilon_one <= T::lit(1e-6)) {
            return Err(QError::domain(
                "QParam",
                format!("epsilon_one = {epsilon_one} not in (0, 1e-6]"),
            ));
        }
        Ok(Self { q, epsilon_one })
    }

    /// The classical parameter q = 1.
    pub fn one() -> Self {
        Self {
            q: T::one(),
            epsilon_one: T::lit(DEFAULT_EPSILON_ONE),
        }
    }

    #[inline]
    pub fn q(&self) -> T {
        self.q
    }

    #[inline]
    pub fn epsilon_one(&self) -> T {
        self.epsilon_one
    }

    /// `1 - q`.
    #[inline]
    pub fn one_minus_q(&self) -> T {
        T::one() - self.q
    }

    /// True when the classical branch is used.
    #[inline]
    pub fn is_classical(&self) -> bool {
        self.one_minus_q().abs() < self.epsilon_one
    }
}

/// `(z^{1-q} - 1) / (1 - q)` given `ln z`, evaluated as `expm1((1-q) ln z) / (1-q)`.
#[inline]
pub(crate) fn q_log_of_ln<T: Scalar>(ln_z: T, q: &QParam<T>) -> T {
    if q.is_classical() {
        return ln_z;
    }
    let k = q.one_minus_q();
    (k * ln_z).exp_m1() / k
}

/// `ln(e_q^x)`, or `None` inside the cutoff zone `1 + (1-q)x < 0`.
#[inline]
pub(crate) fn ln_q_exp<T: Scalar>(x: T, q: &QParam<T>) -> Option<T> {
    if q.is_classical() {
        return Some(x);
    }
    let k = q.one_minus_q();
    let base = k * x;
    if base < -T::one() {
        return None;
    }
    Some(base.ln_1p() / k)
}

/// q-logarithm `ln_q z = (z^{1-q} - 1) / (1 - q)`.
pub fn q_log<T: Scalar>(z: T, q: &QParam<T>) -> Result<T> {
    if !z.is_finite() {
        return Err(QError::NonFinite { op: "q_log" });
    }
    if z <= T::zero() {
        return Err(QError::domain("q_log", format!("z = {z} must be positive")));
    }
    Ok(q_log_of_ln(z.ln(), q))
}

/// q-exponential `[1 + (1-q)x]^{1/(1-q)}`, exactly zero in the cutoff zone.
pub fn q_exp<T: Scalar>(x: T, q: &QParam<T>) -> Result<T> {
    if !x.is_finite() {
        return Err(QError::NonFinite { op: "q_exp" });
    }
    Ok(match ln_q_exp(x, q) {
        Some(l) => l.exp(),
        None => T::zero(),
    })
}

/// A q-number `<u>_q` held as its pre-image and `ln_q u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QNumber<T> {
    preimage: T,
    q: QParam<T>,
    qlog: T,
}

impl<T: Scalar> QNumber<T> {
    /// `<u>_q = exp(ln_q u)`.
    pub fn new(u: T, q: QParam<T>) -> Result<Self> {
        let qlog = q_log(u, &q)?;
        if !qlog.is_finite() {
            return Err(QError::Overflow {
                op: "qnumber_iel",
                log_value: qlog.as_f64(),
            });
        }
        Ok(Self {
            preimage: u,
            q,
            qlog,
        })
    }

    /// `<n>_q` for a positive integer.
    pub fn from_integer(n: u64, q: QParam<T>) -> Result<Self> {
        Self::new(T::from_count(n), q)
    }

    /// `<1>_q`, which equals 1 for every q.
    pub fn one(q: QParam<T>) -> Self {
        Self {
            preimage: T::one(),
            q,
            qlog: T::zero(),
        }
    }

    /// `<0>_q = 0`, the neutral element of the pre-image sum. Defined for q >= 1 only.
    pub fn additive_identity(q: QParam<T>) -> Result<Self> {
        if q.q() < T::one() && !q.is_classical() {
            return Err(QError::domain(
                "additive_identity",
                format!("<0>_q is not neutral for q = {} < 1", q.q()),
            ));
        }
        Ok(Self {
            preimage: T::zero(),
            q,
            qlog: T::neg_infinity(),
        })
    }

    /// Builds from a non-negative pre-image, mapping 0 to the additive identity.
    pub(crate) fn from_nonnegative(u: T, q: QParam<T>) -> Result<Self> {
        if u == T::zero() {
            Self::additive_identity(q)
        } else {
            Self::new(u, q)
        }
    }

    #[inline]
    pub fn preimage(&self) -> T {
        self.preimage
    }

    #[inline]
    pub fn qparam(&self) -> QParam<T> {
        self.q
    }

    #[inline]
    pub fn q(&self) -> T {
        self.q.q()
    }

    /// `ln <u>_q = ln_q u`.
    #[inline]
    pub fn qlog(&self) -> T {
        self.qlog
    }

    /// Realized value `exp(qlog)`; an overflow error carries the log when it is too large.
    ///
    /// On the classical branch this is the pre-image itself.
    pub fn value(&self) -> Result<T> {
        if self.q.is_classical() {
            return Ok(self.preimage);
        }
        if self.qlog > T::max_ln() {
            return Err(QError::Overflow {
                op: "QNumber::value",
                log_value: self.qlog.as_f64(),
            });
        }
        Ok(self.qlog.exp())
    }

    /// The inverse mapping: recovers `u` from `<u>_q`.
    #[inline]
    pub fn inverse(&self) -> T {
        self.preimage
    }

    /// Inverse mapping evaluated through `e_q^{ln <u>_q}` instead of the stored pre-image.
    pub fn inverse_via_q_exp(&self) -> Result<T> {
        q_exp(self.qlog, &self.q)
    }
}

/// `<u>_q = e^{ln_q u}`.
pub fn qnumber_iel<T: Scalar>(u: T, q: QParam<T>) -> Result<QNumber<T>> {
    QNumber::new(u, q)
}

/// Pre-image of a q-number.
pub fn qnumber_inverse<T: Scalar>(v: &QNumber<T>) -> T {
    v.inverse()
}

/// `_q<x> = e_q^{ln x}`, the left inverse of [`qnumber_iel`].
pub fn map_eq_ln<T: Scalar>(u: T, q: &QParam<T>) -> Result<T> {
    if !u.is_finite() {
        return Err(QError::NonFinite { op: "map_eq_ln" });
    }
    if u <= T::zero() {
        return Err(QError::domain(
            "map_eq_ln",
            format!("u = {u} must be positive"),
        ));
    }
    q_exp(u.ln(), q)
}

/// `[x]_q = ln e_q^x`; the cutoff zone maps to a domain error instead of `-inf`.
pub fn map_ln_eq<T: Scalar>(x: T, q: &QParam<T>) -> Result<T> {
    if !x.is_finite() {
        return Err(QError::NonFinite { op: "map_ln_eq" });
    }
    ln_q_exp(x, q).ok_or(QError::Cutoff { op: "map_ln_eq" })
}

/// `_q[x] = ln_q e^x`.
pub fn map_qln_e<T: Scalar>(x: T, q: &QParam<T>) -> Result<T> {
    if !x.is_finite() {
        return Err(QError::NonFinite { op: "map_qln_e" });
    }
    Ok(q_log_of_ln(x, q))
}

/// `lim_{n -> inf} <n>_q`: `e^{1/(q-1)}` for q > 1, `+inf` otherwise.
pub fn qnat_limit<T: Scalar>(q: &QParam<T>) -> T {
    if q.q() > T::one() && !q.is_classical() {
        (T::one() / (q.q() - T::one())).exp()
    } else {
        T::infinity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(q: f64) -> QParam<f64> {
        QParam::new(q).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn qparam_rejects_bad_inputs() {
        assert!(QParam::new(f64::NAN).is_err());
        assert!(QParam::with_epsilon(0.5, 0.0).is_err());
        assert!(QParam::with_epsilon(0.5, 1e-3).is_err());
        assert!(QParam::with_epsilon(0.5, 1e-6).is_ok());
    }

    #[test]
    fn q_log_examples() {
        assert!(close(q_log(5.0, &qp(1.0)).unwrap(), 5f64.ln(), 1e-15));
        assert!(close(q_log(3.0, &qp(2.0)).unwrap(), 2.0 / 3.0, 1e-15));
        assert_eq!(q_log(1.0, &qp(-4.7)).unwrap(), 0.0);
    }

    #[test]
    fn q_log_domain_errors() {
        assert!(matches!(q_log(0.0, &qp(0.5)), Err(QError::Domain { .. })));
        assert!(matches!(q_log(-1.0, &qp(0.5)), Err(QError::Domain { .. })));
        assert!(matches!(
            q_log(f64::INFINITY, &qp(0.5)),
            Err(QError::NonFinite { .. })
        ));
    }

    #[test]
    fn q_exp_examples() {
        assert_eq!(q_exp(0.0, &qp(3.2)).unwrap(), 1.0);
        assert!(close(q_exp(2.0 / 3.0, &qp(2.0)).unwrap(), 3.0, 1e-14));
        assert_eq!(q_exp(-5.0, &qp(0.0)).unwrap(), 0.0);
        assert!(q_exp(f64::NAN, &qp(0.0)).is_err());
    }

    #[test]
    fn qnumber_examples() {
        let v = qnumber_iel(7.0, qp(1.0)).unwrap();
        assert!(close(v.value().unwrap(), 7.0, 1e-15));

        let v = qnumber_iel(2.0, qp(0.0)).unwrap();
        assert!(close(v.value().unwrap(), std::f64::consts::E, 1e-15));

        let v = qnumber_iel(100.0, qp(-1.0)).unwrap();
        assert!(close(v.qlog(), 4999.5, 1e-15));
        assert!(matches!(v.value(), Err(QError::Overflow { .. })));
    }

    #[test]
    fn qnumber_inverse_examples() {
        for (u, q) in [(18.0, 0.5), (3.0, -1.0), (1e6, -1.0)] {
            let v = qnumber_iel(u, qp(q)).unwrap();
            assert_eq!(qnumber_inverse(&v), u);
        }
        let v = qnumber_iel(3.0, qp(-1.0)).unwrap();
        assert!(close(v.inverse_via_q_exp().unwrap(), 3.0, 1e-14));
    }

    #[test]
    fn additive_identity_only_for_q_at_least_one() {
        assert!(QNumber::additive_identity(qp(1.0)).is_ok());
        assert!(QNumber::additive_identity(qp(2.0)).is_ok());
        assert!(QNumber::additive_identity(qp(0.5)).is_err());
    }

    #[test]
    fn map_eq_ln_examples() {
        assert!(close(map_eq_ln(5.0, &qp(1.0)).unwrap(), 5.0, 1e-15));
        let v = qnumber_iel(5.0, qp(0.3)).unwrap().value().unwrap();
        assert!(close(map_eq_ln(v, &qp(0.3)).unwrap(), 5.0, 1e-13));
        assert!(close(
            map_eq_ln(std::f64::consts::E, &qp(0.0)).unwrap(),
            2.0,
            1e-15
        ));
    }

    #[test]
    fn map_ln_eq_and_qln_e_examples() {
        assert_eq!(map_ln_eq(4.0, &qp(1.0)).unwrap(), 4.0);
        assert_eq!(map_qln_e(4.0, &qp(1.0)).unwrap(), 4.0);
        let q = qp(0.7);
        let back = map_qln_e(map_ln_eq(2.5, &q).unwrap(), &q).unwrap();
        assert!(close(back, 2.5, 1e-14));
        let back = map_ln_eq(map_qln_e(2.5, &q).unwrap(), &q).unwrap();
        assert!(close(back, 2.5, 1e-14));
        assert!(matches!(
            map_ln_eq(-5.0, &qp(0.0)),
            Err(QError::Cutoff { .. })
        ));
    }

    #[test]
    fn qnat_limit_examples() {
        assert!(close(qnat_limit(&qp(2.0)), std::f64::consts::E, 1e-15));
        assert_eq!(qnat_limit(&qp(0.5)), f64::INFINITY);
        assert!(close(qnat_limit(&qp(1.5)), 7.38905609893065, 1e-14));
        assert_eq!(qnat_limit(&qp(1.0)), f64::INFINITY);
    }

    #[test]
    fn branch_switch_is_continuous() {
        let eps = DEFAULT_EPSILON_ONE;
        for &z in &[0.1, 0.5, 2.0, 10.0, 1e3, 1e6] {
            let ln = f64::ln(z);
            for q in [1.0 + eps, 1.0 - eps, 1.0 + 1.01 * eps, 1.0 - 1.01 * eps] {
                let v = q_log(z, &qp(q)).unwrap();
                // the deformed branch differs from ln z by (1-q) ln^2 z / 2 + O((1-q)^2)
                let jump = if qp(q).is_classical() {
                    0.0
                } else {
                    (1.0 - q) * ln * ln / 2.0
                };
                assert!(
                    (v - ln - jump).abs() <= 1e-12 * ln.abs().max(1.0),
                    "z={z} q={q}"
                );
                assert!((v - ln).abs() <= eps * ln * ln, "z={z} q={q}");
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let q = QParam::<f32>::new(2.0).unwrap();
        let v = q_log(3.0_f32, &q).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip(u in 1e-6f64..1e9, q in -5.0f64..5.0) {
                let v = qnumber_iel(u, qp(q)).unwrap();
                prop_assert_eq!(qnumber_inverse(&v), u);
            }

            #[test]
            fn log_exp_inverse_pair(z in 1e-3f64..1e6, q in -3.0f64..3.0) {
                let q = qp(q);
                // e_q is ill-conditioned once z^{1-q} drops near machine precision
                prop_assume!(z.powf(1.0 - q.q()) > 1e-4);
                let x = q_log(z, &q).unwrap();
                let back = q_exp(x, &q).unwrap();
                prop_assert!(close(back, z, 1e-10), "z={} back={}", z, back);
            }

            #[test]
            fn exp_log_inverse_pair(x in -5.0f64..5.0, q in -3.0f64..3.0) {
                let qq = qp(q);
                prop_assume!(1.0 + (1.0 - q) * x > 1e-6);
                let back = q_log(q_exp(x, &qq).unwrap(), &qq).unwrap();
                prop_assert!((back - x).abs() <= 1e-10 * x.abs().max(1.0));
            }

            #[test]
            fn qlog_strictly_increasing(n in 1u64..100_000, q in -5.0f64..5.0) {
                let a = QNumber::from_integer(n, qp(q)).unwrap();
                let b = QNumber::from_integer(n + 1, qp(q)).unwrap();
                prop_assert!(b.qlog() >= a.qlog());
                if q <= 2.0 {
                    prop_assert!(b.qlog() > a.qlog());
                }
            }

            #[test]
            fn bounded_for_q_above_one(u in 1e-6f64..1e12, q in 1.01f64..5.0) {
                let v = qnumber_iel(u, qp(q)).unwrap();
                prop_assert!(v.qlog() <= 1.0 / (q - 1.0));
                prop_assert!(v.value().unwrap() <= qnat_limit(&qp(q)));
                if u.powf(1.0 - q) > 1e-12 {
                    prop_assert!(v.qlog() < 1.0 / (q - 1.0));
                }
            }
        }
    }
}
