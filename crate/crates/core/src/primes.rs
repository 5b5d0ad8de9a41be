//! Prime generation and factorization.

use std::sync::OnceLock;

use crate::error::{QError, Result};

/// Upper bound on `first_n_primes` unless a larger cap is passed explicitly.
pub const DEFAULT_PRIME_CAP: u64 = 100_000_000;

/// Largest integer accepted by [`factorize`].
pub const FACTORIZE_MAX: u64 = 1_000_000_000_000;

// Odd numbers per sieve segment: 256 KiB of marks.
const SEGMENT_ODDS: usize = 1 << 18;

/// The first `len()` primes in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    primes: Vec<u64>,
    limit: u64,
}

impl PrimeTable {
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Sieve bound that produced the table.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn last(&self) -> Option<u64> {
        self.primes.last().copied()
    }

    /// The first `n` primes, or `None` if the table is shorter.
    pub fn prefix(&self, n: usize) -> Option<&[u64]> {
        self.primes.get(..n)
    }

    /// `ln p` for the first `n` primes.
    pub fn log_primes<T: crate::Scalar>(&self, n: usize) -> Option<Vec<T>> {
        self.prefix(n)
            .map(|ps| ps.iter().map(|&p| T::from_count(p).ln()).collect())
    }
}

/// Sieve bound guaranteed to contain the n-th prime (Rosser: `p_n < n (ln n + ln ln n)` for n >= 6).
fn nth_prime_bound(n: u64) -> u64 {
    if n < 6 {
        return 13;
    }
    let x = n as f64;
    (x * (x.ln() + x.ln().ln())).ceil() as u64 + 16
}

/// All primes `<= limit` with a simple sieve. Used for the base primes of the segmented sieve.
fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Primes `<= limit`, stopping after `want` of them.
fn segmented_sieve(limit: u64, want: usize) -> Vec<u64> {
    // pi(x) < 1.26 x / ln x
    let estimate = (1.26 * limit as f64 / (limit as f64).ln().max(1.0)) as usize + 16;
    let mut out = Vec::with_capacity(want.min(estimate));
    if limit < 2 || want == 0 {
        return out;
    }
    out.push(2);
    let root = (limit as f64).sqrt() as u64 + 1;
    let base: Vec<u64> = simple_sieve(root).into_iter().skip(1).collect();

    // Segment covers odd numbers low, low+2, ..., low + 2*(SEGMENT_ODDS-1).
    let mut marks = vec![false; SEGMENT_ODDS];
    let mut low = 3u64;
    while low <= limit && out.len() < want {
        let high = (low + 2 * (SEGMENT_ODDS as u64 - 1)).min(limit | 1);
        let span = ((high - low) / 2 + 1) as usize;
        marks[..span].fill(false);
        for &p in &base {
            let p2 = p * p;
            if p2 > high {
                break;
            }
            // first odd multiple of p in [low, high], starting no lower than p^2
            let mut start = if p2 >= low {
                p2
            } else {
                let r = low.div_ceil(p) * p;
                if r % 2 == 0 {
                    r + p
                } else {
                    r
                }
            };
            while start <= high {
                marks[((start - low) / 2) as usize] = true;
                start += 2 * p;
            }
        }
        for (i, &m) in marks[..span].iter().enumerate() {
            if !m {
                let v = low + 2 * i as u64;
                if v > limit {
                    break;
                }
                out.push(v);
                if out.len() == want {
                    break;
                }
            }
        }
        low = high + 2;
    }
    out
}

/// The first `n` primes, refusing counts above [`DEFAULT_PRIME_CAP`].
pub fn first_n_primes(n: usize) -> Result<PrimeTable> {
    first_n_primes_with_cap(n, DEFAULT_PRIME_CAP)
}

pub fn first_n_primes_with_cap(n: usize, cap: u64) -> Result<PrimeTable> {
    if n == 0 {
        return Err(QError::domain("first_n_primes", "n must be at least 1"));
    }
    if n as u64 > cap {
        return Err(QError::Resource {
            requested: n as u64,
            cap,
        });
    }
    sieve_from_bound(n, nth_prime_bound(n as u64))
}

/// All primes `<= limit`.
pub fn primes_up_to(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(QError::domain(
            "primes_up_to",
            format!("limit = {limit} below 2"),
        ));
    }
    if limit > DEFAULT_PRIME_CAP.saturating_mul(20) {
        return Err(QError::Resource {
            requested: limit,
            cap: DEFAULT_PRIME_CAP * 20,
        });
    }
    Ok(PrimeTable {
        primes: segmented_sieve(limit, usize::MAX),
        limit,
    })
}

/// Sieves with an initial bound, doubling it until `n` primes are found.
pub(crate) fn sieve_from_bound(n: usize, initial_bound: u64) -> Result<PrimeTable> {
    let mut limit = initial_bound.max(2);
    loop {
        let primes = segmented_sieve(limit, n);
        if primes.len() >= n {
            return Ok(PrimeTable { primes, limit });
        }
        limit = limit.saturating_mul(2);
    }
}

fn small_primes() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    // sqrt(FACTORIZE_MAX) = 10^6
    TABLE.get_or_init(|| simple_sieve(1_000_000))
}

/// Prime factorization `n = prod p^m`, primes ascending.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>> {
    if !(2..=FACTORIZE_MAX).contains(&n) {
        return Err(QError::domain(
            "factorize",
            format!("n = {n} outside [2, {FACTORIZE_MAX}]"),
        ));
    }
    let mut rest = n;
    let mut factors = Vec::new();
    for &p in small_primes() {
        if p * p > rest {
            break;
        }
        let mut m = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            m += 1;
        }
        if m > 0 {
            factors.push((p, m));
        }
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(factors)
}

/// Deterministic primality by trial division (inputs up to [`FACTORIZE_MAX`]).
pub fn is_prime(n: u64) -> bool {
    match n {
        0 | 1 => false,
        2 | 3 => true,
        _ if n.is_multiple_of(2) => false,
        _ => {
            if n <= FACTORIZE_MAX {
                factorize(n).map(|f| f == [(n, 1)]).unwrap_or(false)
            } else {
                let mut d = 3u64;
                while d.saturating_mul(d) <= n {
                    if n.is_multiple_of(d) {
                        return false;
                    }
                    d += 2;
                }
                true
            }
        }
    }
}

/// `N / ln N`, the prime number theorem estimate of pi(N).
pub fn prime_count_estimate(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(QError::domain(
            "prime_count_estimate",
            "N must be at least 2",
        ));
    }
    let x = n as f64;
    Ok(x / x.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_is_prime(n: u64) -> bool {
        n >= 2
            && (2..)
                .take_while(|d| d * d <= n)
                .all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn first_five() {
        assert_eq!(first_n_primes(5).unwrap().primes(), &[2, 3, 5, 7, 11]);
        assert_eq!(first_n_primes(1).unwrap().primes(), &[2]);
    }

    #[test]
    fn ten_thousandth_prime() {
        assert_eq!(first_n_primes(10_000).unwrap().last(), Some(104_729));
    }

    #[test]
    fn zero_and_over_cap_rejected() {
        assert!(matches!(first_n_primes(0), Err(QError::Domain { .. })));
        assert!(matches!(
            first_n_primes_with_cap(11, 10),
            Err(QError::Resource {
                requested: 11,
                cap: 10
            })
        ));
    }

    #[test]
    fn short_bound_grows() {
        let t = sieve_from_bound(1000, 10).unwrap();
        assert_eq!(t.len(), 1000);
        assert_eq!(t.last(), Some(7919));
        assert!(t.limit() >= 7919);
    }

    #[test]
    fn sieve_matches_trial_division_below_1e5() {
        let oracle: Vec<u64> = (2..100_000)
            .filter(|&n| trial_division_is_prime(n))
            .collect();
        let t = first_n_primes(oracle.len()).unwrap();
        assert_eq!(t.primes(), oracle.as_slice());
    }

    #[test]
    fn segment_boundaries_are_seamless() {
        // spans several 2^18-odd segments
        let t = first_n_primes(200_000).unwrap();
        assert!(t.primes().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.last(), Some(2_750_159));
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(18).unwrap(), vec![(2, 1), (3, 2)]);
        assert_eq!(factorize(2).unwrap(), vec![(2, 1)]);
        assert_eq!(
            factorize(9_699_690).unwrap(),
            vec![
                (2, 1),
                (3, 1),
                (5, 1),
                (7, 1),
                (11, 1),
                (13, 1),
                (17, 1),
                (19, 1)
            ]
        );
        assert_eq!(
            factorize(999_999_999_989).unwrap(),
            vec![(999_999_999_989, 1)]
        );
        assert!(factorize(1).is_err());
        assert!(factorize(FACTORIZE_MAX + 1).is_err());
    }

    #[test]
    fn factorize_recomposes_up_to_1e5() {
        for n in 2..=100_000u64 {
            let f = factorize(n).unwrap();
            let back: u64 = f.iter().map(|&(p, m)| p.pow(m)).product();
            assert_eq!(back, n);
            assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(f.iter().all(|&(p, m)| m >= 1 && trial_division_is_prime(p)));
        }
    }

    #[test]
    fn primes_up_to_counts() {
        assert_eq!(primes_up_to(2).unwrap().primes(), &[2]);
        assert_eq!(primes_up_to(30).unwrap().len(), 10);
        assert_eq!(primes_up_to(1_000_000).unwrap().len(), 78_498);
        assert!(primes_up_to(1).is_err());
    }

    #[test]
    fn is_prime_small() {
        let got: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(got, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn prime_count_estimate_examples() {
        assert!((prime_count_estimate(1_000_000).unwrap() - 72_382.41).abs() < 0.01);
        assert!((prime_count_estimate(3).unwrap() - 2.730_718).abs() < 1e-6);
        assert!(prime_count_estimate(1).is_err());
    }

    #[test]
    fn prime_count_ratio_sanity_band() {
        let t = first_n_primes(700_000).unwrap();
        for n in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000] {
            let pi = t.primes().partition_point(|&p| p <= n) as f64;
            let ratio = pi / prime_count_estimate(n).unwrap();
            assert!((1.0..=1.2).contains(&ratio), "N={n} ratio={ratio}");
        }
        let pi_1e6 = t.primes().partition_point(|&p| p <= 1_000_000);
        assert_eq!(pi_1e6, 78_498);
    }
}
