use std::sync::OnceLock;

use qzeta::acceptance::{run_criterion, AcceptanceContext, DEFAULT_SEED, REPORT_HEADER};

fn ctx() -> &'static AcceptanceContext {
    static CTX: OnceLock<AcceptanceContext> = OnceLock::new();
    CTX.get_or_init(|| {
        AcceptanceContext::new(DEFAULT_SEED).expect("sieve the acceptance prime table")
    })
}

fn check(id: u8) {
    let c = run_criterion(ctx(), id).expect("criterion id in range");
    let mut report = format!("criterion {} {}\n{REPORT_HEADER}\n", c.id, c.name);
    for line in &c.lines {
        report.push_str(&format!("{line}\n"));
        if let Some(note) = &line.note {
            report.push_str(&format!("  # {note}\n"));
        }
    }
    println!("{report}");
    println!(
        "criterion {} {}: {}",
        c.id,
        c.name,
        if c.passed() { "PASS" } else { "FAIL" }
    );
    assert!(c.passed(), "criterion {} {} failed\n{report}", c.id, c.name);
}

#[test]
fn criterion_01_basel() {
    check(1);
}

#[test]
fn criterion_02_divergence_primes_first() {
    check(2);
}

#[test]
fn criterion_03_divergence_zdiv_first() {
    check(3);
}

#[test]
fn criterion_04_exponent_sanity() {
    check(4);
}

#[test]
fn criterion_05_algebra_laws() {
    check(5);
}

#[test]
fn criterion_06_factorization_dichotomy() {
    check(6);
}

#[test]
fn criterion_07_q_above_one_bounded() {
    check(7);
}

#[test]
fn criterion_08_sum_below_product() {
    check(8);
}

#[test]
fn criterion_09_isomorphism_oracle() {
    check(9);
}

#[test]
fn criterion_10_prime_backend() {
    check(10);
}
