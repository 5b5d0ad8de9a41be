use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;

use qzeta::acceptance::{self, AcceptanceContext, REPORT_HEADER};
use qzeta::extrapolation::{compute_grid, default_bracket, run_pipeline, ExponentMethod};
use qzeta::primes::{first_n_primes, is_prime};
use qzeta::qalgebra::{
    fold_sup, q_add_sub, q_add_sub_log, q_mul_sub, q_mul_sub_log, solve_crossing_q, CrossingFamily,
    CrossingWindow, FoldOrder, SupOp,
};
use qzeta::{evaluate, PipelineOrder, QNumber, QParam};

use crate::format::{float, grid};
use crate::{AcceptanceFailed, Cli, Command, ExtrapolateArgs, FlagError, ZetaArgs};

const QNUM_MAX: usize = 1_000_000;

fn flag_error(msg: impl Into<String>) -> anyhow::Error {
    FlagError(msg.into()).into()
}

/// Standard output, or `name` inside the output directory.
fn output(cli: &Cli, name: &str) -> anyhow::Result<Box<dyn Write>> {
    match &cli.out_dir {
        Some(dir) => Ok(Box::new(BufWriter::new(create(dir, name)?))),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn create(dir: &Path, name: &str) -> anyhow::Result<File> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    File::create(&path).with_context(|| format!("creating {}", path.display()))
}

fn qparam(q: f64) -> anyhow::Result<QParam<f64>> {
    QParam::new(q).map_err(|e| flag_error(format!("--q: {e}")))
}

pub fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Primes { count } => primes(cli, *count),
        Command::Qnum {
            q,
            n_max,
            primes_only,
        } => qnum(cli, *q, *n_max, *primes_only),
        Command::Zeta(args) => zeta(cli, args),
        Command::Extrapolate(args) => extrapolate(cli, args),
        Command::Demo {
            q_min,
            q_max,
            q_step,
        } => demo(cli, *q_min, *q_max, *q_step),
        Command::Acceptance { criterion } => run_acceptance(cli, criterion),
    }
}

fn primes(cli: &Cli, count: usize) -> anyhow::Result<()> {
    if count == 0 {
        return Err(flag_error("--count must be at least 1"));
    }
    let table = first_n_primes(count)?;
    let mut out = output(cli, "primes.txt")?;
    for p in table.primes() {
        writeln!(out, "{p}")?;
    }
    out.flush()?;
    Ok(())
}

fn qnum(cli: &Cli, q: f64, n_max: usize, primes_only: bool) -> anyhow::Result<()> {
    if !(1..=QNUM_MAX).contains(&n_max) {
        return Err(flag_error(format!("--n-max must lie in [1, {QNUM_MAX}]")));
    }
    let qp = qparam(q)?;
    let mut out = output(cli, "qnum.csv")?;
    writeln!(out, "n,qlog,value_or_inf_flag,is_prime")?;
    for n in 1..=n_max as u64 {
        let prime = is_prime(n);
        if primes_only && !prime {
            continue;
        }
        let v = QNumber::from_integer(n, qp)?;
        let value = v.value().map_or_else(|_| "inf".to_string(), float);
        writeln!(out, "{n},{},{value},{}", float(v.qlog()), u8::from(prime))?;
    }
    out.flush()?;
    Ok(())
}

fn zeta(cli: &Cli, a: &ZetaArgs) -> anyhow::Result<()> {
    if !(a.s_step > 0.0) {
        return Err(flag_error("--s-step must be positive"));
    }
    if a.s_max < a.s_min {
        return Err(flag_error("--s-max must not be below --s-min"));
    }
    if a.n_terms == 0 || a.n_primes == 0 {
        return Err(flag_error("--n-terms and --n-primes must be at least 1"));
    }
    let qp = qparam(a.q)?;
    let table = first_n_primes(if a.variant.is_product() {
        a.n_primes
    } else {
        1
    })?;
    let rows = grid(a.s_min, a.s_max, a.s_step)
        .into_par_iter()
        .map(|s| evaluate(a.variant, s, &qp, a.n_terms, &table, a.n_primes))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = output(cli, "zeta.csv")?;
    writeln!(out, "s,value,log_value,truncation")?;
    for z in rows {
        let value = z.value().map_or_else(|| float(z.log_value.exp()), float);
        writeln!(
            out,
            "{},{value},{},{}",
            float(z.s),
            float(z.log_value),
            z.truncation
        )?;
    }
    out.flush()?;
    Ok(())
}

fn method_tag(m: ExponentMethod) -> &'static str {
    match m {
        ExponentMethod::CurvatureRoot => "curvature-root",
        ExponentMethod::MinCurvature => "min-curvature",
    }
}

fn extrapolate(cli: &Cli, a: &ExtrapolateArgs) -> anyhow::Result<()> {
    if a.zdiv.len() < 3 || a.primes.len() < 3 {
        return Err(flag_error(
            "--zdiv and --primes need at least 3 values each",
        ));
    }
    if a.zdiv.iter().any(|&z| !(z > 1.0)) {
        return Err(flag_error("--zdiv values must exceed 1"));
    }
    if a.primes.iter().any(|&k| k < 2) {
        return Err(flag_error("--primes values must be at least 2"));
    }
    let qp = qparam(a.q)?;
    let table = first_n_primes(*a.primes.iter().max().expect("nonempty"))?;
    let grid = compute_grid(&qp, &a.zdiv, &a.primes, &table)?;
    let report = run_pipeline(&grid, a.order, default_bracket())?;

    let dir = cli.out_dir.clone().unwrap_or_else(|| ".".into());
    let mut curves = BufWriter::new(create(&dir, "stage1_curves.csv")?);
    writeln!(curves, "zdiv,n_primes,s_div")?;
    for (i, &z) in grid.zdiv.iter().enumerate() {
        for (j, &k) in grid.primes.iter().enumerate() {
            writeln!(curves, "{},{k},{}", float(z), float(grid.s_div[i][j]))?;
        }
    }
    curves.flush()?;

    let parameter = match a.order {
        PipelineOrder::PrimesFirst => "zdiv",
        PipelineOrder::ZdivFirst => "n_primes",
    };
    let mut stage = BufWriter::new(create(&dir, "stage1_intercepts.csv")?);
    writeln!(stage, "{parameter},exponent,intercept,curvature,method")?;
    for r in &report.stage1 {
        writeln!(
            stage,
            "{},{},{},{},{}",
            float(r.parameter),
            float(r.fit.exponent),
            float(r.fit.intercept),
            float(r.fit.curvature),
            method_tag(r.fit.method)
        )?;
    }
    stage.flush()?;

    let summary = format!(
        "{},{},{},{},{}",
        float(report.q),
        report.order.tag(),
        float(report.s_div_infinity),
        float(report.error_vs_one),
        float(report.final_fit.exponent)
    );
    let mut fin = BufWriter::new(create(&dir, "final.csv")?);
    writeln!(
        fin,
        "q,order,s_div_infinity,error_vs_one,mu_or_nu,curvature,method"
    )?;
    writeln!(
        fin,
        "{summary},{},{}",
        float(report.final_fit.curvature),
        method_tag(report.final_fit.method)
    )?;
    fin.flush()?;

    let mut out = io::stdout().lock();
    writeln!(out, "q,order,s_div_infinity,error_vs_one,mu_or_nu")?;
    writeln!(out, "{summary}")?;
    Ok(())
}

struct DemoRow {
    q: f64,
    lhs18_sup: f64,
    lhs18_sub: f64,
    qnum18: f64,
    lhs5_sup: f64,
    lhs5_sub: f64,
    qnum5: f64,
    cutoff: bool,
}

/// Sub-family fold of `<t>_q` as `(value, cutoff)`.
///
/// Folds realized values while they are representable and falls back to logs otherwise.
fn sub_fold(terms: &[u64], qp: &QParam<f64>, mul: bool) -> qzeta::Result<(f64, bool)> {
    let q_numbers = terms
        .iter()
        .map(|&t| QNumber::from_integer(t, *qp))
        .collect::<qzeta::Result<Vec<_>>>()?;
    if let Ok(values) = q_numbers
        .iter()
        .map(|v| v.value())
        .collect::<qzeta::Result<Vec<_>>>()
    {
        let mut acc = Some(values[0]);
        for &v in &values[1..] {
            let Some(a) = acc else { break };
            let r = if mul {
                q_mul_sub(a, v, qp)?
            } else {
                q_add_sub(a, v, qp)?
            };
            if r.cutoff {
                return Ok((0.0, true));
            }
            acc = r.value.is_finite().then_some(r.value);
        }
        if let Some(a) = acc {
            return Ok((a, false));
        }
    }
    let mut acc = q_numbers[0].qlog();
    for v in &q_numbers[1..] {
        let r = if mul {
            q_mul_sub_log(acc, v.qlog(), qp)?
        } else {
            q_add_sub_log(acc, v.qlog(), qp)?
        };
        match r {
            Some(r) => acc = r,
            None => return Ok((0.0, true)),
        }
    }
    Ok((acc.exp(), false))
}

fn realized(v: &QNumber<f64>) -> f64 {
    v.value().unwrap_or(f64::INFINITY)
}

fn demo_row(q: f64) -> qzeta::Result<DemoRow> {
    let qp = QParam::new(q)?;
    let n = |k: u64| QNumber::from_integer(k, qp);
    let sup18 = fold_sup(SupOp::Mul, &[n(2)?, n(3)?, n(3)?], FoldOrder::Ascending)?;
    let sup5 = fold_sup(SupOp::Add, &[n(2)?, n(3)?], FoldOrder::Ascending)?;
    let (sub18, cut18) = sub_fold(&[2, 3, 3], &qp, true)?;
    let (sub5, cut5) = sub_fold(&[2, 3], &qp, false)?;
    Ok(DemoRow {
        q,
        lhs18_sup: realized(&sup18),
        lhs18_sub: sub18,
        qnum18: realized(&n(18)?),
        lhs5_sup: realized(&sup5),
        lhs5_sub: sub5,
        qnum5: realized(&n(5)?),
        cutoff: cut18 || cut5,
    })
}

fn demo(cli: &Cli, q_min: f64, q_max: f64, q_step: f64) -> anyhow::Result<()> {
    if !(q_step > 0.0) || q_max < q_min {
        return Err(flag_error("need --q-step > 0 and --q-max >= --q-min"));
    }
    let rows = grid(q_min, q_max, q_step)
        .into_iter()
        .map(demo_row)
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = output(cli, "demo.csv")?;
    writeln!(
        out,
        "q,lhs18_sup,lhs18_sub,qnum18,lhs5_sup,lhs5_sub,qnum5,cutoff"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            float(r.q),
            float(r.lhs18_sup),
            float(r.lhs18_sub),
            float(r.qnum18),
            float(r.lhs5_sup),
            float(r.lhs5_sub),
            float(r.qnum5),
            u8::from(r.cutoff)
        )?;
    }
    out.flush()?;

    let window = CrossingWindow {
        q_min,
        q_max,
        ..CrossingWindow::default()
    };
    let mut lines = vec!["identity,q_star".to_string()];
    for (name, target, terms, family) in [
        (
            "2x3x3=18",
            18.0,
            &[2u64, 3, 3][..],
            CrossingFamily::SubProduct,
        ),
        ("2+3=5", 5.0, &[2u64, 3][..], CrossingFamily::SubSum),
    ] {
        let q_star = solve_crossing_q(target, terms, family, &window).map_or(f64::NAN, |q| q);
        lines.push(format!("{name},{}", float(q_star)));
    }
    match &cli.out_dir {
        Some(dir) => {
            let mut f = BufWriter::new(create(dir, "crossings.csv")?);
            for l in &lines {
                writeln!(f, "{l}")?;
            }
            f.flush()?;
        }
        None => {
            for l in &lines {
                eprintln!("# {l}");
            }
        }
    }
    Ok(())
}

fn run_acceptance(cli: &Cli, only: &[u8]) -> anyhow::Result<()> {
    if let Some(bad) = only.iter().find(|&&id| !(1..=10).contains(&id)) {
        return Err(flag_error(format!("--criterion {bad} outside 1..=10")));
    }
    let ctx = AcceptanceContext::new(cli.seed)?;
    let ids: Vec<u8> = if only.is_empty() {
        acceptance::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        only.to_vec()
    };
    let mut out = output(cli, "acceptance.csv")?;
    writeln!(out, "{REPORT_HEADER}")?;
    let mut failed = 0;
    for id in ids {
        let c = acceptance::run_criterion(&ctx, id).expect("validated id");
        for line in &c.lines {
            writeln!(out, "{line}")?;
            if let Some(note) = &line.note {
                eprintln!("# {}: {note}", line.name);
            }
        }
        out.flush()?;
        if !c.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(AcceptanceFailed(failed).into());
    }
    Ok(())
}
