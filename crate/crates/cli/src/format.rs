//! Number formatting and flag parsing shared by the subcommands.

/// 17 significant digits, `inf`/`-inf`/`nan` for non-finite values.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// A positive count written as an integer or in float notation such as `1e6`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if !(x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 / 2.0) {
        return Err(format!("{s:?} is not a non-negative integer"));
    }
    Ok(x as usize)
}

/// Finite real.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

/// `start, start + step, ...` up to `stop`, each rounded to 12 decimals.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| ((start + step * k as f64) * 1e12).round() / 1e12)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats() {
        assert_eq!(float(18.0), "1.8000000000000000e1");
        assert_eq!(float(f64::INFINITY), "inf");
        assert_eq!(float(-0.5), "-5.0000000000000000e-1");
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("100"), Ok(100));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn grids() {
        let g = grid(-3.0, 3.0, 0.01);
        assert_eq!(g.len(), 601);
        assert_eq!(g[400], 1.0);
        assert_eq!(*g.last().unwrap(), 3.0);
        assert_eq!(grid(1.1, 6.0, 0.1).len(), 50);
    }
}
