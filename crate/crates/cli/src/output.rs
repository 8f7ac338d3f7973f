use std::fs;
use std::path::Path;

use crate::error::CliError;

/// 17 significant digits, enough to round-trip any double. Fixed notation
/// for exponents in `-5..17`, trailing zeros trimmed.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..17).contains(&exp) {
        let m = trim(&format!("{}.{}", &digits[..1], &digits[1..]));
        return format!("{sign}{m}e{exp}");
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let int = (exp + 1) as usize;
        format!("{}.{}", &digits[..int], &digits[int..])
    };
    format!("{sign}{}", trim(&body))
}

fn trim(s: &str) -> String {
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

pub fn cell(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_reads_naturally() {
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(std::f64::consts::E), "2.7182818284590451");
        assert_eq!(num(-0.5), "-0.5");
        assert_eq!(num(1e-7), "9.9999999999999995e-8");
        assert_eq!(num(0.25e20), "2.5e19");
        for x in [0.1, 1.0 / 3.0, -1.8503936706876813, 123456.789, 3.7e-6, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
