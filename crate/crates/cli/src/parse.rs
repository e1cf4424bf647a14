//! Parsing of complex numbers and lists from flag values.

use pvi::{Error, Result, C64};

/// Parses `re`, `re+imi`, `re-imi`, `imi`, `i` or `-i`.
pub fn complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Invalid(format!("bad complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not the leading one or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |v: &str| -> Result<f64> {
        match v {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => v.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(C64::new(body[..k].parse::<f64>().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// Comma-separated complex list.
pub fn complex_list(s: &str) -> Result<Vec<C64>> {
    s.split(',').map(complex).collect()
}

/// Comma-separated list of exactly `N` complex numbers.
pub fn complex_array<const N: usize>(s: &str, what: &str) -> Result<[C64; N]> {
    let v = complex_list(s)?;
    v.try_into().map_err(|v: Vec<C64>| Error::Invalid(format!("{what} needs {N} values, got {}", v.len())))
}

/// `name=value` pairs for series constants.
pub fn constant(s: &str) -> Result<(String, C64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Invalid(format!("constant '{s}' is not name=value")))?;
    Ok((k.trim().to_string(), complex(v)?))
}

/// Inclusive integer range `a..b` or a single integer.
pub fn range(s: &str) -> Result<std::ops::RangeInclusive<i32>> {
    let bad = || Error::Invalid(format!("bad range '{s}'"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let k = s.parse().map_err(|_| bad())?;
            Ok(k..=k)
        }
    }
}
