//! Polynomial and number parsing for command-line input.

use cremer_core::{Complex64, Polynomial};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("PARSE_ERROR at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error(
        "NOT_MONIC: leading coefficient is {lead}. Conjugating by z = s·w with s^(d-1) = 1/{lead} turns a·z^d + … into a monic polynomial with the same dynamics; pass those coefficients instead"
    )]
    NotMonic { lead: String },
    #[error("{0}")]
    Invalid(String),
}

fn syntax(position: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { position, message: message.into() }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`. The unicode minus sign is
/// accepted. `offset` is added to reported positions.
pub fn parse_complex_at(text: &str, offset: usize) -> Result<Complex64, ParseError> {
    let chars: Vec<char> = text.chars().map(|c| if c == '\u{2212}' { '-' } else { c }).collect();
    let lead = chars.iter().take_while(|c| c.is_whitespace()).count();
    let trail = chars.iter().rev().take_while(|c| c.is_whitespace()).count();
    if lead == chars.len() {
        return Err(syntax(offset, "empty number"));
    }
    let body: Vec<char> = chars[lead..chars.len() - trail].to_vec();
    let base = offset + lead;
    if let Some(p) = body.iter().position(|c| c.is_whitespace()) {
        return Err(syntax(base + p, "unexpected whitespace inside a number"));
    }
    let real_part = |s: &[char], at: usize| -> Result<f64, ParseError> {
        let txt: String = s.iter().collect();
        txt.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| syntax(at, format!("invalid number '{txt}'")))
    };
    let imag_part = |s: &[char], at: usize| -> Result<f64, ParseError> {
        let txt: String = s.iter().collect();
        match txt.as_str() {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => real_part(s, at),
        }
    };
    if body.last() == Some(&'i') {
        let without = &body[..body.len() - 1];
        // Split at the last sign that is not the first character and not an exponent sign.
        let split = (1..without.len())
            .rev()
            .find(|&k| (without[k] == '+' || without[k] == '-') && !matches!(without[k - 1], 'e' | 'E'));
        match split {
            Some(k) => Ok(Complex64::new(real_part(&without[..k], base)?, imag_part(&without[k..], base + k)?)),
            None => Ok(Complex64::new(0.0, imag_part(without, base)?)),
        }
    } else {
        if let Some(p) = body.iter().position(|c| c.is_alphabetic() && !matches!(c, 'e' | 'E')) {
            return Err(syntax(base + p, format!("unexpected character '{}'", body[p])));
        }
        Ok(Complex64::new(real_part(&body, base)?, 0.0))
    }
}

pub fn parse_complex(text: &str) -> Result<Complex64, ParseError> {
    parse_complex_at(text, 0)
}

/// Comma-separated coefficients, constant term first, or `q:c` for `z^2 + c`.
pub fn parse_polynomial(text: &str) -> Result<Polynomial, ParseError> {
    let trimmed = text.trim_start();
    let skipped = text.chars().count() - trimmed.chars().count();
    let coeffs = if let Some(rest) = trimmed.strip_prefix("q:") {
        let c = parse_complex_at(rest, skipped + 2)?;
        vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    } else {
        let mut out = Vec::new();
        let mut position = 0;
        for piece in text.split(',') {
            out.push(parse_complex_at(piece, position)?);
            position += piece.chars().count() + 1;
        }
        out
    };
    if coeffs.len() < 3 {
        return Err(ParseError::Invalid(format!("degree must be at least 2, got {}", coeffs.len().saturating_sub(1))));
    }
    let lead = *coeffs.last().unwrap();
    if lead != Complex64::new(1.0, 0.0) {
        return Err(ParseError::NotMonic { lead: format_complex(lead) });
    }
    Polynomial::new(coeffs).map_err(|e| ParseError::Invalid(e.to_string()))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Comma-separated list of reals.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, ParseError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut position = 0;
    for piece in text.split(',') {
        let z = parse_complex_at(piece, position)?;
        if z.im != 0.0 {
            return Err(syntax(position, "expected a real number"));
        }
        out.push(z.re);
        position += piece.chars().count() + 1;
    }
    Ok(out)
}

/// Semicolon-separated list of complex numbers.
pub fn parse_points(text: &str) -> Result<Vec<Complex64>, ParseError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut position = 0;
    for piece in text.split(';') {
        out.push(parse_complex_at(piece, position)?);
        position += piece.chars().count() + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("0.5-2i").unwrap(), c(0.5, -2.0));
        assert_eq!(parse_complex("1e-3+1e-3i").unwrap(), c(1e-3, 1e-3));
        assert_eq!(parse_complex("−3").unwrap(), c(-3.0, 0.0));
        assert_eq!(parse_complex(" 2.5i ").unwrap(), c(0.0, 2.5));
    }

    #[test]
    fn polynomial_examples() {
        let p = parse_polynomial("q:-1").unwrap();
        assert_eq!(p.coefficients(), &[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let p = parse_polynomial("-2,0,1").unwrap();
        assert_eq!(p.eval(c(2.0, 0.0)), c(2.0, 0.0));
        let p = parse_polynomial("0,−3,0,1").unwrap();
        assert_eq!(p.degree(), 3);
        assert_eq!(p.eval(c(2.0, 0.0)), c(2.0, 0.0));
        assert_eq!(parse_polynomial("q:i").unwrap().coefficients()[0], c(0.0, 1.0));
    }

    #[test]
    fn errors_report_position() {
        match parse_polynomial("1,2x,1") {
            Err(ParseError::Syntax { position, .. }) => assert_eq!(position, 3),
            other => panic!("{other:?}"),
        }
        match parse_polynomial("1,,1") {
            Err(ParseError::Syntax { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
        let e = parse_polynomial("0,0,2").unwrap_err();
        assert!(matches!(e, ParseError::NotMonic { .. }));
        assert!(e.to_string().starts_with("NOT_MONIC"));
        assert!(matches!(parse_polynomial("1,1"), Err(ParseError::Invalid(_))));
    }
}
