//! `start:stop:step` ranges and comma-separated lists.

use fcf_core::bloch::Axis;

use crate::error::CliError;

fn number(token: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: `{token}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{what}: `{token}` is not finite")))
    }
}

/// Parses `start:stop:step` (stop included when reached within 1e-9 of a
/// step) or a single number.
pub fn parse_range(text: &str, what: &str) -> Result<Axis, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let axis = match parts.as_slice() {
        [single] => Axis { values: vec![number(single, what)?] },
        [start, stop, step] => {
            let (start, stop, step) = (number(start, what)?, number(stop, what)?, number(step, what)?);
            if !(step > 0.0) {
                return Err(CliError::Config(format!("{what}: step must be positive, got {step}")));
            }
            if stop < start {
                return Err(CliError::Config(format!("{what}: empty range {text}")));
            }
            Axis::stepped(start, stop, step).map_err(|e| CliError::Config(format!("{what}: {e}")))?
        }
        _ => return Err(CliError::Config(format!("{what}: expected start:stop:step, got `{text}`"))),
    };
    Ok(axis)
}

/// Parses `a,b,c`; a single `start:stop:step` is expanded as a range.
pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if text.contains(':') {
        return Ok(parse_range(text, what)?.values);
    }
    let values = text
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| number(t, what))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config(format!("{what}: empty list")));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:0.25", "x").unwrap().values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_range("0:3.5:0.05", "x").unwrap().len(), 71);
        assert_eq!(parse_range("2", "x").unwrap().values, vec![2.0]);
        assert!(parse_range("0:1:0", "x").is_err());
        assert!(parse_range("1:0:0.1", "x").is_err());
        assert!(parse_range("0:1", "x").is_err());
        assert!(parse_range("a:1:0.1", "x").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("0.25, 0.5", "r").unwrap(), vec![0.25, 0.5]);
        assert_eq!(parse_list("0:1:0.5", "r").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_list("", "r").is_err());
        assert!(parse_list("nan", "r").is_err());
    }
}
