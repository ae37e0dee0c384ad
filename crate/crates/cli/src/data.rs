use std::path::Path;

use anyhow::{bail, Context, Result};
use tlfit::estimators::MIN_FIT_SIZE;
use tlfit::SortedSample;

/// Parses a data file: one nonnegative decimal per line, blank lines and
/// `#` comments ignored.
pub fn parse_observations(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let v: f64 = line
            .parse()
            .map_err(|_| anyhow::anyhow!("line {lineno}: cannot parse '{line}' as a number"))?;
        if !v.is_finite() {
            bail!("line {lineno}: observation '{line}' is not finite");
        }
        if v < 0.0 {
            bail!("line {lineno}: observation {line} is negative");
        }
        values.push(v);
    }
    if values.is_empty() {
        bail!("no observations found");
    }
    Ok(values)
}

pub fn read_sample(path: &Path) -> Result<SortedSample> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read data file {}", path.display()))?;
    let values = parse_observations(&text).with_context(|| format!("{}", path.display()))?;
    if values.len() < MIN_FIT_SIZE {
        bail!(
            "{}: {} observation(s) found, at least {MIN_FIT_SIZE} are required",
            path.display(),
            values.len()
        );
    }
    Ok(SortedSample::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_blanks() {
        let v = parse_observations("# header\n1.5\n\n  2e-1 \n# tail\n3").unwrap();
        assert_eq!(v, vec![1.5, 0.2, 3.0]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_observations("1\n2\nabc\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_observations("1\n-2\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse_observations("1\ninf\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn empty_input() {
        assert!(parse_observations("").is_err());
        assert!(parse_observations("# only a comment\n\n").is_err());
    }
}
