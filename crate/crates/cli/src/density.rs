//! Parsing of the `--density` selector.

use std::fs;

use qgfisher::{QGaussianParams, RadialDensity};

use crate::args::ParamArgs;
use crate::CliError;

pub fn resolve(selector: &str, p: &ParamArgs) -> Result<RadialDensity, CliError> {
    let (kind, rest) = match selector.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (selector, None),
    };
    match (kind, rest) {
        ("qgaussian", None) => {
            let params = QGaussianParams::new(p.n, p.alpha, p.q, p.gamma)?;
            Ok(RadialDensity::qgaussian_density(&params))
        }
        ("mixture", Some(spec)) => Ok(RadialDensity::gaussian_mixture(p.n, &parse_mixture(spec)?)?),
        ("uniform-ball", r) => {
            let radius = r.map(|s| number(s, "uniform-ball radius")).transpose()?.unwrap_or(1.0);
            Ok(RadialDensity::uniform_ball(p.n, radius)?)
        }
        ("tapered-exp", r) => {
            let (rate, radius) = match r {
                None => (1.0, 4.0),
                Some(s) => {
                    let v = numbers(s, "tapered-exp")?;
                    if v.len() != 2 {
                        return Err(CliError::Input("tapered-exp expects rate,radius".into()));
                    }
                    (v[0], v[1])
                }
            };
            Ok(RadialDensity::tapered_exponential(p.n, rate, radius)?)
        }
        ("profile", Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read profile '{path}': {e}")))?;
            let (r, f) = parse_profile(&text)?;
            Ok(RadialDensity::from_table(p.n, r, f, format!("profile:{path}"))?)
        }
        _ => Err(CliError::Input(format!("unrecognized density selector '{selector}'"))),
    }
}

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{what}: '{s}' is not a number")))
}

fn numbers(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|v| number(v, what)).collect()
}

/// `w,center,scale;...` with scale the standard deviation. Centers must be 0.
pub fn parse_mixture(spec: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut out = Vec::new();
    for comp in spec.split(';').filter(|c| !c.trim().is_empty()) {
        let v = numbers(comp, "mixture component")?;
        if v.len() != 3 {
            return Err(CliError::Input(format!("mixture component '{comp}' must be w,center,scale")));
        }
        if v[1] != 0.0 {
            return Err(CliError::Input(format!(
                "mixture component '{comp}': center must be 0 to keep the density radial"
            )));
        }
        out.push((v[0], v[2]));
    }
    if out.is_empty() {
        return Err(CliError::Input("empty mixture".into()));
    }
    Ok(out)
}

/// Two columns (r, f) separated by whitespace or commas; `#` starts a comment.
pub fn parse_profile(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (mut r, mut f) = (Vec::new(), Vec::new());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if cols.len() != 2 {
            return Err(CliError::Input(format!("profile line {}: expected two columns", lineno + 1)));
        }
        let parse = |s: &str| number(s, &format!("profile line {}", lineno + 1));
        match (parse(cols[0]), parse(cols[1])) {
            (Ok(a), Ok(b)) => {
                r.push(a);
                f.push(b);
            }
            // a header row
            _ if r.is_empty() => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok((r, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_grammar() {
        assert_eq!(parse_mixture("0.5,0,1;0.5,0,4").unwrap(), vec![(0.5, 1.0), (0.5, 4.0)]);
        assert!(parse_mixture("0.5,1,1").is_err());
        assert!(parse_mixture("0.5,0").is_err());
        assert!(parse_mixture("").is_err());
    }

    #[test]
    fn profile_table() {
        let (r, f) = parse_profile("r,f\n# comment\n0 1\n0.5, 0.5\n1 0\n").unwrap();
        assert_eq!(r, vec![0.0, 0.5, 1.0]);
        assert_eq!(f, vec![1.0, 0.5, 0.0]);
        assert!(parse_profile("0 1 2\n").is_err());
    }
}
