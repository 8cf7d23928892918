use joyce::io::complex_from_value;
use joyce::{Error, C64};
use serde_json::Value;
use std::path::Path;

/// Failures that end the run with exit code 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl CliError {
    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("error: {m}"),
            CliError::Lib(e) => serde_json::json!({"error": {"code": e.code(), "message": e.to_string()}}).to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// `"re,im"`, `"re"`, or JSON `[re, im]`.
pub fn complex(s: &str) -> CliResult<C64> {
    let t = s.trim();
    if t.starts_with('[') {
        let v: Value = serde_json::from_str(t).map_err(|e| CliError::Usage(format!("bad complex {t:?}: {e}")))?;
        return Ok(complex_from_value(&v)?);
    }
    let parts: Vec<&str> = t.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| CliError::Usage(format!("bad complex {t:?}; expected re,im")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => usage(format!("bad complex {t:?}; expected re,im")),
    }
}

/// A `;`-separated list of complex numbers, or a JSON list of `[re, im]`.
pub fn complex_list(s: &str) -> CliResult<Vec<C64>> {
    let t = s.trim();
    if t.starts_with("[[") || t == "[]" {
        let v: Vec<Value> = serde_json::from_str(t).map_err(|e| CliError::Usage(format!("bad list {t:?}: {e}")))?;
        return v.iter().map(|x| Ok(complex_from_value(x)?)).collect();
    }
    t.split(';').filter(|p| !p.trim().is_empty()).map(complex).collect()
}

pub fn required(name: &str, v: &Option<String>) -> CliResult<C64> {
    match v {
        Some(s) => complex(s),
        None => usage(format!("--{name} is required")),
    }
}

pub fn optional(v: &Option<String>, default: C64) -> CliResult<C64> {
    v.as_deref().map(complex).unwrap_or(Ok(default))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// `--params` as inline JSON or a file path.
pub fn params(p: &Option<String>) -> CliResult<Option<Value>> {
    let Some(p) = p else { return Ok(None) };
    let text = if p.trim_start().starts_with('{') || p.trim_start().starts_with('[') {
        p.clone()
    } else {
        read_file(Path::new(p))?
    };
    serde_json::from_str(&text).map(Some).map_err(|e| CliError::Usage(format!("--params: {e}")))
}

pub fn field(v: &Value, key: &str, default: C64) -> CliResult<C64> {
    match v.get(key) {
        Some(x) => Ok(complex_from_value(x)?),
        None => Ok(default),
    }
}

pub fn field_list(v: &Value, key: &str) -> CliResult<Option<Vec<C64>>> {
    match v.get(key) {
        Some(Value::Array(a)) => Ok(Some(a.iter().map(|x| Ok(complex_from_value(x)?)).collect::<CliResult<_>>()?)),
        Some(other) => usage(format!("{key:?} must be a list of [re, im], got {other}")),
        None => Ok(None),
    }
}

/// A ray from `"re,im"` or an angle in radians.
pub fn ray(s: &str) -> CliResult<joyce::bps::Ray> {
    if s.contains(',') || s.trim().starts_with('[') {
        Ok(joyce::bps::Ray::new(complex(s)?)?)
    } else {
        let a: f64 = s.trim().parse().map_err(|_| CliError::Usage(format!("bad ray {s:?}")))?;
        Ok(joyce::bps::Ray::from_angle(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("1.5,-2").unwrap(), C64::new(1.5, -2.0));
        assert_eq!(complex("[0, 1]").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(complex(" 3 ").unwrap(), C64::new(3.0, 0.0));
        assert!(complex("1,2,3").is_err());
        assert_eq!(complex_list("1,0;0,1").unwrap().len(), 2);
        assert_eq!(complex_list("[[1,0],[0,1]]").unwrap()[1], C64::new(0.0, 1.0));
    }
}
