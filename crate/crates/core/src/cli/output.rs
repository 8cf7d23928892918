use super::input::{usage, CliError, CliResult};
use super::{Common, Format};
use serde_json::Value;
use std::io::Write;

/// A command's result; `pass` is set by verification commands.
pub struct Outcome {
    pub value: Value,
    pub pass: Option<bool>,
}

impl Outcome {
    pub fn data(value: Value) -> Self {
        Outcome { value, pass: None }
    }

    pub fn check(value: Value, pass: bool) -> Self {
        Outcome { value, pass: Some(pass) }
    }
}

pub fn emit(value: &Value, common: &Common) -> CliResult<()> {
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(value).expect("serializable") + "\n",
        Format::Csv => to_csv(value)?,
    };
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

/// Flattens one row: `[re, im]` pairs become `key_re`, `key_im`; other
/// lists are joined with spaces.
fn flatten(row: &serde_json::Map<String, Value>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in row {
        match v {
            Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number) && !k.starts_with("class") => {
                out.push((format!("{k}_re"), a[0].to_string()));
                out.push((format!("{k}_im"), a[1].to_string()));
            }
            Value::Array(a) => out.push((k.clone(), a.iter().map(scalar).collect::<Vec<_>>().join(" "))),
            other => out.push((k.clone(), scalar(other))),
        }
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// CSV of the `rows` array (or a top-level array) of flat objects.
fn to_csv(value: &Value) -> CliResult<String> {
    let rows = match value {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("rows") {
            Some(Value::Array(a)) => a,
            _ => return usage("this command has no tabular output; use --format json"),
        },
        _ => return usage("this command has no tabular output; use --format json"),
    };
    if rows.is_empty() {
        return usage("empty selection: nothing to write");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Option<Vec<String>> = None;
    for r in rows {
        let Value::Object(obj) = r else { return usage("rows must be objects") };
        let cells = flatten(obj);
        let keys: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
        match &header {
            None => {
                w.write_record(&keys).map_err(csv_err)?;
                header = Some(keys);
            }
            Some(h) if *h != keys => return usage("rows have differing columns"),
            _ => {}
        }
        w.write_record(cells.iter().map(|(_, v)| v)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Usage(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn complex_columns_split() {
        let v = json!({"rows": [{"hbar": [0.5, 1.0], "class": [1, 0], "ok": true}]});
        let s = to_csv(&v).unwrap();
        assert_eq!(s, "class,hbar_re,hbar_im,ok\n1 0,0.5,1.0,true\n");
    }

    #[test]
    fn non_tabular_rejected() {
        assert!(to_csv(&json!({"value": 1})).is_err());
        assert!(to_csv(&json!({"rows": []})).is_err());
    }
}
