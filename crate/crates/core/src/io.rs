//! Text formats for step functions and atomic file output.
//!
//! CSV has the header `cell_index,value` and one cell per line in model cell
//! order. JSON holds the model descriptor and the value array; float values
//! are JSON numbers and rational values are strings such as `"3/4"` or
//! `"1/2+1/4*sqrt2"`.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dyadic::{DyadicModel, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};

pub const STEP_CSV_HEADER: &str = "cell_index,value";

pub fn step_to_csv<S: Scalar>(f: &StepFunction<S>) -> String {
    let mut out = String::with_capacity(16 * f.values().len());
    out.push_str(STEP_CSV_HEADER);
    out.push('\n');
    for (i, v) in f.values().iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn step_from_csv<S>(model: DyadicModel, text: &str) -> Result<StepFunction<S>>
where
    S: Scalar + FromStr,
    S::Err: Display,
{
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(STEP_CSV_HEADER) {
        return Err(Error::Parse(format!("expected header `{STEP_CSV_HEADER}`")));
    }
    let mut values: Vec<Option<S>> = vec![None; model.cell_count()];
    for (n, line) in lines.enumerate() {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected two fields", n + 2)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        let slot = values
            .get_mut(idx)
            .ok_or_else(|| Error::Parse(format!("line {}: cell {idx} outside the model", n + 2)))?;
        *slot = Some(
            val.trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?,
        );
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Parse(format!("cell {i} missing"))))
        .collect::<Result<Vec<S>>>()?;
    StepFunction::new(model, values)
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    model: DyadicModel,
    mode: ScalarMode,
    values: Vec<Value>,
}

pub fn step_to_json<S: Scalar>(f: &StepFunction<S>) -> Value {
    let values = f
        .values()
        .iter()
        .map(|v| match S::MODE {
            ScalarMode::Float => serde_json::Number::from_f64(v.to_f64())
                .map(Value::Number)
                .unwrap_or(Value::Null),
            ScalarMode::Rational => Value::String(v.to_string()),
        })
        .collect();
    serde_json::to_value(StepRecord {
        model: *f.model(),
        mode: S::MODE,
        values,
    })
    .expect("plain data")
}

/// Reads either JSON numbers or strings, whatever the stored mode.
pub fn step_from_json<S>(value: &Value) -> Result<StepFunction<S>>
where
    S: Scalar + FromStr,
    S::Err: Display,
{
    let rec: StepRecord = serde_json::from_value(value.clone())?;
    let model = DyadicModel::new(rec.model.dim(), rec.model.depth())?;
    let values = rec
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Number(n) => n
                .as_f64()
                .map(S::from_f64)
                .ok_or_else(|| Error::Parse(format!("value {i} is not finite"))),
            Value::String(s) => s
                .parse()
                .map_err(|e| Error::Parse(format!("value {i}: {e}"))),
            _ => Err(Error::Parse(format!(
                "value {i} must be a number or a string"
            ))),
        })
        .collect::<Result<Vec<S>>>()?;
    StepFunction::new(model, values)
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parse(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn csv_round_trip_exact() {
        let m = DyadicModel::new(1, 2).unwrap();
        let f = StepFunction::new(
            m,
            vec![
                Exact::from_ratio(3, 4),
                Exact::from_ratio(-1, 3),
                Exact::pow2_half(1),
                Exact::from_ratio(0, 1),
            ],
        )
        .unwrap();
        let text = step_to_csv(&f);
        assert!(text.starts_with("cell_index,value\n0,3/4\n"));
        assert_eq!(step_from_csv::<Exact>(m, &text).unwrap(), f);
    }

    #[test]
    fn csv_errors() {
        let m = DyadicModel::new(1, 1).unwrap();
        assert!(step_from_csv::<f64>(m, "a,b\n0,1\n1,2\n").is_err());
        assert!(step_from_csv::<f64>(m, "cell_index,value\n0,1\n").is_err());
        assert!(step_from_csv::<f64>(m, "cell_index,value\n0,1\n5,2\n").is_err());
        assert!(step_from_csv::<f64>(m, "cell_index,value\n0,1\n1,x\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = DyadicModel::new(2, 2).unwrap();
        let f = StepFunction::from_fn(m, |c| c as f64 * 0.1 - 0.7);
        let j = step_to_json(&f);
        assert_eq!(j["model"]["dim"], 2);
        assert_eq!(step_from_json::<f64>(&j).unwrap(), f);
        let e = StepFunction::from_fn(m, |c| Exact::from_ratio(c as i64, 7));
        let je = step_to_json(&e);
        assert_eq!(je["values"][1], "1/7");
        assert_eq!(step_from_json::<Exact>(&je).unwrap(), e);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("dyadic-io-{}", std::process::id()));
        let p = dir.join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
