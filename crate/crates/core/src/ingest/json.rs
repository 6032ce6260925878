use serde_json::{Map, Value};

use super::{Assembler, IngestError, IngestSpec, RawValue};

/// An array of objects keyed by column name.
pub(super) fn read_rows(text: &str, spec: &IngestSpec, asm: &mut Assembler<'_>) -> Result<(), IngestError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IngestError::Syntax(e.to_string()))?;
    let rows = doc
        .as_array()
        .ok_or_else(|| IngestError::Schema("row JSON must be an array of objects".into()))?;
    let c = &spec.columns;
    for (i, item) in rows.iter().enumerate() {
        let row = i + 2;
        let obj = item
            .as_object()
            .ok_or_else(|| IngestError::Schema(format!("row {row}: expected an object")))?;
        let get = |name: &str| {
            obj.get(name)
                .ok_or_else(|| IngestError::Schema(format!("row {row}: missing column {name:?}")))
        };
        push(
            asm,
            row,
            get(&c.region)?,
            get(&c.period)?,
            get(&c.indicator)?,
            get(&c.value)?,
        )?;
    }
    Ok(())
}

/// An object of equal-length arrays, as emitted by a dataframe's
/// `to_json(orient="list")`.
pub(super) fn read_columnar(text: &str, spec: &IngestSpec, asm: &mut Assembler<'_>) -> Result<(), IngestError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IngestError::Syntax(e.to_string()))?;
    let obj: &Map<String, Value> = doc
        .as_object()
        .ok_or_else(|| IngestError::Schema("columnar JSON must be an object of arrays".into()))?;
    let column = |name: &str| -> Result<&Vec<Value>, IngestError> {
        obj.get(name)
            .ok_or_else(|| IngestError::Schema(format!("missing column {name:?}")))?
            .as_array()
            .ok_or_else(|| IngestError::Schema(format!("column {name:?} is not an array")))
    };
    let c = &spec.columns;
    let cols = [
        column(&c.region)?,
        column(&c.period)?,
        column(&c.indicator)?,
        column(&c.value)?,
    ];
    let len = cols[0].len();
    if let Some(bad) = cols.iter().position(|col| col.len() != len) {
        return Err(IngestError::Schema(format!(
            "column {:?} has {} entries, expected {len}",
            c.names()[bad],
            cols[bad].len()
        )));
    }
    #[allow(clippy::needless_range_loop)] // four parallel columns
    for i in 0..len {
        push(asm, i + 2, &cols[0][i], &cols[1][i], &cols[2][i], &cols[3][i])?;
    }
    Ok(())
}

fn push(
    asm: &mut Assembler<'_>,
    row: usize,
    region: &Value,
    period: &Value,
    indicator: &Value,
    value: &Value,
) -> Result<(), IngestError> {
    let text = |v: &Value, what: &str| -> Result<String, IngestError> {
        match v {
            Value::String(s) => Ok(s.clone()),
            other => Err(IngestError::Schema(format!(
                "row {row}: {what} must be a string, found {other}"
            ))),
        }
    };
    let raw = match value {
        Value::Null => RawValue::Null,
        Value::Number(n) => RawValue::Number(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => RawValue::Text(s),
        other => {
            return Err(IngestError::Value {
                row,
                text: other.to_string(),
            })
        }
    };
    asm.push(
        row,
        &text(region, "region")?,
        &text(period, "period")?,
        &text(indicator, "indicator")?,
        raw,
    )
}
