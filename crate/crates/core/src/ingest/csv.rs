use super::{Assembler, IngestError, IngestSpec, RawValue};

/// Comma separated, double-quote escaped, header row required; LF or CRLF.
pub(super) fn read(text: &str, spec: &IngestSpec, asm: &mut Assembler<'_>) -> Result<(), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| IngestError::Syntax(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::Schema(format!("missing column {name:?}")))
    };
    let c = &spec.columns;
    let (ri, pi, ii, vi) = (col(&c.region)?, col(&c.period)?, col(&c.indicator)?, col(&c.value)?);

    let mut record = csv::StringRecord::new();
    let mut row = 1;
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(IngestError::Syntax(format!("row {}: {e}", row + 1))),
        }
        row += 1;
        asm.push(row, &record[ri], &record[pi], &record[ii], RawValue::Text(&record[vi]))?;
    }
    Ok(())
}
