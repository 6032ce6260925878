use scraper::{ElementRef, Html, Selector};

use super::{Assembler, IngestError, IngestSpec, RawValue};

/// Reads the first `<table>`; its first row is the header. Cell text is
/// entity-decoded and trimmed. Rows of nested tables are ignored.
pub(super) fn read(text: &str, spec: &IngestSpec, asm: &mut Assembler<'_>) -> Result<(), IngestError> {
    let doc = Html::parse_document(text);
    let table_sel = Selector::parse("table").expect("static selector");
    let tr_sel = Selector::parse("tr").expect("static selector");

    let table = doc.select(&table_sel).next().ok_or(IngestError::NoTableFound)?;
    let rows: Vec<Vec<String>> = table
        .select(&tr_sel)
        .filter(|tr| owned_by(*tr, table))
        .map(|tr| {
            tr.children()
                .filter_map(ElementRef::wrap)
                .filter(|c| matches!(c.value().name(), "td" | "th"))
                .map(|c| {
                    let mut text = String::new();
                    cell_text(c, &mut text);
                    text.trim().to_string()
                })
                .collect()
        })
        .collect();

    let Some((header, body)) = rows.split_first() else {
        return Err(IngestError::Schema("table has no header row".into()));
    };
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::Schema(format!("missing column {name:?}")))
    };
    let c = &spec.columns;
    let (ri, pi, ii, vi) = (col(&c.region)?, col(&c.period)?, col(&c.indicator)?, col(&c.value)?);

    for (n, cells) in body.iter().enumerate() {
        let row = n + 2;
        if cells.len() != header.len() {
            return Err(IngestError::Schema(format!(
                "row {row} has {} cells, header has {}",
                cells.len(),
                header.len()
            )));
        }
        asm.push(row, &cells[ri], &cells[pi], &cells[ii], RawValue::Text(&cells[vi]))?;
    }
    Ok(())
}

fn owned_by(tr: ElementRef<'_>, table: ElementRef<'_>) -> bool {
    tr.ancestors()
        .filter_map(ElementRef::wrap)
        .find(|a| a.value().name() == "table")
        .is_some_and(|a| a.id() == table.id())
}

fn cell_text(el: ElementRef<'_>, out: &mut String) {
    for child in el.children() {
        if let Some(text) = child.value().as_text() {
            out.push_str(text);
        } else if let Some(e) = ElementRef::wrap(child) {
            if e.value().name() != "table" {
                cell_text(e, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::ingest::{ingest, ingest_html_table, Format, IngestError, IngestSpec};
    use crate::model::{Granularity, Track};

    fn spec() -> IngestSpec {
        IngestSpec::new(
            Format::HtmlTable,
            Granularity::Monthly,
            vec![Track {
                name: "cases".into(),
                indicator: "cases".into(),
            }],
        )
    }

    #[test]
    fn mirrors_csv() {
        let html = r#"<html><body><p>intro</p>
            <table>
              <thead><tr><th>region</th><th>period</th><th>indicator</th><th>value</th></tr></thead>
              <tbody>
                <tr><td>DE</td><td>2020-01</td><td>cases</td><td>5</td></tr>
                <tr><td>DE</td><td>2020-02</td><td>cases</td><td>7</td></tr>
              </tbody>
            </table></body></html>"#;
        let a = ingest_html_table(html.as_bytes(), &spec()).unwrap();
        let csv = "region,period,indicator,value\nDE,2020-01,cases,5\nDE,2020-02,cases,7";
        let mut s = spec();
        s.format = Format::Csv;
        let b = ingest(csv.as_bytes(), &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_table() {
        let err = ingest_html_table(b"<html><body><p>nothing</p></body></html>", &spec()).unwrap_err();
        assert!(matches!(err, IngestError::NoTableFound));
    }

    #[test]
    fn entities_decoded_before_resolution() {
        let html = "<table><tr><th>region</th><th>period</th><th>indicator</th><th>value</th></tr>\
                    <tr><td>Bosnia &amp; Herzegovina</td><td>2020-01</td><td>cases</td><td>1</td></tr>\
                    <tr><td>Saint Kitts &#38; Nevis</td><td>2020-01</td><td>cases</td><td>1</td></tr>\
                    <tr><td>C&ocirc;te d&apos;Ivoire</td><td>2020-01</td><td>cases</td><td>2</td></tr></table>";
        let ds = ingest_html_table(html.as_bytes(), &spec()).unwrap();
        let codes: Vec<String> = ds.regions().iter().map(|r| r.to_string()).collect();
        assert_eq!(codes, ["BA", "CI", "KN"]);
    }

    #[test]
    fn decoded_text_is_quoted_in_errors() {
        let html = "<table><tr><th>region</th><th>period</th><th>indicator</th><th>value</th></tr>\
                    <tr><td>Atlantis &amp; Lemuria</td><td>2020-01</td><td>cases</td><td>1</td></tr></table>";
        match ingest_html_table(html.as_bytes(), &spec()) {
            Err(IngestError::Region { text, row, .. }) => {
                assert_eq!(text, "Atlantis & Lemuria");
                assert_eq!(row, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_table_rows_ignored() {
        let html = "<table><tr><th>region</th><th>period</th><th>indicator</th><th>value</th></tr>\
                    <tr><td>DE</td><td>2020-01</td><td>cases</td><td>1<table><tr><td>x</td></tr></table></td></tr></table>";
        let ds = ingest_html_table(html.as_bytes(), &spec()).unwrap();
        assert_eq!(ds.present_count(), 1);
    }
}
