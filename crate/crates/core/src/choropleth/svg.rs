use std::collections::{BTreeMap, BTreeSet};

use quick_xml::escape::{escape, unescape};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::scale::Rgb;
use super::{ChoroplethError, ChoroplethFrame};
use crate::model::RegionCode;

/// A rendered map plus the assigned regions it has no element for.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub svg: Vec<u8>,
    pub unmatched: Vec<RegionCode>,
}

const PREDEFINED_ENTITIES: [&str; 5] = ["amp", "lt", "gt", "quot", "apos"];

/// Sets `fill` (attribute and inline style) on every element whose `id`,
/// or `data-id` when `id` is absent, equals an assigned region code.
/// Bytes of all other markup are copied through unchanged.
pub fn render_svg(frame: &ChoroplethFrame, map: &[u8]) -> Result<Rendered, ChoroplethError> {
    let text = std::str::from_utf8(map).map_err(|e| malformed(format!("not UTF-8: {e}")))?;
    let colors: BTreeMap<String, (&RegionCode, Rgb)> = frame
        .assignment
        .iter()
        .map(|(code, rgb)| (code.to_string(), (code, *rgb)))
        .collect();

    let mut reader = Reader::from_str(text);
    reader.config_mut().check_comments = true;
    let mut out = String::with_capacity(text.len() + colors.len() * 40);
    let mut matched: BTreeSet<&RegionCode> = BTreeSet::new();
    let mut depth = 0usize;
    let mut root_seen = false;
    let mut has_doctype = false;

    loop {
        let start = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| malformed(format!("{e} at byte {}", reader.error_position())))?;
        let end = reader.buffer_position() as usize;
        let raw = &text[start..end];
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_start = matches!(event, Event::Start(_));
                if depth == 0 {
                    if root_seen {
                        return Err(malformed("more than one root element"));
                    }
                    if e.local_name().as_ref() != "svg" {
                        return Err(malformed("root element is not <svg>"));
                    }
                    root_seen = true;
                }
                if is_start {
                    depth += 1;
                }
                let region = region_id(e, has_doctype)?;
                match region.as_deref().and_then(|id| colors.get(id)) {
                    Some((code, rgb)) => {
                        matched.insert(code);
                        write_filled(&mut out, e, *rgb, is_start)?;
                    }
                    None => out.push_str(raw),
                }
            }
            Event::End(_) => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| malformed("unexpected closing tag"))?;
                out.push_str(raw);
            }
            Event::Text(ref t) => {
                if depth == 0 && !t.trim_ascii().is_empty() {
                    return Err(malformed("text outside the root element"));
                }
                out.push_str(raw);
            }
            Event::GeneralRef(ref r) => {
                if depth == 0 {
                    return Err(malformed("entity reference outside the root element"));
                }
                if r.is_char_ref() {
                    match r.resolve_char_ref() {
                        Ok(Some(_)) => {}
                        _ => return Err(malformed(format!("invalid character reference &{};", &**r))),
                    }
                } else if !has_doctype && !PREDEFINED_ENTITIES.contains(&&**r) {
                    return Err(malformed(format!("undefined entity &{};", &**r)));
                }
                out.push_str(raw);
            }
            Event::CData(_) => {
                if depth == 0 {
                    return Err(malformed("CDATA outside the root element"));
                }
                out.push_str(raw);
            }
            Event::DocType(_) => {
                if root_seen {
                    return Err(malformed("DOCTYPE after the root element"));
                }
                has_doctype = true;
                out.push_str(raw);
            }
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) => out.push_str(raw),
            Event::Eof => break,
        }
    }
    if !root_seen {
        return Err(malformed("no root element"));
    }
    if depth != 0 {
        return Err(malformed("unclosed element at end of document"));
    }

    let unmatched = colors
        .values()
        .filter(|(code, _)| !matched.contains(code))
        .map(|(code, _)| (*code).clone())
        .collect();
    Ok(Rendered {
        svg: out.into_bytes(),
        unmatched,
    })
}

fn malformed(reason: impl Into<String>) -> ChoroplethError {
    ChoroplethError::MalformedSvg(reason.into())
}

/// Value of `id`, else `data-id`. Also rejects malformed attributes.
fn region_id(e: &BytesStart<'_>, has_doctype: bool) -> Result<Option<String>, ChoroplethError> {
    let mut id = None;
    let mut data_id = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| malformed(err.to_string()))?;
        let value = match unescape(&attr.value) {
            Ok(v) => v.into_owned(),
            Err(_) if has_doctype => attr.value.clone().into_owned(),
            Err(err) => return Err(malformed(err.to_string())),
        };
        match attr.key.as_ref() {
            "id" => id = Some(value),
            "data-id" => data_id = Some(value),
            _ => {}
        }
    }
    Ok(id.or(data_id))
}

/// Drops any `fill` declaration from a style value and appends the new one.
fn restyle(style: &str, rgb: Rgb) -> String {
    let mut parts: Vec<&str> = style
        .split(';')
        .map(str::trim)
        .filter(|d| !d.is_empty())
        .filter(|d| {
            d.split_once(':')
                .is_none_or(|(prop, _)| !prop.trim().eq_ignore_ascii_case("fill"))
        })
        .collect();
    let fill = format!("fill:{rgb}");
    parts.push(&fill);
    parts.join(";")
}

fn write_filled(out: &mut String, e: &BytesStart<'_>, rgb: Rgb, is_start: bool) -> Result<(), ChoroplethError> {
    let name = e.name().as_ref().to_string();
    let mut attrs: Vec<(String, String)> = Vec::new();
    let mut has_fill = false;
    let mut has_style = false;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| malformed(err.to_string()))?;
        let key = attr.key.as_ref().to_string();
        let value = match key.as_str() {
            "fill" => {
                has_fill = true;
                rgb.to_string()
            }
            "style" => {
                has_style = true;
                match unescape(&attr.value) {
                    Ok(v) => escape(restyle(&v, rgb)).into_owned(),
                    Err(_) => restyle(&attr.value, rgb),
                }
            }
            _ => attr.value.replace('"', "&quot;"),
        };
        attrs.push((key, value));
    }
    if !has_fill {
        attrs.push(("fill".into(), rgb.to_string()));
    }
    if !has_style {
        attrs.push(("style".into(), format!("fill:{rgb}")));
    }

    out.push('<');
    out.push_str(&name);
    for (k, v) in &attrs {
        out.push(' ');
        out.push_str(k);
        out.push_str("=\"");
        out.push_str(v);
        out.push('"');
    }
    out.push_str(if is_start { ">" } else { "/>" });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_region_code, CalendarPeriod, Granularity, Period};

    fn frame(pairs: &[(&str, &str)]) -> ChoroplethFrame {
        ChoroplethFrame {
            period: Period {
                ordinal: 0,
                calendar: CalendarPeriod::parse("2020-01", Granularity::Monthly).unwrap(),
            },
            track: "t".into(),
            assignment: pairs
                .iter()
                .map(|(r, c)| (parse_region_code(r).unwrap(), c.parse().unwrap()))
                .collect(),
            svg: None,
        }
    }

    const MAP: &str = r##"<?xml version="1.0" encoding="UTF-8"?>
<!-- world -->
<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 50">
  <g id="DE" class='land' fill="#eee"><path d="M0 0h10v10z"/></g>
  <path id="FR" d="M20 0h10v10z"   style="stroke: #000; fill: blue"/>
  <path id="DE-BY" d="M40 0h10v10z"/>
  <path data-id="IT" d="M60 0h10v10z"/>
  <text x="1" y="40">Caf&#233; &amp; co</text>
</svg>
"##;

    fn wellformed(bytes: &[u8]) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(std::str::from_utf8(bytes).unwrap()).unwrap()
    }

    fn fill_of(doc: &roxmltree::Document<'_>, id: &str) -> Option<String> {
        doc.descendants()
            .find(|n| n.attribute("id") == Some(id) || n.attribute("data-id") == Some(id))
            .and_then(|n| n.attribute("fill").map(str::to_string))
    }

    #[test]
    fn fills_matched_and_preserves_the_rest() {
        let out = render_svg(&frame(&[("DE", "#ff0000")]), MAP.as_bytes()).unwrap();
        assert!(out.unmatched.is_empty());
        let text = String::from_utf8(out.svg.clone()).unwrap();
        assert!(
            text.contains(r##"<g id="DE" class="land" fill="#ff0000" style="fill:#ff0000">"##),
            "{text}"
        );
        // Everything outside the DE tag is byte-identical.
        let de_in = MAP.find("<g id=\"DE\"").unwrap();
        let de_end = de_in + MAP[de_in..].find('>').unwrap() + 1;
        let de_out_end = text.find("style=\"fill:#ff0000\">").unwrap() + "style=\"fill:#ff0000\">".len();
        assert_eq!(&text[..de_in], &MAP[..de_in]);
        assert_eq!(&text[de_out_end..], &MAP[de_end..]);
        let doc = wellformed(&out.svg);
        assert_eq!(fill_of(&doc, "DE").as_deref(), Some("#ff0000"));
        assert_eq!(fill_of(&doc, "FR"), None);
    }

    #[test]
    fn unmatched_regions_are_reported() {
        let out = render_svg(&frame(&[("DE", "#ff0000"), ("XK", "#00ff00")]), MAP.as_bytes()).unwrap();
        assert_eq!(out.unmatched, [parse_region_code("XK").unwrap()]);
        wellformed(&out.svg);
    }

    #[test]
    fn subdivision_is_independent() {
        let out = render_svg(&frame(&[("DE-BY", "#123456")]), MAP.as_bytes()).unwrap();
        let doc = wellformed(&out.svg);
        assert_eq!(fill_of(&doc, "DE-BY").as_deref(), Some("#123456"));
        assert_eq!(fill_of(&doc, "DE").as_deref(), Some("#eee"));
    }

    #[test]
    fn style_fill_is_replaced_and_data_id_matches() {
        let out = render_svg(&frame(&[("FR", "#00ff00"), ("IT", "#0000ff")]), MAP.as_bytes()).unwrap();
        let doc = wellformed(&out.svg);
        let fr = doc.descendants().find(|n| n.attribute("id") == Some("FR")).unwrap();
        assert_eq!(fr.attribute("style"), Some("stroke: #000;fill:#00ff00"));
        assert_eq!(fr.attribute("fill"), Some("#00ff00"));
        assert_eq!(fill_of(&doc, "IT").as_deref(), Some("#0000ff"));
    }

    #[test]
    fn id_wins_over_data_id() {
        let map = r#"<svg><path id="FR" data-id="DE"/></svg>"#;
        let out = render_svg(&frame(&[("DE", "#ff0000")]), map.as_bytes()).unwrap();
        assert_eq!(out.svg, map.as_bytes());
        assert_eq!(out.unmatched.len(), 1);
    }

    #[test]
    fn rendering_is_idempotent() {
        let f = frame(&[
            ("DE", "#ff0000"),
            ("FR", "#00ff00"),
            ("DE-BY", "#0000ff"),
            ("IT", "#abcdef"),
        ]);
        let once = render_svg(&f, MAP.as_bytes()).unwrap().svg;
        let twice = render_svg(&f, &once).unwrap().svg;
        assert_eq!(once, twice);
    }

    #[test]
    fn malformed_maps_are_rejected() {
        let f = frame(&[("DE", "#ff0000")]);
        for bad in [
            "",
            "<svg>",
            "<svg></g>",
            "<html/>",
            "<svg/><svg/>",
            "<svg/>trailing",
            "<svg>&nbsp;</svg>",
            "<svg><path id=\"DE\" d='x' d='y'/></svg>",
            "<svg><!-- a -- b --></svg>",
        ] {
            assert!(
                matches!(render_svg(&f, bad.as_bytes()), Err(ChoroplethError::MalformedSvg(_))),
                "{bad:?}"
            );
        }
        assert!(render_svg(&f, &[0xff, 0xfe]).is_err());
    }

    #[test]
    fn quotes_in_single_quoted_values_survive() {
        let map = r#"<svg><path id="DE" title='say "hi"' style='font-family:"A"'/></svg>"#;
        let out = render_svg(&frame(&[("DE", "#ff0000")]), map.as_bytes()).unwrap();
        let doc = wellformed(&out.svg);
        let p = doc.descendants().find(|n| n.has_tag_name("path")).unwrap();
        assert_eq!(p.attribute("title"), Some("say \"hi\""));
        assert_eq!(p.attribute("style"), Some("font-family:\"A\";fill:#ff0000"));
    }
}
