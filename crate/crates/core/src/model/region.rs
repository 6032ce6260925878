//! ISO-3166-1 country codes, ISO-3166-2 subdivision codes and the bundled
//! registry used to validate and resolve them.
//!
//! Region identity is purely symbolic: a region is whatever carries the same
//! canonical text (`DE`, `DE-BY`) as an element id in the SVG map.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

const BUNDLED_REGISTRY: &str = include_str!("../../data/iso3166.tsv");

static BUNDLED: LazyLock<RegionRegistry> =
    LazyLock::new(|| RegionRegistry::from_tsv(BUNDLED_REGISTRY).expect("bundled ISO-3166 registry is well-formed"));

/// A country (`DE`) or a country subdivision (`DE-BY`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionCode {
    country: [u8; 2],
    subdivision: Option<Box<str>>,
}

impl RegionCode {
    /// Two uppercase ASCII letters.
    pub fn country(&self) -> &str {
        // Always ASCII uppercase, checked on construction.
        std::str::from_utf8(&self.country).unwrap_or("??")
    }

    pub fn subdivision(&self) -> Option<&str> {
        self.subdivision.as_deref()
    }

    pub fn is_subdivision(&self) -> bool {
        self.subdivision.is_some()
    }

    /// The country-level code this region belongs to (itself for countries).
    pub fn country_code(&self) -> RegionCode {
        RegionCode {
            country: self.country,
            subdivision: None,
        }
    }

    /// Syntax-only parse of the canonical text form; does not consult a
    /// registry. Input is uppercased first.
    fn parse_syntax(text: &str) -> Result<RegionCode, ModelError> {
        let malformed = || ModelError::MalformedCode(text.to_string());
        let upper = text.to_ascii_uppercase();
        let (country, sub) = match upper.split_once('-') {
            Some((c, s)) => (c, Some(s)),
            None => (upper.as_str(), None),
        };
        let cb = country.as_bytes();
        if cb.len() != 2 || !cb.iter().all(u8::is_ascii_uppercase) {
            return Err(malformed());
        }
        if let Some(s) = sub {
            let ok_len = (1..=3).contains(&s.len());
            let ok_chars = s.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
            if !ok_len || !ok_chars {
                return Err(malformed());
            }
        }
        Ok(RegionCode {
            country: [cb[0], cb[1]],
            subdivision: sub.map(Into::into),
        })
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.country())?;
        if let Some(sub) = &self.subdivision {
            write!(f, "-{sub}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegionCode({self})")
    }
}

/// Parses against the bundled registry.
impl FromStr for RegionCode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_region_code(s)
    }
}

impl Serialize for RegionCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegionCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_region_code(&text).map_err(serde::de::Error::custom)
    }
}

/// One registry record.
#[derive(Debug, Clone)]
pub struct RegionEntry {
    pub code: RegionCode,
    pub name: String,
    pub aliases: Vec<String>,
    /// Aliases the file marks as shared between several codes.
    pub ambiguous_aliases: Vec<String>,
}

/// Errors raised while loading a registry file.
#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("registry line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("registry line {line}: duplicate code {code}")]
    DuplicateCode { line: usize, code: String },
    #[error("alias {alias:?} maps to several codes ({codes}) without an ambiguity marker")]
    ConflictingAlias { alias: String, codes: String },
}

/// Code → name/alias table for ISO-3166-1 and ISO-3166-2.
///
/// File format: one record per line, `CODE<TAB>Official Name<TAB>alias1|alias2`.
/// An alias prefixed with `?` is known to be shared by several codes and
/// always resolves to [`ModelError::AmbiguousName`]. Lines starting with `#`
/// are comments; a `# edition: ...` comment records the source edition.
#[derive(Debug)]
pub struct RegionRegistry {
    edition: Option<String>,
    entries: Vec<RegionEntry>,
    by_code: HashMap<RegionCode, usize>,
    by_name: HashMap<String, Vec<usize>>,
    by_folded: HashMap<String, Vec<usize>>,
}

impl RegionRegistry {
    /// The registry shipped with the crate.
    pub fn bundled() -> &'static RegionRegistry {
        &BUNDLED
    }

    pub fn from_tsv(text: &str) -> Result<RegionRegistry, RegistryError> {
        let mut registry = RegionRegistry {
            edition: None,
            entries: Vec::new(),
            by_code: HashMap::new(),
            by_name: HashMap::new(),
            by_folded: HashMap::new(),
        };
        // folded alias -> (codes via plain aliases, any marked ambiguous)
        let mut plain_aliases: HashMap<String, Vec<usize>> = HashMap::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            if let Some(comment) = raw.strip_prefix('#') {
                if let Some(ed) = comment.trim().strip_prefix("edition:") {
                    registry.edition = Some(ed.trim().to_string());
                }
                continue;
            }
            if raw.trim().is_empty() {
                continue;
            }
            let mut fields = raw.split('\t');
            let code_text = fields.next().unwrap_or_default();
            let name = fields.next().ok_or_else(|| RegistryError::Malformed {
                line,
                reason: "missing name field".into(),
            })?;
            let alias_field = fields.next().unwrap_or_default();
            if fields.next().is_some() {
                return Err(RegistryError::Malformed {
                    line,
                    reason: "too many fields".into(),
                });
            }
            let code = RegionCode::parse_syntax(code_text).map_err(|e| RegistryError::Malformed {
                line,
                reason: e.to_string(),
            })?;
            if code.to_string() != code_text {
                return Err(RegistryError::Malformed {
                    line,
                    reason: format!("code {code_text:?} is not in canonical form"),
                });
            }
            if name.trim().is_empty() {
                return Err(RegistryError::Malformed {
                    line,
                    reason: "empty name".into(),
                });
            }

            let idx = registry.entries.len();
            if registry.by_code.insert(code.clone(), idx).is_some() {
                return Err(RegistryError::DuplicateCode {
                    line,
                    code: code_text.to_string(),
                });
            }

            let mut aliases = Vec::new();
            let mut ambiguous = Vec::new();
            for alias in alias_field.split('|').filter(|a| !a.trim().is_empty()) {
                match alias.strip_prefix('?') {
                    Some(a) => ambiguous.push(a.trim().to_string()),
                    None => aliases.push(alias.trim().to_string()),
                }
            }

            registry.by_name.entry(name.to_string()).or_default().push(idx);
            push_unique(registry.by_folded.entry(fold(name)).or_default(), idx);
            for alias in &aliases {
                push_unique(plain_aliases.entry(fold(alias)).or_default(), idx);
                push_unique(registry.by_folded.entry(fold(alias)).or_default(), idx);
            }
            for alias in &ambiguous {
                push_unique(registry.by_folded.entry(fold(alias)).or_default(), idx);
            }

            registry.entries.push(RegionEntry {
                code,
                name: name.to_string(),
                aliases,
                ambiguous_aliases: ambiguous,
            });
        }

        for (alias, idxs) in &plain_aliases {
            if idxs.len() > 1 {
                let codes: Vec<String> = idxs.iter().map(|&i| registry.entries[i].code.to_string()).collect();
                return Err(RegistryError::ConflictingAlias {
                    alias: alias.clone(),
                    codes: codes.join(", "),
                });
            }
        }
        Ok(registry)
    }

    pub fn edition(&self) -> Option<&str> {
        self.edition.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[RegionEntry] {
        &self.entries
    }

    pub fn get(&self, code: &RegionCode) -> Option<&RegionEntry> {
        self.by_code.get(code).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, code: &RegionCode) -> bool {
        self.by_code.contains_key(code)
    }

    /// Country-level codes in registry (alphabetical) order.
    pub fn countries(&self) -> impl Iterator<Item = &RegionCode> {
        self.entries.iter().map(|e| &e.code).filter(|c| !c.is_subdivision())
    }

    /// Exact canonical code lookup; input is uppercased before matching.
    pub fn parse(&self, text: &str) -> Result<RegionCode, ModelError> {
        let code = RegionCode::parse_syntax(text)?;
        if self.contains(&code) {
            Ok(code)
        } else {
            Err(ModelError::UnknownCode(text.to_string()))
        }
    }

    /// Resolves a code or a name.
    ///
    /// Order: canonical code, exact official name, case-insensitive alias or
    /// name. Within each name tier countries take precedence over
    /// subdivisions; more than one candidate at the deciding level is an
    /// [`ModelError::AmbiguousName`]. There is no fuzzy matching.
    pub fn resolve(&self, text: &str) -> Result<RegionCode, ModelError> {
        let trimmed = text.trim();
        if let Ok(code) = self.parse(trimmed) {
            return Ok(code);
        }
        if let Some(idxs) = self.by_name.get(trimmed) {
            if let Some(code) = self.pick(trimmed, idxs)? {
                return Ok(code);
            }
        }
        if let Some(idxs) = self.by_folded.get(&fold(trimmed)) {
            if let Some(code) = self.pick(trimmed, idxs)? {
                return Ok(code);
            }
        }
        Err(ModelError::Unresolvable(text.to_string()))
    }

    fn pick(&self, text: &str, idxs: &[usize]) -> Result<Option<RegionCode>, ModelError> {
        let folded = fold(text);
        let marked = |i: usize| self.entries[i].ambiguous_aliases.iter().any(|a| fold(a) == folded);
        for want_subdivision in [false, true] {
            let level: Vec<usize> = idxs
                .iter()
                .copied()
                .filter(|&i| self.entries[i].code.is_subdivision() == want_subdivision)
                .collect();
            match level.as_slice() {
                [] => continue,
                [only] if !marked(*only) => return Ok(Some(self.entries[*only].code.clone())),
                _ => {
                    let mut candidates: Vec<String> = level.iter().map(|&i| self.entries[i].code.to_string()).collect();
                    candidates.sort();
                    return Err(ModelError::AmbiguousName {
                        text: text.to_string(),
                        candidates,
                    });
                }
            }
        }
        Ok(None)
    }
}

fn fold(text: &str) -> String {
    text.trim().to_lowercase()
}

fn push_unique(v: &mut Vec<usize>, idx: usize) {
    if !v.contains(&idx) {
        v.push(idx);
    }
}

/// Parses a canonical code (`DE`, `de-by`) against the bundled registry.
pub fn parse_region_code(text: &str) -> Result<RegionCode, ModelError> {
    RegionRegistry::bundled().parse(text)
}

/// Resolves a code or country/subdivision name against the bundled registry.
pub fn resolve_region_name(text: &str) -> Result<RegionCode, ModelError> {
    RegionRegistry::bundled().resolve(text)
}
