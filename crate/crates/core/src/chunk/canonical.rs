//! Canonical JSON profile: sorted object keys, no insignificant whitespace,
//! MISSING as `null`, integral floats as integers and everything else in
//! shortest round-trip form.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::model::PeriodAxis;

/// Integral values up to this magnitude are written without a fraction.
const INTEGRAL_LIMIT: f64 = 1e15;

/// SHA-256 of canonical payload bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContentHash([u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> ContentHash {
        ContentHash(Sha256::digest(bytes).into())
    }

    pub fn from_hex(text: &str) -> Option<ContentHash> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(text, &mut out).ok()?;
        Some(ContentHash(out))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Quoted strong entity tag.
    pub fn etag(&self) -> String {
        format!("\"{}\"", self.to_hex())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", self.to_hex())
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ContentHash::from_hex(&text).ok_or_else(|| serde::de::Error::custom("invalid content hash"))
    }
}

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub(crate) fn with_capacity(n: usize) -> Writer {
        Writer {
            buf: Vec::with_capacity(n),
        }
    }

    pub(crate) fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub(crate) fn raw(&mut self, s: &str) -> &mut Self {
        self.buf.extend_from_slice(s.as_bytes());
        self
    }

    pub(crate) fn string(&mut self, s: &str) -> &mut Self {
        serde_json::to_writer(&mut self.buf, s).expect("writing to a Vec cannot fail");
        self
    }

    /// `"key":`
    pub(crate) fn key(&mut self, key: &str) -> &mut Self {
        self.string(key).raw(":")
    }

    pub(crate) fn number(&mut self, v: f64) -> &mut Self {
        if !v.is_finite() {
            return self.raw("null");
        }
        if v.fract() == 0.0 && v.abs() < INTEGRAL_LIMIT {
            // Also folds -0.0 into 0.
            let i = v as i64;
            self.raw(&i.to_string())
        } else {
            serde_json::to_writer(&mut self.buf, &v).expect("writing to a Vec cannot fail");
            self
        }
    }

    pub(crate) fn cell(&mut self, v: Option<f64>) -> &mut Self {
        match v {
            Some(x) => self.number(x),
            None => self.raw("null"),
        }
    }

    pub(crate) fn series(&mut self, values: &[Option<f64>]) -> &mut Self {
        self.raw("[");
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.raw(",");
            }
            self.cell(*v);
        }
        self.raw("]")
    }

    /// `{"count":..,"first":..,"granularity":..,"last":..}`
    pub(crate) fn periods(&mut self, axis: &PeriodAxis) -> &mut Self {
        self.raw("{")
            .key("count")
            .raw(&axis.len().to_string())
            .raw(",")
            .key("first")
            .string(&axis.first().to_string())
            .raw(",")
            .key("granularity")
            .string(axis.granularity().as_str())
            .raw(",")
            .key("last")
            .string(&axis.last().to_string())
            .raw("}")
    }

    /// Any JSON value, with object keys sorted.
    pub(crate) fn value(&mut self, v: &Value) -> &mut Self {
        match v {
            Value::Null => self.raw("null"),
            Value::Bool(b) => self.raw(if *b { "true" } else { "false" }),
            Value::Number(n) => {
                if n.is_f64() {
                    self.number(n.as_f64().unwrap_or(f64::NAN))
                } else {
                    self.raw(&n.to_string())
                }
            }
            Value::String(s) => self.string(s),
            Value::Array(items) => {
                self.raw("[");
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.raw(",");
                    }
                    self.value(item);
                }
                self.raw("]")
            }
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                self.raw("{");
                for (i, k) in keys.into_iter().enumerate() {
                    if i > 0 {
                        self.raw(",");
                    }
                    self.key(k).value(&map[k]);
                }
                self.raw("}")
            }
        }
    }
}

/// Wire form of a period axis.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PeriodsWire {
    pub count: usize,
    pub first: String,
    pub granularity: crate::model::Granularity,
    pub last: String,
}

impl PeriodsWire {
    pub(crate) fn to_axis(&self) -> Result<PeriodAxis, String> {
        let axis = PeriodAxis::parse(&self.first, &self.last, self.granularity).map_err(|e| e.to_string())?;
        if axis.len() != self.count {
            return Err(format!(
                "period count {} does not match range {}..{}",
                self.count, self.first, self.last
            ));
        }
        Ok(axis)
    }
}
