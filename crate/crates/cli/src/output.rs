//! Artifacts: CSV with `#` metadata lines, or JSON with a `metadata` key.
//!
//! Floats are written with 17 significant digits.

use std::fmt::Write as _;

use jacobi_weyl::spectra::format_17;

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Self {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn nums(xs: &[f64]) -> Self {
        Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn str(s: impl Into<String>) -> Self {
        Json::Str(s.into())
    }

    pub fn compact(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, None);
        s
    }

    pub fn pretty(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, Some(0));
        s.push('\n');
        s
    }

    fn write(&self, out: &mut String, indent: Option<usize>) {
        let newline = |out: &mut String, level: usize| {
            out.push('\n');
            out.push_str(&"  ".repeat(level));
        };
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => write!(out, "{i}").unwrap(),
            Json::Num(x) if x.is_finite() => out.push_str(&format_17(*x)),
            Json::Num(_) => out.push_str("null"),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            Json::Arr(items) => {
                // short numeric arrays stay on one line
                let flat = indent.is_none() || items.iter().all(|j| matches!(j, Json::Num(_) | Json::Int(_)));
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                        if flat && indent.is_some() {
                            out.push(' ');
                        }
                    }
                    if let (false, Some(l)) = (flat, indent) {
                        newline(out, l + 1);
                    }
                    item.write(out, indent.map(|l| l + 1));
                }
                if let (false, Some(l)) = (flat, indent) {
                    if !items.is_empty() {
                        newline(out, l);
                    }
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    if let Some(l) = indent {
                        newline(out, l + 1);
                    }
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(if indent.is_some() { ": " } else { ":" });
                    v.write(out, indent.map(|l| l + 1));
                }
                if let (Some(l), false) = (indent, fields.is_empty()) {
                    newline(out, l);
                }
                out.push('}');
            }
        }
    }
}

impl From<serde_json::Value> for Json {
    fn from(v: serde_json::Value) -> Self {
        use serde_json::Value as V;
        match v {
            V::Null => Json::Null,
            V::Bool(b) => Json::Bool(b),
            V::Number(n) => match n.as_i64() {
                Some(i) => Json::Int(i),
                None => Json::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
            V::String(s) => Json::Str(s),
            V::Array(a) => Json::Arr(a.into_iter().map(Json::from).collect()),
            V::Object(o) => Json::Obj(o.into_iter().map(|(k, v)| (k, Json::from(v))).collect()),
        }
    }
}

/// Ordered key/value pairs; the timestamp, when present, is always last.
#[derive(Debug, Clone, Default)]
pub struct Metadata(pub Vec<(String, Json)>);

impl Metadata {
    pub fn push(&mut self, key: &str, value: Json) {
        self.0.push((key.to_string(), value));
    }

    pub fn json(&self) -> Json {
        Json::Obj(self.0.clone())
    }
}

pub enum Artifact {
    Csv { header: Vec<String>, rows: Vec<Vec<String>> },
    /// Top-level object; `metadata` is prepended on output.
    Json(Vec<(String, Json)>),
    /// A CSV body produced by a library writer, header line included.
    RawCsv(String),
}

pub fn f(x: f64) -> String {
    format_17(x)
}

impl Artifact {
    pub fn render(&self, meta: &Metadata) -> String {
        match self {
            Artifact::Csv { header, rows } => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header).expect("in-memory write");
                for r in rows {
                    w.write_record(r).expect("in-memory write");
                }
                let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
                csv_comments(meta) + &body
            }
            Artifact::RawCsv(body) => csv_comments(meta) + body,
            Artifact::Json(fields) => {
                let mut all = vec![("metadata".to_string(), meta.json())];
                all.extend(fields.iter().cloned());
                Json::Obj(all).pretty()
            }
        }
    }
}

fn csv_comments(meta: &Metadata) -> String {
    meta.0
        .iter()
        .map(|(k, v)| format!("# {k}: {}\n", v.compact()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        let x = 0.1 + 0.2;
        let s = Json::nums(&[x, -1e-300]).compact();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![x, -1e-300]);
    }

    #[test]
    fn pretty_is_valid_json() {
        let j = Json::obj([
            ("a", Json::Arr(vec![Json::obj([("x", Json::Num(1.5))]), Json::Null])),
            ("b", Json::str("q\"uote")),
            ("c", Json::Arr(vec![])),
            ("d", Json::Num(f64::NAN)),
        ]);
        let v: serde_json::Value = serde_json::from_str(&j.pretty()).unwrap();
        assert_eq!(v["b"], "q\"uote");
        assert!(v["d"].is_null());
    }

    #[test]
    fn csv_header_lines() {
        let mut m = Metadata::default();
        m.push("seed", Json::Int(3));
        let a = Artifact::Csv {
            header: vec!["k".into(), "detail".into()],
            rows: vec![vec!["0".into(), "a, b".into()]],
        };
        assert_eq!(a.render(&m), "# seed: 3\nk,detail\n0,\"a, b\"\n");
    }
}
