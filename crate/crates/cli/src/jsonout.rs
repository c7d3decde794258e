//! Canonical JSON output: keys sorted (BTreeMap), floats printed with 17
//! significant digits, no whitespace variation. Identical reports
//! serialize to identical bytes.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(BTreeMap<String, Json>),
}

impl Json {
    pub fn obj() -> BTreeMap<String, Json> {
        BTreeMap::new()
    }

    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => {
                if x.is_finite() {
                    // 17 significant digits, scientific notation.
                    out.push_str(&format!("{:.16e}", x));
                } else {
                    out.push_str("null");
                }
            }
            Json::Str(s) => write_escaped(s, out),
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Json::Obj(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_escaped(k, out);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_escaped(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn num(x: f64) -> Json {
    Json::Num(x)
}

pub fn vector(v: &nalgebra::DVector<f64>) -> Json {
    Json::Arr((0..v.len()).map(|i| num(v[i])).collect())
}

pub fn tensor3(t: &riemgeo::tensor::Tensor3) -> Json {
    let n = t.dim();
    Json::Arr(
        (0..n)
            .map(|i| {
                Json::Arr(
                    (0..n)
                        .map(|j| Json::Arr((0..n).map(|k| num(t[(i, j, k)])).collect()))
                        .collect(),
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_is_sorted_and_stable() {
        let mut o = Json::obj();
        o.insert("zeta".into(), Json::Int(1));
        o.insert("alpha".into(), num(0.5));
        let j = Json::Obj(o);
        let s = j.to_canonical_string();
        assert_eq!(s, "{\"alpha\":5.0000000000000000e-1,\"zeta\":1}");
        assert_eq!(s, j.to_canonical_string());
    }
}
