//! Declarative configuration: a TOML file whose top-level keys apply to
//! every command and whose `[<command>]` table overrides them, with inline
//! flags overriding both.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, DeserializeOwned, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// A list of numbers, written `1,2,3` on the command line or as a TOML
/// array. `a..b` denotes the doubling sequence `a, 2a, …, b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once("..") {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
            if !(a > 0.0 && b >= a) {
                return Err(format!("range `{s}` must satisfy 0 < start ≤ end"));
            }
            let mut v = vec![a];
            while v[v.len() - 1] * 2.0 <= b * (1.0 + 1e-12) {
                let next = v[v.len() - 1] * 2.0;
                v.push(next);
            }
            return Ok(NumList(v));
        }
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(NumList)
    }
}

impl<'de> Deserialize<'de> for NumList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = NumList;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of numbers or a string such as `1,2,3` or `16..1024`")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<NumList, E> {
                s.parse().map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<NumList, E> {
                Ok(NumList(vec![v]))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<NumList, E> {
                Ok(NumList(vec![v as f64]))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<NumList, E> {
                Ok(NumList(vec![v as f64]))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<NumList, A::Error> {
                let mut v = Vec::new();
                while let Some(x) = seq.next_element::<f64>()? {
                    v.push(x);
                }
                Ok(NumList(v))
            }
        }
        d.deserialize_any(V)
    }
}

/// Reads the config file (if any) into a flat key/value map for `command`.
pub fn file_layer(path: Option<&Path>, command: &str) -> Result<Map<String, Value>, CliError> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config `{}`: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::config(format!("config `{}`: {e}", path.display())))?;
    let value = serde_json::to_value(table).map_err(|e| CliError::config(e.to_string()))?;
    let Value::Object(mut top) = value else { unreachable!("a TOML document is a table") };
    let section = match top.remove(command) {
        Some(Value::Object(t)) => t,
        Some(_) => return Err(CliError::config(format!("config key `{command}` must be a table"))),
        None => Map::new(),
    };
    // Drop other commands' tables.
    top.retain(|_, v| !v.is_object());
    top.extend(section);
    Ok(top)
}

/// Overlays the explicitly given flags of `args` on the file layer and
/// deserializes the result, returning it with the normalized echo.
pub fn merge<T: Serialize + DeserializeOwned>(args: &T, mut base: Map<String, Value>) -> Result<(T, Value), CliError> {
    let Value::Object(flags) = serde_json::to_value(args).map_err(|e| CliError::config(e.to_string()))? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in flags {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    base.remove("config");
    let typed: T = serde_json::from_value(Value::Object(base)).map_err(|e| CliError::config(format!("config: {e}")))?;
    // Echo the normalized values that were actually used.
    let Value::Object(mut echo) = serde_json::to_value(&typed).map_err(|e| CliError::config(e.to_string()))? else {
        unreachable!("argument structs serialize to objects")
    };
    echo.retain(|_, v| !v.is_null());
    Ok((typed, Value::Object(echo)))
}
