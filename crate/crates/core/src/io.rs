//! JSON formats for instances, schedules and traces.
//!
//! Numbers are exact rationals written either as JSON integers or as strings
//! `"p/q"` (decimal strings such as `"0.25"` are accepted on input). Syntax
//! errors report line and column; semantic errors report the field path,
//! e.g. `demands[1][0]`.

use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{Configuration, DemandMatrix, Instance, Matching, Schedule};
use crate::online::Trace;
use crate::rational::{self, Rational};

/// Serializes a rational as a JSON integer when integral, else as `"p/q"`.
pub fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    match rational_value(r) {
        Value::Number(n) => n.serialize(s),
        other => s.serialize_str(other.as_str().unwrap_or_default()),
    }
}

pub fn rational_value(r: &Rational) -> Value {
    if r.is_integer() {
        if let Ok(v) = i64::try_from(*r.numer()) {
            return json!(v);
        }
    }
    Value::String(rational::format_rational(r))
}

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn parse_json(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        parse_error(format!("{origin}:{}:{}", e.line(), e.column()), e.to_string())
    })
}

struct Ctx<'a> {
    origin: &'a str,
}

impl Ctx<'_> {
    fn err(&self, path: &str, message: impl Into<String>) -> Error {
        parse_error(format!("{}: {path}", self.origin), message)
    }

    fn object<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
        v.as_object().ok_or_else(|| self.err(path, "expected an object"))
    }

    fn field<'v>(&self, obj: &'v Map<String, Value>, name: &str, path: &str) -> Result<&'v Value> {
        obj.get(name).ok_or_else(|| self.err(&join(path, name), "missing field"))
    }

    fn array<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
        v.as_array().ok_or_else(|| self.err(path, "expected an array"))
    }

    fn count(&self, v: &Value, path: &str) -> Result<usize> {
        v.as_u64().map(|n| n as usize).ok_or_else(|| self.err(path, "expected a nonnegative integer"))
    }

    fn rational(&self, v: &Value, path: &str) -> Result<Rational> {
        let text = match v {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s.clone(),
            _ => return Err(self.err(path, "expected a number or a \"p/q\" string")),
        };
        rational::parse_rational(&text).map_err(|e| self.err(path, e.to_string()))
    }

    fn nonneg(&self, v: &Value, path: &str) -> Result<Rational> {
        let r = self.rational(v, path)?;
        if r < Rational::from_integer(0) {
            return Err(self.err(path, format!("must be nonnegative, got {}", rational::format_rational(&r))));
        }
        Ok(r)
    }

    fn matrix(&self, v: &Value, path: &str, n: usize, m: usize) -> Result<DemandMatrix> {
        let rows = self.array(v, path)?;
        if rows.len() != n {
            return Err(self.err(path, format!("expected {n} rows, found {}", rows.len())));
        }
        let mut values = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            let rp = format!("{path}[{i}]");
            let cells = self.array(row, &rp)?;
            if cells.len() != m {
                return Err(self.err(&rp, format!("expected {m} columns, found {}", cells.len())));
            }
            for (j, cell) in cells.iter().enumerate() {
                values.push(self.nonneg(cell, &format!("{rp}[{j}]"))?);
            }
        }
        DemandMatrix::new(n, m, values).map_err(|e| self.err(path, e.to_string()))
    }

    fn dims(&self, obj: &Map<String, Value>) -> Result<(usize, usize)> {
        Ok((
            self.count(self.field(obj, "senders", "")?, "senders")?,
            self.count(self.field(obj, "receivers", "")?, "receivers")?,
        ))
    }
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn matrix_value(d: &DemandMatrix) -> Value {
    Value::Array(d.rows().iter().map(|r| Value::Array(r.iter().map(rational_value).collect())).collect())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_instance_str(text: &str, origin: &str) -> Result<Instance> {
    let v = parse_json(text, origin)?;
    let cx = Ctx { origin };
    let obj = cx.object(&v, "<root>")?;
    let (n, m) = cx.dims(obj)?;
    let demand = cx.matrix(cx.field(obj, "demands", "")?, "demands", n, m)?;
    let delta = cx.nonneg(cx.field(obj, "delta", "")?, "delta")?;
    let window = cx.nonneg(cx.field(obj, "window", "")?, "window")?;
    Instance::new(demand, delta, window)
}

pub fn parse_instance(path: &Path) -> Result<Instance> {
    parse_instance_str(&read(path)?, &path.display().to_string())
}

pub fn instance_to_json(inst: &Instance) -> Value {
    json!({
        "senders": inst.demand.senders(),
        "receivers": inst.demand.receivers(),
        "demands": matrix_value(&inst.demand),
        "delta": rational_value(&inst.delta),
        "window": rational_value(&inst.window),
    })
}

pub fn write_instance(inst: &Instance) -> String {
    serde_json::to_string_pretty(&instance_to_json(inst)).expect("json")
}

/// Parses a schedule; `delta` and `window` fall back to `defaults` when absent.
pub fn parse_schedule_str(text: &str, origin: &str, defaults: (Rational, Rational)) -> Result<Schedule> {
    let v = parse_json(text, origin)?;
    let cx = Ctx { origin };
    let obj = cx.object(&v, "<root>")?;
    let configs = cx.array(cx.field(obj, "configs", "")?, "configs")?;
    let mut out = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let path = format!("configs[{i}]");
        let co = cx.object(c, &path)?;
        let edges_path = join(&path, "edges");
        let mut edges = Vec::new();
        for (j, e) in cx.array(cx.field(co, "edges", &path)?, &edges_path)?.iter().enumerate() {
            let ep = format!("{edges_path}[{j}]");
            let pair = cx.array(e, &ep)?;
            if pair.len() != 2 {
                return Err(cx.err(&ep, "expected [sender, receiver]"));
            }
            edges.push((cx.count(&pair[0], &ep)?, cx.count(&pair[1], &ep)?));
        }
        let matching = Matching::new(edges).map_err(|e| cx.err(&edges_path, e.to_string()))?;
        let alpha_path = join(&path, "alpha");
        let alpha = cx.nonneg(cx.field(co, "alpha", &path)?, &alpha_path)?;
        out.push(Configuration::new(matching, alpha)?);
    }
    let delta = match obj.get("delta") {
        Some(v) => cx.nonneg(v, "delta")?,
        None => defaults.0,
    };
    let window = match obj.get("window") {
        Some(v) => cx.nonneg(v, "window")?,
        None => defaults.1,
    };
    Schedule::new(out, delta, window)
}

pub fn parse_schedule(path: &Path, defaults: (Rational, Rational)) -> Result<Schedule> {
    parse_schedule_str(&read(path)?, &path.display().to_string(), defaults)
}

pub fn schedule_to_json(s: &Schedule) -> Value {
    json!({
        "configs": s.configs.iter().map(|c| json!({
            "edges": c.matching.edges().iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
            "alpha": rational_value(&c.duration),
        })).collect::<Vec<_>>(),
        "delta": rational_value(&s.delta),
        "window": rational_value(&s.window),
    })
}

pub fn write_schedule(s: &Schedule) -> String {
    serde_json::to_string_pretty(&schedule_to_json(s)).expect("json")
}

pub fn parse_trace_str(text: &str, origin: &str) -> Result<Trace> {
    let v = parse_json(text, origin)?;
    let cx = Ctx { origin };
    let obj = cx.object(&v, "<root>")?;
    let (n, m) = cx.dims(obj)?;
    let steps = cx.array(cx.field(obj, "steps", "")?, "steps")?;
    let mats = steps
        .iter()
        .enumerate()
        .map(|(t, s)| cx.matrix(s, &format!("steps[{t}]"), n, m))
        .collect::<Result<Vec<_>>>()?;
    Trace::new(n, m, mats)
}

pub fn parse_trace(path: &Path) -> Result<Trace> {
    parse_trace_str(&read(path)?, &path.display().to_string())
}

pub fn trace_to_json(t: &Trace) -> Value {
    let (n, m) = t.dims();
    json!({
        "senders": n,
        "receivers": m,
        "steps": t.steps().iter().map(matrix_value).collect::<Vec<_>>(),
    })
}

pub fn write_trace(t: &Trace) -> String {
    serde_json::to_string_pretty(&trace_to_json(t)).expect("json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn minimal_instance() {
        let i = parse_instance_str(r#"{"senders":1,"receivers":1,"demands":[[2]],"delta":1,"window":3}"#, "x").unwrap();
        assert_eq!(i.demand.dims(), (1, 1));
        assert_eq!(i.demand.get(0, 0), int(2));
        assert_eq!((i.delta, i.window), (int(1), int(3)));
    }

    #[test]
    fn negative_demand_cites_field() {
        let err = parse_instance_str(r#"{"senders":1,"receivers":1,"demands":[[ -1 ]],"delta":1,"window":3}"#, "x")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("demands[0][0]") && msg.contains("nonnegative"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let err = parse_instance_str("{\n \"senders\": 1,\n oops }", "f.json").unwrap_err();
        assert!(err.to_string().contains("f.json:3:"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = parse_instance_str(r#"{"senders":2,"receivers":1,"demands":[[1]],"delta":0,"window":1}"#, "x")
            .unwrap_err();
        assert!(err.to_string().contains("expected 2 rows"), "{err}");
        let err = parse_instance_str(r#"{"senders":1,"receivers":2,"demands":[[1]],"delta":0,"window":1}"#, "x")
            .unwrap_err();
        assert!(err.to_string().contains("demands[0]"), "{err}");
    }

    #[test]
    fn rationals_round_trip() {
        let text = r#"{"senders":1,"receivers":2,"demands":[["2/3", "0.25"]],"delta":"1/2","window":3}"#;
        let i = parse_instance_str(text, "x").unwrap();
        assert_eq!(i.demand.get(0, 0), Rational::new(2, 3));
        assert_eq!(i.demand.get(0, 1), Rational::new(1, 4));
        let again = parse_instance_str(&write_instance(&i), "y").unwrap();
        assert_eq!(again, i);
    }

    #[test]
    fn schedule_round_trip() {
        let s = Schedule::new(
            vec![Configuration::new(Matching::new(vec![(0, 1), (1, 0)]).unwrap(), Rational::new(5, 2)).unwrap()],
            int(1),
            int(4),
        )
        .unwrap();
        assert_eq!(parse_schedule_str(&write_schedule(&s), "x", (int(0), int(0))).unwrap(), s);
        let bare = parse_schedule_str(r#"{"configs":[{"edges":[[0,0]],"alpha":2}]}"#, "x", (int(1), int(3))).unwrap();
        assert_eq!((bare.delta, bare.window), (int(1), int(3)));
        let bad = parse_schedule_str(r#"{"configs":[{"edges":[[0,0],[0,1]],"alpha":2}]}"#, "x", (int(1), int(3)));
        assert!(bad.unwrap_err().to_string().contains("configs[0].edges"));
    }

    #[test]
    fn trace_round_trip() {
        let t = Trace::from_edges(2, 2, &[&[(0, 0)], &[], &[(1, 0), (1, 0)]]).unwrap();
        assert_eq!(parse_trace_str(&write_trace(&t), "x").unwrap(), t);
    }
}
