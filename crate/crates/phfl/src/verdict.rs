//! Command results: a stable key/value record printed as text or JSON.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// A verdict was computed.
    Ok,
    /// Typing or semantic failure.
    Failure,
    /// IO or format error.
    Error,
    /// Iteration cap, size cap or timeout.
    Resource,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failure => 1,
            Status::Error => 2,
            Status::Resource => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub command: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub result: Map<String, Value>,
    pub diagnostics: Vec<String>,
    /// Text output shows only the summary.
    #[serde(skip)]
    pub brief: bool,
}

impl Verdict {
    pub fn new(command: impl Into<String>) -> Self {
        Verdict { command: command.into(), status: Status::Ok, summary: None, mode: None, result: Map::new(), diagnostics: Vec::new(), brief: false }
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.result.insert(key.to_string(), v.into());
        self
    }

    pub fn fail(mut self, status: Status, msg: impl Into<String>) -> Self {
        self.status = status;
        self.diagnostics.push(msg.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.summary {
            out.push_str(s);
            out.push('\n');
            if self.brief {
                return out;
            }
        }
        for (k, v) in &self.result {
            render(&mut out, k, v, 0);
        }
        if let Some(m) = &self.mode {
            out.push_str(&format!("mode: {m}\n"));
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some(String::from("-")),
        _ => None,
    }
}

fn render(out: &mut String, key: &str, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    if let Some(s) = scalar(v) {
        if s.contains('\n') {
            out.push_str(&format!("{pad}{key}:\n"));
            for line in s.lines() {
                out.push_str(&format!("{pad}  {line}\n"));
            }
        } else {
            out.push_str(&format!("{pad}{key}: {s}\n"));
        }
        return;
    }
    match v {
        Value::Array(items) if items.iter().all(|x| scalar(x).is_some()) => {
            let parts: Vec<String> = items.iter().filter_map(scalar).collect();
            out.push_str(&format!("{pad}{key}: {}\n", parts.join(", ")));
        }
        Value::Array(items) => {
            out.push_str(&format!("{pad}{key}:\n"));
            for (i, x) in items.iter().enumerate() {
                render(out, &i.to_string(), x, indent + 1);
            }
        }
        Value::Object(m) => {
            out.push_str(&format!("{pad}{key}:\n"));
            for (k, x) in m {
                render(out, k, x, indent + 1);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_rendering_keeps_insertion_order() {
        let mut v = Verdict::new("eval a b");
        v.set("values", json!({"s1": "1/2", "s0": "1"})).set("at_init", "1");
        v.mode = Some("exact".into());
        assert_eq!(v.to_text(), "values:\n  s1: 1/2\n  s0: 1\nat_init: 1\nmode: exact\n");
        assert_eq!(v.status.exit_code(), 0);
        let j: Value = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(j["result"]["at_init"], "1");
        assert_eq!(j["status"], "ok");
    }
}
