use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub summary: String,
    pub detail: Value,
}

/// Ordered checks plus free-form sections (tables, exports).
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub checks: Vec<Check>,
    pub sections: Vec<(String, Value)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), checks: Vec::new(), sections: Vec::new() }
    }

    pub fn check(&mut self, name: &str, status: Status, summary: impl Into<String>, detail: Value) {
        self.checks.push(Check { name: name.into(), status, summary: summary.into(), detail });
    }

    pub fn section(&mut self, name: &str, v: Value) {
        self.sections.push((name.into(), v));
    }

    /// Fail beats inconclusive beats pass.
    pub fn status(&self) -> Status {
        let s = self.checks.iter().map(|c| c.status);
        if s.clone().any(|x| x == Status::Fail) {
            Status::Fail
        } else if s.clone().any(|x| x == Status::Inconclusive) {
            Status::Inconclusive
        } else {
            Status::Pass
        }
    }

    pub fn to_json(&self) -> Value {
        let mut sections = serde_json::Map::new();
        for (k, v) in &self.sections {
            sections.insert(k.clone(), v.clone());
        }
        json!({
            "command": self.command,
            "verdict": self.status().as_str(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "status": c.status.as_str(),
                "summary": c.summary,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
            "sections": sections,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.sections {
            out.push_str(&format!("{k}:\n"));
            match v {
                Value::String(s) => out.push_str(&format!("  {s}\n")),
                Value::Array(rows) => {
                    for r in rows {
                        out.push_str(&format!("  {r}\n"));
                    }
                }
                other => out.push_str(&format!("  {other}\n")),
            }
        }
        for c in &self.checks {
            out.push_str(&format!("[{:<12}] {}: {}\n", c.status.as_str(), c.name, c.summary));
        }
        out.push_str(&format!("verdict: {}\n", self.status().as_str()));
        out
    }
}
