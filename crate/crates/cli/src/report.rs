//! Deterministic output assembly: one table per run with the resolved
//! configuration echoed into the metadata, as CSV (17 significant digits,
//! `#`-prefixed header) or JSON.

use std::io::Write;
use std::path::Path;

/// 17 significant digits: round-trip exact for 64-bit floats.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Report {
    pub command: String,
    /// Resolved configuration and diagnostics, in a fixed order.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Extra JSON payload (e.g. structured validation reports).
    pub extra: Option<(String, serde_json::Value)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            meta: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            extra: None,
        }
    }

    pub fn meta_str(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn meta_f(&mut self, key: &str, value: f64) {
        self.meta.push((key.to_string(), fmt_f(value)));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# longrun {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("# command = {}\n", self.command));
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut config = serde_json::Map::new();
        for (k, v) in &self.meta {
            config.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                serde_json::Value::Array(
                    row.iter().map(|&x| serde_json::Value::String(fmt_f(x))).collect(),
                )
            })
            .collect();
        let mut doc = serde_json::Map::new();
        doc.insert("tool".into(), serde_json::Value::String("longrun".into()));
        doc.insert(
            "version".into(),
            serde_json::Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        doc.insert("command".into(), serde_json::Value::String(self.command.clone()));
        doc.insert("config".into(), serde_json::Value::Object(config));
        doc.insert(
            "columns".into(),
            serde_json::Value::Array(
                self.columns
                    .iter()
                    .map(|c| serde_json::Value::String(c.clone()))
                    .collect(),
            ),
        );
        doc.insert("rows".into(), serde_json::Value::Array(rows));
        if let Some((key, value)) = &self.extra {
            doc.insert(key.clone(), value.clone());
        }
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
            .expect("report serialization");
        s.push('\n');
        s
    }

    pub fn write(&self, out: Option<&Path>, json: bool) -> Result<(), String> {
        let body = if json { self.to_json() } else { self.to_csv() };
        match out {
            None => {
                std::io::stdout()
                    .write_all(body.as_bytes())
                    .map_err(|e| format!("writing to stdout: {e}"))?;
                Ok(())
            }
            Some(path) => std::fs::write(path, body)
                .map_err(|e| format!("writing {}: {e}", path.display())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[1.0, -0.5, 0.9048374180359595, 1e-300, 6.02e23] {
            let s = fmt_f(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_shape() {
        let mut r = Report::new("demo");
        r.meta_str("mu", fmt_f(0.08));
        r.columns = vec!["a".into(), "b".into()];
        r.rows.push(vec![1.0, 2.0]);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# longrun"));
        assert_eq!(lines[1], "# command = demo");
        assert!(lines[2].starts_with("# mu ="));
        assert_eq!(lines[3], "a,b");
        assert!(lines[4].contains(','));
    }
}
