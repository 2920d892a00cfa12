//! Artifact rendering. Every artifact starts with a header naming the tool version and the
//! config hash.

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::TOOL;

/// A command's result: a table, a few scalar summary values and a structured JSON form.
#[derive(Clone, Debug, Default)]
pub struct Artifact {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Columns written to plot data, in order.
    pub plot: Vec<usize>,
    pub summary: Vec<(String, String)>,
    pub results: Value,
}

impl Artifact {
    pub fn new(columns: &[&str]) -> Self {
        Artifact { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn summarize(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

/// Fixed-precision float text used by all tabular output.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn render(artifact: &Artifact, config: &RunConfig) -> String {
    let hash = config.hash();
    let mut out = format!("# {TOOL} config={hash}\n");
    match config.format {
        Format::Csv => {
            out.push_str(&format!("# config {}\n", config.canonical_json()));
            for (k, v) in &artifact.summary {
                out.push_str(&format!("# {k}={v}\n"));
            }
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&artifact.columns).expect("in-memory write");
            for row in &artifact.rows {
                w.write_record(row).expect("in-memory write");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8"));
        }
        Format::Plotdata => {
            let names: Vec<&str> = artifact.plot.iter().map(|&i| artifact.columns[i].as_str()).collect();
            out.push_str(&format!("# {}\n", names.join(" ")));
            for row in &artifact.rows {
                let fields: Vec<&str> = artifact.plot.iter().map(|&i| row[i].as_str()).collect();
                if fields.iter().all(|f| !f.is_empty()) {
                    out.push_str(&fields.join(" "));
                    out.push('\n');
                }
            }
        }
        Format::Json => {
            out.clear();
            let summary: serde_json::Map<String, Value> = artifact.summary.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
            let doc = json!({
                "tool": TOOL,
                "config_hash": hash,
                "config": config,
                "summary": summary,
                "columns": artifact.columns,
                "rows": artifact.rows,
                "results": artifact.results,
            });
            out.push_str(&serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Artifact {
        let mut a = Artifact::new(&["x", "label", "y"]);
        a.rows = vec![vec![num(1.0), "a,b".into(), num(2.0)], vec![num(3.0), "c".into(), String::new()]];
        a.plot = vec![0, 2];
        a.summarize("slope", num(0.5));
        a
    }

    #[test]
    fn csv_quotes_and_headers() {
        let cfg = RunConfig { command: "t".into(), ..Default::default() };
        let text = render(&sample(), &cfg);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# {TOOL} config={}", cfg.hash()));
        assert!(lines[1].starts_with("# config {"));
        assert_eq!(lines[2], "# slope=5.000000000000e-1");
        assert_eq!(lines[3], "x,label,y");
        assert_eq!(lines[4], "1.000000000000e0,\"a,b\",2.000000000000e0");
    }

    #[test]
    fn plotdata_skips_incomplete_rows() {
        let cfg = RunConfig { command: "t".into(), format: Format::Plotdata, ..Default::default() };
        let text = render(&sample(), &cfg);
        assert_eq!(text.lines().skip(1).collect::<Vec<_>>(), vec!["# x y", "1.000000000000e0 2.000000000000e0"]);
    }

    #[test]
    fn json_embeds_config() {
        let cfg = RunConfig { command: "t".into(), format: Format::Json, ..Default::default() };
        let v: Value = serde_json::from_str(&render(&sample(), &cfg)).unwrap();
        assert_eq!(v["config_hash"], cfg.hash());
        assert_eq!(serde_json::from_value::<RunConfig>(v["config"].clone()).unwrap(), cfg);
    }
}
