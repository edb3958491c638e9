//! File formats.
//!
//! * Events: CSV with header `node_id,timestamp`, or JSON Lines with one
//!   `{"node": <int>, "t": <float>}` object per line. Rows may come in any
//!   order; they are grouped by node and sorted.
//! * Matrices: `d` lines of `d` comma-separated floats written with 17
//!   significant digits, so values survive a round trip bit for bit.
//!   Vectors use one value per line.
//! * Config files: one `key = value` pair per line; `#` starts a comment,
//!   blank lines are ignored, keys may use `_` or `-`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{NphcError, Result};
use crate::linalg::Matrix;
use crate::model::EventSequences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    #[default]
    Csv,
    Jsonl,
}

impl EventFormat {
    /// `.jsonl` / `.ndjson` are JSON Lines, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => EventFormat::Jsonl,
            _ => EventFormat::Csv,
        }
    }
}

impl std::str::FromStr for EventFormat {
    type Err = NphcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(EventFormat::Csv),
            "jsonl" | "ndjson" => Ok(EventFormat::Jsonl),
            other => Err(NphcError::InvalidParameter(format!(
                "unknown event format '{other}' (expected csv or jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IngestOptions {
    /// Observation horizon; defaults to the largest timestamp.
    pub horizon: Option<f64>,
    /// Number of nodes; defaults to the largest node id plus one.
    pub nodes: Option<usize>,
}

/// One parsed row: node, timestamp and the 1-based line it came from.
type Row = (usize, f64, usize);

pub fn read_events(path: &Path, format: EventFormat, opts: IngestOptions) -> Result<EventSequences> {
    let file = fs::File::open(path).map_err(|e| NphcError::io(path, e))?;
    match format {
        EventFormat::Csv => parse_events_csv(file, opts),
        EventFormat::Jsonl => parse_events_jsonl(BufReader::new(file), opts),
    }
}

pub fn parse_events_csv<R: Read>(reader: R, opts: IngestOptions) -> Result<EventSequences> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| NphcError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            let fields: Vec<&str> = rec.iter().collect();
            if fields != ["node_id", "timestamp"] {
                return Err(NphcError::Parse {
                    line,
                    message: format!("expected header 'node_id,timestamp', found '{}'", fields.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        if rec.len() != 2 {
            return Err(NphcError::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        rows.push((parse_node(&rec[0], line)?, parse_time(&rec[1], line)?, line));
    }
    assemble(rows, opts)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEvent {
    node: i64,
    t: f64,
}

pub fn parse_events_jsonl<R: BufRead>(reader: R, opts: IngestOptions) -> Result<EventSequences> {
    let mut rows = Vec::new();
    for (k, text) in reader.lines().enumerate() {
        let line = k + 1;
        let text = text.map_err(|e| NphcError::Parse {
            line,
            message: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let ev: JsonEvent = serde_json::from_str(&text).map_err(|e| NphcError::Parse {
            line,
            message: e.to_string(),
        })?;
        let node = usize::try_from(ev.node).map_err(|_| NphcError::Parse {
            line,
            message: format!("node id must be non-negative, got {}", ev.node),
        })?;
        if !ev.t.is_finite() {
            return Err(NphcError::Parse {
                line,
                message: "timestamp is not finite".into(),
            });
        }
        rows.push((node, ev.t, line));
    }
    assemble(rows, opts)
}

fn parse_node(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| NphcError::Parse {
        line,
        message: format!("node_id '{s}' is not a non-negative integer"),
    })
}

fn parse_time(s: &str, line: usize) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() => Ok(t),
        _ => Err(NphcError::Parse {
            line,
            message: format!("timestamp '{s}' is not a finite number"),
        }),
    }
}

fn assemble(rows: Vec<Row>, opts: IngestOptions) -> Result<EventSequences> {
    let max_node = rows.iter().map(|r| r.0).max();
    let d = match (opts.nodes, max_node) {
        (Some(d), Some(m)) if m >= d => {
            let line = rows.iter().find(|r| r.0 >= d).map_or(0, |r| r.2);
            return Err(NphcError::Validation(format!(
                "line {line}: node_id {m} is out of range for {d} nodes"
            )));
        }
        (Some(d), _) => d,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(NphcError::Validation(
                "no events and no node count given (use --nodes)".into(),
            ))
        }
    };
    let horizon = match opts.horizon {
        Some(t) => t,
        None => rows.iter().map(|r| r.1).fold(f64::NAN, f64::max),
    };
    if horizon.is_nan() {
        return Err(NphcError::Validation(
            "no events and no horizon given (use --horizon)".into(),
        ));
    }
    let mut per_node: Vec<Vec<(f64, usize)>> = vec![Vec::new(); d];
    for (node, t, line) in rows {
        if t < 0.0 || t > horizon {
            return Err(NphcError::Validation(format!(
                "line {line}: timestamp {t} lies outside [0, {horizon}]"
            )));
        }
        per_node[node].push((t, line));
    }
    let mut events = Vec::with_capacity(d);
    for (node, mut v) in per_node.into_iter().enumerate() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some(w) = v.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(NphcError::Validation(format!(
                "duplicate timestamp {} for node {node} on lines {} and {}",
                w[0].0, w[0].1, w[1].1
            )));
        }
        events.push(v.into_iter().map(|(t, _)| t).collect());
    }
    EventSequences::new(events, horizon)
}

/// All events as `node_id,timestamp` rows ordered by time, then node.
pub fn format_events_csv(events: &EventSequences) -> String {
    let mut rows: Vec<(f64, usize)> = events
        .nodes()
        .iter()
        .enumerate()
        .flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::with_capacity(32 * rows.len() + 20);
    out.push_str("node_id,timestamp\n");
    for (t, i) in rows {
        out.push_str(&format!("{i},{}\n", fmt_f64(t)));
    }
    out
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| parse_time(s.trim(), k + 1).map_err(|_| NphcError::Parse {
                line: k + 1,
                message: format!("'{}' is not a finite number", s.trim()),
            }))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(NphcError::Parse {
                    line: k + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn format_vector(v: &DVector<f64>) -> String {
    v.iter().map(|&x| fmt_f64(x) + "\n").collect()
}

pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let m = parse_matrix(text)?;
    if m.ncols() > 1 {
        return Err(NphcError::Parse {
            line: 1,
            message: format!("expected one value per line, found {} columns", m.ncols()),
        });
    }
    Ok(DVector::from_iterator(m.nrows(), m.iter().copied()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| NphcError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| NphcError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| NphcError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| NphcError::io(path, e))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &format_matrix(m))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&read_text(path)?)
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_text(path, &format_vector(v))
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    parse_vector(&read_text(path)?)
}

pub fn write_events(path: &Path, events: &EventSequences) -> Result<()> {
    write_text(path, &format_events_csv(events))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| NphcError::Validation(format!("cannot serialise {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| NphcError::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

/// A parsed config file: normalised key to `(value, line)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(NphcError::Parse {
                    line,
                    message: format!("expected 'key = value', found '{content}'"),
                });
            };
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(NphcError::Parse {
                    line,
                    message: format!("invalid key '{key}'"),
                });
            }
            if value.is_empty() {
                return Err(NphcError::Parse {
                    line,
                    message: format!("missing value for '{key}'"),
                });
            }
            if let Some((_, first)) = entries.insert(key.clone(), (value.to_string(), line)) {
                return Err(NphcError::Parse {
                    line,
                    message: format!("duplicate key '{key}' (first set on line {first})"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// Parses `key` if present.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| NphcError::Parse {
                line: *line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    /// Keys not in `known`, with their line numbers.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<(String, usize)> {
        self.entries
            .iter()
            .filter(|(k, _)| !known.contains(&k.as_str()))
            .map(|(k, (_, l))| (k.clone(), *l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(horizon: Option<f64>, nodes: Option<usize>) -> IngestOptions {
        IngestOptions { horizon, nodes }
    }

    #[test]
    fn csv_example() {
        let text = "node_id,timestamp\n0,1\n0,2\n0,3\n";
        let ev = parse_events_csv(text.as_bytes(), opts(Some(4.0), None)).unwrap();
        assert_eq!(ev.dim(), 1);
        assert_eq!(ev.horizon(), 4.0);
        assert_eq!(ev.node(0), &[1.0, 2.0, 3.0]);
        let ev = parse_events_csv(text.as_bytes(), opts(None, None)).unwrap();
        assert_eq!(ev.horizon(), 3.0);
    }

    #[test]
    fn empty_file_with_nodes() {
        let ev = parse_events_csv("".as_bytes(), opts(Some(10.0), Some(2))).unwrap();
        assert_eq!(ev.dim(), 2);
        assert!(ev.is_empty());
        let ev = parse_events_jsonl("".as_bytes(), opts(Some(10.0), Some(2))).unwrap();
        assert_eq!(ev.counts(), vec![0, 0]);
        assert!(parse_events_csv("".as_bytes(), opts(Some(10.0), None)).is_err());
    }

    #[test]
    fn duplicate_names_both_lines() {
        let text = "node_id,timestamp\n0,5.0\n1,2.0\n0,5.0\n";
        let err = parse_events_csv(text.as_bytes(), opts(None, None)).unwrap_err();
        assert!(matches!(err, NphcError::Validation(_)));
        let msg = err.to_string();
        assert!(msg.contains("lines 2 and 4"), "{msg}");
        let jl = "{\"node\":0,\"t\":5.0}\n{\"node\":0,\"t\":5.0}\n";
        let msg = parse_events_jsonl(jl.as_bytes(), opts(None, None)).unwrap_err().to_string();
        assert!(msg.contains("lines 1 and 2"), "{msg}");
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let text = "node_id,timestamp\n1,3\n0,2\n1,1\n";
        let ev = parse_events_csv(text.as_bytes(), opts(Some(5.0), Some(3))).unwrap();
        assert_eq!(ev.node(1), &[1.0, 3.0]);
        assert_eq!(ev.node(2), &[] as &[f64]);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = [
            ("node,time\n0,1\n", 1),
            ("node_id,timestamp\n0,1\nx,2\n", 3),
            ("node_id,timestamp\n0,1\n0,nan\n", 3),
            ("node_id,timestamp\n-1,1\n", 2),
        ];
        for (text, line) in bad {
            match parse_events_csv(text.as_bytes(), opts(None, None)) {
                Err(NphcError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        let jl = "{\"node\":0,\"t\":1}\n{\"node\":0}\n";
        assert!(matches!(
            parse_events_jsonl(jl.as_bytes(), opts(None, None)),
            Err(NphcError::Parse { line: 2, .. })
        ));
        let text = "node_id,timestamp\n3,1\n";
        assert!(matches!(
            parse_events_csv(text.as_bytes(), opts(None, Some(2))),
            Err(NphcError::Validation(_))
        ));
        let text = "node_id,timestamp\n0,11\n";
        assert!(parse_events_csv(text.as_bytes(), opts(Some(10.0), None)).is_err());
    }

    #[test]
    fn events_round_trip() {
        let ev = EventSequences::new(vec![vec![0.1, 1.0 / 3.0], vec![0.2]], 1.0).unwrap();
        let text = format_events_csv(&ev);
        let back = parse_events_csv(text.as_bytes(), opts(Some(1.0), Some(2))).unwrap();
        assert_eq!(back, ev);
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = Matrix::from_fn(3, 3, |i, j| (i as f64 + 1.0).sqrt() / (j as f64 + 7.0) - 1e-300);
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        let v = DVector::from_vec(vec![std::f64::consts::PI, -0.0, 1e-17]);
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
        assert!(parse_matrix("1,2\n3\n").is_err());
        assert!(parse_vector("1,2\n").is_err());
    }

    #[test]
    fn config_grammar() {
        let text = "# comment\nmu = 0.5\n\nhalf-width=10 # trailing\npreset = rect10\n";
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.get::<f64>("mu").unwrap(), Some(0.5));
        assert_eq!(cfg.get::<f64>("half_width").unwrap(), Some(10.0));
        assert_eq!(cfg.get::<String>("preset").unwrap().as_deref(), Some("rect10"));
        assert_eq!(cfg.get::<f64>("seed").unwrap(), None);
        assert!(matches!(cfg.get::<u64>("preset"), Err(NphcError::Parse { line: 5, .. })));
        assert_eq!(cfg.unknown_keys(&["mu", "half_width"]), vec![("preset".to_string(), 5)]);

        assert!(matches!(ConfigFile::parse("mu 0.5"), Err(NphcError::Parse { line: 1, .. })));
        assert!(matches!(ConfigFile::parse("mu = 1\nmu = 2"), Err(NphcError::Parse { line: 2, .. })));
        assert!(ConfigFile::parse("mu =").is_err());
    }
}
