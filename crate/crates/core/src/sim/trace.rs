//! Trace records and their CSV and binary encodings.
//!
//! CSV columns, in order: `t`, positions `x{i}_{k}` (agents and coordinates
//! numbered from 1), the oracle `xstar_{k}`, velocities `v{i}_{k}` when the
//! plant has them, `tracking_error`, `consensus_error`, `estimator_error`,
//! `V`, `W`, then one column per estimator state. Inapplicable cells are empty.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub x: Vec<Vector>,
    pub x_star: Vector,
    pub v: Option<Vec<Vector>>,
    pub estimates: Vec<f64>,
    /// `max_i ‖x_i − x*(t)‖₂`.
    pub tracking_error: f64,
    /// `‖(M ⊗ I) x‖₂`.
    pub consensus_error: f64,
    /// `max_i ‖ξ_i − ζ_n/N‖₂`, average-tracking runs only.
    pub estimator_error: Option<f64>,
    pub lyapunov_v: Option<f64>,
    pub lyapunov_w: Option<f64>,
}

/// Shape shared by every record of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLayout {
    pub n_agents: usize,
    pub dim: usize,
    pub has_velocity: bool,
    pub estimate_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub layout: TraceLayout,
    pub records: Vec<TraceRecord>,
}

impl TraceLayout {
    pub fn header(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        for i in 1..=self.n_agents {
            cols.extend((1..=self.dim).map(|k| format!("x{i}_{k}")));
        }
        cols.extend((1..=self.dim).map(|k| format!("xstar_{k}")));
        if self.has_velocity {
            for i in 1..=self.n_agents {
                cols.extend((1..=self.dim).map(|k| format!("v{i}_{k}")));
            }
        }
        cols.extend(
            ["tracking_error", "consensus_error", "estimator_error", "V", "W"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.extend(self.estimate_labels.iter().cloned());
        cols
    }

    fn from_header(cols: &[&str]) -> Result<Self> {
        let bad = || Error::Trace(format!("unrecognized header: {}", cols.join(",")));
        if cols.first() != Some(&"t") {
            return Err(bad());
        }
        let dim = cols.iter().filter(|c| c.starts_with("xstar_")).count();
        let n_pos = cols.iter().filter(|c| c.starts_with('x') && !c.starts_with("xstar")).count();
        if dim == 0 || n_pos % dim != 0 {
            return Err(bad());
        }
        let has_velocity = cols.iter().any(|c| c.starts_with('v') && c.contains('_'));
        let w = cols.iter().position(|c| *c == "W").ok_or_else(bad)?;
        let layout = Self {
            n_agents: n_pos / dim,
            dim,
            has_velocity,
            estimate_labels: cols[w + 1..].iter().map(|s| s.to_string()).collect(),
        };
        if layout.header() != cols {
            return Err(bad());
        }
        Ok(layout)
    }

    fn row(&self, r: &TraceRecord) -> Vec<Option<f64>> {
        let mut row = vec![Some(r.t)];
        row.extend(r.x.iter().flat_map(|x| x.iter().copied().map(Some)));
        row.extend(r.x_star.iter().copied().map(Some));
        if self.has_velocity {
            let vs = r.v.as_deref().unwrap_or(&[]);
            row.extend(vs.iter().flat_map(|v| v.iter().copied().map(Some)));
        }
        row.extend([
            Some(r.tracking_error),
            Some(r.consensus_error),
            r.estimator_error,
            r.lyapunov_v,
            r.lyapunov_w,
        ]);
        row.extend(r.estimates.iter().copied().map(Some));
        row
    }

    fn record(&self, row: &[Option<f64>]) -> Result<TraceRecord> {
        let need = |c: Option<f64>| c.ok_or_else(|| Error::Trace("missing required value".into()));
        let mut it = row.iter().copied();
        let mut take_vec = |n: usize| -> Result<Vector> {
            let vals: Result<Vec<f64>> = (0..n).map(|_| need(it.next().flatten())).collect();
            Ok(Vector::from_vec(vals?))
        };
        let t = take_vec(1)?[0];
        let x = (0..self.n_agents).map(|_| take_vec(self.dim)).collect::<Result<_>>()?;
        let x_star = take_vec(self.dim)?;
        let v = if self.has_velocity {
            Some((0..self.n_agents).map(|_| take_vec(self.dim)).collect::<Result<_>>()?)
        } else {
            None
        };
        let rest: Vec<Option<f64>> = row[row.len() - 5 - self.estimate_labels.len()..].to_vec();
        Ok(TraceRecord {
            t,
            x,
            x_star,
            v,
            tracking_error: need(rest[0])?,
            consensus_error: need(rest[1])?,
            estimator_error: rest[2],
            lyapunov_v: rest[3],
            lyapunov_w: rest[4],
            estimates: rest[5..].iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
        })
    }
}

/// 17 significant digits, enough to round-trip every `f64`.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(trace: &Trace, mut out: impl Write) -> Result<()> {
    writeln!(out, "{}", trace.layout.header().join(","))?;
    for r in &trace.records {
        let cells: Vec<String> = trace
            .layout
            .row(r)
            .into_iter()
            .map(|c| c.map(fmt).unwrap_or_default())
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_csv(input: impl BufRead) -> Result<Trace> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Trace("empty trace file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let layout = TraceLayout::from_header(&cols)?;
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<Option<f64>> = line
            .trim()
            .split(',')
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse()
                        .map(Some)
                        .map_err(|_| Error::Trace(format!("row {}: bad number `{c}`", n + 2)))
                }
            })
            .collect::<Result<_>>()?;
        if row.len() != cols.len() {
            return Err(Error::Trace(format!("row {} has {} cells, expected {}", n + 2, row.len(), cols.len())));
        }
        records.push(layout.record(&row)?);
    }
    Ok(Trace { layout, records })
}

const MAGIC: &[u8; 8] = b"TVOTRC01";

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u64).to_le_bytes());
    out.extend(s.as_bytes());
}

/// Binary trace: magic, the scenario config text, the CSV header, then each
/// row as little-endian `f64` with NaN marking empty cells.
pub fn write_binary(trace: &Trace, config: &str, mut out: impl Write) -> Result<()> {
    let mut buf = MAGIC.to_vec();
    put_str(&mut buf, config);
    put_str(&mut buf, &trace.layout.header().join(","));
    buf.extend((trace.records.len() as u64).to_le_bytes());
    for r in &trace.records {
        for c in trace.layout.row(r) {
            buf.extend(c.unwrap_or(f64::NAN).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Trace("truncated binary trace".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u64()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Trace(e.to_string()))
    }
}

/// Inverse of [`write_binary`]; returns the trace and the embedded config.
pub fn read_binary(mut input: impl Read) -> Result<(Trace, String)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
        return Err(Error::Trace("not a binary trace".into()));
    }
    let config = cur.string()?;
    let header = cur.string()?;
    let cols: Vec<&str> = header.split(',').collect();
    let layout = TraceLayout::from_header(&cols)?;
    let n_records = cur.u64()? as usize;
    let mut records = Vec::with_capacity(n_records.min(1 << 20));
    for _ in 0..n_records {
        let row: Vec<Option<f64>> = (0..cols.len())
            .map(|_| cur.f64().map(|v| (!v.is_nan()).then_some(v)))
            .collect::<Result<_>>()?;
        records.push(layout.record(&row)?);
    }
    Ok((Trace { layout, records }, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        let layout = TraceLayout {
            n_agents: 2,
            dim: 2,
            has_velocity: true,
            estimate_labels: vec!["theta1_11".into()],
        };
        let rec = |t: f64| TraceRecord {
            t,
            x: vec![Vector::from_vec(vec![0.1, 1.0 / 3.0]), Vector::from_vec(vec![-2.0, t])],
            x_star: Vector::from_vec(vec![0.0, 1e-300]),
            v: Some(vec![Vector::from_vec(vec![1.0, 2.0]), Vector::from_vec(vec![3.0, 4.0])]),
            estimates: vec![std::f64::consts::PI],
            tracking_error: 0.5,
            consensus_error: 0.25,
            estimator_error: None,
            lyapunov_v: Some(1.5),
            lyapunov_w: None,
        };
        Trace {
            layout,
            records: vec![rec(0.0), rec(0.01)],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = sample();
        let mut buf = Vec::new();
        write_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1_1,x1_2,x2_1,x2_2,xstar_1,xstar_2,v1_1"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn binary_round_trip_keeps_config() {
        let trace = sample();
        let mut buf = Vec::new();
        write_binary(&trace, "name = \"demo\"\n", &mut buf).unwrap();
        let (back, cfg) = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
        assert_eq!(cfg, "name = \"demo\"\n");
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_csv("a,b\n1,2\n".as_bytes()), Err(Error::Trace(_))));
        assert!(matches!(read_binary(&b"nope"[..]), Err(Error::Trace(_))));
    }
}
