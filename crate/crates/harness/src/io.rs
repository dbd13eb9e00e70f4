//! Plain-text model, trace and edge-list files.
//!
//! All three formats are line oriented. Blank lines and lines starting with
//! `#` are ignored on input.
//!
//! Model file: a header `p d alpha beta` followed by one `i j theta` line
//! per edge.
//!
//! Trace file: a header `p continuous|discrete horizon`, an `init` line with
//! the `p` initial spins as `+1`/`-1`, then one `time node spin` line per
//! update. Continuous times are written with 17 significant digits, which
//! round-trips every `f64`; discrete steps as integers.
//!
//! Edge file: one `i j` pair (`i < j`) per line, sorted.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use glauber_core::{
    Couplings, EdgeSet, Graph, IsingModel, ParamBounds, Spin, SpinConfig, Trace, TraceMode,
    UpdateEvent,
};

use crate::error::{HarnessError, Result};

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            inner: reader.lines(),
            number: 0,
        }
    }

    /// Next non-blank, non-comment line as `(line number, fields)`.
    fn next_fields(&mut self) -> Result<Option<(usize, Vec<String>)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok(Some((
                self.number,
                trimmed.split_whitespace().map(str::to_owned).collect(),
            )));
        }
        Ok(None)
    }
}

fn field<T: FromStr>(line: usize, fields: &[String], idx: usize, what: &str) -> Result<T> {
    let raw = fields
        .get(idx)
        .ok_or_else(|| HarnessError::parse(line, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| HarnessError::parse(line, format!("invalid {what} `{raw}`")))
}

fn expect_len(line: usize, fields: &[String], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(HarnessError::parse(
            line,
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

fn spin(line: usize, raw: &str) -> Result<Spin> {
    match raw {
        "1" | "+1" | "+" => Ok(1),
        "-1" | "-" => Ok(-1),
        _ => Err(HarnessError::parse(line, format!("invalid spin `{raw}`"))),
    }
}

pub fn write_model<W: Write>(mut w: W, model: &IsingModel) -> Result<()> {
    let b = model.bounds();
    writeln!(w, "# p d alpha beta")?;
    writeln!(w, "{} {} {} {}", model.p(), b.d, b.alpha, b.beta)?;
    for ((i, j), theta) in model.couplings().iter() {
        writeln!(w, "{i} {j} {theta}")?;
    }
    Ok(())
}

/// Parses and validates a model file.
pub fn read_model<R: BufRead>(r: R) -> Result<IsingModel> {
    let mut lines = Lines::new(r);
    let (line, header) = lines
        .next_fields()?
        .ok_or_else(|| HarnessError::parse(0, "empty model file"))?;
    expect_len(line, &header, 4)?;
    let p: usize = field(line, &header, 0, "node count")?;
    let d: usize = field(line, &header, 1, "degree bound")?;
    let alpha: f64 = field(line, &header, 2, "alpha")?;
    let beta: f64 = field(line, &header, 3, "beta")?;
    let mut couplings = Couplings::new();
    let mut edges = Vec::new();
    while let Some((line, f)) = lines.next_fields()? {
        expect_len(line, &f, 3)?;
        let i: usize = field(line, &f, 0, "node")?;
        let j: usize = field(line, &f, 1, "node")?;
        let theta: f64 = field(line, &f, 2, "coupling")?;
        edges.push((i, j));
        couplings.insert(i, j, theta);
    }
    let graph = Graph::new(p, edges)?;
    Ok(IsingModel::new(
        graph,
        couplings,
        ParamBounds::new(alpha, beta, d),
    )?)
}

pub fn write_trace<W: Write>(mut w: W, trace: &Trace) -> Result<()> {
    let mode = match trace.mode() {
        TraceMode::Continuous => "continuous",
        TraceMode::Discrete => "discrete",
    };
    let sign = |s: Spin| if s == 1 { "+1" } else { "-1" };
    match trace.mode() {
        TraceMode::Continuous => writeln!(w, "{} {mode} {:.16e}", trace.p(), trace.horizon())?,
        TraceMode::Discrete => writeln!(w, "{} {mode} {}", trace.p(), trace.horizon() as u64)?,
    }
    write!(w, "init")?;
    for &s in trace.initial().spins() {
        write!(w, " {}", sign(s))?;
    }
    writeln!(w)?;
    for ev in trace.events() {
        match trace.mode() {
            TraceMode::Continuous => writeln!(w, "{:.16e} {} {}", ev.time, ev.node, sign(ev.spin))?,
            TraceMode::Discrete => writeln!(w, "{} {} {}", ev.time as u64, ev.node, sign(ev.spin))?,
        }
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Trace> {
    let mut lines = Lines::new(r);
    let (line, header) = lines
        .next_fields()?
        .ok_or_else(|| HarnessError::parse(0, "empty trace file"))?;
    expect_len(line, &header, 3)?;
    let p: usize = field(line, &header, 0, "node count")?;
    let mode = match header[1].as_str() {
        "continuous" => TraceMode::Continuous,
        "discrete" => TraceMode::Discrete,
        other => {
            return Err(HarnessError::parse(
                line,
                format!("unknown trace mode `{other}`"),
            ))
        }
    };
    let horizon: f64 = field(line, &header, 2, "horizon")?;
    let (line, init) = lines
        .next_fields()?
        .ok_or_else(|| HarnessError::parse(line, "missing init line"))?;
    if init.first().map(String::as_str) != Some("init") {
        return Err(HarnessError::parse(line, "expected `init` line"));
    }
    expect_len(line, &init, p + 1)?;
    let spins = init[1..]
        .iter()
        .map(|s| spin(line, s))
        .collect::<Result<Vec<_>>>()?;
    let mut events = Vec::new();
    while let Some((line, f)) = lines.next_fields()? {
        expect_len(line, &f, 3)?;
        let time: f64 = field(line, &f, 0, "time")?;
        let node: u32 = field(line, &f, 1, "node")?;
        events.push(UpdateEvent {
            time,
            node,
            spin: spin(line, &f[2])?,
        });
    }
    Ok(Trace::from_parts(
        mode,
        SpinConfig::new(spins)?,
        events,
        horizon,
    )?)
}

pub fn write_edges<W: Write>(mut w: W, edges: &EdgeSet) -> Result<()> {
    for (i, j) in edges.iter() {
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_edges<R: BufRead>(r: R) -> Result<EdgeSet> {
    let mut lines = Lines::new(r);
    let mut edges = EdgeSet::new();
    while let Some((line, f)) = lines.next_fields()? {
        expect_len(line, &f, 2)?;
        let i: usize = field(line, &f, 0, "node")?;
        let j: usize = field(line, &f, 1, "node")?;
        if i == j {
            return Err(HarnessError::parse(line, "self-loop"));
        }
        edges.insert(i, j);
    }
    Ok(edges)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::file(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::file(path, e))
}

pub fn load_model(path: &Path) -> Result<IsingModel> {
    read_model(open(path)?)
}

pub fn save_model(path: &Path, model: &IsingModel) -> Result<()> {
    let mut w = create(path)?;
    write_model(&mut w, model)?;
    Ok(w.flush()?)
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    read_trace(open(path)?)
}

pub fn save_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = create(path)?;
    write_trace(&mut w, trace)?;
    Ok(w.flush()?)
}

pub fn load_edges(path: &Path) -> Result<EdgeSet> {
    read_edges(open(path)?)
}

pub fn save_edges(path: &Path, edges: &EdgeSet) -> Result<()> {
    let mut w = create(path)?;
    write_edges(&mut w, edges)?;
    Ok(w.flush()?)
}

/// Creates `path` (and its parent directories) for buffered writing.
pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    create(path)
}
