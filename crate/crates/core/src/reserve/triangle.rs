use crate::error::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::{Read, Write};

/// Cumulative losses for one line of business.
///
/// Accident year `i` (1-based) carries lags `1..=min(J, I + 1 − i)`, where
/// `I` is the number of accident years and `J ≤ I` the number of lags. With
/// `J = I` this is the usual run-off triangle; `J < I` gives a trapezoid.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTriangle {
    line_id: String,
    origin_count: usize,
    dev_count: usize,
    cells: BTreeMap<(usize, usize), f64>,
}

impl LossTriangle {
    pub fn new(
        line_id: impl Into<String>,
        origin_count: usize,
        dev_count: usize,
        cells: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let line_id = line_id.into();
        if origin_count == 0 || dev_count == 0 || dev_count > origin_count {
            return Err(Error::Data(format!(
                "line {line_id}: need 1 ≤ lags ≤ accident years, got {dev_count} lags and {origin_count} years"
            )));
        }
        let expected: usize = (1..=origin_count)
            .map(|i| dev_count.min(origin_count + 1 - i))
            .sum();
        for i in 1..=origin_count {
            for j in 1..=dev_count.min(origin_count + 1 - i) {
                match cells.get(&(i, j)) {
                    None => {
                        return Err(Error::Data(format!(
                            "line {line_id}: missing cell (accident year {i}, lag {j})"
                        )))
                    }
                    Some(v) if !(v.is_finite() && *v > 0.0) => {
                        return Err(Error::Data(format!(
                            "line {line_id}: nonpositive cell (accident year {i}, lag {j}) = {v}"
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        if cells.len() != expected {
            let (i, j) = cells
                .keys()
                .find(|(i, j)| {
                    *i == 0 || *i > origin_count || *j == 0 || *j > dev_count.min(origin_count + 1 - i)
                })
                .copied()
                .unwrap_or((0, 0));
            return Err(Error::Data(format!(
                "line {line_id}: cell (accident year {i}, lag {j}) lies outside the observed triangle"
            )));
        }
        Ok(LossTriangle {
            line_id,
            origin_count,
            dev_count,
            cells,
        })
    }

    /// Builds a triangle from rows, row `i` holding lags `1..`.
    pub fn from_rows(line_id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let origin_count = rows.len();
        let dev_count = rows.first().map_or(0, Vec::len);
        let mut cells = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                cells.insert((i + 1, j + 1), *v);
            }
        }
        LossTriangle::new(line_id, origin_count, dev_count, cells)
    }

    pub fn line_id(&self) -> &str {
        &self.line_id
    }

    pub fn origin_count(&self) -> usize {
        self.origin_count
    }

    pub fn dev_count(&self) -> usize {
        self.dev_count
    }

    pub fn get(&self, accident_year: usize, lag: usize) -> Option<f64> {
        self.cells.get(&(accident_year, lag)).copied()
    }

    /// Latest observed lag of an accident year.
    pub fn last_lag(&self, accident_year: usize) -> usize {
        self.dev_count.min(self.origin_count + 1 - accident_year)
    }

    /// Cells in (accident year, lag) order.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }
}

/// One observed log link ratio `log(Y_{i,j+1} / Y_{i,j})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkRatio {
    /// Index into the triangle sequence the set was built from.
    pub line: usize,
    pub accident_year: usize,
    /// The later lag `j + 1` of the pair.
    pub lag: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkRatioSet {
    pub lines: Vec<String>,
    pub origin_count: usize,
    pub dev_count: usize,
    /// Ordered by line, then lag, then accident year.
    pub observations: Vec<LinkRatio>,
}

pub fn link_ratios(triangles: &[LossTriangle]) -> Result<LinkRatioSet> {
    let first = triangles
        .first()
        .ok_or_else(|| Error::invalid("no triangles given"))?;
    let (origin_count, dev_count) = (first.origin_count, first.dev_count);
    if let Some(t) = triangles
        .iter()
        .find(|t| t.origin_count != origin_count || t.dev_count != dev_count)
    {
        return Err(Error::Data(format!(
            "line {} has shape {}x{}, expected {origin_count}x{dev_count}",
            t.line_id, t.origin_count, t.dev_count
        )));
    }
    let mut observations = Vec::new();
    for (n, t) in triangles.iter().enumerate() {
        for lag in 2..=dev_count {
            for i in 1..=origin_count {
                if t.last_lag(i) < lag {
                    continue;
                }
                let (prev, next) = (t.cells[&(i, lag - 1)], t.cells[&(i, lag)]);
                if !(prev > 0.0 && next > 0.0) {
                    return Err(Error::Data(format!(
                        "line {}: nonpositive cell near (accident year {i}, lag {lag})",
                        t.line_id
                    )));
                }
                observations.push(LinkRatio {
                    line: n,
                    accident_year: i,
                    lag,
                    value: (next / prev).ln(),
                });
            }
        }
    }
    Ok(LinkRatioSet {
        lines: triangles.iter().map(|t| t.line_id.clone()).collect(),
        origin_count,
        dev_count,
        observations,
    })
}

impl LinkRatioSet {
    /// Rebuilds cumulative triangles from their first-lag values.
    pub fn reconstruct(&self, first_lag: &[Vec<f64>]) -> Result<Vec<LossTriangle>> {
        if first_lag.len() != self.lines.len() {
            return Err(Error::invalid("one first-lag column per line is required"));
        }
        let mut out = Vec::with_capacity(self.lines.len());
        for (n, name) in self.lines.iter().enumerate() {
            let mut cells = BTreeMap::new();
            for (i, v) in first_lag[n].iter().enumerate() {
                cells.insert((i + 1, 1), *v);
            }
            for obs in self.observations.iter().filter(|o| o.line == n) {
                let prev = cells
                    .get(&(obs.accident_year, obs.lag - 1))
                    .copied()
                    .ok_or_else(|| Error::invalid("link ratios are not in lag order"))?;
                cells.insert((obs.accident_year, obs.lag), prev * obs.value.exp());
            }
            out.push(LossTriangle::new(
                name.clone(),
                self.origin_count,
                self.dev_count,
                cells,
            )?);
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
struct Record {
    line: String,
    accident_year: usize,
    dev_lag: usize,
    cumulative_loss: f64,
}

type Cells = Vec<(String, BTreeMap<(usize, usize), f64>)>;

fn read_cells<R: Read>(reader: R) -> Result<Cells> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("line 1: {e}")))?
        .clone();
    let wanted = ["line", "accident_year", "dev_lag", "cumulative_loss"];
    if headers.iter().collect::<Vec<_>>() != wanted {
        return Err(Error::Data(format!(
            "line 1: expected header `{}`",
            wanted.join(",")
        )));
    }
    let mut lines: Cells = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let at = e.position().map_or(0, |p| p.line());
            Error::Data(format!("line {at}: {e}"))
        })?;
        let at = record.position().map_or(0, |p| p.line());
        let rec: Record = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Data(format!("line {at}: {e}")))?;
        if rec.accident_year == 0 || rec.dev_lag == 0 {
            return Err(Error::Data(format!(
                "line {at}: accident_year and dev_lag are 1-based"
            )));
        }
        let idx = match lines.iter().position(|(name, _)| *name == rec.line) {
            Some(idx) => idx,
            None => {
                lines.push((rec.line.clone(), BTreeMap::new()));
                lines.len() - 1
            }
        };
        let key = (rec.accident_year, rec.dev_lag);
        if lines[idx].1.insert(key, rec.cumulative_loss).is_some() {
            return Err(Error::Data(format!(
                "line {at}: duplicate cell ({}, accident year {}, lag {})",
                rec.line, key.0, key.1
            )));
        }
    }
    Ok(lines)
}

/// Reads triangles from long-format CSV
/// (`line,accident_year,dev_lag,cumulative_loss`), one triangle per line id
/// in order of first appearance.
pub fn read_triangles<R: Read>(reader: R) -> Result<Vec<LossTriangle>> {
    read_cells(reader)?
        .into_iter()
        .map(|(name, cells)| {
            let origin_count = cells.keys().map(|k| k.0).max().unwrap_or(0);
            let dev_count = cells.keys().map(|k| k.1).max().unwrap_or(0);
            LossTriangle::new(name, origin_count, dev_count, cells)
        })
        .collect()
}

pub fn write_triangles<W: Write>(writer: W, triangles: &[LossTriangle]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["line", "accident_year", "dev_lag", "cumulative_loss"])
        .map_err(io)?;
    for t in triangles {
        for ((i, j), v) in t.cells() {
            w.write_record([
                t.line_id.clone(),
                i.to_string(),
                j.to_string(),
                format_amount(v),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

fn format_amount(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// The calendar diagonal after the last observed one: cumulative values at
/// `(i, last_lag(i) + 1)` for every accident year that has a next lag.
#[derive(Clone, Debug, PartialEq)]
pub struct NextDiagonal {
    /// Keyed by (line id, accident year).
    pub cells: BTreeMap<(String, usize), f64>,
}

impl NextDiagonal {
    pub fn get(&self, line: &str, accident_year: usize) -> Option<f64> {
        self.cells.get(&(line.to_string(), accident_year)).copied()
    }
}

/// Reads the next diagonal in the same CSV layout and checks it lines up
/// with the given triangles.
pub fn read_next_diagonal<R: Read>(reader: R, triangles: &[LossTriangle]) -> Result<NextDiagonal> {
    let mut cells = BTreeMap::new();
    for (name, values) in read_cells(reader)? {
        let t = triangles
            .iter()
            .find(|t| t.line_id == name)
            .ok_or_else(|| Error::Data(format!("diagonal line {name} has no triangle")))?;
        for ((i, j), v) in values {
            if i == 0 || i > t.origin_count || j != t.last_lag(i) + 1 || j > t.dev_count {
                return Err(Error::Data(format!(
                    "line {name}: (accident year {i}, lag {j}) is not on the next diagonal"
                )));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Data(format!(
                    "line {name}: nonpositive cell (accident year {i}, lag {j})"
                )));
            }
            cells.insert((name.clone(), i), v);
        }
    }
    Ok(NextDiagonal { cells })
}
