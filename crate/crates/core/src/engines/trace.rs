//! Run traces: per-iteration scalar rows (the CSV surface), optional vector
//! snapshots, line-search events and the final verdict.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedules::Family;
use crate::space::Vector;

/// Update rule used to produce the oracle points of a fixed-length run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Canonical,
    Extrapolated,
    OneAux,
    TwoAux,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Canonical, Form::Extrapolated, Form::OneAux, Form::TwoAux];

    pub fn as_str(self) -> &'static str {
        match self {
            Form::Canonical => "canonical",
            Form::Extrapolated => "extrapolated",
            Form::OneAux => "one-aux",
            Form::TwoAux => "two-aux",
        }
    }

    pub fn uses_aux(self) -> bool {
        matches!(self, Form::OneAux | Form::TwoAux)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Form::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown form '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gm,
    Acgm,
    Racgm,
    Ogmg,
    Ocgmg,
    Fista,
    Fistag,
    Meta,
    MetaResume,
    MetaFista,
    Template,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Gm,
        Method::Acgm,
        Method::Racgm,
        Method::Ogmg,
        Method::Ocgmg,
        Method::Fista,
        Method::Fistag,
        Method::Meta,
        Method::MetaResume,
        Method::MetaFista,
        Method::Template,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gm => "gm",
            Method::Acgm => "acgm",
            Method::Racgm => "racgm",
            Method::Ogmg => "ogmg",
            Method::Ocgmg => "ocgmg",
            Method::Fista => "fista",
            Method::Fistag => "fistag",
            Method::Meta => "meta",
            Method::MetaResume => "meta-resume",
            Method::MetaFista => "meta-fista",
            Method::Template => "template",
        }
    }

    /// Methods that run a fixed number of iterations through one of the forms.
    pub fn has_forms(self) -> bool {
        matches!(self, Method::Ogmg | Method::Ocgmg | Method::Template)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    Running,
    Completed,
    /// The descent test failed at oracle point `y_k`.
    LineSearchFailure { k: usize },
    /// A non-finite iterate appeared at index `k`; the trace up to `k` is kept.
    NonFinite { k: usize },
    Converged,
    BudgetExhausted,
    IterationCap,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        matches!(self, Verdict::LineSearchFailure { .. } | Verdict::NonFinite { .. })
    }
}

/// Enough to rebuild the weights a fixed-length run used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRef {
    pub family: Family,
    pub t: usize,
    /// Lipschitz value the run used (`L` or `L_0`).
    pub l: f64,
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub k: usize,
    pub oracle_calls: usize,
    pub phase: String,
    #[serde(rename = "L_k")]
    pub l_k: f64,
    #[serde(rename = "F_x")]
    pub f_x: Option<f64>,
    pub gmap_dualnorm: Option<f64>,
    pub savg_dualnorm: Option<f64>,
    pub wall_s: f64,
}

/// Vector state after oracle call `k`.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub y: Vector,
    pub x: Vector,
    pub g: Vector,
    /// `s_k`, for `k <= T - 1`.
    pub s: Option<Vector>,
    pub v: Option<Vector>,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearchEvent {
    pub k: usize,
    pub phase: String,
    pub trial: f64,
    pub accepted: bool,
}

/// `(y, x, g, L)` at the last oracle point evaluated.
#[derive(Debug, Clone)]
pub struct Output {
    pub y: Vector,
    pub x: Vector,
    pub g: Vector,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub method: Method,
    pub form: Option<Form>,
    pub schedule: Option<ScheduleRef>,
    pub x0: Vector,
    pub rows: Vec<Row>,
    pub states: Vec<IterateState>,
    pub oracle_calls: usize,
    pub wall_s: f64,
    pub events: Vec<LineSearchEvent>,
    pub verdict: Verdict,
    pub output: Option<Output>,
}

impl RunTrace {
    pub fn new(method: Method, form: Option<Form>, x0: Vector) -> Self {
        RunTrace {
            method,
            form,
            schedule: None,
            x0,
            rows: Vec::new(),
            states: Vec::new(),
            oracle_calls: 0,
            wall_s: 0.0,
            events: Vec::new(),
            verdict: Verdict::Running,
            output: None,
        }
    }

    /// Oracle points `y_k`, `k = 1..`, from the snapshots.
    pub fn ys(&self) -> Vec<&Vector> {
        self.states.iter().map(|s| &s.y).collect()
    }

    /// `F(x_k)` column, `NaN` where the value is missing.
    pub fn f_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f_x.unwrap_or(f64::NAN)).collect()
    }

    pub fn last_gmap(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.gmap_dualnorm)
    }

    /// Append a sub-run: its rows (without its `k = 0` row when this trace
    /// already has rows), snapshots and events, with oracle counts offset.
    pub fn append(&mut self, mut other: RunTrace) {
        let (base, t0) = (self.oracle_calls, self.wall_s);
        let skip = usize::from(!self.rows.is_empty() && other.rows.first().is_some_and(|r| r.k == 0));
        for r in other.rows.drain(..).skip(skip) {
            self.rows.push(Row {
                oracle_calls: r.oracle_calls + base,
                wall_s: r.wall_s + t0,
                ..r
            });
        }
        self.states.append(&mut other.states);
        self.events.append(&mut other.events);
        self.oracle_calls += other.oracle_calls;
        self.wall_s += other.wall_s;
    }

    pub fn write_csv<W: Write>(&self, w: W, timing: bool) -> Result<()> {
        write_rows(&self.rows, w, timing)
    }
}

/// Serialize rows; `wall_s` is zeroed unless `timing` so that repeated runs
/// give identical bytes.
pub fn write_rows<W: Write>(rows: &[Row], w: W, timing: bool) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        if timing {
            wr.serialize(r)?;
        } else {
            wr.serialize(Row { wall_s: 0.0, ..r.clone() })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_reader(r);
    let rows = rd.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?;
    if rows.is_empty() {
        return Err(Error::Schema("trace has no rows".into()));
    }
    Ok(rows)
}

/// Largest `|y_k - y'_k|_inf` over common indices, relative to the running
/// maximum of `|y_i|_inf` (at least 1).
pub fn iterate_gap(a: &[IterateState], b: &[IterateState]) -> f64 {
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for (sa, sb) in a.iter().zip(b) {
        scale = scale.max(sa.y.amax()).max(sb.y.amax());
        worst = worst.max((&sa.y - &sb.y).amax() / scale);
    }
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    worst
}
