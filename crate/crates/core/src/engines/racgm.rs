//! Adaptive restart wrapper around ACGM. A reference run with the `E_0`
//! heuristic fixes the first threshold on `A_k`; later runs stop at the
//! threshold, which is multiplied by `s` whenever a restart makes too much
//! progress relative to the previous one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::space::Vector;

use super::acgm::{Acgm, LineSearch, StepOutcome};
use super::trace::{Method, RunTrace, Verdict};

/// Iteration cap for the reference run.
pub const REFERENCE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RacgmParams {
    pub l0: f64,
    pub ls: LineSearch,
    pub sigma: f64,
    pub s_mult: f64,
    /// Oracle-call budget.
    pub budget: usize,
    /// Stop once the mapping at a restart point has dual norm `<= eps`.
    pub eps: Option<f64>,
}

impl Default for RacgmParams {
    fn default() -> Self {
        RacgmParams {
            l0: 1.0,
            ls: LineSearch::default(),
            sigma: (-2f64).exp(),
            s_mult: 4.0,
            budget: 10_000,
            eps: None,
        }
    }
}

/// One ACGM run of the wrapper; `j = 0` is the reference run.
#[derive(Debug, Clone, Serialize)]
pub struct Restart {
    pub j: usize,
    /// `F` at the start point `r_j`.
    pub f_start: f64,
    /// `F(r_{j+1})`
    pub f_out: f64,
    /// Dual norm of the first mapping, taken at `y_1 = r_j`.
    pub gmap_start: Option<f64>,
    /// `U_{j+1} = A_k` at exit.
    pub u: f64,
    /// Threshold the run was given (`inf` for the reference run).
    pub u_bar: f64,
    pub n: usize,
    pub calls_end: usize,
    /// Threshold multiplied by `s` after this run.
    pub adjusted: bool,
}

#[derive(Debug, Clone)]
pub struct RacgmResult {
    pub restarts: Vec<Restart>,
    pub r: Vector,
    pub f_r: f64,
    pub adjustments: usize,
    pub trace: RunTrace,
}

pub fn run_racgm(p: &CompositeProblem, r0: &Vector, params: &RacgmParams) -> Result<RacgmResult> {
    let RacgmParams {
        l0,
        ls,
        sigma,
        s_mult,
        budget,
        eps,
    } = *params;
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::invalid(format!("sigma must lie in (0, 1/2), got {sigma}")));
    }
    if !(s_mult > 1.0 && s_mult.is_finite()) {
        return Err(Error::invalid(format!("s must exceed 1, got {s_mult}")));
    }
    ls.validate()?;
    let ratio = sigma / (1.0 - sigma);
    let mut start = r0.clone();
    if !p.objective(&start).is_finite() {
        start = p.prox(1.0 / l0, &start)?;
    }
    let mut trace = RunTrace::new(Method::Racgm, None, start.clone());
    let mut restarts = Vec::new();
    let mut f_hist = vec![p.value(&start)?];

    // reference run with E_0
    let mut m = Acgm::new(p, &start, l0, ls, false)?;
    m.set_phase("acgm:0".into());
    let root_s = s_mult.sqrt();
    let mut outcome = Verdict::Running;
    while outcome == Verdict::Running {
        match m.step(budget)? {
            StepOutcome::Accepted => {}
            StepOutcome::Budget => outcome = Verdict::BudgetExhausted,
            StepOutcome::NonFinite => outcome = Verdict::NonFinite { k: m.k + 1 },
        }
        let k = m.k;
        if outcome == Verdict::Running && k >= 2 {
            let mi = (k as f64 / root_s).ceil() as usize;
            let f = &m.f_hist;
            if mi >= 1 && f[mi] - f[k] <= ratio * (f[0] - f[mi]) {
                break;
            }
        }
        if k >= REFERENCE_CAP {
            outcome = Verdict::IterationCap;
        }
    }
    let (mut r, mut f_r) = m.output();
    let mut u_bar = m.acc();
    restarts.push(Restart {
        j: 0,
        f_start: f_hist[0],
        f_out: f_r,
        gmap_start: m.first_gmap,
        u: m.acc(),
        u_bar: f64::INFINITY,
        n: m.k,
        calls_end: m.trace.oracle_calls,
        adjusted: false,
    });
    trace.append(m.finish());
    f_hist.push(f_r);
    let mut adjustments = 0usize;

    let mut j = 1;
    while outcome == Verdict::Running {
        let mut m = Acgm::new(p, &r, l0, ls, false)?;
        m.set_phase(format!("acgm:{j}"));
        let cap = budget - trace.oracle_calls;
        loop {
            match m.step(cap)? {
                StepOutcome::Accepted => {}
                StepOutcome::Budget => {
                    outcome = Verdict::BudgetExhausted;
                    break;
                }
                StepOutcome::NonFinite => {
                    outcome = Verdict::NonFinite { k: m.k + 1 };
                    break;
                }
            }
            if m.k == 1 && eps.is_some_and(|e| m.first_gmap.is_some_and(|g| g <= e)) {
                outcome = Verdict::Converged;
                break;
            }
            if m.acc() >= u_bar {
                break;
            }
        }
        let (nr, nf) = m.output();
        let adjusted = outcome == Verdict::Running && f_r - nf > ratio * (f_hist[j - 1] - f_r);
        restarts.push(Restart {
            j,
            f_start: f_r,
            f_out: nf,
            gmap_start: m.first_gmap,
            u: m.acc(),
            u_bar,
            n: m.k,
            calls_end: trace.oracle_calls + m.trace.oracle_calls,
            adjusted,
        });
        trace.append(m.finish());
        if adjusted {
            u_bar *= s_mult;
            adjustments += 1;
        }
        r = nr;
        f_r = nf;
        f_hist.push(f_r);
        j += 1;
    }
    trace.verdict = outcome;
    Ok(RacgmResult {
        restarts,
        r,
        f_r,
        adjustments,
        trace,
    })
}
