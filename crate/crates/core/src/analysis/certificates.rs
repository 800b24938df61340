//! Runtime certificates for fixed-length runs. Every check works on the
//! scalar trace (`F(x_k)`, `||g_k||_*`, `||s_k||_* / (A_k - A_0)`) together
//! with the weights rebuilt from `(family, T, L)`, so a CSV trace can be
//! verified without the vectors.

use serde::Serialize;

use crate::engines::{Row, RunTrace, ScheduleRef, Verdict};
use crate::error::{Error, Result};
use crate::schedules::rates::{rate_constants, UNIFIED_CONSTANT};
use crate::schedules::{ocgmg_schedule, ogmg_schedule, t_sequence, theta_table, Family, Schedule, TFamily};

use super::scalar::r as r_fn;

/// Relative slack allowed on every inequality.
pub const SLACK_TOL: f64 = 1e-9;

/// Lags used for the `G_l / (T + T_l)^2` ladder.
pub const LADDER_LAGS: [usize; 8] = [1, 2, 5, 10, 100, 1000, 10_000, 100_000];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub k: Option<usize>,
    /// The inequality in symbols, `lhs <= rhs`.
    pub anchor: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Informational checks do not affect [`CertificateReport::pass`].
    pub asserted: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
}

impl CertificateReport {
    pub fn push(&mut self, name: &str, k: Option<usize>, anchor: &'static str, lhs: f64, rhs: f64, asserted: bool) {
        let slack = rhs - lhs;
        let pass = slack >= -SLACK_TOL * 1f64.max(lhs.abs()).max(rhs.abs());
        self.checks.push(Check {
            name: name.to_string(),
            k,
            anchor,
            lhs,
            rhs,
            slack,
            asserted,
            pass,
        });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.asserted)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.asserted && !c.pass)
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> {
        self.checks.iter().filter(move |c| c.name == name)
    }

    pub fn extend(&mut self, other: CertificateReport) {
        self.checks.extend(other.checks);
    }
}

/// Rebuild the weights a run used.
pub fn schedule_for(r: &ScheduleRef) -> Result<Schedule> {
    match r.family {
        Family::OgmG => ogmg_schedule(r.t, r.l, 1.0),
        Family::OcgmG => Ok(ocgmg_schedule(r.t, 1.0)?.rescaled(r.l)),
        Family::Custom => Err(Error::Unsupported(
            "certificates need a named schedule family".into(),
        )),
    }
}

/// Scalar view of rows `k = 0..=m`.
struct Scalars {
    f: Vec<f64>,
    g: Vec<f64>,
    /// `||s_k||_*` for `k = 1..T-1`
    s: Vec<f64>,
}

fn scalars(rows: &[Row], sched: &Schedule, upto: usize) -> Result<Scalars> {
    if rows.is_empty() {
        return Err(Error::Schema("trace has no rows".into()));
    }
    let t = sched.len();
    let m = upto.min(rows.len() - 1);
    if m > t {
        return Err(Error::Schema(format!("trace has {} rows for T = {t}", rows.len())));
    }
    let mut out = Scalars {
        f: Vec::with_capacity(m + 1),
        g: vec![f64::NAN],
        s: vec![f64::NAN],
    };
    for (k, row) in rows[..=m].iter().enumerate() {
        if row.k != k {
            return Err(Error::Schema(format!("row {k} has k = {}", row.k)));
        }
        let f = row
            .f_x
            .ok_or_else(|| Error::Schema(format!("row {k} has no F_x")))?;
        out.f.push(f);
        if k == 0 {
            continue;
        }
        out.g.push(
            row.gmap_dualnorm
                .ok_or_else(|| Error::Schema(format!("row {k} has no gmap_dualnorm")))?,
        );
        if k < t {
            let sv = row
                .savg_dualnorm
                .ok_or_else(|| Error::Schema(format!("row {k} has no savg_dualnorm")))?;
            out.s.push(sv * (sched.acc(k) - sched.a0()));
        }
    }
    Ok(out)
}

/// Certificates of a fixed-length OGM-G, OCGM-G or FISTA-G trace. After a
/// line-search failure at `k` only indices `< k` are certified.
pub fn certify_rows(rows: &[Row], r: &ScheduleRef, verdict: Verdict) -> Result<CertificateReport> {
    let sched = schedule_for(r)?;
    let upto = match verdict {
        Verdict::LineSearchFailure { k } | Verdict::NonFinite { k } => k.saturating_sub(1),
        _ => usize::MAX,
    };
    let sc = scalars(rows, &sched, upto)?;
    let mut rep = CertificateReport::default();
    match r.family {
        Family::OgmG => ogmg_checks(&mut rep, &sc, &sched, r.l)?,
        Family::OcgmG => ocgmg_checks(&mut rep, &sc, &sched, r.l)?,
        Family::Custom => unreachable!("rejected by schedule_for"),
    }
    Ok(rep)
}

/// [`certify_rows`] on an in-memory trace.
pub fn certify(tr: &RunTrace) -> Result<CertificateReport> {
    let r = tr
        .schedule
        .ok_or_else(|| Error::Unsupported(format!("{} runs carry no schedule", tr.method.as_str())))?;
    certify_rows(&tr.rows, &r, tr.verdict)
}

fn ogmg_checks(rep: &mut CertificateReport, sc: &Scalars, s: &Schedule, l: f64) -> Result<()> {
    let t = s.len();
    let m = sc.f.len() - 1;
    let a0 = s.a0();
    for k in 1..=m.min(t - 1) {
        let drop = sc.f[0] - sc.f[k];
        rep.push(
            "ogmg.midway",
            Some(k),
            "B_{k,T} ||s_k||^2 <= A_0 (f(x_0) - f(x_k))",
            s.b_to_t(k) * sc.s[k].powi(2),
            a0 * drop,
            true,
        );
        let sbar = sc.s[k] / (s.acc(k) - a0);
        rep.push(
            "ogmg.averaged",
            Some(k),
            "||s_k / (A_k - A_0)||^2 < 4 L / k^2 (f(x_0) - f(x_k))",
            sbar * sbar,
            4.0 * l / (k * k) as f64 * drop,
            true,
        );
    }
    if m == t {
        let drop = sc.f[0] - sc.f[t];
        let gt2 = sc.g[t].powi(2);
        rep.push(
            "ogmg.final",
            Some(t),
            "||g_T||^2 <= L A_0 / A_{T-1} (f(x_0) - f(x_T))",
            gt2,
            l * a0 / s.acc(t - 1) * drop,
            true,
        );
        rep.push(
            "ogmg.final-rate",
            Some(t),
            "||g_T||^2 < 4 L / T^2 (f(x_0) - f(x_T))",
            gt2,
            4.0 * l / (t * t) as f64 * drop,
            true,
        );
    }
    // the schedule's final factor against the theta recursion
    let th0 = theta_table(t)?[0];
    let factor = a0 / s.acc(t - 1);
    let want = 2.0 / (th0 * th0);
    rep.push("ogmg.factor", None, "A_0 / A_{T-1} = 2 / theta_0^2", (factor - want).abs(), 1e-12 * want, true);
    rep.push("ogmg.factor-rate", None, "2 / theta_0^2 < 4 / T^2", want, 4.0 / (t * t) as f64, true);
    Ok(())
}

fn ocgmg_checks(rep: &mut CertificateReport, sc: &Scalars, s: &Schedule, l0: f64) -> Result<()> {
    let t = s.len();
    let m = sc.f.len() - 1;
    let a0 = s.a0();
    let ts = t_sequence(t, TFamily::Ocgmg)?;
    for k in 1..=m {
        let drop = sc.f[0] - sc.f[k];
        let gk2 = sc.g[k].powi(2);
        let s_term = if k < t { s.b_to_t(k) * sc.s[k].powi(2) } else { 0.0 };
        rep.push(
            "ocgmg.midway",
            Some(k),
            "a_k / (2 L_0) ||g_k||^2 + B_{k,T} ||s_k||^2 <= A_0 (F(x_0) - F(x_k))",
            s.a(k) / (2.0 * l0) * gk2 + s_term,
            a0 * drop,
            true,
        );
        if (2..t).contains(&k) {
            let sbar2 = (sc.s[k] / (s.acc(k) - a0)).powi(2);
            let weight = s.b_to_t(k) * (s.acc(k) - a0).powi(2) / a0;
            rep.push(
                "ocgmg.averaged",
                Some(k),
                "a_k / (2 L_0 A_0) ||g_k||^2 + S_k ||sbar_k||^2 <= F(x_0) - F(x_k)",
                s.a(k) / (2.0 * l0 * a0) * gk2 + weight * sbar2,
                drop,
                true,
            );
            let rate = averaged_rate_from(&ts, k)?;
            if rate > 0.0 {
                rep.push(
                    "ocgmg.averaged-rate",
                    Some(k),
                    "||sbar_k||^2 <= L_0 / (R_k k^2) (F(x_0) - F(x_k))",
                    sbar2,
                    l0 / (rate * (k * k) as f64) * drop,
                    true,
                );
            }
        }
    }
    for k in 2..t {
        let rate = averaged_rate_from(&ts, k)?;
        let weight = s.b_to_t(k) * (s.acc(k) - a0).powi(2) / a0;
        rep.push(
            "ocgmg.averaged-weight",
            Some(k),
            "R_k k^2 / L_0 <= S_k",
            rate * (k * k) as f64 / l0,
            weight,
            true,
        );
        let (floor, anchor) = match t - k {
            1 => (0.03, "0.03 < R_{T-1}"),
            2 => (0.048, "0.048 < R_{T-2}"),
            _ => (0.05, "0.05 < R_k, k <= T-3"),
        };
        rep.push("ocgmg.rate-floor", Some(k), anchor, floor, rate, true);
    }
    if m == t {
        let drop = sc.f[0] - sc.f[t];
        let gt2 = sc.g[t].powi(2);
        let factor = 2.0 * a0 / s.acc(t - 1);
        rep.push(
            "ocgmg.final",
            Some(t),
            "||g_T||^2 <= 2 A_0 L_0 / A_{T-1} (F(x_0) - F(x_T))",
            gt2,
            factor * l0 * drop,
            true,
        );
        rep.push(
            "ocgmg.final-unified",
            Some(t),
            "||g_T||^2 <= 56.67 L_0 / (T + 4)^2 (F(x_0) - F(x_T))",
            gt2,
            UNIFIED_CONSTANT * l0 / (t as f64 + 4.0).powi(2) * drop,
            true,
        );
    }
    rep.extend(ladder(t)?);
    Ok(())
}

/// `R_k = t_k (t_k - 2) / 2 * r(t_{k-1}, k)` from a precomputed `t` table.
fn averaged_rate_from(ts: &[f64], k: usize) -> Result<f64> {
    Ok(ts[k] * (ts[k] - 2.0) / 2.0 * r_fn(ts[k - 1], k as f64)?)
}

/// `2 A_0 / A_{T-1} <= G_l / (T + T_l)^2` for every lag with `T >= l + 2`,
/// and (informational) `G_l / (T + T_l)^2 <= 56.67 / (T + 4)^2`.
pub fn ladder(t: usize) -> Result<CertificateReport> {
    let s = ocgmg_schedule(t, 1.0)?;
    let factor = 2.0 * s.a0() / s.acc(t - 1);
    let unified = UNIFIED_CONSTANT / (t as f64 + 4.0).powi(2);
    let mut rep = CertificateReport::default();
    rep.push("ladder.unified", Some(t), "2 A_0 / A_{T-1} <= 56.67 / (T + 4)^2", factor, unified, true);
    for l in LADDER_LAGS.into_iter().filter(|l| t >= l + 2) {
        let rung = rate_constants(l)?.factor(t);
        rep.push("ladder.rung", Some(l), "2 A_0 / A_{T-1} <= G_l / (T + T_l)^2", factor, rung, true);
        rep.push("ladder.order", Some(l), "G_l / (T + T_l)^2 <= 56.67 / (T + 4)^2", rung, unified, false);
    }
    Ok(rep)
}
