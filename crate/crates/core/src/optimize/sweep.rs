//! ε-continuation: minimize `F_ε` along a decreasing schedule with warm
//! starts, then score the result with the sharp functional.

use serde::Serialize;

use super::{binarize, minimize_f_eps_observed, printed_report, Diagnostics, Objective};
use crate::error::Result;
use crate::ext::ExtReal;
use crate::fields::{l1_distance, ScalarField};
use crate::geometry::{signed_distance, DistanceReport};
use crate::phasefield::mollify;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub eta: f64,
    pub f_eps: f64,
    pub d_eta: f64,
    pub p_eps: f64,
    /// `‖u_ε − u_prev‖_{L¹}`, the previous minimizer being the starting
    /// guess for the first record.
    pub l1_step: f64,
    /// `F_ε` of the target mollified at width `ε`.
    pub mollified_f: f64,
    #[serde(skip)]
    pub minimizer: ScalarField,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTrace {
    pub records: Vec<SweepRecord>,
    #[serde(skip)]
    pub initial: ScalarField,
    /// The last minimizer binarized at ½.
    #[serde(skip)]
    pub final_mask: ScalarField,
    pub f_zero: ExtReal,
    /// Printed set of `final_mask` against the target.
    pub final_report: DistanceReport,
    /// Printed set of the target itself used as the mask.
    pub identity_report: DistanceReport,
    pub stalled: bool,
}

impl SweepTrace {
    pub const CSV_HEADER: &'static str = "eps,eta,f_eps,d_eta,p_eps,l1_step,mollified_f,iterations,converged,stalled";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.eps,
                r.eta,
                r.f_eps,
                r.d_eta,
                r.p_eps,
                r.l1_step,
                r.mollified_f,
                r.diagnostics.iterations.len(),
                r.diagnostics.converged,
                r.diagnostics.stalled
            ));
        }
        s
    }

    pub fn last(&self) -> &SweepRecord {
        self.records.last().expect("nonempty schedule")
    }
}

/// The target mollified at width `eps` and projected onto the feasible set.
pub fn mollified_target(obj: &Objective, eps: f64) -> ScalarField {
    if obj.target().is_empty() {
        return obj.target().grid().zeros_like();
    }
    obj.project(&mollify(&signed_distance(obj.target()), eps))
}

/// Runs the schedule of `obj`. Stalls are recorded and the sweep goes on.
pub fn gamma_sweep(obj: &Objective) -> Result<SweepTrace> {
    gamma_sweep_observed(obj, &mut |_, _, _| {})
}

/// [`gamma_sweep`], calling `observe(stage, iter, u)` after every accepted
/// descent step, `stage` being the index into the schedule.
pub fn gamma_sweep_observed(obj: &Objective, observe: &mut dyn FnMut(usize, usize, &ScalarField)) -> Result<SweepTrace> {
    let schedule = obj.config().eps_schedule.clone();
    let initial = mollified_target(obj, schedule[0]);
    let mut u = initial.clone();
    let mut records = Vec::with_capacity(schedule.len());
    for (stage, &eps) in schedule.iter().enumerate() {
        let (next, diag) = minimize_f_eps_observed(obj, &u, eps, &mut |it, v| observe(stage, it, v))?;
        let ev = obj.evaluate(&next, eps)?;
        let mollified_f = obj.f_eps(&mollified_target(obj, eps), eps)?.unwrap();
        records.push(SweepRecord {
            eps,
            eta: obj.eta(eps),
            f_eps: ev.f.unwrap(),
            d_eta: ev.d_eta,
            p_eps: ev.p_eps.unwrap(),
            l1_step: l1_distance(&next, &u)?,
            mollified_f,
            minimizer: next.clone(),
            diagnostics: diag,
        });
        u = next;
    }
    let final_mask = binarize(&u);
    let identity = obj.target().grid().zip_map(obj.feasible(), |a, b| a * b);
    Ok(SweepTrace {
        f_zero: obj.f_zero(&u)?,
        final_report: printed_report(obj.imager(), &final_mask, obj.target())?,
        identity_report: printed_report(obj.imager(), &identity, obj.target())?,
        stalled: records.iter().any(|r| r.diagnostics.stalled),
        records,
        initial,
        final_mask,
    })
}
