//! Solvers. Every run returns a [`RunTrace`].

pub mod acgm;
pub mod meta;
pub mod ocgmg;
pub mod ogmg;
pub mod racgm;
pub mod reduced;
pub mod template;
pub mod trace;

pub use acgm::{run_acgm, run_gm, Acgm, AcgmResult, AcgmStop, LineSearch, StepOutcome, LINE_SEARCH_CAP};
pub use meta::{run_meta, Cycle, MetaInner, MetaParams, MetaResult};
pub use ocgmg::{run_ocgmg, run_ocgmg_with};
pub use ogmg::{run_ogmg, run_ogmg_with};
pub use racgm::{run_racgm, RacgmParams, RacgmResult, Restart};
pub use reduced::{run_reduced, run_reduced_with, Reduced};
pub use template::{run_template, run_template_with, FixedOptions};
pub use trace::{
    iterate_gap, read_rows, write_rows, Form, IterateState, LineSearchEvent, Method, Output, Row,
    RunTrace, ScheduleRef, Verdict,
};
