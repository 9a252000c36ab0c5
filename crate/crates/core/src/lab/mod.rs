//! Named end-to-end experiments producing [`ExperimentReport`]s.

pub mod coupling;
pub mod cutoff;
pub mod mc;
pub mod profiles;
pub mod report;
pub mod three_phase;

pub use coupling::{area_audit, tv_upper_curve, AreaAuditParams, Coupling, TvUpperParams};
pub use cutoff::{cutoff_profile, CutoffParams, KRule, Mode, ModelKind};
pub use profiles::{
    analytic_suite, separation_profile, wilson_sandwich, AnalyticParams, SeparationParams,
    WilsonSandwichParams,
};
pub use report::{ExperimentReport, Row, Verdict, CSV_COLUMNS};
pub use three_phase::{phase_times, schedule, three_phase_schedule, ThreePhaseParams};

/// A registered experiment and its one-line description.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub doc: &'static str,
}

const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "analytic",
        doc: "two-card and two-site closed forms against every exact routine",
    },
    ExperimentInfo {
        name: "area-audit",
        doc: "corner-flip coupling: per-event area steps, mean area, merge times",
    },
    ExperimentInfo {
        name: "cutoff",
        doc: "mixing times T(eps) from exact or simulated distance profiles",
    },
    ExperimentInfo {
        name: "separation",
        doc: "separation from the top state with the extremal and half-time identities",
    },
    ExperimentInfo {
        name: "three-phase",
        doc: "censored three-phase schedule from the identity with structural checks",
    },
    ExperimentInfo {
        name: "tv-upper",
        doc: "coupling upper curve for the distance from the worst start",
    },
    ExperimentInfo {
        name: "wilson-sandwich",
        doc: "exact distance between the first-mode lower bound and 10k exp(-lambda t)",
    },
];

/// Registered experiments in a fixed order.
pub fn list_experiments() -> &'static [ExperimentInfo] {
    EXPERIMENTS
}
