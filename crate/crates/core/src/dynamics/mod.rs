//! Graphical constructions: update streams, censoring, the shuffle and the
//! exclusion process driven by a shared stream, and the corner-flip coupling.

mod corner;
mod sep;
mod shuffle;
mod stream;

pub use corner::{
    active_points, corner_flip_run, corner_flip_run_with, ActivePoint, ActivePoints, Corner,
    CornerFlipEvent, CornerFlipRun, CornerFlipStream, PairTrace, TraceSample,
};
pub use sep::{run_sep, run_sep_events};
pub use shuffle::{
    apply_update, grand_coupling, run_discrete, run_trajectory, run_trajectory_events,
    sort_adjacent,
};
pub use stream::{
    log_spaced_grid, sample_update_stream, CensoringScheme, UpdateEvent, UpdateEvents, UpdateStream,
};
