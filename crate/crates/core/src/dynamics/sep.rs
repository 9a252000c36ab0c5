use super::stream::{CensoringScheme, UpdateEvent, UpdateStream};
use crate::error::{Error, Result};
use crate::path::LatticePath;

/// Applies events to a path: a set bit moves the particle of the pair to the
/// left (the corner at `site` goes up), a clear bit moves it right.
pub fn run_sep_events<I>(init: &LatticePath, events: I) -> LatticePath
where
    I: IntoIterator<Item = UpdateEvent>,
{
    let mut path = init.clone();
    for e in events {
        path.push(e.site, e.bit);
    }
    path
}

pub fn run_sep(
    init: &LatticePath,
    stream: &UpdateStream,
    scheme: Option<&CensoringScheme>,
) -> Result<LatticePath> {
    if init.n() != stream.n() {
        return Err(Error::SizeMismatch {
            left: init.n(),
            right: stream.n(),
        });
    }
    if let Some(c) = scheme {
        c.check_covers(stream)?;
    }
    let kept = stream
        .events()
        .iter()
        .filter(|e| scheme.is_none_or(|c| c.allows(e.time, e.site)))
        .copied();
    Ok(run_sep_events(init, kept))
}
