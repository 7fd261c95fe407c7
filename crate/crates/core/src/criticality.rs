//! Criticality of a failure mode before and after mitigation.

use crate::model::{Deltas, FailureMode, PreventiveAction};
use crate::rank::{Dimension, Rank, ScaleBounds, ScaleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankTriple {
    pub severity: Rank,
    pub occurrence: Rank,
    pub detectability: Rank,
}

impl RankTriple {
    pub fn of(fm: &FailureMode) -> Self {
        RankTriple {
            severity: fm.severity,
            occurrence: fm.occurrence,
            detectability: fm.detectability,
        }
    }

    pub fn criticality(self) -> u32 {
        product(self.severity, self.occurrence, self.detectability)
    }
}

pub(crate) fn product(s: Rank, o: Rank, d: Rank) -> u32 {
    u32::from(s.value()) * u32::from(o.value()) * u32::from(d.value())
}

/// `C = S * O * D`, with every rank checked against the scale.
pub fn criticality(bounds: ScaleBounds, s: Rank, o: Rank, d: Rank) -> Result<u32, ScaleError> {
    bounds.check(Dimension::Severity, s)?;
    bounds.check(Dimension::Occurrence, o)?;
    bounds.check(Dimension::Detectability, d)?;
    Ok(product(s, o, d))
}

/// Rank left after subtracting `total` from `initial`, floored at the scale
/// minimum and never above the initial rank.
pub(crate) fn reduce(initial: u8, total: u32, floor: u8) -> u8 {
    let floor = floor.min(initial);
    let lowered = u32::from(initial).saturating_sub(total);
    lowered.max(u32::from(floor)) as u8
}

pub(crate) fn residual_from_totals(initial: [u8; 3], totals: [u32; 3], floor: u8) -> [u8; 3] {
    [
        reduce(initial[0], totals[0], floor),
        reduce(initial[1], totals[1], floor),
        reduce(initial[2], totals[2], floor),
    ]
}

/// Ranks of `fm` once every action in `selected` is implemented. Deltas of
/// complementary actions add up; actions without a mitigation entry for `fm`
/// contribute nothing.
pub fn residual_ranks<'a, I>(fm: &FailureMode, selected: I, bounds: ScaleBounds) -> RankTriple
where
    I: IntoIterator<Item = &'a PreventiveAction>,
{
    let mut totals = [0u32; 3];
    for action in selected {
        if let Some(d) = action.mitigations.get(&fm.id) {
            let Deltas {
                severity,
                occurrence,
                detectability,
            } = *d;
            totals[0] += u32::from(severity);
            totals[1] += u32::from(occurrence);
            totals[2] += u32::from(detectability);
        }
    }
    let initial = [fm.severity.value(), fm.occurrence.value(), fm.detectability.value()];
    let [s, o, d] = residual_from_totals(initial, totals, bounds.min);
    RankTriple {
        severity: Rank::new(s),
        occurrence: Rank::new(o),
        detectability: Rank::new(d),
    }
}

pub fn residual_criticality<'a, I>(fm: &FailureMode, selected: I, bounds: ScaleBounds) -> u32
where
    I: IntoIterator<Item = &'a PreventiveAction>,
{
    residual_ranks(fm, selected, bounds).criticality()
}

/// Strictly above the threshold; sitting exactly on it is acceptable.
pub fn is_critical<'a, I>(fm: &FailureMode, selected: I, bounds: ScaleBounds) -> bool
where
    I: IntoIterator<Item = &'a PreventiveAction>,
{
    residual_criticality(fm, selected, bounds) > fm.critical_threshold
}
