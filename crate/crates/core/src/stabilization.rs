//! Coordinatewise stabilization of solutions across a schedule of prefixes.

use serde::Serialize;

/// How much a STABILIZED verdict is worth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    /// Agreement over the window only; later prefixes may still move it.
    Heuristic,
    /// Every constraint that can ever mention the coordinate's component has
    /// been enumerated, so the value is final.
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Stabilized,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateReport<V> {
    pub id: usize,
    pub status: Status,
    pub value: Option<V>,
    pub strength: Option<Strength>,
    /// Value at each schedule step, `None` where the coordinate was absent.
    pub history: Vec<Option<V>>,
}

/// Outcome of a compactness run over a prefix schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport<V> {
    pub schedule: Vec<usize>,
    pub window: usize,
    pub coordinates: Vec<CoordinateReport<V>>,
    /// Largest `L` such that constraints `0..L` all vanish under
    /// `final_assignment`.
    pub verified_prefix: usize,
    pub final_assignment: Vec<(usize, V)>,
    pub note: &'static str,
}

pub(crate) const HEURISTIC_NOTE: &str =
    "stabilization is a heuristic certificate: a global solution exists by compactness, \
     but canonical prefix solutions need not stabilize; verified_prefix is exact";

impl<V> StabilizationReport<V> {
    pub fn all_stabilized(&self) -> bool {
        self.coordinates
            .iter()
            .all(|c| c.status == Status::Stabilized)
    }

    pub fn coordinate(&self, id: usize) -> Option<&CoordinateReport<V>> {
        self.coordinates.iter().find(|c| c.id == id)
    }
}

/// Value shared by the last `window` entries of `history`, if they are all
/// present and pairwise `agree`.
pub(crate) fn window_value<V: Clone>(
    history: &[Option<V>],
    window: usize,
    agree: impl Fn(&[&V]) -> bool,
) -> Option<V> {
    if window == 0 || history.len() < window {
        return None;
    }
    let tail: Option<Vec<&V>> = history[history.len() - window..]
        .iter()
        .map(|v| v.as_ref())
        .collect();
    let tail = tail?;
    if agree(&tail) {
        Some(tail[tail.len() - 1].clone())
    } else {
        None
    }
}

/// Spread of a window of reals, `max − min`.
pub(crate) fn spread(values: &[&f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(**v));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(**v));
    max - min
}

pub(crate) fn check_schedule(schedule: &[usize]) -> bool {
    schedule.windows(2).all(|w| w[0] < w[1])
}
