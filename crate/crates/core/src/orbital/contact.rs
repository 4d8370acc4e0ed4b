use super::{Constellation, NodeId};

/// A maximal interval of mutual visibility, clipped to the search horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactWindow {
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub start_s: f64,
    pub end_s: f64,
}

impl ContactWindow {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Coarse scan step and bisection tolerance used to locate window edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSearch {
    pub coarse_step_s: f64,
    pub tolerance_s: f64,
}

impl Default for ContactSearch {
    fn default() -> Self {
        Self { coarse_step_s: 10.0, tolerance_s: 0.1 }
    }
}

// Shrinks [lo, hi] around the switch of `visible`, assuming
// visible(lo) == from_state and visible(hi) != from_state.
fn bisect(visible: &impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, from_state: bool, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if visible(mid) == from_state {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

// First time in (from, limit] where `visible` differs from `state`, as a
// bracketing pair (last sample with `state`, first without).
fn scan_for_change(
    visible: &impl Fn(f64) -> bool,
    from: f64,
    limit: f64,
    state: bool,
    search: &ContactSearch,
) -> Option<(f64, f64)> {
    let mut prev = from;
    let mut i = 1u64;
    loop {
        let t = (from + i as f64 * search.coarse_step_s).min(limit);
        if visible(t) != state {
            return Some(bisect(visible, prev, t, state, search.tolerance_s));
        }
        if t >= limit {
            return None;
        }
        prev = t;
        i += 1;
    }
}

/// Earliest visibility window of a generic predicate starting at or after
/// `from`, searched up to `from + horizon`. An already open window is
/// returned with `start == from`; a window still open at the horizon ends there.
pub fn next_window(
    visible: impl Fn(f64) -> bool,
    from: f64,
    horizon: f64,
    search: &ContactSearch,
) -> Option<(f64, f64)> {
    if !(horizon > 0.0) {
        return None;
    }
    let limit = from + horizon;
    let start = if visible(from) {
        from
    } else {
        scan_for_change(&visible, from, limit, false, search)?.1
    };
    let end = match scan_for_change(&visible, start, limit, true, search) {
        Some((last_visible, _)) => last_visible,
        None => limit,
    };
    if end > start {
        Some((start, end))
    } else {
        // sub-tolerance sliver: report it with the tolerance as width
        Some((start, (start + search.tolerance_s).min(limit)))
    }
}

/// Earliest contact between `a` and `b` with start ≥ `from_t`.
pub fn next_contact(
    constellation: &Constellation,
    a: NodeId,
    b: NodeId,
    from_t: f64,
    horizon_s: f64,
) -> Option<ContactWindow> {
    next_window(|t| constellation.visible(a, b, t), from_t, horizon_s, &ContactSearch::default()).map(
        |(start_s, end_s)| ContactWindow { node_a: a, node_b: b, start_s, end_s },
    )
}

/// How long `a` and `b` stay continuously visible after `t`, clamped to
/// `horizon_s`. Zero when they are not visible at `t`.
pub fn remaining_contact_time(constellation: &Constellation, a: NodeId, b: NodeId, t: f64, horizon_s: f64) -> f64 {
    let visible = |s: f64| constellation.visible(a, b, s);
    if !(horizon_s > 0.0) || !visible(t) {
        return 0.0;
    }
    match scan_for_change(&visible, t, t + horizon_s, true, &ContactSearch::default()) {
        Some((last_visible, _)) => last_visible - t,
        None => horizon_s,
    }
}
