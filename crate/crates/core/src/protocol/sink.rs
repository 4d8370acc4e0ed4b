use crate::link::{transfer_time, LinkError, LinkParams};
use crate::orbital::{next_contact, remaining_contact_time, Constellation, NodeId};

/// Time to distribute, train and aggregate within one plane:
/// `⌊K/2⌋·T_c + T_L + ⌊K/2⌋·T_c`.
pub fn aggregation_time(num_satellites: usize, hop_time_s: f64, compute_time_s: f64) -> f64 {
    let half = (num_satellites / 2) as f64;
    half * hop_time_s + compute_time_s + half * hop_time_s
}

/// Largest transfer time of a `payload_bits` message over any ring edge of `plane` at `t`.
pub fn max_adjacent_transfer_time(
    constellation: &Constellation,
    plane: usize,
    link: &LinkParams,
    payload_bits: u64,
    t: f64,
) -> Result<f64, LinkError> {
    let ring = constellation.ring(plane);
    let k = ring.len();
    let edges = match k {
        0 | 1 => 0,
        2 => 1,
        _ => k,
    };
    let mut worst = 0.0f64;
    for i in 0..edges {
        let (a, b) = (ring[i], ring[(i + 1) % k]);
        let d_m = constellation.distance_km(a, b, t).map_err(|_| LinkError::Unavailable)? * 1e3;
        worst = worst.max(transfer_time(link, d_m, payload_bits as f64, constellation.visible(a, b, t))?);
    }
    Ok(worst)
}

/// Estimate of the in-plane aggregation time made at `t`; `compute_times_s`
/// are the local training times of the plane's satellites.
pub fn estimate_aggregation_time(
    constellation: &Constellation,
    plane: usize,
    link: &LinkParams,
    payload_bits: u64,
    compute_times_s: &[f64],
    t: f64,
) -> Result<f64, LinkError> {
    let t_c = max_adjacent_transfer_time(constellation, plane, link, payload_bits, t)?;
    let t_l = compute_times_s.iter().copied().fold(0.0, f64::max);
    Ok(aggregation_time(constellation.ring(plane).len(), t_c, t_l))
}

/// Start of the first PS contact of `sat` at or after `from`, within `horizon_s`.
pub fn next_contact_start(constellation: &Constellation, sat: NodeId, from: f64, horizon_s: f64) -> Option<f64> {
    next_contact(constellation, sat, NodeId::PS, from, horizon_s).map(|w| w.start_s)
}

/// Search limits used by [`select_sink`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkSearch {
    pub horizon_s: f64,
}

impl Default for SinkSearch {
    fn default() -> Self {
        Self { horizon_s: 12.0 * 3600.0 }
    }
}

/// Satellite of `plane` with the longest remaining PS contact at `at`.
///
/// Ties go to the smaller id. If nobody sees the PS at `at`, the satellite
/// whose next contact starts first is chosen; if nobody has a contact within
/// the horizon, the first satellite of the ring.
pub fn select_sink(constellation: &Constellation, plane: usize, at: f64, search: &SinkSearch) -> NodeId {
    let ring = constellation.ring(plane);
    let mut best: Option<(NodeId, f64)> = None;
    for &sat in &ring {
        if !constellation.visible(sat, NodeId::PS, at) {
            continue;
        }
        let rem = remaining_contact_time(constellation, sat, NodeId::PS, at, search.horizon_s);
        if best.is_none_or(|(_, r)| rem > r) {
            best = Some((sat, rem));
        }
    }
    if let Some((sat, _)) = best {
        return sat;
    }
    let mut soonest: Option<(NodeId, f64)> = None;
    for &sat in &ring {
        if let Some(start) = next_contact_start(constellation, sat, at, search.horizon_s) {
            if soonest.is_none_or(|(_, s)| start < s) {
                soonest = Some((sat, start));
            }
        }
    }
    soonest.map(|(s, _)| s).unwrap_or(ring[0])
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::orbital::{GroundStationSpec, OrbitSpec, PsSite};

    #[test]
    fn aggregation_time_arithmetic() {
        assert_eq!(aggregation_time(8, 2.0, 60.0), 76.0);
        assert_eq!(aggregation_time(1, 2.0, 60.0), 60.0);
        assert_eq!(aggregation_time(5, 1.0, 0.0), 4.0);
    }

    fn reference_walker(ps: PsSite) -> Constellation {
        Constellation::walker(5, 8, 2000.0, 80f64.to_radians(), 1, ps, 0.0).unwrap()
    }

    fn meo() -> PsSite {
        PsSite::Satellite(OrbitSpec {
            plane_index: 0,
            altitude_km: 20000.0,
            inclination_rad: 0.0,
            raan_rad: 0.0,
            num_satellites: 1,
            phase_offset_rad: 0.0,
        })
    }

    #[test]
    fn reference_plane_estimate() {
        let c = reference_walker(meo());
        let link = LinkParams::default();
        let t_c = max_adjacent_transfer_time(&c, 0, &link, 251_456, 0.0).unwrap();
        assert!((t_c - 1.45).abs() < 0.05, "{t_c}");
        let t_e = estimate_aggregation_time(&c, 0, &link, 251_456, &[3.0; 8], 0.0).unwrap();
        assert!((t_e - (8.0 * t_c + 3.0)).abs() < 1e-9);
    }

    #[test]
    fn co_rotating_tie_goes_to_smallest_id() {
        let plane = OrbitSpec {
            plane_index: 0,
            altitude_km: 20000.0,
            inclination_rad: 0.0,
            raan_rad: 0.0,
            num_satellites: 2,
            phase_offset_rad: 0.0,
        };
        let ps = OrbitSpec { phase_offset_rad: PI / 2.0, num_satellites: 1, ..plane.clone() };
        let c = Constellation::new(vec![plane], PsSite::Satellite(ps), 0.0).unwrap();
        for t in [0.0, 1234.5, 40_000.0] {
            assert!(c.visible(NodeId(1), NodeId::PS, t) && c.visible(NodeId(2), NodeId::PS, t));
            assert_eq!(select_sink(&c, 0, t, &SinkSearch { horizon_s: 3600.0 }), NodeId(1));
        }
    }

    #[test]
    fn single_visible_satellite_is_chosen() {
        let c = reference_walker(PsSite::Ground(GroundStationSpec::from_degrees(90.0, 0.0, 10.0)));
        let search = SinkSearch::default();
        let mut checked = 0;
        let mut t = 0.0;
        while t < 20_000.0 && checked < 3 {
            let visible: Vec<_> = c.ring(0).into_iter().filter(|&s| c.visible(s, NodeId::PS, t)).collect();
            if visible.len() == 1 {
                assert_eq!(select_sink(&c, 0, t, &search), visible[0]);
                checked += 1;
            }
            t += 97.0;
        }
        assert!(checked > 0);
    }

    #[test]
    fn invisible_plane_picks_soonest_contact() {
        let c = reference_walker(PsSite::Ground(GroundStationSpec::from_degrees(53.08, 8.80, 10.0)));
        let search = SinkSearch::default();
        let mut t = 0.0;
        while c.ring(2).iter().any(|&s| c.visible(s, NodeId::PS, t)) {
            t += 31.0;
            assert!(t < 86_400.0, "plane never fully out of sight");
        }
        let chosen = select_sink(&c, 2, t, &search);
        let start = next_contact_start(&c, chosen, t, search.horizon_s).unwrap();
        for s in c.ring(2) {
            let other = next_contact_start(&c, s, t, search.horizon_s).unwrap();
            assert!(other >= start, "{s:?} starts at {other}, chosen {chosen:?} at {start}");
        }
    }
}
