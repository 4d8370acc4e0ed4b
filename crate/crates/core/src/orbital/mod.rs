//! Circular two-body geometry for a Walker constellation, its parameter
//! server, and the visibility predicates that gate every radio link.

mod contact;

pub use contact::{next_contact, next_window, remaining_contact_time, ContactSearch, ContactWindow};

use std::f64::consts::{PI, TAU};
use std::fmt;

use thiserror::Error;

/// Physical constants shared by every module.
pub mod constants {
    /// Mean Earth radius, km.
    pub const EARTH_RADIUS_KM: f64 = 6371.0;
    /// Geocentric gravitational constant, m^3/s^2.
    pub const GEOCENTRIC_GRAV_CONST_M3S2: f64 = 3.98e14;
    /// Sidereal rotation rate, rad/s.
    pub const EARTH_ROTATION_RATE_RAD_S: f64 = 7.2921159e-5;
    /// m/s
    pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
}

use constants::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitalError {
    #[error("altitude must be non-negative and finite, got {0} km")]
    InvalidAltitude(f64),
    #[error("satellite index {index} out of range for an orbit with {count} satellites")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("orbit {plane} must carry at least one satellite")]
    EmptyOrbit { plane: usize },
    #[error("angle `{name}` = {value} outside its valid range")]
    InvalidAngle { name: &'static str, value: f64 },
    #[error("constellation must contain at least one orbit")]
    NoOrbits,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// Circular orbital speed in m/s for a given altitude.
///
/// A zero altitude is accepted and yields the grazing surface-orbit speed.
pub fn orbital_speed(altitude_km: f64) -> Result<f64, OrbitalError> {
    check_altitude(altitude_km)?;
    let radius_m = (altitude_km + EARTH_RADIUS_KM) * 1e3;
    Ok((GEOCENTRIC_GRAV_CONST_M3S2 / radius_m).sqrt())
}

/// Orbital period in seconds, `2π(r_E + h) / v`.
pub fn orbital_period(altitude_km: f64) -> Result<f64, OrbitalError> {
    let v = orbital_speed(altitude_km)?;
    Ok(TAU * (altitude_km + EARTH_RADIUS_KM) * 1e3 / v)
}

fn check_altitude(altitude_km: f64) -> Result<(), OrbitalError> {
    if !altitude_km.is_finite() || altitude_km < 0.0 {
        return Err(OrbitalError::InvalidAltitude(altitude_km));
    }
    Ok(())
}

/// Identifier shared by satellites and the parameter server.
///
/// Satellites are numbered `1..=K` plane by plane; the parameter server is
/// always [`NodeId::PS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const PS: NodeId = NodeId(0);

    pub fn is_ps(self) -> bool {
        self == Self::PS
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ps() {
            write!(f, "PS")
        } else {
            write!(f, "sat{}", self.0)
        }
    }
}

/// Earth-centred inertial position in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEci {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PositionEci {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }
}

/// One circular orbital plane holding `num_satellites` equally spaced satellites.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSpec {
    pub plane_index: usize,
    pub altitude_km: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub num_satellites: usize,
    /// Anomaly of satellite 0 at t = 0.
    pub phase_offset_rad: f64,
}

impl OrbitSpec {
    pub fn validate(&self) -> Result<(), OrbitalError> {
        check_altitude(self.altitude_km)?;
        if self.num_satellites == 0 {
            return Err(OrbitalError::EmptyOrbit { plane: self.plane_index });
        }
        check_angle("raan_rad", self.raan_rad, 0.0, TAU)?;
        check_angle("phase_offset_rad", self.phase_offset_rad, 0.0, TAU)?;
        if !(0.0..=PI).contains(&self.inclination_rad) {
            return Err(OrbitalError::InvalidAngle { name: "inclination_rad", value: self.inclination_rad });
        }
        Ok(())
    }

    pub fn radius_km(&self) -> f64 {
        self.altitude_km + EARTH_RADIUS_KM
    }

    pub fn period_s(&self) -> f64 {
        let r_m = self.radius_km() * 1e3;
        TAU * r_m / (GEOCENTRIC_GRAV_CONST_M3S2 / r_m).sqrt()
    }
}

fn check_angle(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), OrbitalError> {
    if !value.is_finite() || value < lo || value >= hi {
        return Err(OrbitalError::InvalidAngle { name, value });
    }
    Ok(())
}

/// Propagates satellite `sat_index` of `orbit` to time `t` (seconds).
pub fn satellite_position(orbit: &OrbitSpec, sat_index: usize, t: f64) -> Result<PositionEci, OrbitalError> {
    if sat_index >= orbit.num_satellites {
        return Err(OrbitalError::IndexOutOfRange { index: sat_index, count: orbit.num_satellites });
    }
    Ok(propagate(orbit, sat_index, t))
}

fn propagate(orbit: &OrbitSpec, sat_index: usize, t: f64) -> PositionEci {
    let r = orbit.radius_km();
    // reduce the time term modulo the period first so long runs keep full precision
    let period = orbit.period_s();
    let frac = (t / period).rem_euclid(1.0);
    let anomaly = orbit.phase_offset_rad + TAU * sat_index as f64 / orbit.num_satellites as f64 + TAU * frac;
    let (su, cu) = anomaly.sin_cos();
    let (si, ci) = orbit.inclination_rad.sin_cos();
    let (so, co) = orbit.raan_rad.sin_cos();
    PositionEci::new(r * (co * cu - so * ci * su), r * (so * cu + co * ci * su), r * si * su)
}

/// A ground station on the spherical Earth.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStationSpec {
    pub latitude_rad: f64,
    pub longitude_rad: f64,
    pub altitude_km: f64,
    pub min_elevation_rad: f64,
}

impl GroundStationSpec {
    pub fn from_degrees(lat_deg: f64, lon_deg: f64, min_elevation_deg: f64) -> Self {
        Self {
            latitude_rad: lat_deg.to_radians(),
            longitude_rad: lon_deg.to_radians(),
            altitude_km: 0.0,
            min_elevation_rad: min_elevation_deg.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<(), OrbitalError> {
        if !self.latitude_rad.is_finite() || self.latitude_rad.abs() > PI / 2.0 + 1e-12 {
            return Err(OrbitalError::InvalidAngle { name: "latitude_rad", value: self.latitude_rad });
        }
        if !self.longitude_rad.is_finite() {
            return Err(OrbitalError::InvalidAngle { name: "longitude_rad", value: self.longitude_rad });
        }
        check_angle("min_elevation_rad", self.min_elevation_rad, 0.0, PI / 2.0)?;
        check_altitude(self.altitude_km)
    }
}

/// Station position in ECI: geodetic point on the sphere rotated about z by
/// `earth_angle0_rad + ω_E t`.
pub fn ground_position(gs: &GroundStationSpec, t: f64, earth_angle0_rad: f64) -> PositionEci {
    let r = EARTH_RADIUS_KM + gs.altitude_km;
    let (slat, clat) = gs.latitude_rad.sin_cos();
    let sidereal_day = TAU / EARTH_ROTATION_RATE_RAD_S;
    let theta = earth_angle0_rad + TAU * (t / sidereal_day).rem_euclid(1.0);
    let (st, ct) = (gs.longitude_rad + theta).sin_cos();
    PositionEci::new(r * clat * ct, r * clat * st, r * slat)
}

/// Maximum unobstructed separation between two satellites at the given altitudes.
pub fn visibility_threshold_km(h_a_km: f64, h_b_km: f64) -> f64 {
    let leg = |h: f64| ((h + EARTH_RADIUS_KM).powi(2) - EARTH_RADIUS_KM.powi(2)).max(0.0).sqrt();
    leg(h_a_km) + leg(h_b_km)
}

/// Line-of-sight test between two satellites.
pub fn sat_sat_visible(pos_a: &PositionEci, pos_b: &PositionEci, h_a_km: f64, h_b_km: f64) -> bool {
    pos_a.distance(pos_b) < visibility_threshold_km(h_a_km, h_b_km)
}

/// Elevation of `pos_sat` above the local horizon of `pos_gs`, radians.
pub fn elevation(pos_sat: &PositionEci, pos_gs: &PositionEci) -> f64 {
    let rel = pos_sat.sub(pos_gs);
    let denom = pos_gs.norm() * rel.norm();
    if denom == 0.0 {
        return PI / 2.0;
    }
    let cos_angle = (pos_gs.dot(&rel) / denom).clamp(-1.0, 1.0);
    PI / 2.0 - cos_angle.acos()
}

/// True when the satellite is at least `min_elevation_rad` above the station horizon.
pub fn sat_ground_visible(pos_sat: &PositionEci, pos_gs: &PositionEci, min_elevation_rad: f64) -> bool {
    elevation(pos_sat, pos_gs) >= min_elevation_rad
}

/// Where the parameter server lives.
#[derive(Debug, Clone, PartialEq)]
pub enum PsSite {
    /// A single satellite in its own orbit (satellite index 0 of the spec).
    Satellite(OrbitSpec),
    Ground(GroundStationSpec),
}

/// All nodes of a scenario: the worker planes plus the parameter server.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    orbits: Vec<OrbitSpec>,
    ps: PsSite,
    earth_angle0_rad: f64,
    // first satellite id of each plane; last entry is K + 1
    plane_start: Vec<u32>,
}

impl Constellation {
    pub fn new(orbits: Vec<OrbitSpec>, ps: PsSite, earth_angle0_rad: f64) -> Result<Self, OrbitalError> {
        if orbits.is_empty() {
            return Err(OrbitalError::NoOrbits);
        }
        for o in &orbits {
            o.validate()?;
        }
        match &ps {
            PsSite::Satellite(o) => o.validate()?,
            PsSite::Ground(g) => g.validate()?,
        }
        if !earth_angle0_rad.is_finite() {
            return Err(OrbitalError::InvalidAngle { name: "earth_angle0_rad", value: earth_angle0_rad });
        }
        let mut plane_start = Vec::with_capacity(orbits.len() + 1);
        let mut next = 1u32;
        for o in &orbits {
            plane_start.push(next);
            next += o.num_satellites as u32;
        }
        plane_start.push(next);
        Ok(Self { orbits, ps, earth_angle0_rad, plane_start })
    }

    /// Walker delta pattern: RAAN of plane p is `2πp/P`, the first satellite of
    /// plane p is advanced by `2π·F·p/(P·K_p)`.
    pub fn walker(
        planes: usize,
        sats_per_plane: usize,
        altitude_km: f64,
        inclination_rad: f64,
        phasing_factor: u32,
        ps: PsSite,
        earth_angle0_rad: f64,
    ) -> Result<Self, OrbitalError> {
        let orbits = (0..planes)
            .map(|p| OrbitSpec {
                plane_index: p,
                altitude_km,
                inclination_rad,
                raan_rad: (TAU * p as f64 / planes as f64).rem_euclid(TAU),
                num_satellites: sats_per_plane,
                phase_offset_rad: (TAU * phasing_factor as f64 * p as f64 / (planes * sats_per_plane.max(1)) as f64)
                    .rem_euclid(TAU),
            })
            .collect();
        Self::new(orbits, ps, earth_angle0_rad)
    }

    pub fn orbits(&self) -> &[OrbitSpec] {
        &self.orbits
    }

    pub fn ps_site(&self) -> &PsSite {
        &self.ps
    }

    pub fn earth_angle0_rad(&self) -> f64 {
        self.earth_angle0_rad
    }

    pub fn num_planes(&self) -> usize {
        self.orbits.len()
    }

    pub fn num_satellites(&self) -> usize {
        (self.plane_start[self.orbits.len()] - 1) as usize
    }

    pub fn satellites(&self) -> impl Iterator<Item = NodeId> {
        (1..=self.num_satellites() as u32).map(NodeId)
    }

    pub fn is_satellite(&self, id: NodeId) -> bool {
        id.0 >= 1 && (id.0 as usize) <= self.num_satellites()
    }

    /// Plane index of a satellite, `None` for the PS or unknown ids.
    pub fn plane_of(&self, id: NodeId) -> Option<usize> {
        if !self.is_satellite(id) {
            return None;
        }
        Some(self.plane_start.partition_point(|&s| s <= id.0) - 1)
    }

    /// Satellites of one plane in ring order (ascending id).
    pub fn ring(&self, plane: usize) -> Vec<NodeId> {
        (self.plane_start[plane]..self.plane_start[plane + 1]).map(NodeId).collect()
    }

    /// Intra-plane ring neighbours, deduplicated; empty for single-satellite planes.
    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let Some(plane) = self.plane_of(id) else { return Vec::new() };
        let start = self.plane_start[plane];
        let k = self.plane_start[plane + 1] - start;
        if k <= 1 {
            return Vec::new();
        }
        let pos = id.0 - start;
        let prev = NodeId(start + (pos + k - 1) % k);
        let next = NodeId(start + (pos + 1) % k);
        if prev == next {
            vec![prev]
        } else {
            vec![prev, next]
        }
    }

    pub fn altitude_km(&self, id: NodeId) -> Result<f64, OrbitalError> {
        if id.is_ps() {
            return Ok(match &self.ps {
                PsSite::Satellite(o) => o.altitude_km,
                PsSite::Ground(g) => g.altitude_km,
            });
        }
        let plane = self.plane_of(id).ok_or(OrbitalError::UnknownNode(id))?;
        Ok(self.orbits[plane].altitude_km)
    }

    pub fn position(&self, id: NodeId, t: f64) -> Result<PositionEci, OrbitalError> {
        if id.is_ps() {
            return Ok(match &self.ps {
                PsSite::Satellite(o) => propagate(o, 0, t),
                PsSite::Ground(g) => ground_position(g, t, self.earth_angle0_rad),
            });
        }
        let plane = self.plane_of(id).ok_or(OrbitalError::UnknownNode(id))?;
        let idx = (id.0 - self.plane_start[plane]) as usize;
        Ok(propagate(&self.orbits[plane], idx, t))
    }

    pub fn distance_km(&self, a: NodeId, b: NodeId, t: f64) -> Result<f64, OrbitalError> {
        Ok(self.position(a, t)?.distance(&self.position(b, t)?))
    }

    /// Mutual visibility of two nodes at time `t`. Unknown ids are never visible.
    pub fn visible(&self, a: NodeId, b: NodeId, t: f64) -> bool {
        if a == b {
            return true;
        }
        let (Ok(pa), Ok(pb)) = (self.position(a, t), self.position(b, t)) else {
            return false;
        };
        match (&self.ps, a.is_ps(), b.is_ps()) {
            (PsSite::Ground(g), true, false) => sat_ground_visible(&pb, &pa, g.min_elevation_rad),
            (PsSite::Ground(g), false, true) => sat_ground_visible(&pa, &pb, g.min_elevation_rad),
            _ => {
                // both satellites (the PS may be a satellite itself)
                let (Ok(ha), Ok(hb)) = (self.altitude_km(a), self.altitude_km(b)) else { return false };
                sat_sat_visible(&pa, &pb, ha, hb)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leo_orbit(k: usize) -> OrbitSpec {
        OrbitSpec {
            plane_index: 0,
            altitude_km: 2000.0,
            inclination_rad: 80f64.to_radians(),
            raan_rad: 0.3,
            num_satellites: k,
            phase_offset_rad: 0.1,
        }
    }

    #[test]
    fn speed_and_period_reference_values() {
        let v = orbital_speed(2000.0).unwrap();
        assert!((v - 6895.3).abs() < 0.1, "{v}");
        let v0 = orbital_speed(0.0).unwrap();
        assert!((v0 - 7904.5).abs() < 1.0, "{v0}");
        assert!(orbital_speed(2000.0).unwrap() > orbital_speed(20000.0).unwrap());
        let t = orbital_period(2000.0).unwrap();
        assert!((t - 7628.0).abs() < 1.0, "{t}");
        let t_meo = orbital_period(20000.0).unwrap();
        assert!((t_meo / 42_636.0 - 1.0).abs() < 1e-3, "{t_meo}");
        for h in [0.0, 550.0, 2000.0, 35786.0] {
            let lhs = orbital_period(h).unwrap() * orbital_speed(h).unwrap();
            let rhs = TAU * (EARTH_RADIUS_KM + h) * 1e3;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn negative_altitude_rejected() {
        assert!(matches!(orbital_speed(-1.0), Err(OrbitalError::InvalidAltitude(_))));
        assert!(orbital_period(f64::NAN).is_err());
    }

    #[test]
    fn zero_angle_position() {
        let o = OrbitSpec {
            plane_index: 0,
            altitude_km: 2000.0,
            inclination_rad: 0.0,
            raan_rad: 0.0,
            num_satellites: 4,
            phase_offset_rad: 0.0,
        };
        let p = satellite_position(&o, 0, 0.0).unwrap();
        assert_eq!(p, PositionEci::new(8371.0, 0.0, 0.0));
        assert!(matches!(
            satellite_position(&o, 4, 0.0),
            Err(OrbitalError::IndexOutOfRange { index: 4, count: 4 })
        ));
    }

    #[test]
    fn periodicity_and_chord() {
        let o = leo_orbit(8);
        let period = o.period_s();
        let chord = 2.0 * 8371.0 * (PI / 8.0).sin();
        assert!((chord - 6406.6).abs() < 0.5);
        for t in [0.0, 123.4, 5000.0, 86_400.0] {
            let a = satellite_position(&o, 3, t).unwrap();
            let b = satellite_position(&o, 3, t + period).unwrap();
            assert!(a.distance(&b) <= 1e-9 * a.norm());
            let n = satellite_position(&o, 4, t).unwrap();
            assert!((a.distance(&n) - chord).abs() < 1e-6);
        }
    }

    #[test]
    fn ground_reference_points() {
        let pole = GroundStationSpec::from_degrees(90.0, 0.0, 10.0);
        for t in [0.0, 1000.0, 40_000.0] {
            let p = ground_position(&pole, t, 0.3);
            assert!(p.x.abs() < 1e-9 && p.y.abs() < 1e-9 && (p.z - EARTH_RADIUS_KM).abs() < 1e-9);
        }
        let eq = GroundStationSpec::from_degrees(0.0, 0.0, 10.0);
        assert_eq!(ground_position(&eq, 0.0, 0.0), PositionEci::new(EARTH_RADIUS_KM, 0.0, 0.0));
        let day = TAU / EARTH_ROTATION_RATE_RAD_S;
        let p = ground_position(&eq, day, 0.0);
        assert!(p.distance(&PositionEci::new(EARTH_RADIUS_KM, 0.0, 0.0)) <= 1e-9 * EARTH_RADIUS_KM);
    }

    #[test]
    fn threshold_values() {
        let leo = visibility_threshold_km(2000.0, 2000.0);
        assert!((leo - 10_860.0).abs() < 1.0, "{leo}");
        let mixed = visibility_threshold_km(2000.0, 20_000.0);
        assert!((mixed - 31_016.0).abs() < 5.0, "{mixed}");
        let o = leo_orbit(8);
        let a = satellite_position(&o, 0, 0.0).unwrap();
        let b = satellite_position(&o, 1, 0.0).unwrap();
        let c = satellite_position(&o, 4, 0.0).unwrap();
        assert!(sat_sat_visible(&a, &b, 2000.0, 2000.0));
        assert!(!sat_sat_visible(&a, &c, 2000.0, 2000.0));
    }

    #[test]
    fn elevation_edge_cases() {
        let gs = PositionEci::new(EARTH_RADIUS_KM, 0.0, 0.0);
        let zenith = gs.scale(1.5);
        assert!(sat_ground_visible(&zenith, &gs, 89f64.to_radians()));
        let horizon = PositionEci::new(EARTH_RADIUS_KM, 3000.0, 0.0);
        assert!(!sat_ground_visible(&horizon, &gs, 10f64.to_radians()));
    }

    #[test]
    fn ids_and_neighbors() {
        let c = Constellation::walker(
            5,
            8,
            2000.0,
            80f64.to_radians(),
            1,
            PsSite::Ground(GroundStationSpec::from_degrees(90.0, 0.0, 10.0)),
            0.0,
        )
        .unwrap();
        assert_eq!(c.num_satellites(), 40);
        assert_eq!(c.plane_of(NodeId(1)), Some(0));
        assert_eq!(c.plane_of(NodeId(8)), Some(0));
        assert_eq!(c.plane_of(NodeId(9)), Some(1));
        assert_eq!(c.plane_of(NodeId(40)), Some(4));
        assert_eq!(c.plane_of(NodeId(41)), None);
        assert_eq!(c.plane_of(NodeId::PS), None);
        assert_eq!(c.neighbors(NodeId(1)), vec![NodeId(8), NodeId(2)]);
        assert_eq!(c.neighbors(NodeId(16)), vec![NodeId(15), NodeId(9)]);
        assert_eq!(c.ring(2), (17..=24).map(NodeId).collect::<Vec<_>>());
        let pairs = Constellation::walker(
            1,
            2,
            2000.0,
            0.0,
            1,
            PsSite::Ground(GroundStationSpec::from_degrees(0.0, 0.0, 0.0)),
            0.0,
        )
        .unwrap();
        assert_eq!(pairs.neighbors(NodeId(1)), vec![NodeId(2)]);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut o = leo_orbit(8);
        o.num_satellites = 0;
        assert!(matches!(o.validate(), Err(OrbitalError::EmptyOrbit { .. })));
        let mut o = leo_orbit(8);
        o.raan_rad = 7.0;
        assert!(o.validate().is_err());
        let gs = GroundStationSpec::from_degrees(10.0, 0.0, 95.0);
        assert!(gs.validate().is_err());
    }
}
