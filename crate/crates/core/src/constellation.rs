//! Walker constellation geometry on a discrete time grid.
//!
//! Satellites fly circular two-body orbits. Plane `p` (1-based) has its
//! ascending node at `(p - 1) * raan_spread / P` and slot `n` sits at argument
//! of latitude `(n - 1) * 360 / N + (p - 1) * F` at the grid epoch. Positions are
//! rotated into an Earth-fixed frame using a sidereal rotation that starts
//! from the Greenwich sidereal angle of the epoch.

use std::f64::consts::{PI, TAU};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Mean Earth radius (spherical Earth).
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Earth gravitational parameter, m^3/s^2.
pub const MU_EARTH: f64 = 3.986004418e14;
/// Length of one sidereal day.
pub const SIDEREAL_DAY_S: f64 = 86_164.090_5;
/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = TAU / SIDEREAL_DAY_S;
/// Default sampling interval of the time grid.
pub const DEFAULT_STEP_S: f64 = 60.0;

/// Walker `M/P/F` constellation at altitude `H` and inclination `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    total_sats: usize,
    planes: usize,
    phase_offset_deg: f64,
    altitude_km: f64,
    inclination_deg: f64,
    raan_spread_deg: f64,
}

impl ConstellationSpec {
    /// Validates and builds a constellation. `phase_offset_deg` is the
    /// inter-plane phase offset in degrees, not an integer Walker factor.
    pub fn new(
        total_sats: usize,
        planes: usize,
        phase_offset_deg: f64,
        altitude_km: f64,
        inclination_deg: f64,
        raan_spread_deg: f64,
    ) -> Result<Self, ConfigError> {
        if planes == 0 {
            return Err(ConfigError::invariant("constellation.planes", "P must be positive"));
        }
        if total_sats == 0 || !total_sats.is_multiple_of(planes) {
            return Err(ConfigError::invariant(
                "constellation.total_sats",
                format!("M mod P = 0 and N = M/P > 0 required (M = {total_sats}, P = {planes})"),
            ));
        }
        if !(200.0..=2000.0).contains(&altitude_km) {
            return Err(ConfigError::invariant(
                "constellation.altitude_km",
                format!("altitude {altitude_km} km outside [200, 2000]"),
            ));
        }
        if !(raan_spread_deg > 0.0 && raan_spread_deg <= 360.0) {
            return Err(ConfigError::invariant(
                "constellation.raan_spread_deg",
                format!("raan spread {raan_spread_deg} outside (0, 360]"),
            ));
        }
        if !phase_offset_deg.is_finite() || !inclination_deg.is_finite() {
            return Err(ConfigError::invariant(
                "constellation",
                "phase offset and inclination must be finite",
            ));
        }
        Ok(Self {
            total_sats,
            planes,
            phase_offset_deg,
            altitude_km,
            inclination_deg,
            raan_spread_deg,
        })
    }

    pub fn total_sats(&self) -> usize {
        self.total_sats
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn sats_per_plane(&self) -> usize {
        self.total_sats / self.planes
    }

    pub fn phase_offset_deg(&self) -> f64 {
        self.phase_offset_deg
    }

    pub fn altitude_km(&self) -> f64 {
        self.altitude_km
    }

    pub fn inclination_deg(&self) -> f64 {
        self.inclination_deg
    }

    pub fn raan_spread_deg(&self) -> f64 {
        self.raan_spread_deg
    }

    pub fn altitude_m(&self) -> f64 {
        self.altitude_km * 1000.0
    }

    pub fn orbit_radius_m(&self) -> f64 {
        EARTH_RADIUS_M + self.altitude_m()
    }

    /// Mean motion in rad/s.
    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.orbit_radius_m().powi(3)).sqrt()
    }

    pub fn orbital_period_s(&self) -> f64 {
        TAU / self.mean_motion()
    }

    /// All satellite ids ordered by `(plane, slot)`.
    pub fn sat_ids(&self) -> impl Iterator<Item = SatId> + '_ {
        let n = self.sats_per_plane();
        (1..=self.planes).flat_map(move |p| (1..=n).map(move |s| SatId::new(p, s)))
    }

    /// Dense index of a satellite in `(plane, slot)` order.
    pub fn index_of(&self, id: SatId) -> usize {
        (id.plane - 1) * self.sats_per_plane() + (id.slot - 1)
    }

    pub fn sat_at(&self, index: usize) -> SatId {
        let n = self.sats_per_plane();
        SatId::new(index / n + 1, index % n + 1)
    }

    pub fn contains(&self, id: SatId) -> bool {
        (1..=self.planes).contains(&id.plane) && (1..=self.sats_per_plane()).contains(&id.slot)
    }

    fn raan_rad(&self, plane: usize) -> f64 {
        ((plane - 1) as f64 * self.raan_spread_deg / self.planes as f64).to_radians()
    }

    fn argument_of_latitude(&self, id: SatId, t: f64) -> f64 {
        let n = self.sats_per_plane() as f64;
        let u0 = TAU * (id.slot - 1) as f64 / n + ((id.plane - 1) as f64 * self.phase_offset_deg).to_radians();
        u0 + self.mean_motion() * t
    }

    /// Earth-fixed position of one satellite at `t` seconds past the epoch.
    pub fn position(&self, id: SatId, grid: &TimeGrid, t: f64) -> EcefPosition {
        let r = self.orbit_radius_m();
        let raan = self.raan_rad(id.plane);
        let inc = self.inclination_deg.to_radians();
        let u = self.argument_of_latitude(id, t);
        let (su, cu) = u.sin_cos();
        let (so, co) = raan.sin_cos();
        let (si, ci) = inc.sin_cos();
        let x = r * (co * cu - so * su * ci);
        let y = r * (so * cu + co * su * ci);
        let z = r * su * si;
        let (sg, cg) = grid.sidereal_angle(t).sin_cos();
        EcefPosition {
            x: cg * x + sg * y,
            y: -sg * x + cg * y,
            z,
        }
    }

    /// Spherical coordinates of a satellite computed from its orbital
    /// elements, without going through Cartesian coordinates.
    pub fn spherical(&self, id: SatId, grid: &TimeGrid, t: f64) -> SphericalPosition {
        let inc = self.inclination_deg.to_radians();
        let u = self.argument_of_latitude(id, t);
        let latitude = (inc.sin() * u.sin()).clamp(-1.0, 1.0).asin();
        let inertial_lon = self.raan_rad(id.plane) + (inc.cos() * u.sin()).atan2(u.cos());
        SphericalPosition {
            radius_m: self.orbit_radius_m(),
            colatitude_rad: PI / 2.0 - latitude,
            longitude_rad: inertial_lon - grid.sidereal_angle(t),
        }
    }
}

/// Satellite `S_{p,n}`: slot `n` (1..=N) in plane `p` (1..=P).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SatId {
    pub plane: usize,
    pub slot: usize,
}

impl SatId {
    pub const fn new(plane: usize, slot: usize) -> Self {
        Self { plane, slot }
    }
}

impl std::fmt::Display for SatId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S{}.{}", self.plane, self.slot)
    }
}

/// Uniform sampling of simulated time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    epoch: DateTime<Utc>,
    step_s: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(epoch: DateTime<Utc>, step_s: f64, steps: usize) -> Result<Self, ConfigError> {
        if !(step_s > 0.0 && step_s.is_finite()) {
            return Err(ConfigError::invariant("time.step_s", "step must be positive"));
        }
        if steps == 0 {
            return Err(ConfigError::invariant("time.steps", "grid needs at least one step"));
        }
        Ok(Self { epoch, step_s, steps })
    }

    pub fn epoch(&self) -> DateTime<Utc> {
        self.epoch
    }

    pub fn step_s(&self) -> f64 {
        self.step_s
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.step_s
    }

    pub fn horizon_s(&self) -> f64 {
        self.time_of(self.steps)
    }

    /// Grid step containing time `t`, or `None` past the horizon.
    pub fn step_at(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return Some(0);
        }
        let k = (t / self.step_s).floor() as usize;
        (k < self.steps).then_some(k)
    }

    /// Greenwich sidereal angle at `t` seconds past the epoch.
    pub fn sidereal_angle(&self, t: f64) -> f64 {
        let unix = self.epoch.timestamp() as f64 + f64::from(self.epoch.timestamp_subsec_nanos()) * 1e-9;
        let jd = unix / 86_400.0 + 2_440_587.5;
        let gmst0 = (280.460_618_37 + 360.985_647_366_29 * (jd - 2_451_545.0)).rem_euclid(360.0);
        (gmst0.to_radians() + EARTH_ROTATION_RAD_S * t).rem_euclid(TAU)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: usize,
    #[serde(default)]
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
    pub min_elevation_deg: f64,
}

impl GroundStation {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.id == 0 {
            return Err(ConfigError::invariant("ground_station.id", "ids start at 1"));
        }
        if !(self.latitude_deg.abs() <= 90.0) {
            return Err(ConfigError::invariant(
                "ground_station.latitude_deg",
                format!("|lat| = {} exceeds 90", self.latitude_deg),
            ));
        }
        if !(0.0..90.0).contains(&self.min_elevation_deg) {
            return Err(ConfigError::invariant(
                "ground_station.min_elevation_deg",
                format!("threshold {} outside [0, 90)", self.min_elevation_deg),
            ));
        }
        Ok(())
    }

    /// Earth-fixed position on the spherical Earth.
    pub fn position(&self) -> EcefPosition {
        let r = EARTH_RADIUS_M + self.altitude_m;
        let (slat, clat) = self.latitude_deg.to_radians().sin_cos();
        let (slon, clon) = self.longitude_deg.to_radians().sin_cos();
        EcefPosition {
            x: r * clat * clon,
            y: r * clat * slon,
            z: r * slat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefPosition {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &EcefPosition) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Radius, colatitude (polar angle) and Earth-fixed longitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPosition {
    pub radius_m: f64,
    pub colatitude_rad: f64,
    pub longitude_rad: f64,
}

/// Positions of every satellite at grid step `step`, in `(plane, slot)` order.
pub fn propagate(spec: &ConstellationSpec, grid: &TimeGrid, step: usize) -> Vec<EcefPosition> {
    debug_assert!(step < grid.steps());
    let t = grid.time_of(step);
    spec.sat_ids().map(|id| spec.position(id, grid, t)).collect()
}

/// Distance between two satellites from their spherical coordinates:
///
/// `d^2 = r_a^2 + r_b^2 - 2 r_a r_b (cos θa cos θb + cos(εa - εb) sin θa sin θb)`
///
/// where `θ` is the polar angle and `ε` the longitude.
pub fn satellite_distance(spec: &ConstellationSpec, grid: &TimeGrid, a: SatId, b: SatId, step: usize) -> f64 {
    let t = grid.time_of(step);
    spherical_distance(&spec.spherical(a, grid, t), &spec.spherical(b, grid, t))
}

pub fn spherical_distance(a: &SphericalPosition, b: &SphericalPosition) -> f64 {
    let cos_central = a.colatitude_rad.cos() * b.colatitude_rad.cos()
        + (a.longitude_rad - b.longitude_rad).cos() * a.colatitude_rad.sin() * b.colatitude_rad.sin();
    let d2 = a.radius_m.powi(2) + b.radius_m.powi(2) - 2.0 * a.radius_m * b.radius_m * cos_central;
    d2.max(0.0).sqrt()
}

/// Elevation of `sat` above the local horizon of `gs`, in degrees.
pub fn elevation_deg(sat: &EcefPosition, gs: &GroundStation) -> f64 {
    let g = gs.position();
    let gn = g.norm();
    let (ux, uy, uz) = (g.x / gn, g.y / gn, g.z / gn);
    let (rx, ry, rz) = (sat.x - g.x, sat.y - g.y, sat.z - g.z);
    let range = (rx * rx + ry * ry + rz * rz).sqrt();
    if range == 0.0 {
        return 90.0;
    }
    ((rx * ux + ry * uy + rz * uz) / range).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Visibility with an inclusive threshold.
pub fn visible(sat: &EcefPosition, gs: &GroundStation) -> bool {
    elevation_deg(sat, gs) >= gs.min_elevation_deg
}

/// Maximal run of visible grid steps; `end_step` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start_step: usize,
    pub end_step: usize,
    pub gs_id: usize,
}

impl Window {
    /// A window of `k` visible samples covers `k` sampling intervals.
    pub fn duration_s(&self, grid: &TimeGrid) -> f64 {
        (self.end_step - self.start_step + 1) as f64 * grid.step_s()
    }
}

/// Connection windows of every satellite (index order), sorted by start step
/// then ground-station id.
pub fn connection_windows(spec: &ConstellationSpec, gs_list: &[GroundStation], grid: &TimeGrid) -> Vec<Vec<Window>> {
    let mut out = vec![Vec::new(); spec.total_sats()];
    // open[sat][gs] = start step of the current run
    let mut open: Vec<Vec<Option<usize>>> = vec![vec![None; gs_list.len()]; spec.total_sats()];
    for step in 0..grid.steps() {
        let positions = propagate(spec, grid, step);
        for (si, pos) in positions.iter().enumerate() {
            for (gi, gs) in gs_list.iter().enumerate() {
                let vis = visible(pos, gs);
                match (vis, open[si][gi]) {
                    (true, None) => open[si][gi] = Some(step),
                    (false, Some(start)) => {
                        out[si].push(Window { start_step: start, end_step: step - 1, gs_id: gs.id });
                        open[si][gi] = None;
                    }
                    _ => {}
                }
            }
        }
    }
    for (si, row) in open.iter().enumerate() {
        for (gi, start) in row.iter().enumerate() {
            if let Some(start) = start {
                out[si].push(Window { start_step: *start, end_step: grid.steps() - 1, gs_id: gs_list[gi].id });
            }
        }
    }
    for w in &mut out {
        w.sort_by_key(|w| (w.start_step, w.gs_id));
    }
    out
}

/// Aggregate window statistics over a constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub windows: usize,
    pub mean_window_s: f64,
    /// Mean gap between consecutive contacts of the same satellite, after
    /// merging overlapping windows to different stations.
    pub mean_revisit_s: f64,
    pub revisits: usize,
}

pub fn window_stats(windows: &[Vec<Window>], grid: &TimeGrid) -> WindowStats {
    let mut count = 0usize;
    let mut total = 0.0;
    let mut gaps = 0usize;
    let mut gap_total = 0.0;
    for sat in windows {
        count += sat.len();
        total += sat.iter().map(|w| w.duration_s(grid)).sum::<f64>();
        let mut merged: Vec<(usize, usize)> = Vec::new();
        for w in sat {
            match merged.last_mut() {
                Some(last) if w.start_step <= last.1 + 1 => last.1 = last.1.max(w.end_step),
                _ => merged.push((w.start_step, w.end_step)),
            }
        }
        for pair in merged.windows(2) {
            gaps += 1;
            gap_total += (pair[1].0 - pair[0].1 - 1) as f64 * grid.step_s();
        }
    }
    WindowStats {
        windows: count,
        mean_window_s: if count > 0 { total / count as f64 } else { 0.0 },
        mean_revisit_s: if gaps > 0 { gap_total / gaps as f64 } else { 0.0 },
        revisits: gaps,
    }
}
