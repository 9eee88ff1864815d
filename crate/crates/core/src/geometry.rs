//! Coordinates, the experimentation room and physical distances.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SCHEMA_VERSION};

/// A point in the room, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Coordinates3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance_to(&self, other: &Coordinates3D) -> f64 {
        euclidean_distance_3d(self, other)
    }
}

/// Straight-line distance between two points.
pub fn euclidean_distance_3d(p: &Coordinates3D, q: &Coordinates3D) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Room extents along each axis, in meters. The room spans `[0, x] x [0, y] x [0, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomDims {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RoomDims {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn contains(&self, p: &Coordinates3D) -> bool {
        (0.0..=self.x).contains(&p.x) && (0.0..=self.y).contains(&p.y) && (0.0..=self.z).contains(&p.z)
    }

    fn check(&self, what: impl Into<String>, p: &Coordinates3D) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideRoom {
                what: what.into(),
                x: p.x,
                y: p.y,
                z: p.z,
                dx: self.x,
                dy: self.y,
                dz: self.z,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub rp_id: u32,
    pub position: Coordinates3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub ap_id: u32,
    pub position: Coordinates3D,
}

/// The room with its reference points and access points.
///
/// RP ids run `1..=R` and AP ids `1..=N` in list order; every position lies
/// inside the room. Construction goes through [`Scenario::new`], which
/// enforces both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDoc", into = "ScenarioDoc")]
pub struct Scenario {
    room_dims: RoomDims,
    reference_points: Vec<ReferencePoint>,
    access_points: Vec<AccessPoint>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    #[serde(default = "schema_version")]
    schema_version: u32,
    room_dims: RoomDims,
    reference_points: Vec<ReferencePoint>,
    access_points: Vec<AccessPoint>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = Error;

    fn try_from(doc: ScenarioDoc) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidScenario(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        Scenario::new(doc.room_dims, doc.reference_points, doc.access_points)
    }
}

impl From<Scenario> for ScenarioDoc {
    fn from(s: Scenario) -> Self {
        ScenarioDoc {
            schema_version: SCHEMA_VERSION,
            room_dims: s.room_dims,
            reference_points: s.reference_points,
            access_points: s.access_points,
        }
    }
}

impl Scenario {
    pub fn new(
        room_dims: RoomDims,
        reference_points: Vec<ReferencePoint>,
        access_points: Vec<AccessPoint>,
    ) -> Result<Self> {
        let dims = [room_dims.x, room_dims.y, room_dims.z];
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "room dimensions must be positive and finite, got {dims:?}"
            )));
        }
        if reference_points.is_empty() {
            return Err(Error::InvalidScenario("no reference points".into()));
        }
        if access_points.is_empty() {
            return Err(Error::InvalidScenario("no access points".into()));
        }
        for (i, rp) in reference_points.iter().enumerate() {
            let expected = i as u32 + 1;
            if rp.rp_id != expected {
                return Err(Error::InvalidScenario(format!(
                    "reference_points[{i}].rp_id is {}, expected {expected}",
                    rp.rp_id
                )));
            }
            if !rp.position.is_finite() {
                return Err(Error::NonFinite { what: "reference point position" });
            }
            room_dims.check(format!("RP {}", rp.rp_id), &rp.position)?;
        }
        for (i, ap) in access_points.iter().enumerate() {
            let expected = i as u32 + 1;
            if ap.ap_id != expected {
                return Err(Error::InvalidScenario(format!(
                    "access_points[{i}].ap_id is {}, expected {expected}",
                    ap.ap_id
                )));
            }
            if !ap.position.is_finite() {
                return Err(Error::NonFinite { what: "access point position" });
            }
            room_dims.check(format!("AP {}", ap.ap_id), &ap.position)?;
        }
        Ok(Self {
            room_dims,
            reference_points,
            access_points,
        })
    }

    pub fn room_dims(&self) -> RoomDims {
        self.room_dims
    }

    pub fn reference_points(&self) -> &[ReferencePoint] {
        &self.reference_points
    }

    pub fn access_points(&self) -> &[AccessPoint] {
        &self.access_points
    }

    pub fn ap_ids(&self) -> Vec<u32> {
        self.access_points.iter().map(|ap| ap.ap_id).collect()
    }

    pub fn rp_position(&self, rp_id: u32) -> Option<Coordinates3D> {
        // ids are 1..=R in order
        let idx = (rp_id as usize).checked_sub(1)?;
        self.reference_points.get(idx).map(|rp| rp.position)
    }

    pub fn ap_position(&self, ap_id: u32) -> Option<Coordinates3D> {
        let idx = (ap_id as usize).checked_sub(1)?;
        self.access_points.get(idx).map(|ap| ap.position)
    }

    /// The testbed used throughout the crate: a 3.50 x 3.56 x 2.80 m room,
    /// a 4x4 RP grid at 0.87 m and eight APs from [`default_ap_layout`] at 2.0 m.
    pub fn standard() -> Self {
        let room = RoomDims::new(3.50, 3.56, 2.80);
        let aps = default_ap_layout(room, 8, 2.0);
        build_grid_scenario(room, 4, 4, 0.87, &aps).expect("default scenario is valid")
    }
}

/// Places one RP at the center of each zone of a `grid_rows x grid_cols`
/// partition of the floor plan. RP ids are assigned row-major from the origin:
/// RP 1 is the zone touching `(0, 0)`, ids grow along x first.
pub fn build_grid_scenario(
    room_dims: RoomDims,
    grid_rows: usize,
    grid_cols: usize,
    rp_height: f64,
    ap_positions: &[Coordinates3D],
) -> Result<Scenario> {
    if grid_rows == 0 || grid_cols == 0 {
        return Err(Error::InvalidScenario(format!(
            "grid must be at least 1x1, got {grid_rows}x{grid_cols}"
        )));
    }
    let mut rps = Vec::with_capacity(grid_rows * grid_cols);
    for r in 1..=grid_rows {
        for c in 1..=grid_cols {
            let x = (2 * c - 1) as f64 * room_dims.x / (2 * grid_cols) as f64;
            let y = (2 * r - 1) as f64 * room_dims.y / (2 * grid_rows) as f64;
            rps.push(ReferencePoint {
                rp_id: rps.len() as u32 + 1,
                position: Coordinates3D::new(x, y, rp_height),
            });
        }
    }
    let aps = ap_positions
        .iter()
        .enumerate()
        .map(|(i, p)| AccessPoint {
            ap_id: i as u32 + 1,
            position: *p,
        })
        .collect();
    Scenario::new(room_dims, rps, aps)
}

/// `count` APs evenly spaced along the room perimeter at the given height.
///
/// The walk starts at the origin and runs counter-clockwise (+x wall first);
/// AP `i` (0-based) sits at arc length `(i + 0.5) * P / count`.
pub fn default_ap_layout(room: RoomDims, count: usize, height: f64) -> Vec<Coordinates3D> {
    let perimeter = 2.0 * (room.x + room.y);
    (0..count)
        .map(|i| {
            let mut s = (i as f64 + 0.5) * perimeter / count as f64;
            let (x, y) = if s < room.x {
                (s, 0.0)
            } else {
                s -= room.x;
                if s < room.y {
                    (room.x, s)
                } else {
                    s -= room.y;
                    if s < room.x {
                        (room.x - s, room.y)
                    } else {
                        s -= room.x;
                        (0.0, (room.y - s).max(0.0))
                    }
                }
            };
            Coordinates3D::new(x, y, height)
        })
        .collect()
}
