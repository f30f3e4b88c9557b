//! Virtual camera poses.

use std::fmt;
use std::str::FromStr;

use crate::dataset::{DatasetFamily, DatasetId};
use crate::error::CondenseError;

pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VoName {
    TopDown,
    FrontTo,
    FrontAway,
    SideRight,
    SideLeft,
    /// Oblique view; also called "axonometric".
    Custom,
}

impl VoName {
    pub const ALL: [VoName; 6] = [
        VoName::TopDown,
        VoName::FrontTo,
        VoName::FrontAway,
        VoName::SideRight,
        VoName::SideLeft,
        VoName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VoName::TopDown => "top-down",
            VoName::FrontTo => "front-to",
            VoName::FrontAway => "front-away",
            VoName::SideRight => "side-right",
            VoName::SideLeft => "side-left",
            VoName::Custom => "custom",
        }
    }

    /// Parses a comma-separated list such as `custom,top-down,front-away`;
    /// `all` expands to the six orientations.
    pub fn parse_list(s: &str) -> Result<Vec<VoName>, CondenseError> {
        if s.trim() == "all" {
            return Ok(VoName::ALL.to_vec());
        }
        let names = s
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<Vec<VoName>, _>>()?;
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(CondenseError::Argument(format!("view {n} listed twice")));
            }
        }
        Ok(names)
    }
}

impl fmt::Display for VoName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VoName {
    type Err = CondenseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "axonometric" {
            return Ok(VoName::Custom);
        }
        VoName::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| CondenseError::Argument(format!("unknown view orientation '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewOrientation {
    pub name: VoName,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

impl ViewOrientation {
    pub fn new(name: VoName, elevation_deg: f64, azimuth_deg: f64) -> Result<Self, CondenseError> {
        if !elevation_deg.is_finite() || !azimuth_deg.is_finite() {
            return Err(CondenseError::Argument(format!(
                "view {name}: angles must be finite"
            )));
        }
        Ok(ViewOrientation {
            name,
            elevation_deg,
            azimuth_deg,
        })
    }
}

/// Dataset-specific (elevation, azimuth) angles in degrees, ordered
/// top-down, front-to, front-away, side-right, side-left, custom.
fn angles(family: DatasetFamily) -> [(f64, f64); 6] {
    match family {
        DatasetFamily::Dhg1428 | DatasetFamily::Shrec2017 => [
            (0.0, 0.0),
            (90.0, 180.0),
            (-90.0, 0.0),
            (0.0, -90.0),
            (0.0, 90.0),
            (30.0, -132.5),
        ],
        DatasetFamily::Fpha => [
            (90.0, 0.0),
            (0.0, 180.0),
            (0.0, 0.0),
            (0.0, 90.0),
            (0.0, -90.0),
            (25.0, 115.0),
        ],
        DatasetFamily::Lmdhg => [
            (0.0, 0.0),
            (-90.0, -180.0),
            (90.0, 0.0),
            (0.0, 90.0),
            (0.0, -90.0),
            (-15.0, -135.0),
        ],
    }
}

/// The six view orientations for a dataset.
pub fn vo_table(dataset: DatasetId) -> Vec<ViewOrientation> {
    VoName::ALL
        .into_iter()
        .zip(angles(dataset.family()))
        .map(|(name, (elevation_deg, azimuth_deg))| ViewOrientation {
            name,
            elevation_deg,
            azimuth_deg,
        })
        .collect()
}

/// Looks up `names` (in order) in a dataset's table.
pub fn select_views(dataset: DatasetId, names: &[VoName]) -> Vec<ViewOrientation> {
    let table = vo_table(dataset);
    names
        .iter()
        .map(|n| *table.iter().find(|v| v.name == *n).expect("table covers every name"))
        .collect()
}

/// World-to-camera rotation: azimuth about the vertical (z) axis, then
/// elevation about the camera-right (x) axis. Camera x/y span the image
/// plane and camera z is the dropped depth axis.
pub fn camera_basis(vo: &ViewOrientation) -> Mat3 {
    let (se, ce) = vo.elevation_deg.to_radians().sin_cos();
    let (sa, ca) = vo.azimuth_deg.to_radians().sin_cos();
    // rot_x(el) * rot_z(az), expanded.
    [
        [ca, -sa, 0.0],
        [ce * sa, ce * ca, -se],
        [se * sa, se * ca, ce],
    ]
}

pub fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}
