//! Lawnmower survey tours over a flat rectangular region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nlp::WaypointPath;
use crate::state::{is_finite, Vec3};

/// Largest accepted image overlap.
pub const MAX_OVERLAP: f64 = 0.95;

/// Rectangle `[origin.x, origin.x + width] × [origin.y, origin.y + height]`
/// on the ground plane `z = origin.z`, photographed from `altitude` above it
/// by a pinhole camera pointing straight down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveySpec {
    pub origin: Vec3,
    pub width: f64,
    pub height: f64,
    pub altitude: f64,
    /// Full field of view along x and y (radians).
    pub fov_x: f64,
    pub fov_y: f64,
    /// Fraction of a footprint shared by neighbouring images.
    pub overlap_x: f64,
    pub overlap_y: f64,
}

impl SurveySpec {
    pub fn validate(&self) -> Result<()> {
        if !is_finite(&self.origin) {
            return Err(Error::invalid("survey origin must be finite"));
        }
        for (name, v) in [("width", self.width), ("height", self.height), ("altitude", self.altitude)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("survey {name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("fov_x", self.fov_x), ("fov_y", self.fov_y)] {
            if !(v > 0.0 && v < std::f64::consts::PI) {
                return Err(Error::invalid(format!("{name} must lie in (0, π), got {v}")));
            }
        }
        for (name, v) in [("overlap_x", self.overlap_x), ("overlap_y", self.overlap_y)] {
            if !(0.0..=MAX_OVERLAP).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, {MAX_OVERLAP}], got {v}")));
            }
        }
        Ok(())
    }

    /// Distance between neighbouring waypoints along x and y.
    pub fn pitch(&self) -> Result<(f64, f64)> {
        let (fx, fy) = footprint(self)?;
        let p = (fx * (1.0 - self.overlap_x), fy * (1.0 - self.overlap_y));
        if !(p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()) {
            return Err(Error::invalid("degenerate cell pitch"));
        }
        Ok(p)
    }

    /// Number of cells along x and y.
    pub fn grid(&self) -> Result<(usize, usize)> {
        let (px, py) = self.pitch()?;
        Ok((cells(self.width, px)?, cells(self.height, py)?))
    }
}

fn cells(extent: f64, pitch: f64) -> Result<usize> {
    let n = (extent / pitch - 1e-9).ceil().max(1.0);
    if n > 1e5 {
        return Err(Error::invalid(format!("{n} cells along one axis; pitch is too small")));
    }
    Ok(n as usize)
}

/// Ground footprint `(2·h·tan(fov_x/2), 2·h·tan(fov_y/2))`.
pub fn footprint(spec: &SurveySpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let f = |fov: f64| 2.0 * spec.altitude * (0.5 * fov).tan();
    Ok((f(spec.fov_x), f(spec.fov_y)))
}

/// Survey tour through [`cell_centres`], starting and ending at rest. A
/// region covered by a single image has no path and is rejected.
pub fn decompose(spec: &SurveySpec) -> Result<WaypointPath> {
    let waypoints = cell_centres(spec)?;
    if waypoints.len() < 2 {
        return Err(Error::invalid("the region fits in one image; there is no path to plan"));
    }
    WaypointPath::rest_to_rest(waypoints)
}

/// Cell centres in serpentine order: rows run along x, starting at the
/// origin corner and reversing direction on every row. The grid is centred
/// on the rectangle so edge footprints overhang it equally on both sides.
pub fn cell_centres(spec: &SurveySpec) -> Result<Vec<Vec3>> {
    let (px, py) = spec.pitch()?;
    let (nx, ny) = spec.grid()?;
    let x0 = spec.origin.x + 0.5 * (spec.width - (nx - 1) as f64 * px);
    let y0 = spec.origin.y + 0.5 * (spec.height - (ny - 1) as f64 * py);
    let z = spec.origin.z + spec.altitude;
    Ok((0..ny)
        .flat_map(|j| (0..nx).map(move |k| (j, if j % 2 == 0 { k } else { nx - 1 - k })))
        .map(|(j, i)| Vec3::new(x0 + i as f64 * px, y0 + j as f64 * py, z))
        .collect())
}
