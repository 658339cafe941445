//! Coordinate systems for a mast-mounted, mechanically downtilted reflecting
//! surface.
//!
//! S1 is the ground frame: origin at the mast foot, x-y the ground plane, z up.
//! S2 is the surface frame: origin at the surface center, at height `h` on the
//! mast, rotated by the downtilt angle `alpha` in the z-y plane. The surface
//! boresight is the S2 y axis; it points down toward the cell centroid.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 3D vector. Meters in S1 contexts, half-wavelength units in array layouts.
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate direction: zero-length vector")]
    DegenerateDirection,
    #[error("boresight does not intercept the ground for downtilt {0} rad")]
    NoIntercept(f64),
}

/// Far-field direction in S2 spherical coordinates.
///
/// `phi` is the azimuth about the S2 z axis, `theta` the elevation above the
/// x-y plane. Boresight is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub phi: f64,
    pub theta: f64,
}

impl Direction {
    pub fn new(phi: f64, theta: f64) -> Self {
        Self { phi, theta }
    }

    pub fn from_degrees(phi_deg: f64, theta_deg: f64) -> Self {
        Self::new(phi_deg.to_radians(), theta_deg.to_radians())
    }
}

/// Cell scenario: mast height, downtilt, served range/azimuth extents.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub mast_height_m: f64,
    pub downtilt_rad: f64,
    pub r_min_m: f64,
    pub r_max_m: f64,
    /// Half-width of the served azimuth sector.
    pub azimuth_span_rad: f64,
    pub wavelength_m: f64,
}

impl ScenarioGeometry {
    /// Rotation matrix taking S1-aligned axes into S2 axes.
    fn rotation(&self) -> Matrix3<f64> {
        let (s, c) = self.downtilt_rad.sin_cos();
        Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
    }

    pub fn surface_origin_s1(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.mast_height_m)
    }
}

/// Express an S1 point in S2 Cartesian coordinates.
pub fn s1_to_s2(p: Vec3, g: &ScenarioGeometry) -> Vec3 {
    g.rotation() * (p - g.surface_origin_s1())
}

/// Inverse of [`s1_to_s2`].
pub fn s2_to_s1(p_check: Vec3, g: &ScenarioGeometry) -> Vec3 {
    g.rotation().transpose() * p_check + g.surface_origin_s1()
}

/// Decompose an S2 Cartesian point into range and direction.
///
/// Inverts `x = rho sin(phi) cos(theta)`, `y = rho cos(phi) cos(theta)`,
/// `z = rho sin(theta)`.
pub fn spherical_from_s2(p_check: Vec3) -> Result<(f64, Direction), GeometryError> {
    let rho = p_check.norm();
    if rho == 0.0 {
        return Err(GeometryError::DegenerateDirection);
    }
    let theta = (p_check.z / rho).asin();
    let phi = p_check.x.atan2(p_check.y);
    Ok((rho, Direction::new(phi, theta)))
}

/// Reconstruct S2 Cartesian coordinates from range and direction.
pub fn s2_from_spherical(rho: f64, d: Direction) -> Vec3 {
    Vec3::new(
        rho * d.phi.sin() * d.theta.cos(),
        rho * d.phi.cos() * d.theta.cos(),
        rho * d.theta.sin(),
    )
}

/// Map a ground-plane point to its range and far-field direction seen from
/// the surface.
pub fn ground_to_direction(
    p_ground: (f64, f64),
    g: &ScenarioGeometry,
) -> Result<(f64, Direction), GeometryError> {
    spherical_from_s2(s1_to_s2(Vec3::new(p_ground.0, p_ground.1, 0.0), g))
}

/// Arithmetic mean of the downlook angles to the near and far cell edges.
pub fn mean_downtilt(g: &ScenarioGeometry) -> f64 {
    // acot(r/h) = atan2(h, r) on positive arguments
    let near = g.mast_height_m.atan2(g.r_min_m);
    let far = g.mast_height_m.atan2(g.r_max_m);
    0.5 * (near + far)
}

/// Ground distance at which the boresight ray hits the ground.
pub fn boresight_ground_intercept(g: &ScenarioGeometry) -> Result<f64, GeometryError> {
    let a = g.downtilt_rad;
    if a <= 0.0 || a >= std::f64::consts::FRAC_PI_2 {
        return Err(GeometryError::NoIntercept(a));
    }
    Ok(g.mast_height_m / a.tan())
}

/// Worst-case composite cell-edge direction: the extreme azimuth paired with
/// the extreme elevation offset.
///
/// The extreme elevation offset is `downtilt - acot(r_max/h)`, i.e. the beam
/// tilt needed to reach the far cell edge. This is not the direction of any
/// physical ground point (a true corner user at `(r_max, azimuth_span)` sits
/// at a much smaller elevation); it is the conventional worst case used for
/// link budgeting. Use [`ground_to_direction`] for true ground points.
pub fn composite_cell_edge_direction(g: &ScenarioGeometry) -> Direction {
    let theta_max = g.downtilt_rad - g.mast_height_m.atan2(g.r_max_m);
    Direction::new(g.azimuth_span_rad, theta_max)
}

/// Slant range from the surface to the far cell corner.
pub fn max_slant_range(g: &ScenarioGeometry) -> f64 {
    (g.r_max_m * g.r_max_m + g.mast_height_m * g.mast_height_m).sqrt()
}
