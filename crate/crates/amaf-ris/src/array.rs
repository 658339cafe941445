//! Steering vectors, element pattern, and far-field radiation pattern for
//! planar standard rectangular arrays with half-wavelength spacing.
//!
//! All lengths are in half-wavelength units. An array lies in an x-z plane of
//! the surface frame; its broadside is the +y axis.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Direction, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum ArrayError {
    #[error("weight vector length {got} does not match element count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty angular range")]
    EmptyRange,
    #[error("grid is entirely inside the mainlobe exclusion cone")]
    NoSidelobeRegion,
}

/// Planar standard rectangular array, element positions in half-wavelength
/// units, row-major order (x index outer, z index inner).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub n_x: usize,
    pub n_z: usize,
    pub positions: Vec<Vec3>,
    pub center_offset: Vec3,
}

impl ArrayLayout {
    /// Array centered at the offset, elements on the unit lattice in x and z.
    pub fn centered(n_x: usize, n_z: usize, center_offset: Vec3) -> Self {
        assert!(n_x > 0 && n_z > 0);
        let x0 = (n_x as f64 - 1.0) / 2.0;
        let z0 = (n_z as f64 - 1.0) / 2.0;
        let mut positions = Vec::with_capacity(n_x * n_z);
        for n in 0..n_x {
            for m in 0..n_z {
                positions.push(center_offset + Vec3::new(n as f64 - x0, 0.0, m as f64 - z0));
            }
        }
        Self {
            n_x,
            n_z,
            positions,
            center_offset,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        out.center_offset += offset;
        for p in &mut out.positions {
            *p += offset;
        }
        out
    }
}

/// Complex excitation/steering/weight vector.
pub type CVector = DVector<Complex64>;

/// Normal vector of a planar wavefront arriving from direction `d`.
pub fn wavefront_normal(d: Direction) -> Vec3 {
    let (sp, cp) = d.phi.sin_cos();
    let (st, ct) = d.theta.sin_cos();
    Vec3::new(sp * ct, cp * ct, st)
}

/// Per-element planar-wave phase delay `exp(-j pi p.n)`.
pub fn steering_vector(layout: &ArrayLayout, d: Direction) -> CVector {
    let n = wavefront_normal(d);
    CVector::from_iterator(
        layout.len(),
        layout
            .positions
            .iter()
            .map(|p| Complex64::from_polar(1.0, -std::f64::consts::PI * p.dot(&n))),
    )
}

/// Axisymmetric patch element power gain, 6 dBi at broadside with a 90 degree
/// 3 dB beamwidth.
pub fn patch_gain(d: Direction) -> f64 {
    let c = d.phi.cos() * d.theta.cos();
    4.0 * c * c
}

/// Far-field power gain of the weighted array at direction `d` (linear).
pub fn radiation_pattern(
    layout: &ArrayLayout,
    weights: &CVector,
    d: Direction,
) -> Result<f64, ArrayError> {
    if weights.len() != layout.len() {
        return Err(ArrayError::LengthMismatch {
            expected: layout.len(),
            got: weights.len(),
        });
    }
    Ok(pattern_unchecked(layout, weights, d))
}

fn pattern_unchecked(layout: &ArrayLayout, weights: &CVector, d: Direction) -> f64 {
    let n = wavefront_normal(d);
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, w) in layout.positions.iter().zip(weights.iter()) {
        // a_k^* w_k with a_k = exp(-j pi p.n)
        acc += Complex64::from_polar(1.0, std::f64::consts::PI * p.dot(&n)) * w;
    }
    patch_gain(d) * acc.norm_sqr()
}

/// Gain samples over a uniform (phi, theta) grid.
///
/// Rows index theta, columns index phi, both ascending. Gains are linear.
#[derive(Debug, Clone)]
pub struct PatternGrid {
    pub phi_rad: Vec<f64>,
    pub theta_rad: Vec<f64>,
    /// `gain[theta_index][phi_index]`
    pub gain: Vec<Vec<f64>>,
}

fn axis(range: (f64, f64), step: f64) -> Vec<f64> {
    let n = ((range.1 - range.0) / step).round() as usize + 1;
    (0..n).map(|i| range.0 + i as f64 * step).collect()
}

/// Evaluate the pattern over a uniform grid at `resolution_deg` steps.
pub fn pattern_grid(
    layout: &ArrayLayout,
    weights: &CVector,
    phi_range_deg: (f64, f64),
    theta_range_deg: (f64, f64),
    resolution_deg: f64,
) -> Result<PatternGrid, ArrayError> {
    if weights.len() != layout.len() {
        return Err(ArrayError::LengthMismatch {
            expected: layout.len(),
            got: weights.len(),
        });
    }
    if resolution_deg <= 0.0
        || phi_range_deg.1 < phi_range_deg.0
        || theta_range_deg.1 < theta_range_deg.0
    {
        return Err(ArrayError::EmptyRange);
    }
    let phi_rad: Vec<f64> = axis(phi_range_deg, resolution_deg)
        .iter()
        .map(|v| v.to_radians())
        .collect();
    let theta_rad: Vec<f64> = axis(theta_range_deg, resolution_deg)
        .iter()
        .map(|v| v.to_radians())
        .collect();
    let gain = theta_rad
        .par_iter()
        .map(|&theta| {
            phi_rad
                .iter()
                .map(|&phi| pattern_unchecked(layout, weights, Direction::new(phi, theta)))
                .collect()
        })
        .collect();
    Ok(PatternGrid {
        phi_rad,
        theta_rad,
        gain,
    })
}

/// Peak gain, peak direction, and the worst sidelobe relative to the peak.
#[derive(Debug, Clone, Copy)]
pub struct PatternSummary {
    pub peak_dbi: f64,
    pub peak_direction: Direction,
    /// Max gain outside the mainlobe exclusion cone, in dB relative to peak.
    pub sidelobe_rel_db: f64,
}

impl PatternGrid {
    pub fn peak(&self) -> (f64, Direction) {
        let mut best = f64::NEG_INFINITY;
        let mut dir = Direction::new(0.0, 0.0);
        for (ti, row) in self.gain.iter().enumerate() {
            for (pi, &g) in row.iter().enumerate() {
                if g > best {
                    best = g;
                    dir = Direction::new(self.phi_rad[pi], self.theta_rad[ti]);
                }
            }
        }
        (best, dir)
    }

    /// 3 dB beamwidth estimate: diameter of the half-power region around the
    /// peak, taken as the larger of the phi and theta cuts through the peak.
    pub fn beamwidth_3db_deg(&self) -> f64 {
        let (peak, dir) = self.peak();
        let half = peak / 2.0;
        let ti = self
            .theta_rad
            .iter()
            .position(|&t| t == dir.theta)
            .unwrap_or(0);
        let pi_idx = self.phi_rad.iter().position(|&p| p == dir.phi).unwrap_or(0);
        let phi_cut: Vec<f64> = self.gain[ti].clone();
        let theta_cut: Vec<f64> = self.gain.iter().map(|row| row[pi_idx]).collect();
        let width = |cut: &[f64], axis: &[f64], center: usize| -> f64 {
            let mut lo = center;
            while lo > 0 && cut[lo - 1] >= half {
                lo -= 1;
            }
            let mut hi = center;
            while hi + 1 < cut.len() && cut[hi + 1] >= half {
                hi += 1;
            }
            (axis[hi] - axis[lo]).to_degrees()
        };
        width(&phi_cut, &self.phi_rad, pi_idx).max(width(&theta_cut, &self.theta_rad, ti))
    }
}

/// Extract peak and relative sidelobe level from a gain grid.
///
/// The mainlobe is excluded as a disc of radius `mainlobe_exclusion_deg`
/// around the peak in (phi, theta) degrees.
pub fn peak_and_sidelobe(
    grid: &PatternGrid,
    mainlobe_exclusion_deg: f64,
) -> Result<PatternSummary, ArrayError> {
    let (peak, dir) = grid.peak();
    let excl = mainlobe_exclusion_deg.to_radians();
    let mut worst = f64::NEG_INFINITY;
    let mut any = false;
    for (ti, row) in grid.gain.iter().enumerate() {
        for (pi, &g) in row.iter().enumerate() {
            let dp = grid.phi_rad[pi] - dir.phi;
            let dt = grid.theta_rad[ti] - dir.theta;
            if (dp * dp + dt * dt).sqrt() > excl {
                any = true;
                if g > worst {
                    worst = g;
                }
            }
        }
    }
    if !any {
        return Err(ArrayError::NoSidelobeRegion);
    }
    Ok(PatternSummary {
        peak_dbi: 10.0 * peak.log10(),
        peak_direction: dir,
        sidelobe_rel_db: 10.0 * (worst / peak).log10(),
    })
}

/// Default mainlobe exclusion: three times the 3 dB beamwidth.
pub fn default_exclusion_deg(grid: &PatternGrid) -> f64 {
    3.0 * grid.beamwidth_3db_deg()
}

/// Write a gain grid as CSV: header row with phi values (deg), then one row
/// per theta with the theta value (deg) followed by gains in dBi.
pub fn grid_to_csv<W: std::io::Write>(grid: &PatternGrid, w: &mut W) -> std::io::Result<()> {
    write!(w, "theta_deg\\phi_deg")?;
    for p in &grid.phi_rad {
        write!(w, ",{:.4}", p.to_degrees())?;
    }
    writeln!(w)?;
    for (ti, row) in grid.gain.iter().enumerate() {
        write!(w, "{:.4}", grid.theta_rad[ti].to_degrees())?;
        for &g in row {
            write!(w, ",{:.4}", 10.0 * g.max(1e-300).log10())?;
        }
        writeln!(w)?;
    }
    Ok(())
}
