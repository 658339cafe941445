//! Stacking K identical feeder modules into one base-station array.
//!
//! Modules are placed side by side along a stacking axis with a configurable
//! edge-to-edge gap between adjacent apertures (default one half-wavelength).
//! Each feeder translates rigidly with its surface. The off-diagonal blocks
//! of the stacked propagation matrix carry the near-end crosstalk (NEXT):
//! power from one module's feeder spilling onto a neighbor's surface.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{ArrayLayout, CVector};
use crate::feeder::{build_t, FeederError, FeederModule, PhaseMask};
use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum StackError {
    #[error("NEXT ratio requires two distinct modules, got i == j == {0}")]
    SameModule(usize),
    #[error("expected {expected} per-module items, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Feeder(#[from] FeederError),
}

/// Axis along which modules are stacked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackingAxis {
    X,
    Z,
}

/// K identical modules with their pairwise propagation blocks.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub design: FeederModule,
    pub k: usize,
    pub axis: StackingAxis,
    pub separation: f64,
    /// Block (i, j): propagation from feeder j to surface i.
    pub t_blocks: Vec<Vec<DMatrix<Complex64>>>,
    /// Precomputed `T_{i,j} v1`, the excitation feeder j induces on surface i.
    pub excitation_blocks: Vec<Vec<CVector>>,
    /// All K surface layouts concatenated, module-major.
    pub stacked_ris: ArrayLayout,
    /// Per-module surface layouts (for per-module steering masks).
    pub module_layouts: Vec<ArrayLayout>,
}

impl StackedSystem {
    /// Build the K x K grid of propagation blocks for a uniform stack.
    pub fn build(
        design: &FeederModule,
        k: usize,
        separation: f64,
        axis: StackingAxis,
    ) -> Result<Self, StackError> {
        assert!(k >= 1);
        let (n_along, extent_axis) = match axis {
            StackingAxis::X => (design.ris_layout.n_x, Vec3::new(1.0, 0.0, 0.0)),
            StackingAxis::Z => (design.ris_layout.n_z, Vec3::new(0.0, 0.0, 1.0)),
        };
        // center-to-center pitch: aperture extent plus the edge-to-edge gap
        let pitch = n_along as f64 + separation;
        let offset = |i: usize| extent_axis * ((i as f64 - (k as f64 - 1.0) / 2.0) * pitch);

        let ris_layouts: Vec<ArrayLayout> = (0..k)
            .map(|i| design.ris_layout.translated(offset(i)))
            .collect();
        let amaf_layouts: Vec<ArrayLayout> = (0..k)
            .map(|j| design.amaf_layout.translated(offset(j)))
            .collect();

        let mut t_blocks = Vec::with_capacity(k);
        for ris in &ris_layouts {
            let mut row = Vec::with_capacity(k);
            for amaf in &amaf_layouts {
                row.push(build_t(ris, amaf, design.focal_distance)?);
            }
            t_blocks.push(row);
        }
        // diagonal blocks must equal the single-module matrix exactly
        for (i, row) in t_blocks.iter().enumerate() {
            debug_assert_eq!(row[i], design.t);
        }
        let excitation_blocks: Vec<Vec<CVector>> = t_blocks
            .iter()
            .map(|row| row.iter().map(|t| t * &design.mode.v1).collect())
            .collect();

        let n_p = design.ris_layout.len();
        let mut positions = Vec::with_capacity(k * n_p);
        for l in &ris_layouts {
            positions.extend_from_slice(&l.positions);
        }
        let stacked_ris = ArrayLayout {
            n_x: match axis {
                StackingAxis::X => design.ris_layout.n_x * k,
                StackingAxis::Z => design.ris_layout.n_x,
            },
            n_z: match axis {
                StackingAxis::X => design.ris_layout.n_z,
                StackingAxis::Z => design.ris_layout.n_z * k,
            },
            positions,
            center_offset: Vec3::zeros(),
        };

        Ok(Self {
            design: design.clone(),
            k,
            axis,
            separation,
            t_blocks,
            excitation_blocks,
            stacked_ris,
            module_layouts: ris_layouts,
        })
    }

    /// Global transmission matrix `N` (K N_p x K) for per-module phase masks.
    ///
    /// Block (i, j) is `diag(w_i) T_{i,j} v1` with `w_i` the phase-only mask
    /// of module i. With `include_crosstalk = false` the off-diagonal blocks
    /// are zeroed, giving K isolated modules.
    pub fn build_n(
        &self,
        masks: &[PhaseMask],
        include_crosstalk: bool,
    ) -> Result<DMatrix<Complex64>, StackError> {
        if masks.len() != self.k {
            return Err(StackError::CountMismatch {
                expected: self.k,
                got: masks.len(),
            });
        }
        let n_p = self.design.ris_layout.len();
        let weights: Vec<CVector> = masks.iter().map(|m| m.to_weights()).collect();
        for (i, w) in weights.iter().enumerate() {
            if w.len() != n_p {
                return Err(StackError::CountMismatch {
                    expected: n_p,
                    got: weights[i].len(),
                });
            }
        }
        let mut n = DMatrix::zeros(self.k * n_p, self.k);
        for i in 0..self.k {
            for j in 0..self.k {
                if !include_crosstalk && i != j {
                    continue;
                }
                let exc = &self.excitation_blocks[i][j];
                for (row, (w, e)) in weights[i].iter().zip(exc.iter()).enumerate() {
                    n[(i * n_p + row, j)] = w * e;
                }
            }
        }
        Ok(n)
    }

    /// Power spilled from feeder j onto surface i, relative to the power that
    /// feeder delivers to its own surface, in dB.
    pub fn next_ratio(&self, i: usize, j: usize) -> Result<f64, StackError> {
        if i == j {
            return Err(StackError::SameModule(i));
        }
        let spill = self.excitation_blocks[i][j].norm_squared();
        let own = self.excitation_blocks[j][j].norm_squared();
        Ok(10.0 * (spill / own).log10())
    }

    /// K x K table of NEXT ratios in dB (diagonal entries are 0).
    pub fn next_table(&self) -> Vec<Vec<f64>> {
        (0..self.k)
            .map(|i| {
                (0..self.k)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            self.next_ratio(i, j).unwrap()
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Write a NEXT table as CSV, entries in dB.
pub fn next_table_to_csv<W: std::io::Write>(table: &[Vec<f64>], w: &mut W) -> std::io::Result<()> {
    write!(w, "ris\\amaf")?;
    for j in 0..table.len() {
        write!(w, ",{j}")?;
    }
    writeln!(w)?;
    for (i, row) in table.iter().enumerate() {
        write!(w, "{i}")?;
        for v in row {
            write!(w, ",{v:.2}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
