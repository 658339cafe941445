//! Near-field feeder design for one AMAF-RIS module.
//!
//! The active feeder array sits on the surface boresight axis at focal
//! distance `F` (half-wavelength units), element planes parallel and facing
//! the reflecting surface. The propagation matrix between the two arrays is
//! decomposed by SVD; feeding the principal right singular vector maximizes
//! the power transferred onto the surface and yields a smooth amplitude
//! taper, which is what keeps the sidelobes low.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{steering_vector, ArrayLayout, CVector};
use crate::geometry::{Direction, Vec3};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error, PartialEq)]
pub enum FeederError {
    #[error("focal distance must be positive, got {0}")]
    NonPositiveFocal(f64),
    #[error("overlapping element positions (zero propagation distance)")]
    OverlappingElements,
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("length mismatch: {got} vs {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Which side of the surface the feeder illuminates. Back illumination has a
/// mirrored geometry with identical distances and angles, so the propagation
/// matrix is the same in this model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Illumination {
    Front,
    Back,
}

/// Principal singular triple of the feeder-to-surface propagation matrix.
#[derive(Debug, Clone)]
pub struct PrincipalMode {
    pub sigma1: f64,
    /// Left singular vector, length `N_p`: the induced surface excitation.
    pub u1: CVector,
    /// Right singular vector, length `N_a`: the feeder weights.
    pub v1: CVector,
}

/// Per-element surface phases, optionally quantized.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    pub phases: Vec<f64>,
    /// 0 = continuous.
    pub quantization_bits: u32,
}

/// One feeder + surface pair with its precomputed design quantities.
#[derive(Debug, Clone)]
pub struct FeederModule {
    pub ris_layout: ArrayLayout,
    pub amaf_layout: ArrayLayout,
    pub focal_distance: f64,
    pub illumination: Illumination,
    pub t: DMatrix<Complex64>,
    pub mode: PrincipalMode,
    /// Real nonnegative template amplitudes `sigma1 * |u1|`.
    pub template: DVector<f64>,
}

impl FeederModule {
    /// Build the design for a surface of `n_x` x `n_z` elements fed by an
    /// `n_h` x `n_v` feeder at focal distance `focal` (half-wavelengths).
    pub fn design(
        n_x: usize,
        n_z: usize,
        n_h: usize,
        n_v: usize,
        focal: f64,
        illumination: Illumination,
    ) -> Result<Self, FeederError> {
        let ris = ArrayLayout::centered(n_x, n_z, Vec3::zeros());
        let amaf = ArrayLayout::centered(n_h, n_v, Vec3::new(0.0, -focal, 0.0));
        let t = build_t(&ris, &amaf, focal)?;
        let mode = principal_eigenmode(&t)?;
        let template = template_weights(&mode);
        Ok(Self {
            ris_layout: ris,
            amaf_layout: amaf,
            focal_distance: focal,
            illumination,
            t,
            mode,
            template,
        })
    }

    /// Template scaled to unit norm.
    ///
    /// `||template|| = sigma1` exactly, and sigma1^2 exceeds 1 for compact
    /// geometries where the elementwise Friis model over-collects power, so
    /// reported gains use this power-normalized excitation. The raw template
    /// is what the physical channel model sees.
    pub fn normalized_template(&self) -> DVector<f64> {
        &self.template / self.mode.sigma1
    }

    /// Gain of the steered beam at its own pointing direction, dBi, for the
    /// power-normalized excitation.
    pub fn steered_gain_dbi(&self, d0: Direction) -> f64 {
        let w = steer(&self.normalized_template(), d0, &self.ris_layout)
            .expect("template length matches layout");
        let g = crate::array::radiation_pattern(&self.ris_layout, &w, d0)
            .expect("weights length matches layout");
        10.0 * g.log10()
    }

    /// Max-to-min template amplitude ratio on a dB scale.
    ///
    /// Amplitudes are plotted and quoted as `10 log10(|u|)`, so the taper is
    /// `10 log10(max/min)` of the amplitude ratio.
    pub fn taper_db(&self) -> f64 {
        let max = self.template.max();
        let min = self.template.min();
        10.0 * (max / min).log10()
    }
}

/// Narrowband feeder-to-surface propagation matrix.
///
/// Entry (k, l) couples feeder element l to surface element k through free
/// space: amplitude `sqrt(E_A E_R) / (2 pi r)` and phase `exp(-j pi r)`, with
/// `r` the element distance in half-wavelength units and both element gains
/// evaluated at the mutual angle off their common normal.
pub fn build_t(
    ris: &ArrayLayout,
    amaf: &ArrayLayout,
    focal: f64,
) -> Result<DMatrix<Complex64>, FeederError> {
    if focal <= 0.0 {
        return Err(FeederError::NonPositiveFocal(focal));
    }
    let mut t = DMatrix::zeros(ris.len(), amaf.len());
    for (k, pr) in ris.positions.iter().enumerate() {
        for (l, pa) in amaf.positions.iter().enumerate() {
            let d = pr - pa;
            let r = d.norm();
            if r == 0.0 {
                return Err(FeederError::OverlappingElements);
            }
            // parallel facing planes: both elements see the same angle,
            // cos(psi) = axial separation / r
            let cos_psi = d.y.abs() / r;
            let e = 4.0 * cos_psi * cos_psi;
            t[(k, l)] = Complex64::from_polar(e / (TAU * r), -PI * r);
        }
    }
    Ok(t)
}

/// Principal singular triple via power iteration on `T^H T`.
///
/// The Gram matrix is only `N_a` x `N_a`. The global phase is fixed so the
/// largest-magnitude entry of `v1` is real positive.
pub fn principal_eigenmode(t: &DMatrix<Complex64>) -> Result<PrincipalMode, FeederError> {
    const MAX_ITERS: usize = 10_000;
    const TOL: f64 = 1e-12;

    let gram = t.adjoint() * t;
    let n = gram.nrows();
    // start from the dominant column of the Gram matrix; falls back to a
    // basis vector for the all-but-one-zero cases
    let mut v: CVector = {
        let mut best = 0;
        let mut best_norm = -1.0;
        for j in 0..n {
            let cn = gram.column(j).norm();
            if cn > best_norm {
                best_norm = cn;
                best = j;
            }
        }
        if best_norm <= 0.0 {
            return Err(FeederError::NoConvergence(0));
        }
        let col = gram.column(best).into_owned();
        let norm = col.norm();
        col / Complex64::from(norm)
    };
    let mut lambda = 0.0f64;
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        let gv = &gram * &v;
        let new_lambda = gv.norm();
        if new_lambda == 0.0 {
            return Err(FeederError::NoConvergence(0));
        }
        let v_new = gv / Complex64::from(new_lambda);
        // the eigenvalue settles before the vector does, so require both
        let v_shift = (&v_new - &v).norm().min((&v_new + &v).norm());
        v = v_new;
        if (new_lambda - lambda).abs() <= TOL * new_lambda && v_shift <= 10.0 * TOL {
            lambda = new_lambda;
            converged = true;
            break;
        }
        lambda = new_lambda;
    }
    if !converged {
        return Err(FeederError::NoConvergence(MAX_ITERS));
    }
    // global phase: largest-|entry| of v made real positive
    let (mut idx, mut mag) = (0, 0.0);
    for (i, e) in v.iter().enumerate() {
        if e.norm() > mag {
            mag = e.norm();
            idx = i;
        }
    }
    let rot = (v[idx] / mag).conj();
    let v1 = v.map(|e| e * rot);
    let sigma1 = lambda.sqrt();
    let u1 = (t * &v1) / Complex64::from(sigma1);
    Ok(PrincipalMode { sigma1, u1, v1 })
}

/// Template surface amplitudes `sigma1 * |u1|`: real nonnegative, boresight
/// pointing.
pub fn template_weights(mode: &PrincipalMode) -> DVector<f64> {
    DVector::from_iterator(
        mode.u1.len(),
        mode.u1.iter().map(|e| mode.sigma1 * e.norm()),
    )
}

/// Steer the template beam to `d0` by a linear phase gradient.
pub fn steer(
    template: &DVector<f64>,
    d0: Direction,
    ris: &ArrayLayout,
) -> Result<CVector, FeederError> {
    if template.len() != ris.len() {
        return Err(FeederError::LengthMismatch {
            expected: ris.len(),
            got: template.len(),
        });
    }
    let a = steering_vector(ris, d0);
    Ok(CVector::from_iterator(
        template.len(),
        template.iter().zip(a.iter()).map(|(&amp, s)| s * amp),
    ))
}

/// Phase-only steering mask for a surface layout (no amplitude taper).
pub fn steering_mask(ris: &ArrayLayout, d0: Direction) -> PhaseMask {
    let a = steering_vector(ris, d0);
    PhaseMask {
        phases: a.iter().map(|e| e.arg().rem_euclid(TAU)).collect(),
        quantization_bits: 0,
    }
}

impl FeederModule {
    /// Physical surface phase mask steering the module to `d0`.
    ///
    /// The surface elements must undo the phase of the induced excitation
    /// `u1` and then apply the steering gradient, so the effective weights
    /// become the steered real-amplitude template.
    pub fn phase_mask(&self, layout: &ArrayLayout, d0: Direction) -> PhaseMask {
        let a = steering_vector(layout, d0);
        PhaseMask {
            phases: a
                .iter()
                .zip(self.mode.u1.iter())
                .map(|(s, u)| (s.arg() - u.arg()).rem_euclid(TAU))
                .collect(),
            quantization_bits: 0,
        }
    }
}

/// Round each phase to the nearest of `2^bits` levels anchored at 0.
pub fn quantize_phases(mask: &PhaseMask, bits: u32) -> PhaseMask {
    assert!(bits >= 1);
    let levels = (1u64 << bits) as f64;
    let step = TAU / levels;
    PhaseMask {
        phases: mask
            .phases
            .iter()
            .map(|&p| {
                let q = (p / step).round().rem_euclid(levels);
                q * step
            })
            .collect(),
        quantization_bits: bits,
    }
}

impl PhaseMask {
    pub fn to_weights(&self) -> CVector {
        CVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
        )
    }
}

/// Power captured by the surface for a unit-norm feeder weight vector `b`:
/// `||T b||^2`. Maximized by the principal mode, where it equals `sigma1^2`.
pub fn captured_power_fraction(t: &DMatrix<Complex64>, b: &CVector) -> Result<f64, FeederError> {
    if b.len() != t.ncols() {
        return Err(FeederError::LengthMismatch {
            expected: t.ncols(),
            got: b.len(),
        });
    }
    Ok((t * b).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn reference_design() -> FeederModule {
        FeederModule::design(16, 16, 2, 2, 6.0, Illumination::Front).unwrap()
    }

    #[test]
    fn single_pair_entry() {
        let ris = ArrayLayout::centered(1, 1, Vec3::zeros());
        let amaf = ArrayLayout::centered(1, 1, Vec3::new(0.0, -6.0, 0.0));
        let t = build_t(&ris, &amaf, 6.0).unwrap();
        assert_relative_eq!(t[(0, 0)].norm(), 4.0 / (TAU * 6.0), epsilon = 1e-12);
        assert_relative_eq!(t[(0, 0)].re, t[(0, 0)].norm(), epsilon = 1e-12);
        assert!(t[(0, 0)].im.abs() < 1e-12);
    }

    #[test]
    fn magnitude_decays_with_focal_distance() {
        let ris = ArrayLayout::centered(4, 4, Vec3::zeros());
        let mut prev = f64::INFINITY;
        for f in [4.0, 8.0, 16.0, 32.0, 64.0] {
            let amaf = ArrayLayout::centered(2, 2, Vec3::new(0.0, -f, 0.0));
            let t = build_t(&ris, &amaf, f).unwrap();
            let max = t.iter().map(|e| e.norm()).fold(0.0, f64::max);
            assert!(max < prev);
            prev = max;
        }
    }

    #[test]
    fn off_axis_entry_geometry() {
        // transverse offset t: r = sqrt(F^2 + t^2), E = 4 (F/r)^2
        let ris = ArrayLayout::centered(1, 1, Vec3::new(3.0, 0.0, 0.0));
        let amaf = ArrayLayout::centered(1, 1, Vec3::new(0.0, -4.0, 0.0));
        let t = build_t(&ris, &amaf, 4.0).unwrap();
        let r = 5.0;
        let e = 4.0 * (4.0f64 / 5.0).powi(2);
        assert_relative_eq!(t[(0, 0)].norm(), e / (TAU * r), epsilon = 1e-12);
    }

    #[test]
    fn invalid_focal_and_overlap() {
        let ris = ArrayLayout::centered(2, 2, Vec3::zeros());
        let amaf = ArrayLayout::centered(2, 2, Vec3::new(0.0, -6.0, 0.0));
        assert!(build_t(&ris, &amaf, 0.0).is_err());
        assert!(build_t(&ris, &ris.clone(), 6.0).is_err());
    }

    #[test]
    fn reference_amaf_weights_are_uniform() {
        let m = reference_design();
        for e in m.mode.v1.iter() {
            assert_relative_eq!(e.re, 0.5, epsilon = 1e-3);
            assert!(e.im.abs() < 1e-3);
        }
        assert_relative_eq!(m.mode.v1.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_nonzero_column_mode() {
        let mut t = DMatrix::zeros(5, 3);
        for k in 0..5 {
            t[(k, 1)] = Complex64::new(0.3 + k as f64 * 0.1, -0.2);
        }
        let m = principal_eigenmode(&t).unwrap();
        assert_relative_eq!(m.v1[1].re, 1.0, epsilon = 1e-9);
        assert!(m.v1[0].norm() < 1e-9 && m.v1[2].norm() < 1e-9);
        assert_relative_eq!(m.sigma1, t.column(1).norm(), epsilon = 1e-9);
    }

    #[test]
    fn mode_satisfies_svd_relation() {
        let m = reference_design();
        let lhs = &m.t * &m.mode.v1;
        let rhs = m.mode.u1.map(|e| e * Complex64::from(m.mode.sigma1));
        assert!((lhs - rhs).norm() <= 1e-9 * m.mode.sigma1);
        assert_relative_eq!(m.mode.u1.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reference_taper() {
        let m = reference_design();
        assert_relative_eq!(m.taper_db(), 13.92, epsilon = 0.1);
        // template norm equals sigma1
        assert_relative_eq!(m.template.norm(), m.mode.sigma1, epsilon = 1e-9);
        for &a in m.template.iter() {
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn constant_modulus_excitation_has_zero_taper() {
        let mode = PrincipalMode {
            sigma1: 2.0,
            u1: CVector::from_fn(4, |i, _| Complex64::from_polar(0.5, i as f64)),
            v1: CVector::from_element(1, Complex64::new(1.0, 0.0)),
        };
        let w = template_weights(&mode);
        assert_relative_eq!(w.max() / w.min(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn template_taper_is_center_peaked() {
        let m = reference_design();
        let n = 16;
        let amp = |row: usize, col: usize| m.template[row * n + col];
        // central row: increasing to the middle, decreasing after
        for half in [true, false] {
            let center = n / 2;
            let mut prev = 0.0;
            for i in 0..center {
                let a = if half { amp(center, i) } else { amp(i, center) };
                assert!(a >= prev, "taper not monotone toward center");
                prev = a;
            }
        }
        // mirror symmetry
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(amp(i, j), amp(n - 1 - i, j), epsilon = 1e-9);
                assert_relative_eq!(amp(i, j), amp(i, n - 1 - j), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn steer_preserves_amplitudes_and_boresight_is_identity() {
        let m = reference_design();
        let d0 = Direction::from_degrees(25.0, -10.0);
        let w = steer(&m.template, d0, &m.ris_layout).unwrap();
        for (ws, &a) in w.iter().zip(m.template.iter()) {
            assert_relative_eq!(ws.norm(), a, epsilon = 1e-12);
        }
        let w0 = steer(&m.template, Direction::new(0.0, 0.0), &m.ris_layout).unwrap();
        // boresight steering vector has constant phase across the layout
        let rot = w0[0] / Complex64::from(m.template[0]);
        for (ws, &a) in w0.iter().zip(m.template.iter()) {
            assert_relative_eq!((ws / rot).re, a, epsilon = 1e-10);
        }
    }

    #[test]
    fn steered_array_factor_matches_boresight() {
        let m = reference_design();
        let d0 = Direction::from_degrees(40.0, 15.0);
        let w = steer(&m.template, d0, &m.ris_layout).unwrap();
        let a = steering_vector(&m.ris_layout, d0);
        let steered: Complex64 = a.dotc(&w);
        let boresight: f64 = m.template.sum();
        assert_relative_eq!(steered.norm(), boresight, epsilon = 1e-10 * boresight);
    }

    #[test]
    fn quantization_cases() {
        let mask = PhaseMask {
            phases: vec![0.1, 3.0],
            quantization_bits: 0,
        };
        let q = quantize_phases(&mask, 1);
        assert_relative_eq!(q.phases[0], 0.0);
        assert_relative_eq!(q.phases[1], PI);

        // 3-bit error bound and idempotence
        let mask = PhaseMask {
            phases: (0..64)
                .map(|i| i as f64 * 0.1)
                .map(|p| p.rem_euclid(TAU))
                .collect(),
            quantization_bits: 0,
        };
        let q = quantize_phases(&mask, 3);
        for (&p, &qp) in mask.phases.iter().zip(q.phases.iter()) {
            let mut err = (p - qp).abs();
            err = err.min(TAU - err);
            assert!(err <= PI / 8.0 + 1e-12);
        }
        assert_eq!(quantize_phases(&q, 3), q);
    }

    #[test]
    fn captured_power() {
        let m = reference_design();
        let frac = captured_power_fraction(&m.t, &m.mode.v1).unwrap();
        assert_relative_eq!(frac, m.mode.sigma1 * m.mode.sigma1, epsilon = 1e-9);

        // maximality over random unit vectors
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let b = CVector::from_fn(m.t.ncols(), |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let b = &b / Complex64::from(b.norm());
            let f = captured_power_fraction(&m.t, &b).unwrap();
            assert!(f.sqrt() <= m.mode.sigma1 * (1.0 + 1e-9));
        }
    }
}
