//! LOS multiuser channel, per-user rates, angular-separation scheduling, and
//! seeded Monte Carlo rate campaigns.
//!
//! Each of the K modules is steered at one scheduled user. The K x K channel
//! matrix couples every beam to every user; its off-diagonal entries are the
//! far-end crosstalk from the sidelobes of the other beams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{patch_gain, steering_vector, ArrayLayout};
use crate::feeder::quantize_phases;
use crate::geometry::{ground_to_direction, Direction, GeometryError, ScenarioGeometry};
use crate::link::{dbm_to_watts, freespace_pathloss_linear, LinkBudget};
use crate::stack::{StackError, StackedSystem};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0} users with {1} deg minimum separation cannot fit a {2} deg span")]
    InfeasibleSeparation(usize, f64, f64),
    #[error("scheduler failed to find a feasible user set after {0} attempts")]
    SchedulerExhausted(usize),
    #[error("campaign needs {expected} modules but the system has {got}")]
    ModuleCount { expected: usize, got: usize },
    #[error("empty sample set")]
    EmptySamples,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stack(#[from] StackError),
}

/// A scheduled user: ground position plus its view from the surface.
#[derive(Debug, Clone, Copy)]
pub struct UserPosition {
    pub ground_xy: (f64, f64),
    /// Ground azimuth from the boresight plane, radians.
    pub azimuth: f64,
    pub range_m: f64,
    /// Slant range to the surface origin, meters.
    pub rho_m: f64,
    pub direction: Direction,
}

/// Monte Carlo campaign parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_drops: usize,
    pub num_users: usize,
    pub min_azimuth_sep_deg: f64,
    pub pointing_error_std_deg: f64,
    /// 0 = continuous phases.
    pub quant_bits: u32,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_drops: 2000,
            num_users: 4,
            min_azimuth_sep_deg: 15.0,
            pointing_error_std_deg: 0.0,
            quant_bits: 0,
            rng_seed: 1,
        }
    }
}

/// Steering-vector matrix from the full stacked surface to the K users.
/// Column k is `2 cos(phi_k) cos(theta_k) a(phi_k, theta_k)`.
pub fn build_a(users: &[UserPosition], stacked_ris: &ArrayLayout) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(stacked_ris.len(), users.len());
    for (k, user) in users.iter().enumerate() {
        let g = patch_gain(user.direction).sqrt();
        let col = steering_vector(stacked_ris, user.direction);
        for (row, e) in col.iter().enumerate() {
            a[(row, k)] = e * g;
        }
    }
    a
}

/// Baseband channel matrix `H = A^H N`, K x K.
pub fn build_h(a: &DMatrix<Complex64>, n: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.adjoint() * n
}

/// Achievable rate of user k treating multiuser interference as noise,
/// bits per complex dimension.
pub fn user_rate(
    h: &DMatrix<Complex64>,
    k: usize,
    link: &LinkBudget,
    p_rf_dbm: f64,
    rho_k_m: f64,
) -> f64 {
    let p_rf_w = dbm_to_watts(p_rf_dbm);
    let l_k = freespace_pathloss_linear(rho_k_m, link.wavelength_m());
    let signal = h[(k, k)].norm_sqr() * p_rf_w;
    let mut interference = 0.0;
    for j in 0..h.ncols() {
        if j != k {
            interference += h[(k, j)].norm_sqr() * p_rf_w;
        }
    }
    let noise = link.noise_power_w() / l_k;
    (1.0 + signal / (noise + interference)).log2()
}

/// Draw K users uniformly over the (azimuth, range) sector, resampling until
/// all pairwise azimuth separations meet the minimum. Users are returned
/// sorted by azimuth.
pub fn schedule_users<R: Rng>(
    rng: &mut R,
    num_users: usize,
    g: &ScenarioGeometry,
    min_azimuth_sep_deg: f64,
) -> Result<Vec<UserPosition>, SimError> {
    const MAX_ATTEMPTS: usize = 100_000;
    let span_deg = 2.0 * g.azimuth_span_rad.to_degrees();
    if (num_users as f64 - 1.0) * min_azimuth_sep_deg >= span_deg {
        return Err(SimError::InfeasibleSeparation(
            num_users,
            min_azimuth_sep_deg,
            span_deg,
        ));
    }
    let min_sep = min_azimuth_sep_deg.to_radians();
    for _ in 0..MAX_ATTEMPTS {
        let mut azimuths: Vec<f64> = (0..num_users)
            .map(|_| rng.gen_range(-g.azimuth_span_rad..=g.azimuth_span_rad))
            .collect();
        azimuths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ok = azimuths.windows(2).all(|w| w[1] - w[0] >= min_sep);
        if !ok {
            continue;
        }
        let users = azimuths
            .into_iter()
            .map(|az| {
                let r = rng.gen_range(g.r_min_m..=g.r_max_m);
                let xy = (r * az.sin(), r * az.cos());
                let (rho, direction) = ground_to_direction(xy, g)?;
                Ok(UserPosition {
                    ground_xy: xy,
                    azimuth: az,
                    range_m: r,
                    rho_m: rho,
                    direction,
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        return Ok(users);
    }
    Err(SimError::SchedulerExhausted(MAX_ATTEMPTS))
}

/// Perturb a steering direction with independent Gaussian errors on both
/// angles.
pub fn apply_pointing_error<R: Rng>(rng: &mut R, d0: Direction, sigma_deg: f64) -> Direction {
    if sigma_deg == 0.0 {
        return d0;
    }
    let dist = Normal::new(0.0, sigma_deg.to_radians()).unwrap();
    Direction::new(d0.phi + dist.sample(rng), d0.theta + dist.sample(rng))
}

/// One rate sample of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub drop_id: usize,
    pub user_index: usize,
    pub azimuth_deg: f64,
    pub range_m: f64,
    pub rate_bits: f64,
}

/// Deterministic seeded Monte Carlo rate campaign.
///
/// Every drop draws from its own RNG stream derived from the master seed and
/// the drop index, so results do not depend on the number of worker threads.
pub fn run_campaign(
    cfg: &SimConfig,
    system: &StackedSystem,
    geometry: &ScenarioGeometry,
    link: &LinkBudget,
    p_rf_dbm: f64,
) -> Result<Vec<RateSample>, SimError> {
    if cfg.num_users > system.k {
        return Err(SimError::ModuleCount {
            expected: cfg.num_users,
            got: system.k,
        });
    }
    let per_drop: Result<Vec<Vec<RateSample>>, SimError> = (0..cfg.num_drops)
        .into_par_iter()
        .map(|drop_id| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(drop_id as u64 + 1);
            run_drop(drop_id, &mut rng, cfg, system, geometry, link, p_rf_dbm)
        })
        .collect();
    Ok(per_drop?.into_iter().flatten().collect())
}

fn run_drop<R: Rng>(
    drop_id: usize,
    rng: &mut R,
    cfg: &SimConfig,
    system: &StackedSystem,
    geometry: &ScenarioGeometry,
    link: &LinkBudget,
    p_rf_dbm: f64,
) -> Result<Vec<RateSample>, SimError> {
    let users = schedule_users(rng, cfg.num_users, geometry, cfg.min_azimuth_sep_deg)?;
    // module k serves user k (both sorted by azimuth)
    let masks = users
        .iter()
        .enumerate()
        .map(|(k, user)| {
            let aim = apply_pointing_error(rng, user.direction, cfg.pointing_error_std_deg);
            let mask = system.design.phase_mask(&system.module_layouts[k], aim);
            if cfg.quant_bits > 0 {
                quantize_phases(&mask, cfg.quant_bits)
            } else {
                mask
            }
        })
        .collect::<Vec<_>>();
    // unused modules keep a boresight mask and still radiate crosstalk
    let mut all_masks = masks;
    for k in cfg.num_users..system.k {
        all_masks.push(
            system
                .design
                .phase_mask(&system.module_layouts[k], Direction::new(0.0, 0.0)),
        );
    }
    let n = system.build_n(&all_masks, true)?;
    let n_used = n.columns(0, cfg.num_users).into_owned();
    let a = build_a(&users, &system.stacked_ris);
    let h = build_h(&a, &n_used);
    Ok(users
        .iter()
        .enumerate()
        .map(|(k, user)| RateSample {
            drop_id,
            user_index: k,
            azimuth_deg: user.azimuth.to_degrees(),
            range_m: user.range_m,
            rate_bits: user_rate(&h, k, link, p_rf_dbm, user.rho_m),
        })
        .collect())
}

/// Right-continuous empirical CDF as sorted (value, probability) pairs, one
/// pair per distinct value.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match cdf.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => cdf.push((v, p)),
        }
    }
    Ok(cdf)
}

/// Two-sample Kolmogorov-Smirnov sup-distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, SimError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Percentile by linear interpolation over order statistics, p in [0, 1].
pub fn percentile(samples: &[f64], p: f64) -> Result<f64, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Write campaign samples as CSV.
pub fn samples_to_csv<W: std::io::Write>(samples: &[RateSample], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "drop_id,user_index,azimuth_deg,range_m,rate_bits")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6}",
            s.drop_id, s.user_index, s.azimuth_deg, s.range_m, s.rate_bits
        )?;
    }
    Ok(())
}

/// Write an empirical CDF as CSV.
pub fn cdf_to_csv<W: std::io::Write>(cdf: &[(f64, f64)], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "rate_bits,probability")?;
    for (v, p) in cdf {
        writeln!(w, "{v:.6},{p:.8}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::{FeederModule, Illumination};
    use crate::geometry::mean_downtilt;
    use crate::link::LinkBudget;
    use crate::stack::StackingAxis;
    use approx::assert_relative_eq;

    fn table1_geometry() -> ScenarioGeometry {
        let mut g = ScenarioGeometry {
            mast_height_m: 20.0,
            downtilt_rad: 0.0,
            r_min_m: 10.0,
            r_max_m: 100.0,
            azimuth_span_rad: 60f64.to_radians(),
            wavelength_m: 299_792_458.0 / 100e9,
        };
        g.downtilt_rad = mean_downtilt(&g);
        g
    }

    fn user_at(g: &ScenarioGeometry, az_deg: f64, range: f64) -> UserPosition {
        let az = az_deg.to_radians();
        let xy = (range * az.sin(), range * az.cos());
        let (rho, direction) = ground_to_direction(xy, g).unwrap();
        UserPosition {
            ground_xy: xy,
            azimuth: az,
            range_m: range,
            rho_m: rho,
            direction,
        }
    }

    #[test]
    fn a_column_norms() {
        let g = table1_geometry();
        let layout = ArrayLayout::centered(8, 8, crate::geometry::Vec3::zeros());
        let users = vec![user_at(&g, 0.0, 26.19), user_at(&g, 30.0, 60.0)];
        let a = build_a(&users, &layout);
        for (k, user) in users.iter().enumerate() {
            let expected =
                2.0 * user.direction.phi.cos() * user.direction.theta.cos() * (64f64).sqrt();
            assert_relative_eq!(a.column(k).norm(), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn identical_directions_give_identical_rows() {
        let g = table1_geometry();
        let layout = ArrayLayout::centered(4, 4, crate::geometry::Vec3::zeros());
        let u = user_at(&g, 10.0, 40.0);
        let a = build_a(&[u, u], &layout);
        let n = DMatrix::from_fn(16, 2, |r, c| {
            Complex64::new((r + c) as f64 * 0.01, r as f64 * 0.02)
        });
        let h = build_h(&a, &n);
        assert!((h.row(0) - h.row(1)).norm() < 1e-12);
    }

    #[test]
    fn single_user_channel_matches_pattern() {
        // |H|^2 for one module equals the steered-pattern gain at the user
        let g = table1_geometry();
        let design = FeederModule::design(16, 16, 2, 2, 6.0, Illumination::Front).unwrap();
        let system = StackedSystem::build(&design, 1, 1.0, StackingAxis::X).unwrap();
        let user = user_at(&g, 20.0, 50.0);
        let mask = system
            .design
            .phase_mask(&system.module_layouts[0], user.direction);
        let n = system.build_n(std::slice::from_ref(&mask), true).unwrap();
        let a = build_a(std::slice::from_ref(&user), &system.stacked_ris);
        let h = build_h(&a, &n);

        let steered =
            crate::feeder::steer(&design.template, user.direction, &design.ris_layout).unwrap();
        let gain =
            crate::array::radiation_pattern(&design.ris_layout, &steered, user.direction).unwrap();
        assert_relative_eq!(h[(0, 0)].norm_sqr(), gain, max_relative = 1e-9);
    }

    #[test]
    fn zero_db_snr_gives_unit_rate() {
        let link = LinkBudget::default();
        // pick |H|^2 so that |H|^2 P L / (W N0) = 1
        let rho = 50.0;
        let l = freespace_pathloss_linear(rho, link.wavelength_m());
        let p = dbm_to_watts(20.0);
        let h_sq = link.noise_power_w() / (l * p);
        let h = DMatrix::from_element(1, 1, Complex64::new(h_sq.sqrt(), 0.0));
        assert_relative_eq!(user_rate(&h, 0, &link, 20.0, rho), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_channel_zero_rate_and_interference_hurts() {
        let link = LinkBudget::default();
        let h0 = DMatrix::from_element(1, 1, Complex64::new(0.0, 0.0));
        assert_eq!(user_rate(&h0, 0, &link, 20.0, 50.0), 0.0);

        let mut h = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
        h[(0, 0)] = Complex64::new(100.0, 0.0);
        h[(1, 1)] = Complex64::new(100.0, 0.0);
        let clean = user_rate(&h, 0, &link, 20.0, 50.0);
        h[(0, 1)] = Complex64::new(30.0, 0.0);
        let interfered = user_rate(&h, 0, &link, 20.0, 50.0);
        assert!(interfered < clean);
    }

    #[test]
    fn scheduler_respects_separation() {
        let g = table1_geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let users = schedule_users(&mut rng, 4, &g, 15.0).unwrap();
            for w in users.windows(2) {
                assert!((w[1].azimuth - w[0].azimuth).to_degrees() >= 15.0 - 1e-9);
            }
            for u in &users {
                assert!(u.range_m >= 10.0 && u.range_m <= 100.0);
                assert!(u.azimuth.to_degrees().abs() <= 60.0);
                // rho consistent with the ground mapping
                let (rho, _) = ground_to_direction(u.ground_xy, &g).unwrap();
                assert_relative_eq!(rho, u.rho_m, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn scheduler_infeasible() {
        let g = table1_geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            schedule_users(&mut rng, 10, &g, 15.0),
            Err(SimError::InfeasibleSeparation(..))
        ));
    }

    #[test]
    fn pointing_error_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d0 = Direction::from_degrees(10.0, -5.0);
        assert_eq!(apply_pointing_error(&mut rng, d0, 0.0), d0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let d = apply_pointing_error(&mut rng, d0, 2.5);
            let err = (d.phi - d0.phi).to_degrees();
            sum += err;
            sum_sq += err * err;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 3.0 * 2.5 / (n as f64).sqrt());
        assert_relative_eq!(std, 2.5, epsilon = 0.05);
    }

    #[test]
    fn campaign_is_deterministic() {
        let g = table1_geometry();
        let design = FeederModule::design(8, 8, 2, 2, 6.0, Illumination::Front).unwrap();
        let system = StackedSystem::build(&design, 2, 1.0, StackingAxis::X).unwrap();
        let cfg = SimConfig {
            num_drops: 20,
            num_users: 2,
            rng_seed: 9,
            ..SimConfig::default()
        };
        let link = LinkBudget::default();
        let a = run_campaign(&cfg, &system, &g, &link, 20.0).unwrap();
        let b = run_campaign(&cfg, &system, &g, &link, 20.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_cdf_cases() {
        let cdf = empirical_cdf(&[2.0]).unwrap();
        assert_eq!(cdf, vec![(2.0, 1.0)]);
        let cdf = empirical_cdf(&[1.0, 1.0, 3.0]).unwrap();
        assert_eq!(cdf.len(), 2);
        assert_relative_eq!(cdf[0].1, 2.0 / 3.0);
        assert_relative_eq!(cdf[1].1, 1.0);
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn ks_distance_cases() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let b = [10.0, 11.0, 12.0];
        assert_relative_eq!(ks_distance(&a, &b).unwrap(), 1.0);
    }
}
