//! Command-line front end: design reports, ground footprints, Monte Carlo
//! rate campaigns, and link/DC-power reports, all driven by one JSON config.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amaf_ris::array::{
    default_exclusion_deg, grid_to_csv, pattern_grid, peak_and_sidelobe, radiation_pattern,
};
use amaf_ris::feeder::steer;
use amaf_ris::geometry::{
    boresight_ground_intercept, composite_cell_edge_direction, ground_to_direction, max_slant_range,
};
use amaf_ris::link::{dc_power_arch1, dc_power_arch2, freespace_pathloss_db, PowerReport};
use amaf_ris::sim::{cdf_to_csv, empirical_cdf, percentile, run_campaign, samples_to_csv};
use amaf_ris::stack::next_table_to_csv;
use amaf_ris::{Direction, FeederModule, LinkBudget, ScenarioGeometry, StackedSystem};
use clap::{Args, Parser, Subcommand};

use config::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "amaf-ris",
    about = "Feeder-fed reflecting-surface base station simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scenario config; defaults to the built-in reference scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for reports and CSV files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Feeder design report: taper, weights, gain, sidelobes.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Ground-plane gain footprint for one or more steered beams.
    Footprint {
        #[command(flatten)]
        common: Common,
        /// Ground target "x,y" in meters; repeat for a multi-beam footprint.
        /// Defaults to the boresight ground intercept.
        #[arg(long = "target", allow_hyphen_values = true)]
        targets: Vec<String>,
    },
    /// Monte Carlo rate campaign; emits sample and CDF CSVs.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Link budget and DC power comparison of the two architectures.
    Power {
        #[command(flatten)]
        common: Common,
    },
    /// Schema-check a config file and echo the effective config.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design { common } => with_config(&common, cmd_design),
        Command::Footprint {
            common,
            ref targets,
        } => {
            let targets = targets.clone();
            with_config(&common, move |cfg, out| cmd_footprint(cfg, out, &targets))
        }
        Command::Simulate { common } => with_config(&common, cmd_simulate),
        Command::Power { common } => with_config(&common, cmd_power),
        Command::Validate { common } => load_config(&common).map(|cfg| {
            println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| CliError::Config(e.to_string()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn with_config<F>(common: &Common, run: F) -> Result<(), CliError>
where
    F: FnOnce(&ScenarioConfig, &Path) -> Result<(), CliError>,
{
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out_dir)?;
    // one reproducibility artifact per run
    fs::write(
        common.out_dir.join("effective_config.json"),
        serde_json::to_string_pretty(&cfg).unwrap() + "\n",
    )?;
    run(&cfg, &common.out_dir)
}

fn build_design(cfg: &ScenarioConfig) -> Result<FeederModule, CliError> {
    Ok(FeederModule::design(
        cfg.ris_n_x,
        cfg.ris_n_z,
        cfg.amaf_n_h,
        cfg.amaf_n_v,
        cfg.focal_distance_halfwavelengths,
        cfg.illumination,
    )?)
}

/// Feed power: explicit config value, or derived from the computed
/// cell-edge gain.
fn feed_power_dbm(
    cfg: &ScenarioConfig,
    design: &FeederModule,
    geometry: &ScenarioGeometry,
    link: &LinkBudget,
) -> f64 {
    cfg.p_rf_dbm.unwrap_or_else(|| {
        link.required_p_rf_dbm(design.steered_gain_dbi(composite_cell_edge_direction(geometry)))
    })
}

fn cmd_design(cfg: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let design = build_design(cfg)?;
    let geometry = cfg.geometry();
    let link = cfg.link_budget();

    let mut csv = String::new();
    csv.push_str(&format!("# ris {} x {}\n", cfg.ris_n_x, cfg.ris_n_z));
    csv.push_str("amplitude\n");
    for a in design.template.iter() {
        csv.push_str(&format!("{a:.9}\n"));
    }
    fs::write(out.join("template_amplitudes.csv"), csv)?;

    let w0 = steer(
        &design.normalized_template(),
        Direction::new(0.0, 0.0),
        &design.ris_layout,
    )
    .map_err(anyhow::Error::from)?;
    let grid = pattern_grid(
        &design.ris_layout,
        &w0,
        (-90.0, 90.0),
        (-90.0, 90.0),
        cfg.pattern_resolution_deg,
    )
    .map_err(anyhow::Error::from)?;
    let summary =
        peak_and_sidelobe(&grid, default_exclusion_deg(&grid)).map_err(anyhow::Error::from)?;

    let edge = composite_cell_edge_direction(&geometry);
    let edge_gain = design.steered_gain_dbi(edge);
    let p_rf = feed_power_dbm(cfg, &design, &geometry, &link);

    let mut report = String::new();
    report.push_str(&format!(
        "feeder design report\n\
         surface: {} x {} elements, feeder: {} x {}, focal distance {} half-wavelengths\n\
         sigma1: {:.6}\n\
         feeder weights v1: {}\n\
         amplitude taper: {:.2} dB\n\
         boresight gain: {:.2} dBi\n\
         sidelobe level: {:.2} dB relative to peak\n\
         cell-edge gain at (phi {:.2} deg, theta {:.2} deg): {:.2} dBi\n\
         feed power: {:.2} dBm\n",
        cfg.ris_n_x,
        cfg.ris_n_z,
        cfg.amaf_n_h,
        cfg.amaf_n_v,
        cfg.focal_distance_halfwavelengths,
        design.mode.sigma1,
        design
            .mode
            .v1
            .iter()
            .map(|e| format!("{:.4}{:+.4}j", e.re, e.im))
            .collect::<Vec<_>>()
            .join(", "),
        design.taper_db(),
        summary.peak_dbi,
        summary.sidelobe_rel_db,
        edge.phi.to_degrees(),
        edge.theta.to_degrees(),
        edge_gain,
        p_rf,
    ));
    fs::write(out.join("design_report.txt"), &report)?;
    print!("{report}");

    if cfg.num_modules_k > 1 {
        let system = StackedSystem::build(
            &design,
            cfg.num_modules_k,
            cfg.module_separation_halfwavelengths,
            cfg.stacking_axis,
        )?;
        let mut f = fs::File::create(out.join("next_table.csv"))?;
        next_table_to_csv(&system.next_table(), &mut f)?;
    }

    let mut f = fs::File::create(out.join("pattern_grid.csv"))?;
    grid_to_csv(&grid, &mut f)?;
    Ok(())
}

fn parse_target(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("target '{s}' is not 'x,y'")));
    }
    let x = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| CliError::Config(format!("target '{s}': {e}")))?;
    let y = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|e| CliError::Config(format!("target '{s}': {e}")))?;
    Ok((x, y))
}

fn cmd_footprint(cfg: &ScenarioConfig, out: &Path, targets: &[String]) -> Result<(), CliError> {
    let design = build_design(cfg)?;
    let geometry = cfg.geometry();

    let targets: Vec<(f64, f64)> = if targets.is_empty() {
        let r = boresight_ground_intercept(&geometry).map_err(anyhow::Error::from)?;
        vec![(0.0, r)]
    } else {
        targets
            .iter()
            .map(|s| parse_target(s))
            .collect::<Result<_, _>>()?
    };

    // steered weights per beam, power-normalized for dBi-consistent maps
    let template = design.normalized_template();
    let mut beams = Vec::with_capacity(targets.len());
    for &(x, y) in &targets {
        let r = (x * x + y * y).sqrt();
        let az = x.atan2(y);
        if !(geometry.r_min_m..=geometry.r_max_m).contains(&r)
            || az.abs() > geometry.azimuth_span_rad
        {
            return Err(CliError::Runtime(anyhow::anyhow!(
                "target ({x}, {y}) lies outside the served sector"
            )));
        }
        let (_, dir) = ground_to_direction((x, y), &geometry).map_err(anyhow::Error::from)?;
        beams.push(steer(&template, dir, &design.ris_layout).map_err(anyhow::Error::from)?);
    }

    let step = cfg.footprint_resolution_m;
    let x_max = geometry.r_max_m * geometry.azimuth_span_rad.sin();
    let nx = (2.0 * x_max / step).round() as usize + 1;
    let ny = (geometry.r_max_m / step).round() as usize + 1;
    let xs: Vec<f64> = (0..nx).map(|i| -x_max + i as f64 * step).collect();
    let ys: Vec<f64> = (0..ny).map(|j| j as f64 * step).collect();

    let mut f = fs::File::create(out.join("footprint.csv"))?;
    write!(f, "y_m\\x_m")?;
    for x in &xs {
        write!(f, ",{x:.3}")?;
    }
    writeln!(f)?;
    let mut peak = f64::NEG_INFINITY;
    let mut peak_xy = (0.0, 0.0);
    for &y in &ys {
        write!(f, "{y:.3}")?;
        for &x in &xs {
            let total = match ground_to_direction((x, y), &geometry) {
                Ok((_, dir)) => beams
                    .iter()
                    .map(|w| radiation_pattern(&design.ris_layout, w, dir).unwrap_or(0.0))
                    .sum::<f64>(),
                Err(_) => 0.0,
            };
            let db = 10.0 * total.max(1e-300).log10();
            if db > peak {
                peak = db;
                peak_xy = (x, y);
            }
            write!(f, ",{db:.3}")?;
        }
        writeln!(f)?;
    }
    println!(
        "footprint: {} beam(s), peak {:.2} dBi at ({:.1} m, {:.1} m)",
        beams.len(),
        peak,
        peak_xy.0,
        peak_xy.1
    );
    Ok(())
}

fn cmd_simulate(cfg: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let design = build_design(cfg)?;
    let geometry = cfg.geometry();
    let link = cfg.link_budget();
    let system = StackedSystem::build(
        &design,
        cfg.num_modules_k,
        cfg.module_separation_halfwavelengths,
        cfg.stacking_axis,
    )?;
    let p_rf = feed_power_dbm(cfg, &design, &geometry, &link);
    let samples = run_campaign(&cfg.sim_config(), &system, &geometry, &link, p_rf)?;

    let mut f = fs::File::create(out.join("rates.csv"))?;
    samples_to_csv(&samples, &mut f)?;
    let rates: Vec<f64> = samples.iter().map(|s| s.rate_bits).collect();
    let cdf = empirical_cdf(&rates)?;
    let mut f = fs::File::create(out.join("rate_cdf.csv"))?;
    cdf_to_csv(&cdf, &mut f)?;

    println!(
        "{} drops x {} users, feed power {:.2} dBm",
        cfg.num_drops, cfg.num_users, p_rf
    );
    for (label, p) in [
        ("p5", 0.05),
        ("p25", 0.25),
        ("median", 0.5),
        ("p75", 0.75),
        ("p95", 0.95),
    ] {
        println!("{label}: {:.3} bits/symbol", percentile(&rates, p)?);
    }
    Ok(())
}

fn format_power(label: &str, r: &PowerReport) -> String {
    format!(
        "{label}: {} PAs, peak PA power {:.2} dBm, efficiency {:.2}, DC power {:.3} W\n",
        r.pa_count, r.p_pa_max_dbm, r.efficiency, r.p_dc_watts
    )
}

fn cmd_power(cfg: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let design = build_design(cfg)?;
    let geometry = cfg.geometry();
    let link = cfg.link_budget();
    let p_rf = feed_power_dbm(cfg, &design, &geometry, &link);

    let v1_amp: Vec<f64> = design.mode.v1.iter().map(|e| e.norm()).collect();
    let u1_amp: Vec<f64> = design.mode.u1.iter().map(|e| e.norm()).collect();
    let arch1 = dc_power_arch1(p_rf, &v1_amp, cfg.pa_efficiency);
    let arch2 = dc_power_arch2(p_rf, &u1_amp, cfg.pa_efficiency);

    let rho_max = max_slant_range(&geometry);
    let l_max = freespace_pathloss_db(rho_max, link.wavelength_m());
    let mut report = String::new();
    report.push_str(&format!(
        "link budget\n\
         carrier: {:.1} GHz, bandwidth: {:.1} GHz\n\
         thermal noise: {:.2} dBm, noise floor (NF {:.1} dB): {:.2} dBm\n\
         max pathloss ({:.1} m slant): {:.2} dB\n\
         EIRP: {:.1} dBm, feed power: {:.2} dBm\n\
         far-corner SNR: {:.2} dB\n\n",
        link.carrier_hz / 1e9,
        link.bandwidth_hz / 1e9,
        link.thermal_noise_dbm(),
        link.noise_figure_db,
        link.noise_floor_dbm(),
        rho_max,
        l_max,
        link.eirp_dbm,
        p_rf,
        link.eirp_dbm - l_max - link.noise_floor_dbm(),
    ));
    report.push_str(&format_power("feeder-fed architecture", &arch1));
    report.push_str(&format_power("fully active array", &arch2));
    report.push_str(&format!(
        "power ratio (active / feeder-fed): {:.2}\n",
        arch2.p_dc_watts / arch1.p_dc_watts
    ));
    fs::write(out.join("power_report.txt"), &report)?;
    print!("{report}");

    let mut f = fs::File::create(out.join("link_budget.csv"))?;
    writeln!(f, "quantity,value")?;
    writeln!(f, "carrier_hz,{}", link.carrier_hz)?;
    writeln!(f, "bandwidth_hz,{}", link.bandwidth_hz)?;
    writeln!(f, "thermal_noise_dbm,{:.4}", link.thermal_noise_dbm())?;
    writeln!(f, "noise_floor_dbm,{:.4}", link.noise_floor_dbm())?;
    writeln!(f, "max_pathloss_db,{l_max:.4}")?;
    writeln!(f, "eirp_dbm,{}", link.eirp_dbm)?;
    writeln!(f, "feed_power_dbm,{p_rf:.4}")?;
    writeln!(f, "arch1_pa_count,{}", arch1.pa_count)?;
    writeln!(f, "arch1_p_dc_watts,{:.6}", arch1.p_dc_watts)?;
    writeln!(f, "arch2_pa_count,{}", arch2.pa_count)?;
    writeln!(f, "arch2_p_dc_watts,{:.6}", arch2.p_dc_watts)?;
    writeln!(f, "power_ratio,{:.6}", arch2.p_dc_watts / arch1.p_dc_watts)?;
    Ok(())
}
