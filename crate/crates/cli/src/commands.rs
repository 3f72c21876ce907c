use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use afc_core::hom::{
    best_delay, load_mixture, visibility_mixed_mixed_asymptotic, visibility_windowed, CoincidenceWindow,
    MixedPhoton,
};
use afc_core::network::{fidelity_from_visibility, scenario_report};
use afc_core::params::{derivation_table, format_table};
use afc_core::scenarios::{plan_readout, run_fig3, run_fig4, run_shaping, write_json, Panel, ShapingMode};
use afc_core::shaper::{gaussian_crop_limit, gaussian_kept_energy, renormalized_asymptotic_overlap};
use afc_core::waveform::load_csv;
use afc_core::Error;
use serde::Serialize;

use crate::config::{ConfigError, GlobalConfig};

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    /// Outputs were written but an estimate missed its tolerance.
    Tolerance(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Tolerance(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Tolerance(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Csv(_) | Error::StepTooLarge { .. } | Error::PulseOverlap { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

pub type Outcome = Result<(), Failure>;

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|source| {
        Failure::from(Error::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

pub fn simulate(cfg: &GlobalConfig, out: &Path) -> Outcome {
    let scfg = cfg.scenario()?;
    let run = run_shaping(&scfg, cfg.mode()?)?;
    run.write(out)?;
    warn(&run.warnings);
    println!(
        "efficiency {:.4}  overlap {:.4}  filtered efficiency {:.4}  filtered overlap {:.4}",
        run.efficiency, run.overlap, run.filtered.efficiency, run.filtered.overlap
    );
    Ok(())
}

#[derive(Serialize)]
struct ShapeSummary {
    mode: ShapingMode,
    n_bins: usize,
    bin_width_s: f64,
    predicted_r: f64,
    /// Gaussian-input closed forms for the crop parameter, when cropped.
    crop_limit: Option<f64>,
    crop_limit_renormalized: Option<f64>,
    crop_kept_energy: Option<f64>,
    output_window_s: (f64, f64),
    warnings: Vec<String>,
}

pub fn shape(cfg: &GlobalConfig, out: &Path) -> Outcome {
    let scfg = cfg.scenario()?;
    let mode = cfg.mode()?;
    let planned = plan_readout(&scfg, mode)?;
    let m = match mode {
        ShapingMode::Cropped { m } => Some(m),
        _ => None,
    };
    let summary = ShapeSummary {
        mode,
        n_bins: planned.plan.layout.n_shape,
        bin_width_s: planned.plan.layout.bin_width(),
        predicted_r: planned.plan.r,
        crop_limit: m.map(gaussian_crop_limit),
        crop_limit_renormalized: m.map(renormalized_asymptotic_overlap).transpose()?,
        crop_kept_energy: m.map(gaussian_kept_energy),
        output_window_s: planned.readout.output_window(&planned.timing),
        warnings: planned.readout.warnings.clone(),
    };
    afc_core::scenarios::create_dir(out)?;
    write_json(&out.join("plan.json"), &planned.plan)?;
    write_json(&out.join("schedule.json"), &planned.readout)?;
    write_json(&out.join("summary.json"), &summary)?;
    warn(&summary.warnings);
    println!("{} bins, predicted overlap R = {:.4}", summary.n_bins, summary.predicted_r);
    Ok(())
}

fn load_photon(key: &str, path: &Option<PathBuf>) -> Result<MixedPhoton, Failure> {
    let p = path
        .as_ref()
        .ok_or_else(|| Failure::Config(format!("`hom.{key}` (waveform CSV or mixture JSON path) is required")))?;
    if !p.exists() {
        return Err(Failure::Config(format!("`hom.{key}`: file {} not found", p.display())));
    }
    let is_json = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(if is_json {
        load_mixture(p)?
    } else {
        MixedPhoton::pure(load_csv(p)?.normalized()?)?
    })
}

#[derive(Serialize)]
struct HomPoint {
    window_s: f64,
    visibility: f64,
    stderr: f64,
    flagged: bool,
}

#[derive(Serialize)]
struct HomSummary {
    delay_s: f64,
    asymptotic: f64,
    fidelity: f64,
    seed: u64,
    points: Vec<HomPoint>,
}

pub fn hom(cfg: &GlobalConfig, out: &Path) -> Outcome {
    let qmc = cfg.qmc()?;
    let windows = cfg.windows()?;
    let a = load_photon("photon_a", &cfg.hom.photon_a)?;
    let b = load_photon("photon_b", &cfg.hom.photon_b)?;
    let delay = if cfg.hom.optimize_delay {
        let (la, ha) = a.support();
        let (lb, hb) = b.support();
        let centre = 0.5 * (la + ha) - 0.5 * (lb + hb);
        let range = cfg.hom.delay_range_us * 1e-6;
        best_delay(&a, &b, centre - range, centre + range, cfg.hom.delay_points)?.0
    } else {
        0.0
    };
    let b = b.delayed(delay);
    let asymptotic = visibility_mixed_mixed_asymptotic(&a, &b)?;
    let mut points = Vec::with_capacity(windows.len());
    for &t in &windows {
        let v = visibility_windowed(&a, &b, CoincidenceWindow::new(t)?, &qmc)?;
        points.push(HomPoint {
            window_s: t,
            visibility: v.value,
            stderr: v.stderr,
            flagged: v.flagged,
        });
    }
    let mut csv = String::from("window_s,visibility,stderr,flagged\n");
    for p in &points {
        let _ = writeln!(csv, "{:e},{:.12e},{:.6e},{}", p.window_s, p.visibility, p.stderr, p.flagged);
    }
    let _ = writeln!(csv, "inf,{asymptotic:.12e},0,false");
    afc_core::scenarios::create_dir(out)?;
    write_text(&out.join("visibility_curve.csv"), &csv)?;
    let summary = HomSummary {
        delay_s: delay,
        asymptotic,
        fidelity: fidelity_from_visibility(asymptotic)?,
        seed: qmc.seed,
        points,
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!("asymptotic visibility {asymptotic:.5} at delay {delay:.4e} s");
    for p in &summary.points {
        println!("  T = {:.3e} s: {:.5} ± {:.1e}", p.window_s, p.visibility, p.stderr);
    }
    flagged(summary.points.iter().filter(|p| p.flagged).count())
}

fn flagged(n: usize) -> Outcome {
    if n > 0 {
        Err(Failure::Tolerance(format!(
            "{n} windowed visibilities exceed the configured stderr tolerance"
        )))
    } else {
        Ok(())
    }
}

pub fn network(cfg: &GlobalConfig, out: &Path) -> Outcome {
    let report = scenario_report(&cfg.efficiencies()?, &cfg.report_inputs()?, cfg.network.repeater_fidelity)?;
    afc_core::scenarios::create_dir(out)?;
    let text = report.to_text();
    write_text(&out.join("report.txt"), &text)?;
    write_json(&out.join("summary.json"), &report)?;
    print!("{text}");
    Ok(())
}

pub fn params(cfg: &GlobalConfig, out: &Path) -> Outcome {
    let rows = derivation_table(&cfg.experiment()?)?;
    let text = format_table(&rows);
    afc_core::scenarios::create_dir(out)?;
    write_text(&out.join("params.txt"), &text)?;
    write_json(&out.join("params.json"), &rows)?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScenarioName {
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4,
}

pub fn scenario(cfg: &GlobalConfig, name: ScenarioName, out: &Path) -> Outcome {
    let scfg = cfg.scenario()?;
    let panel = |p: Panel, dir: &Path| -> Result<afc_core::scenarios::ShapingRun, Failure> {
        let run = run_fig3(p, &scfg)?;
        run.write(dir)?;
        warn(&run.warnings);
        println!(
            "panel {p:?}: efficiency {:.4}  overlap {:.4}  filtered efficiency {:.4}  filtered overlap {:.4}",
            run.efficiency, run.overlap, run.filtered.efficiency, run.filtered.overlap
        );
        Ok(run)
    };
    match name {
        ScenarioName::Fig3a => panel(Panel::A, out).map(|_| ()),
        ScenarioName::Fig3b => panel(Panel::B, out).map(|_| ()),
        ScenarioName::Fig3c => panel(Panel::C, out).map(|_| ()),
        ScenarioName::Fig4 => {
            let f4 = cfg.fig4()?;
            let a = panel(Panel::A, &out.join("fig3a"))?;
            let c = panel(Panel::C, &out.join("fig3c"))?;
            let res = run_fig4(&f4, &a, &c)?;
            res.write(out)?;
            warn(&res.warnings);
            for cv in &res.curves {
                println!("{} vs {}: V∞ = {:.4}", cv.memory, cv.ion, cv.asymptotic);
            }
            print!("{}", res.report.to_text());
            let n = res
                .curves
                .iter()
                .flat_map(|c| c.points.iter())
                .filter(|p| p.flagged)
                .count();
            flagged(n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        let io = Error::Io {
            path: "x".into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        };
        assert_eq!(Failure::from(io).code(), 2);
        assert_eq!(Failure::from(Error::NonFinite { t: 0.0 }).code(), 3);
        assert_eq!(Failure::from(Error::invalid("x")).code(), 3);
        assert_eq!(flagged(1).unwrap_err().code(), 4);
        assert!(flagged(0).is_ok());
    }
}
