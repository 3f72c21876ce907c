//! End-to-end pipelines: shaped memory output and the HOM/heralding comparison against an ion photon.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{build_comb, CombSpec};
use crate::dynamics::{simulate, window_efficiency, MemoryParams};
use crate::error::{Error, Result};
use crate::hom::{
    best_delay, build_mixture, load_mixture, visibility_mixed_mixed_asymptotic, visibility_windowed,
    CoincidenceWindow, MixedPhoton, QmcOptions,
};
use crate::network::{scenario_report, Efficiencies, NetworkReport, ReportInput};
use crate::shaper::{
    build_readout_schedule, plan_shaping, BinLayout, ReadoutMode, ReadoutPlan, ReadoutTiming, ShapingPlan,
};
use crate::waveform::{
    box_filter, gaussian_amplitude_sigma, load_csv, make_asymmetric_ion_like_at, make_gaussian, resample,
    save_csv, Envelope, Interpolation, SpectralBoxFilter, TimeGrid, C64,
};

/// Memory model in serializable form; the comb grid is built on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemorySpec {
    pub kappa: f64,
    pub g_sqrt_n: f64,
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub comb: CombSpec,
}

impl MemorySpec {
    pub fn pr_yso() -> Self {
        Self {
            kappa: 2.0 * PI * 55e6,
            g_sqrt_n: 2.0 * PI * 8.4e6,
            gamma_p: 0.0,
            gamma_s: 0.0,
            comb: CombSpec::pr_yso(),
        }
    }

    pub fn build(&self) -> Result<MemoryParams> {
        let p = MemoryParams {
            kappa: self.kappa,
            g_sqrt_n: self.g_sqrt_n,
            gamma_p: self.gamma_p,
            gamma_s: self.gamma_s,
            comb: build_comb(&self.comb)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    /// Asymmetric sech stand-in peaked at t = 0.
    IonLike { rise: f64, fall: f64, fwhm: f64 },
    File { path: PathBuf },
}

impl TargetSpec {
    pub fn default_ion() -> Self {
        Self::IonLike {
            rise: 1.0,
            fall: 3.0,
            fwhm: 6e-6,
        }
    }

    pub fn load(&self) -> Result<Envelope> {
        match self {
            Self::IonLike { rise, fall, fwhm } => {
                let half = 5.0 * fwhm;
                let grid = TimeGrid::spanning(-half, half, 2e-9)?;
                make_asymmetric_ion_like_at(grid, 0.0, *rise, *fall, *fwhm)
            }
            Self::File { path } => load_csv(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ShapingMode {
    /// Single π readout of the whole echo.
    None,
    Plain { n_bins: usize },
    /// Bin width 2Mσ of the input amplitude.
    Cropped { m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Panel {
    A,
    B,
    C,
}

impl Panel {
    pub fn mode(self) -> ShapingMode {
        match self {
            Panel::A => ShapingMode::None,
            Panel::B => ShapingMode::Plain { n_bins: 20 },
            Panel::C => ShapingMode::Cropped { m: 1.4 },
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Panel::A),
            "b" => Ok(Panel::B),
            "c" => Ok(Panel::C),
            _ => Err(Error::invalid(format!("unknown panel '{s}' (expected a, b or c)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub memory: MemorySpec,
    pub input_fwhm: f64,
    pub input_center: f64,
    pub target: TargetSpec,
    /// Energy fraction of the target covered by the bins.
    pub support_fraction: f64,
    pub tau: f64,
    pub hold: f64,
    pub storage_margin: f64,
    pub dt: f64,
    /// Layout centres scanned: `scan_start + k·scan_step`, `k < scan_points`.
    pub scan_start: f64,
    pub scan_step: f64,
    pub scan_points: usize,
    pub filter: SpectralBoxFilter,
    /// Grid used for filtering and HOM.
    pub coarse_dt: f64,
    pub min_filter_span: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            memory: MemorySpec::pr_yso(),
            input_fwhm: 330e-9,
            input_center: 1.5e-6,
            target: TargetSpec::default_ion(),
            support_fraction: 0.99,
            tau: 70e-9,
            hold: 0.5e-6,
            storage_margin: 3.0,
            dt: 0.144e-9,
            scan_start: -10e-6,
            scan_step: 0.25e-6,
            scan_points: 81,
            filter: SpectralBoxFilter {
                half_width: 2.0 * PI * 0.15e6,
                center: 0.0,
            },
            coarse_dt: 2e-9,
            min_filter_span: 80e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilteredOutput {
    pub retained: f64,
    pub efficiency: f64,
    pub overlap: f64,
    pub overlap_sq: f64,
    #[serde(skip)]
    pub envelope: Option<Envelope>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapingRun {
    pub mode: ShapingMode,
    pub plan: ShapingPlan,
    pub readout: ReadoutPlan,
    pub window: (f64, f64),
    /// Window energy over input energy.
    pub efficiency: f64,
    /// |⟨target, E_out/√η⟩| over the window.
    pub overlap: f64,
    pub overlap_sq: f64,
    pub predicted_r: f64,
    pub budget_deviation: f64,
    /// Target delay aligning its first bin with the first echo.
    pub target_shift: f64,
    pub filtered: FilteredOutput,
    pub warnings: Vec<String>,
    /// Conditional output on the coarse grid, zero outside the window.
    #[serde(skip)]
    pub photon: Option<Envelope>,
    #[serde(skip)]
    pub output: Option<Envelope>,
    #[serde(skip)]
    pub target: Option<Envelope>,
}

fn input_envelope(fwhm: f64) -> Result<Envelope> {
    let half = 10.0 * fwhm;
    make_gaussian(TimeGrid::spanning(-half, half, 1e-9)?, 0.0, fwhm)
}

/// |∫ f*(t − shift) e(t) dt| / √∫|e|², both over `e`'s grid restricted to [t0, t1].
fn conditional_overlap(target: &Envelope, shift: f64, e: &Envelope, t0: f64, t1: f64) -> (f64, f64) {
    let g = &e.grid;
    let mut acc = C64::new(0.0, 0.0);
    let mut energy = 0.0;
    for i in 0..g.n {
        let t = g.t(i);
        if t >= t0 && t <= t1 {
            acc += target.sample_cubic(t - shift).conj() * e.samples[i];
            energy += e.samples[i].norm_sqr();
        }
    }
    if energy == 0.0 {
        return (0.0, 0.0);
    }
    let tn = target.norm_sqr().sqrt();
    ((acc * g.dt).norm() / ((energy * g.dt).sqrt() * tn), energy * g.dt)
}

fn best_layout(target: &Envelope, h_in: &Envelope, w: f64, n: usize, crop: bool, cfg: &ScenarioConfig) -> Result<ShapingPlan> {
    if cfg.scan_points == 0 {
        return Err(Error::invalid("layout scan needs at least one point"));
    }
    let plans: Vec<Result<ShapingPlan>> = (0..cfg.scan_points)
        .into_par_iter()
        .map(|k| {
            let lay = BinLayout::centered(cfg.scan_start + k as f64 * cfg.scan_step, w, n)?;
            plan_shaping(target, h_in, &lay, crop)
        })
        .collect();
    let mut best: Option<ShapingPlan> = None;
    let mut first_err = None;
    for p in plans {
        match p {
            Ok(p) => {
                if best.as_ref().is_none_or(|b| p.r > b.r) {
                    best = Some(p);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or_else(|| Error::invalid("no admissible layout")))
}

/// Layout, weights and pulse schedule for one shaping mode, before any dynamics.
#[derive(Debug, Clone)]
pub struct PlannedShaping {
    pub plan: ShapingPlan,
    pub timing: ReadoutTiming,
    pub readout: ReadoutPlan,
    pub target: Envelope,
}

pub fn plan_readout(cfg: &ScenarioConfig, mode: ShapingMode) -> Result<PlannedShaping> {
    let target = cfg.target.load()?.normalized()?;
    let h_in = input_envelope(cfg.input_fwhm)?;
    let (sa, sb) = target.energy_support(cfg.support_fraction);
    let (ha, hb) = h_in.energy_support(0.99);
    let span = sb - sa;
    let sigma = gaussian_amplitude_sigma(cfg.input_fwhm);
    let (w, n, crop, rmode) = match mode {
        ShapingMode::None => (span.max(hb - ha), 1, false, ReadoutMode::Plain),
        ShapingMode::Plain { n_bins } => {
            if n_bins == 0 {
                return Err(Error::invalid("plain shaping needs at least one bin"));
            }
            ((span / n_bins as f64).max(hb - ha), n_bins, false, ReadoutMode::Plain)
        }
        ShapingMode::Cropped { m } => {
            if !(m > 0.0) {
                return Err(Error::invalid("crop parameter M must be positive"));
            }
            let w = 2.0 * m * sigma;
            (w, (span / w).ceil() as usize, true, ReadoutMode::Cropped { m, sigma })
        }
    };
    let plan = best_layout(&target, &h_in, w, n, crop, cfg)?;
    let timing = ReadoutTiming {
        input_center: cfg.input_center,
        input_fwhm: cfg.input_fwhm,
        delta: cfg.memory.comb.delta,
        tau: cfg.tau,
        storage_margin: cfg.storage_margin,
        hold: cfg.hold,
        mode: rmode,
        sync: n > 1,
    };
    let readout = build_readout_schedule(&plan, &timing)?;
    Ok(PlannedShaping {
        plan,
        timing,
        readout,
        target,
    })
}

/// Simulates one shaping mode end to end and evaluates it with and without the box filter.
pub fn run_shaping(cfg: &ScenarioConfig, mode: ShapingMode) -> Result<ShapingRun> {
    let params = cfg.memory.build()?;
    let PlannedShaping {
        plan,
        timing,
        readout,
        target,
    } = plan_readout(cfg, mode)?;
    let (w0, w1) = readout.output_window(&timing);
    let grid = TimeGrid::spanning(0.0, w1 + 0.5e-6, cfg.dt)?;
    let input = make_gaussian(grid, cfg.input_center, cfg.input_fwhm)?;
    let out = simulate(&params, &input, &readout.schedule, &grid)?;
    let efficiency = window_efficiency(&out, w0, w1)?;
    let target_shift = readout.echo_centers[0] - plan.layout.center(0);
    let (overlap, _) = conditional_overlap(&target, target_shift, &out.e_out, w0, w1);

    // coarse, padded copy of the windowed output
    let fspan = (w1 - w0 + 40e-6).max(cfg.min_filter_span);
    let mid = 0.5 * (w0 + w1);
    let cgrid = TimeGrid::spanning(mid - 0.5 * fspan, mid + 0.5 * fspan, cfg.coarse_dt)?;
    let mut photon = resample(&out.e_out, cgrid, Interpolation::BandLimited)?.envelope;
    for i in 0..cgrid.n {
        let t = cgrid.t(i);
        if t < w0 || t > w1 {
            photon.samples[i] = C64::new(0.0, 0.0);
        }
    }
    let (fenv, retained) = box_filter(&photon, &cfg.filter)?;
    let fenergy = fenv.norm_sqr();
    let (f_overlap, _) = conditional_overlap(&target, target_shift, &fenv, cgrid.t0, cgrid.t_end());
    let filtered = FilteredOutput {
        retained,
        efficiency: fenergy / out.input_energy,
        overlap: f_overlap,
        overlap_sq: f_overlap * f_overlap,
        envelope: Some(fenv),
    };
    let mut warnings = readout.warnings.clone();
    warnings.extend(cfg.memory.comb.warnings());
    Ok(ShapingRun {
        mode,
        predicted_r: plan.r,
        plan,
        readout,
        window: (w0, w1),
        efficiency,
        overlap,
        overlap_sq: overlap * overlap,
        budget_deviation: out.max_budget_deviation,
        target_shift,
        filtered,
        warnings,
        photon: Some(photon),
        output: Some(out.e_out),
        target: Some(target),
    })
}

pub fn run_fig3(panel: Panel, cfg: &ScenarioConfig) -> Result<ShapingRun> {
    run_shaping(cfg, panel.mode())
}

fn trimmed(e: &Envelope, fraction: f64) -> Result<Envelope> {
    let (lo, hi) = e.energy_support(fraction);
    let pad = 20.0 * e.grid.dt;
    let i0 = e.grid.index_of(lo - pad);
    let i1 = e.grid.index_of(hi + pad).min(e.grid.n - 1);
    let grid = TimeGrid::new(e.grid.t(i0), e.grid.dt, i1 - i0 + 1)?;
    Envelope::new(grid, e.samples[i0..=i1].to_vec())?.normalized()
}

impl ShapingRun {
    /// Normalized memory photon for interference, filtered or not.
    pub fn memory_photon(&self, filtered: bool) -> Result<Envelope> {
        let e = if filtered {
            self.filtered.envelope.as_ref()
        } else {
            self.photon.as_ref()
        };
        let e = e.ok_or_else(|| Error::invalid("run carries no waveform"))?;
        trimmed(e, 1.0 - 1e-7)
    }

    /// Writes waveforms, plan and summary into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        if let Some(p) = &self.photon {
            save_csv(p, &dir.join("output_window.csv"))?;
        }
        if let Some(f) = &self.filtered.envelope {
            save_csv(f, &dir.join("output_filtered.csv"))?;
        }
        if let (Some(t), Some(p)) = (&self.target, &self.photon) {
            let aligned = Envelope::from_fn(p.grid, |x| t.sample_cubic(x - self.target_shift));
            save_csv(&aligned, &dir.join("target_aligned.csv"))?;
        }
        write_json(&dir.join("plan.json"), &self.plan)?;
        write_json(&dir.join("schedule.json"), &self.readout)?;
        write_json(&dir.join("summary.json"), self)
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(path, s + "\n").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IonSource {
    Files {
        pure_csv: PathBuf,
        mixture_json: Option<PathBuf>,
    },
    /// Ion-like Ψ with exponentially distributed emission delays.
    Synthetic {
        target: TargetSpec,
        p0: f64,
        mean_delay: f64,
        max_delay: f64,
        n_delays: usize,
    },
}

impl IonSource {
    pub fn synthetic_default() -> Self {
        Self::Synthetic {
            target: TargetSpec::default_ion(),
            p0: 0.0,
            mean_delay: 1.5e-6,
            max_delay: 6e-6,
            n_delays: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Config {
    pub ion: Option<IonSource>,
    pub windows: Vec<f64>,
    pub qmc: QmcOptions,
    pub efficiencies: Efficiencies,
    pub repeater_fidelity: f64,
    /// Delay search half-range and coarse point count.
    pub delay_range: f64,
    pub delay_points: usize,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self {
            ion: None,
            windows: vec![0.5e-6, 1e-6, 2e-6, 5e-6, 20e-6],
            qmc: QmcOptions::default(),
            efficiencies: Efficiencies {
                eta_det: 0.9,
                eta_ion: 0.1,
                eta_mem: 0.5,
            },
            repeater_fidelity: 1.0,
            delay_range: 20e-6,
            delay_points: 161,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowPoint {
    pub window: f64,
    pub value: f64,
    pub stderr: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub memory: String,
    pub ion: String,
    /// Delay applied to the ion photon.
    pub delay: f64,
    pub asymptotic: f64,
    pub points: Vec<WindowPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig4Result {
    pub curves: Vec<VisibilityCurve>,
    pub report: NetworkReport,
    pub synthetic_ion: bool,
    pub warnings: Vec<String>,
}

pub const SYNTHETIC_ION_WARNING: &str =
    "ION PHOTON IS SYNTHETIC: no ion waveform files were given; visibilities use the ion-like stand-in and an assumed delay distribution";

/// Pure and mixed ion photons; `true` when the synthetic fallback was used.
pub fn load_ion(src: Option<&IonSource>) -> Result<(MixedPhoton, MixedPhoton, bool)> {
    let fallback = IonSource::synthetic_default();
    let (src, synthetic) = match src {
        Some(s) => (s, matches!(s, IonSource::Synthetic { .. })),
        None => (&fallback, true),
    };
    match src {
        IonSource::Files { pure_csv, mixture_json } => {
            let pure = MixedPhoton::pure(load_csv(pure_csv)?)?;
            let mixed = match mixture_json {
                Some(p) => load_mixture(p)?,
                None => pure.clone(),
            };
            Ok((pure, mixed, synthetic))
        }
        IonSource::Synthetic {
            target,
            p0,
            mean_delay,
            max_delay,
            n_delays,
        } => {
            if *n_delays == 0 || !(*mean_delay > 0.0) || !(*max_delay >= 0.0) {
                return Err(Error::invalid("synthetic ion delays need n ≥ 1 and positive scales"));
            }
            let psi = target.load()?;
            let step = max_delay / *n_delays as f64;
            let masses: Vec<(f64, f64)> = (0..*n_delays)
                .map(|k| {
                    let s = k as f64 * step;
                    (s, (-s / mean_delay).exp())
                })
                .collect();
            let pure = MixedPhoton::pure(psi.clone())?;
            let mixed = build_mixture(&psi, *p0, &masses)?;
            Ok((pure, mixed, synthetic))
        }
    }
}

fn curve(memory_label: &str, memory: &Envelope, ion_label: &str, ion: &MixedPhoton, cfg: &Fig4Config) -> Result<VisibilityCurve> {
    let mem = MixedPhoton::pure(memory.clone())?;
    let (ma, mb) = mem.support();
    let (ia, ib) = ion.support();
    // delay that puts the ion photon's support centre on the memory photon's
    let centre = 0.5 * (ma + mb) - 0.5 * (ia + ib);
    let (delay, asymptotic) = best_delay(
        &mem,
        ion,
        centre - cfg.delay_range,
        centre + cfg.delay_range,
        cfg.delay_points,
    )?;
    let shifted = ion.delayed(delay);
    let mut points = Vec::with_capacity(cfg.windows.len());
    for &t in &cfg.windows {
        let v = visibility_windowed(&mem, &shifted, CoincidenceWindow::new(t)?, &cfg.qmc)?;
        points.push(WindowPoint {
            window: t,
            value: v.value,
            stderr: v.stderr,
            flagged: v.flagged,
        });
    }
    Ok(VisibilityCurve {
        memory: memory_label.into(),
        ion: ion_label.into(),
        delay,
        asymptotic: visibility_mixed_mixed_asymptotic(&mem, &shifted)?.max(asymptotic),
        points,
    })
}

/// Visibility curves and heralding report from an unshaped and a shaped run.
pub fn run_fig4(cfg: &Fig4Config, unshaped: &ShapingRun, shaped: &ShapingRun) -> Result<Fig4Result> {
    let (pure, mixed, synthetic) = load_ion(cfg.ion.as_ref())?;
    let mut warnings = Vec::new();
    if synthetic {
        warnings.push(SYNTHETIC_ION_WARNING.to_string());
    }
    let m_unshaped = unshaped.memory_photon(false)?;
    let m_filtered = unshaped.memory_photon(true)?;
    let m_shaped = shaped.memory_photon(true)?;
    let mut curves = Vec::new();
    for (ml, m) in [("unshaped", &m_unshaped), ("shaped_filtered", &m_shaped)] {
        for (il, ion) in [("pure_ion", &pure), ("mixed_ion", &mixed)] {
            curves.push(curve(ml, m, il, ion, cfg)?);
        }
    }
    let filtered_only = curve("filtered_only", &m_filtered, "mixed_ion", &mixed, cfg)?;
    let v = |label: &str| {
        curves
            .iter()
            .chain(std::iter::once(&filtered_only))
            .find(|c| c.memory == label && c.ion == "mixed_ion")
            .map(|c| c.asymptotic)
            .unwrap_or(0.0)
    };
    let inputs = [
        ReportInput {
            label: "baseline".into(),
            memory_factor: 1.0,
            visibility: v("unshaped"),
        },
        ReportInput {
            label: "filtered_only".into(),
            memory_factor: unshaped.filtered.retained,
            visibility: v("filtered_only"),
        },
        ReportInput {
            label: "shaped_filtered".into(),
            memory_factor: shaped.filtered.efficiency / unshaped.efficiency,
            visibility: v("shaped_filtered"),
        },
    ];
    let report = scenario_report(&cfg.efficiencies, &inputs, cfg.repeater_fidelity)?;
    curves.push(filtered_only);
    for c in &curves {
        if c.points.iter().any(|p| p.flagged) {
            warnings.push(format!("{} vs {}: QMC error above tolerance", c.memory, c.ion));
        }
    }
    Ok(Fig4Result {
        curves,
        report,
        synthetic_ion: synthetic,
        warnings,
    })
}

impl Fig4Result {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let path = dir.join("visibility_curves.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Csv(e.to_string()))?;
        w.write_record(["memory", "ion", "window_s", "visibility", "stderr", "flagged"])
            .map_err(|e| Error::Csv(e.to_string()))?;
        for c in &self.curves {
            for p in &c.points {
                w.write_record([
                    c.memory.clone(),
                    c.ion.clone(),
                    format!("{:e}", p.window),
                    format!("{:e}", p.value),
                    format!("{:e}", p.stderr),
                    p.flagged.to_string(),
                ])
                .map_err(|e| Error::Csv(e.to_string()))?;
            }
            w.write_record([
                c.memory.clone(),
                c.ion.clone(),
                "inf".into(),
                format!("{:e}", c.asymptotic),
                "0".into(),
                "false".into(),
            ])
            .map_err(|e| Error::Csv(e.to_string()))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        std::fs::write(dir.join("report.txt"), self.report.to_text()).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_json(&dir.join("summary.json"), self)
    }
}
