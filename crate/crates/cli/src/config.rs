//! TOML run configuration. Every physical quantity carries its unit in the key
//! name; frequencies are cyclic (MHz, kHz) and converted with 2π.

use std::path::{Path, PathBuf};

use afc_core::comb::{delta_from_teeth, CombSpec, ShapeKind};
use afc_core::hom::QmcOptions;
use afc_core::network::{Efficiencies, ReportInput};
use afc_core::params::{
    angular, g_sqrt_n_from_depth, kappa_from_cavity, CavityGeometry, CrystalAbsorption, ExperimentInputs,
    RabiReference,
};
use afc_core::scenarios::{Fig4Config, IonSource, MemorySpec, ScenarioConfig, ShapingMode, TargetSpec};
use afc_core::SpectralBoxFilter;
use serde::{Deserialize, Serialize};

const US_PER_S: f64 = 1e6;
const NS_PER_S: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalConfig {
    pub memory: MemorySection,
    pub comb: CombSection,
    pub input: InputSection,
    pub shaping: ShapingSection,
    pub filter: FilterSection,
    pub hom: HomSection,
    pub network: NetworkSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemorySection {
    pub kappa_mhz: f64,
    pub g_sqrt_n_mhz: f64,
    pub gamma_p_per_us: f64,
    pub gamma_s_per_us: f64,
    /// Take κ and g√N from the cavity and crystal keys below instead.
    pub derive_from_cavity: bool,
    pub mirror_r1: f64,
    pub mirror_r2: f64,
    pub cavity_length_mm: f64,
    pub d_tilde: f64,
    pub crystal_length_mm: f64,
    pub rabi_ref_intensity_w_per_cm2: f64,
    pub rabi_ref_mhz: f64,
    pub beam_diameter_um: f64,
}

impl Default for MemorySection {
    fn default() -> Self {
        Self {
            kappa_mhz: 55.0,
            g_sqrt_n_mhz: 8.4,
            gamma_p_per_us: 0.0,
            gamma_s_per_us: 0.0,
            derive_from_cavity: false,
            mirror_r1: 0.4,
            mirror_r2: 0.97,
            cavity_length_mm: 208.0,
            d_tilde: 0.48,
            crystal_length_mm: 3.0,
            rabi_ref_intensity_w_per_cm2: 250.0,
            rabi_ref_mhz: 1.6,
            beam_diameter_um: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Dirac,
    Rectangular,
    Gaussian,
    Lorentzian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CombSection {
    pub envelope: Profile,
    pub envelope_width_mhz: f64,
    pub tooth: Profile,
    pub tooth_width_khz: f64,
    pub n_teeth: usize,
    /// Defaults to width/(n_teeth − 1).
    pub period_khz: Option<f64>,
    pub classes_per_tooth: usize,
}

impl Default for CombSection {
    fn default() -> Self {
        Self {
            envelope: Profile::Rectangular,
            envelope_width_mhz: 4.0,
            tooth: Profile::Gaussian,
            tooth_width_khz: 1.0,
            n_teeth: 67,
            period_khz: None,
            classes_per_tooth: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    pub fwhm_ns: f64,
    pub center_us: f64,
    pub dt_ns: f64,
}

impl Default for InputSection {
    fn default() -> Self {
        Self {
            fwhm_ns: 330.0,
            center_us: 1.5,
            dt_ns: 0.144,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    None,
    Plain,
    Cropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    IonLike,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapingSection {
    pub mode: ModeName,
    pub n_bins: usize,
    pub crop_m: f64,
    pub tau_ns: f64,
    pub hold_us: f64,
    pub storage_margin_fwhm: f64,
    pub support_fraction: f64,
    pub scan_start_us: f64,
    pub scan_step_us: f64,
    pub scan_points: usize,
    pub target: TargetName,
    pub target_rise: f64,
    pub target_fall: f64,
    pub target_fwhm_us: f64,
    pub target_csv: Option<PathBuf>,
}

impl Default for ShapingSection {
    fn default() -> Self {
        Self {
            mode: ModeName::None,
            n_bins: 20,
            crop_m: 1.4,
            tau_ns: 70.0,
            hold_us: 0.5,
            storage_margin_fwhm: 3.0,
            support_fraction: 0.99,
            scan_start_us: -10.0,
            scan_step_us: 0.25,
            scan_points: 81,
            target: TargetName::IonLike,
            target_rise: 1.0,
            target_fall: 3.0,
            target_fwhm_us: 6.0,
            target_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub half_width_mhz: f64,
    pub center_mhz: f64,
    pub coarse_dt_ns: f64,
    pub min_span_us: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            half_width_mhz: 0.15,
            center_mhz: 0.0,
            coarse_dt_ns: 2.0,
            min_span_us: 80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomSection {
    pub windows_us: Vec<f64>,
    pub samples: usize,
    pub shifts: usize,
    pub tolerance: Option<f64>,
    pub optimize_delay: bool,
    pub delay_range_us: f64,
    pub delay_points: usize,
    /// Photons for `afc hom`: a waveform CSV (pure) or a mixture JSON.
    pub photon_a: Option<PathBuf>,
    pub photon_b: Option<PathBuf>,
    /// Ion photon for the fig4 scenario; synthetic when absent.
    pub ion_pure_csv: Option<PathBuf>,
    pub ion_mixture_json: Option<PathBuf>,
    pub ion_p0: f64,
    pub ion_mean_delay_us: f64,
    pub ion_max_delay_us: f64,
    pub ion_n_delays: usize,
}

impl Default for HomSection {
    fn default() -> Self {
        Self {
            windows_us: vec![0.5, 1.0, 2.0, 5.0, 20.0],
            samples: 4096,
            shifts: 32,
            tolerance: None,
            optimize_delay: true,
            delay_range_us: 20.0,
            delay_points: 161,
            photon_a: None,
            photon_b: None,
            ion_pure_csv: None,
            ion_mixture_json: None,
            ion_p0: 0.0,
            ion_mean_delay_us: 1.5,
            ion_max_delay_us: 6.0,
            ion_n_delays: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSection {
    pub label: String,
    pub memory_factor: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub eta_det: f64,
    pub eta_ion: f64,
    pub eta_mem: f64,
    pub repeater_fidelity: f64,
    pub rows: Vec<RowSection>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            eta_det: 0.9,
            eta_ion: 0.1,
            eta_mem: 0.5,
            repeater_fidelity: 1.0,
            rows: vec![RowSection {
                label: "shaped_filtered".into(),
                memory_factor: 1.0,
                visibility: 0.6,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// 0 lets the thread pool decide.
    pub threads: usize,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            out_dir: PathBuf::from("afc-out"),
        }
    }
}

/// Config problem tied to a key.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Res<T> = std::result::Result<T, ConfigError>;

fn positive(key: &str, unit: &str, v: f64) -> Res<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError(format!("`{key}` must be a positive number of {unit}, got {v}")))
    }
}

fn non_negative(key: &str, unit: &str, v: f64) -> Res<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError(format!("`{key}` must be a non-negative number of {unit}, got {v}")))
    }
}

fn fraction(key: &str, v: f64) -> Res<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(ConfigError(format!("`{key}` must be a fraction in [0, 1], got {v}")))
    }
}

fn count(key: &str, v: usize) -> Res<usize> {
    if v > 0 {
        Ok(v)
    } else {
        Err(ConfigError(format!("`{key}` must be at least 1")))
    }
}

fn core(key: &str, e: afc_core::Error) -> ConfigError {
    ConfigError(format!("`{key}`: {e}"))
}

fn shape(key: &str, unit: &str, p: Profile, width: f64) -> Res<ShapeKind> {
    Ok(match p {
        Profile::Dirac => ShapeKind::Dirac,
        Profile::Rectangular => ShapeKind::Rectangular {
            width: positive(key, unit, width)?,
        },
        Profile::Gaussian => ShapeKind::Gaussian {
            width: positive(key, unit, width)?,
        },
        Profile::Lorentzian => ShapeKind::Lorentzian {
            width: positive(key, unit, width)?,
        },
    })
}

impl GlobalConfig {
    pub fn parse(text: &str) -> Res<Self> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    /// Makes relative paths absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.shaping.target_csv);
        fix(&mut self.hom.photon_a);
        fix(&mut self.hom.photon_b);
        fix(&mut self.hom.ion_pure_csv);
        fix(&mut self.hom.ion_mixture_json);
    }

    pub fn experiment(&self) -> Res<ExperimentInputs> {
        let m = &self.memory;
        let cavity = CavityGeometry::new(
            m.mirror_r1,
            m.mirror_r2,
            positive("memory.cavity_length_mm", "mm", m.cavity_length_mm)? / 1e3,
        )
        .map_err(|e| core("memory.mirror_r1/mirror_r2", e))?;
        let crystal = CrystalAbsorption::new(
            m.d_tilde,
            positive("memory.crystal_length_mm", "mm", m.crystal_length_mm)? / 1e3,
        )
        .map_err(|e| core("memory.d_tilde", e))?;
        Ok(ExperimentInputs {
            cavity,
            crystal,
            envelope: shape(
                "comb.envelope_width_mhz",
                "MHz",
                self.comb.envelope,
                angular(self.comb.envelope_width_mhz * 1e6),
            )?,
            rabi_reference: RabiReference {
                intensity_w_per_cm2: positive(
                    "memory.rabi_ref_intensity_w_per_cm2",
                    "W/cm²",
                    m.rabi_ref_intensity_w_per_cm2,
                )?,
                omega: angular(positive("memory.rabi_ref_mhz", "MHz", m.rabi_ref_mhz)? * 1e6),
            },
            pulse_duration: positive("shaping.tau_ns", "ns", self.shaping.tau_ns)? / NS_PER_S,
            beam_diameter: positive("memory.beam_diameter_um", "µm", m.beam_diameter_um)? / 1e6,
        })
    }

    pub fn comb_spec(&self) -> Res<CombSpec> {
        let c = &self.comb;
        let envelope = shape("comb.envelope_width_mhz", "MHz", c.envelope, angular(c.envelope_width_mhz * 1e6))?;
        let tooth = shape("comb.tooth_width_khz", "kHz", c.tooth, angular(c.tooth_width_khz * 1e3))?;
        let n_teeth = count("comb.n_teeth", c.n_teeth)?;
        let delta = match c.period_khz {
            Some(p) => angular(positive("comb.period_khz", "kHz", p)? * 1e3),
            None => {
                let w = envelope
                    .width()
                    .ok_or_else(|| ConfigError("`comb.period_khz` is required with a dirac envelope".into()))?;
                delta_from_teeth(w, n_teeth)
            }
        };
        let spec = CombSpec {
            envelope,
            tooth,
            delta,
            n_teeth,
            classes_per_tooth: count("comb.classes_per_tooth", c.classes_per_tooth)?,
        };
        spec.validate().map_err(|e| core("comb", e))?;
        Ok(spec)
    }

    pub fn memory_spec(&self) -> Res<MemorySpec> {
        let m = &self.memory;
        let comb = self.comb_spec()?;
        let (kappa, g_sqrt_n) = if m.derive_from_cavity {
            let x = self.experiment()?;
            let g = g_sqrt_n_from_depth(&x.crystal, &comb.envelope, x.cavity.l_cav)
                .map_err(|e| core("memory.derive_from_cavity", e))?;
            (kappa_from_cavity(&x.cavity), g)
        } else {
            (
                angular(positive("memory.kappa_mhz", "MHz", m.kappa_mhz)? * 1e6),
                angular(non_negative("memory.g_sqrt_n_mhz", "MHz", m.g_sqrt_n_mhz)? * 1e6),
            )
        };
        Ok(MemorySpec {
            kappa,
            g_sqrt_n,
            gamma_p: non_negative("memory.gamma_p_per_us", "1/µs", m.gamma_p_per_us)? * US_PER_S,
            gamma_s: non_negative("memory.gamma_s_per_us", "1/µs", m.gamma_s_per_us)? * US_PER_S,
            comb,
        })
    }

    pub fn target(&self) -> Res<TargetSpec> {
        let s = &self.shaping;
        Ok(match s.target {
            TargetName::IonLike => TargetSpec::IonLike {
                rise: positive("shaping.target_rise", "relative units", s.target_rise)?,
                fall: positive("shaping.target_fall", "relative units", s.target_fall)?,
                fwhm: positive("shaping.target_fwhm_us", "µs", s.target_fwhm_us)? / US_PER_S,
            },
            TargetName::File => TargetSpec::File {
                path: s
                    .target_csv
                    .clone()
                    .ok_or_else(|| ConfigError("`shaping.target_csv` is required when target = \"file\"".into()))?,
            },
        })
    }

    pub fn mode(&self) -> Res<ShapingMode> {
        let s = &self.shaping;
        Ok(match s.mode {
            ModeName::None => ShapingMode::None,
            ModeName::Plain => ShapingMode::Plain {
                n_bins: count("shaping.n_bins", s.n_bins)?,
            },
            ModeName::Cropped => ShapingMode::Cropped {
                m: positive("shaping.crop_m", "input σ", s.crop_m)?,
            },
        })
    }

    pub fn scenario(&self) -> Res<ScenarioConfig> {
        let (i, s, f) = (&self.input, &self.shaping, &self.filter);
        let sf = s.support_fraction;
        if !(sf > 0.0 && sf < 1.0) {
            return Err(ConfigError(format!("`shaping.support_fraction` must lie in (0, 1), got {sf}")));
        }
        Ok(ScenarioConfig {
            memory: self.memory_spec()?,
            input_fwhm: positive("input.fwhm_ns", "ns", i.fwhm_ns)? / NS_PER_S,
            input_center: positive("input.center_us", "µs", i.center_us)? / US_PER_S,
            target: self.target()?,
            support_fraction: sf,
            tau: positive("shaping.tau_ns", "ns", s.tau_ns)? / NS_PER_S,
            hold: non_negative("shaping.hold_us", "µs", s.hold_us)? / US_PER_S,
            storage_margin: positive("shaping.storage_margin_fwhm", "input FWHMs", s.storage_margin_fwhm)?,
            dt: positive("input.dt_ns", "ns", i.dt_ns)? / NS_PER_S,
            scan_start: s.scan_start_us / US_PER_S,
            scan_step: positive("shaping.scan_step_us", "µs", s.scan_step_us)? / US_PER_S,
            scan_points: count("shaping.scan_points", s.scan_points)?,
            filter: SpectralBoxFilter::from_hz(
                positive("filter.half_width_mhz", "MHz", f.half_width_mhz)? * 1e6,
                f.center_mhz * 1e6,
            )
            .map_err(|e| core("filter.half_width_mhz", e))?,
            coarse_dt: positive("filter.coarse_dt_ns", "ns", f.coarse_dt_ns)? / NS_PER_S,
            min_filter_span: positive("filter.min_span_us", "µs", f.min_span_us)? / US_PER_S,
        })
    }

    pub fn qmc(&self) -> Res<QmcOptions> {
        let h = &self.hom;
        if h.samples < 1000 {
            return Err(ConfigError(format!("`hom.samples` must be at least 1000, got {}", h.samples)));
        }
        if h.shifts < 2 {
            return Err(ConfigError(format!("`hom.shifts` must be at least 2, got {}", h.shifts)));
        }
        if let Some(t) = h.tolerance {
            positive("hom.tolerance", "visibility units", t)?;
        }
        Ok(QmcOptions {
            samples: h.samples,
            shifts: h.shifts,
            seed: self.run.seed,
            tolerance: h.tolerance,
        })
    }

    pub fn windows(&self) -> Res<Vec<f64>> {
        if self.hom.windows_us.is_empty() {
            return Err(ConfigError("`hom.windows_us` needs at least one window".into()));
        }
        self.hom
            .windows_us
            .iter()
            .map(|&t| positive("hom.windows_us", "µs", t).map(|t| t / US_PER_S))
            .collect()
    }

    pub fn efficiencies(&self) -> Res<Efficiencies> {
        let n = &self.network;
        Efficiencies::new(
            fraction("network.eta_det", n.eta_det)?,
            fraction("network.eta_ion", n.eta_ion)?,
            fraction("network.eta_mem", n.eta_mem)?,
        )
        .map_err(|e| core("network", e))
    }

    pub fn report_inputs(&self) -> Res<Vec<ReportInput>> {
        self.network
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(ReportInput {
                    label: r.label.clone(),
                    memory_factor: non_negative(&format!("network.rows[{i}].memory_factor"), "η_mem", r.memory_factor)?,
                    visibility: fraction(&format!("network.rows[{i}].visibility"), r.visibility)?,
                })
            })
            .collect()
    }

    pub fn fig4(&self) -> Res<Fig4Config> {
        let h = &self.hom;
        let ion = match (&h.ion_pure_csv, &h.ion_mixture_json) {
            (Some(p), m) => Some(IonSource::Files {
                pure_csv: p.clone(),
                mixture_json: m.clone(),
            }),
            (None, Some(_)) => {
                return Err(ConfigError("`hom.ion_mixture_json` needs `hom.ion_pure_csv`".into()));
            }
            (None, None) => Some(IonSource::Synthetic {
                target: self.target()?,
                p0: {
                    let p0 = h.ion_p0;
                    if !(0.0..1.0).contains(&p0) {
                        return Err(ConfigError(format!("`hom.ion_p0` must lie in [0, 1), got {p0}")));
                    }
                    p0
                },
                mean_delay: positive("hom.ion_mean_delay_us", "µs", h.ion_mean_delay_us)? / US_PER_S,
                max_delay: non_negative("hom.ion_max_delay_us", "µs", h.ion_max_delay_us)? / US_PER_S,
                n_delays: h.ion_n_delays,
            }),
        };
        Ok(Fig4Config {
            ion,
            windows: self.windows()?,
            qmc: self.qmc()?,
            efficiencies: self.efficiencies()?,
            repeater_fidelity: fraction("network.repeater_fidelity", self.network.repeater_fidelity)?,
            delay_range: positive("hom.delay_range_us", "µs", h.delay_range_us)? / US_PER_S,
            delay_points: count("hom.delay_points", h.delay_points)?,
        })
    }

    /// Checks every section that can be checked without touching files.
    pub fn validate(&self) -> Res<()> {
        self.scenario()?;
        self.mode()?;
        self.experiment()?;
        self.fig4()?;
        self.report_inputs()?;
        Ok(())
    }
}
