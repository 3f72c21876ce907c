//! Experimental quantities to model parameters: κ, finesse, g√N, optical depth, Rabi power.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::comb::{comb_density, d_comb, CombSpec, ShapeKind};
use crate::error::{Error, Result};

/// Vacuum value; the crystal index is not modelled.
pub const C_LIGHT: f64 = 299_792_458.0;

pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn to_hz(rad_per_s: f64) -> f64 {
    rad_per_s / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    pub r1: f64,
    pub r2: f64,
    /// Metres.
    pub l_cav: f64,
}

impl CavityGeometry {
    pub fn new(r1: f64, r2: f64, l_cav: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1 < 1.0) {
            return Err(Error::invalid(format!("R1 = {r1} must lie in (0, 1)")));
        }
        if !(r2 > 0.0 && r2 <= 1.0) {
            return Err(Error::invalid(format!("R2 = {r2} must lie in (0, 1]")));
        }
        if !(l_cav > 0.0 && l_cav.is_finite()) {
            return Err(Error::invalid(format!("cavity length {l_cav} m must be positive")));
        }
        Ok(Self { r1, r2, l_cav })
    }

    pub fn one_sided(r1: f64, l_cav: f64) -> Result<Self> {
        Self::new(r1, 1.0, l_cav)
    }

    /// Round-trip intensity reflectance R1·R2.
    pub fn round_trip(&self) -> f64 {
        self.r1 * self.r2
    }

    pub fn free_spectral_range(&self) -> f64 {
        PI * C_LIGHT / self.l_cav
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalAbsorption {
    pub d_tilde: f64,
    /// Metres.
    pub l_crys: f64,
    pub d_max: Option<f64>,
}

impl CrystalAbsorption {
    pub fn new(d_tilde: f64, l_crys: f64) -> Result<Self> {
        if !(d_tilde >= 0.0 && d_tilde.is_finite()) {
            return Err(Error::invalid(format!("mean optical depth {d_tilde} must be ≥ 0")));
        }
        if !(l_crys > 0.0) {
            return Err(Error::invalid(format!("crystal length {l_crys} m must be positive")));
        }
        Ok(Self {
            d_tilde,
            l_crys,
            d_max: None,
        })
    }
}

/// κ = −c·ln(R1·R2)/(4L).
pub fn kappa_from_cavity(c: &CavityGeometry) -> f64 {
    -C_LIGHT * c.round_trip().ln() / (4.0 * c.l_cav)
}

/// Small-loss form κ ≈ c(1 − R1·R2)/(4L).
pub fn kappa_linear(c: &CavityGeometry) -> f64 {
    C_LIGHT * (1.0 - c.round_trip()) / (4.0 * c.l_cav)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Finesse {
    /// (π/2)/arcsin((1−√R)/(2R^¼)).
    pub exact: f64,
    /// πc/(2Lκ) with the log-form κ.
    pub from_kappa: f64,
    /// πR^¼/(1−√R).
    pub asymptotic: f64,
}

pub fn finesse(c: &CavityGeometry) -> Finesse {
    let r = c.round_trip();
    let sr = r.sqrt();
    Finesse {
        exact: 0.5 * PI / ((1.0 - sr) / (2.0 * r.powf(0.25))).asin(),
        from_kappa: finesse_from_kappa(kappa_from_cavity(c), c.l_cav),
        asymptotic: PI * r.powf(0.25) / (1.0 - sr),
    }
}

pub fn finesse_from_kappa(kappa: f64, l_cav: f64) -> f64 {
    PI * C_LIGHT / (2.0 * l_cav * kappa)
}

pub fn kappa_from_finesse(f: f64, l_cav: f64) -> f64 {
    PI * C_LIGHT / (2.0 * l_cav * f)
}

/// √(d̃·c/(D_comb·L_cav)).
pub fn g_sqrt_n_from_depth(a: &CrystalAbsorption, envelope: &ShapeKind, l_cav: f64) -> Result<f64> {
    if matches!(envelope, ShapeKind::Dirac) {
        return Err(Error::invalid("comb envelope must have a finite width"));
    }
    if !(l_cav > 0.0) {
        return Err(Error::invalid("cavity length must be positive"));
    }
    Ok((a.d_tilde * C_LIGHT / (d_comb(envelope)? * l_cav)).sqrt())
}

/// g√N inside a cavity longer than the crystal.
pub fn rescale_free_to_cavity(g_sqrt_n_free: f64, l_crys: f64, l_cav: f64) -> f64 {
    g_sqrt_n_free * (l_crys / l_cav).sqrt()
}

/// F_cav·d̃ − π, zero at impedance matching.
pub fn impedance_match_check(c: &CavityGeometry, a: &CrystalAbsorption) -> f64 {
    finesse(c).exact * a.d_tilde - PI
}

/// Measured Rabi frequency at a reference intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiReference {
    pub intensity_w_per_cm2: f64,
    /// rad/s.
    pub omega: f64,
}

impl RabiReference {
    pub fn pr_yso() -> Self {
        Self {
            intensity_w_per_cm2: 250.0,
            omega: angular(1.6e6),
        }
    }
}

pub fn rabi_from_intensity(intensity_w_per_cm2: f64, r: &RabiReference) -> Result<f64> {
    if !(intensity_w_per_cm2 >= 0.0) || !(r.intensity_w_per_cm2 > 0.0) {
        return Err(Error::invalid("intensities must be positive"));
    }
    Ok(r.omega * (intensity_w_per_cm2 / r.intensity_w_per_cm2).sqrt())
}

pub fn intensity_for_rabi(omega: f64, r: &RabiReference) -> Result<f64> {
    if !(r.omega > 0.0) {
        return Err(Error::invalid("reference Rabi frequency must be positive"));
    }
    Ok(r.intensity_w_per_cm2 * (omega / r.omega).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiPulsePower {
    pub omega: f64,
    pub intensity_w_per_cm2: f64,
    pub power_w: f64,
}

/// Rectangular π-pulse of length `tau` on a flat-top beam of the given diameter (m).
pub fn pi_pulse_power(tau: f64, beam_diameter: f64, r: &RabiReference) -> Result<PiPulsePower> {
    if !(tau > 0.0 && beam_diameter > 0.0) {
        return Err(Error::invalid("pulse length and beam diameter must be positive"));
    }
    let omega = PI / tau;
    let intensity = intensity_for_rabi(omega, r)?;
    let radius_cm = 0.5 * beam_diameter * 100.0;
    Ok(PiPulsePower {
        omega,
        intensity_w_per_cm2: intensity,
        power_w: intensity * PI * radius_cm * radius_cm,
    })
}

/// OD(ω) = (2π g²N/c)·n(ω)·L_crys at each detuning.
pub fn optical_depth_profile(spec: &CombSpec, g_sqrt_n_free: f64, l_crys: f64, omegas: &[f64]) -> Result<Vec<f64>> {
    let k = 2.0 * PI * g_sqrt_n_free * g_sqrt_n_free / C_LIGHT * l_crys;
    omegas.iter().map(|&w| Ok(k * comb_density(spec, w)?)).collect()
}

/// d̃ = g²N·D_comb·L_crys/c.
pub fn mean_depth(envelope: &ShapeKind, g_sqrt_n_free: f64, l_crys: f64) -> Result<f64> {
    Ok(g_sqrt_n_free * g_sqrt_n_free * d_comb(envelope)? * l_crys / C_LIGHT)
}

/// d_max/d̃ = 2π·n(0)/D_comb.
pub fn peak_to_mean_depth(spec: &CombSpec) -> Result<f64> {
    Ok(2.0 * PI * comb_density(spec, 0.0)? / d_comb(&spec.envelope)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationRow {
    pub quantity: String,
    pub value: f64,
    pub unit: String,
    pub formula: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentInputs {
    pub cavity: CavityGeometry,
    pub crystal: CrystalAbsorption,
    pub envelope: ShapeKind,
    pub rabi_reference: RabiReference,
    pub pulse_duration: f64,
    pub beam_diameter: f64,
}

impl ExperimentInputs {
    pub fn pr_yso() -> Self {
        Self {
            cavity: CavityGeometry {
                r1: 0.4,
                r2: 0.97,
                l_cav: 0.208,
            },
            crystal: CrystalAbsorption {
                d_tilde: 0.48,
                l_crys: 0.003,
                d_max: None,
            },
            envelope: ShapeKind::Rectangular { width: angular(4e6) },
            rabi_reference: RabiReference::pr_yso(),
            pulse_duration: 70e-9,
            beam_diameter: 50e-6,
        }
    }
}

fn row(quantity: &str, value: f64, unit: &str, formula: &str) -> DerivationRow {
    DerivationRow {
        quantity: quantity.into(),
        value,
        unit: unit.into(),
        formula: formula.into(),
    }
}

pub fn derivation_table(x: &ExperimentInputs) -> Result<Vec<DerivationRow>> {
    let c = CavityGeometry::new(x.cavity.r1, x.cavity.r2, x.cavity.l_cav)?;
    let a = CrystalAbsorption::new(x.crystal.d_tilde, x.crystal.l_crys)?;
    let kappa = kappa_from_cavity(&c);
    let fin = finesse(&c);
    let g = g_sqrt_n_from_depth(&a, &x.envelope, c.l_cav)?;
    let pp = pi_pulse_power(x.pulse_duration, x.beam_diameter, &x.rabi_reference)?;
    Ok(vec![
        row("R1", c.r1, "", "input"),
        row("R2", c.r2, "", "input"),
        row("L_cav", c.l_cav, "m", "input"),
        row("d_tilde", a.d_tilde, "", "input"),
        row("FSR", to_hz(c.free_spectral_range()), "Hz", "pi c / L"),
        row("finesse (exact)", fin.exact, "", "(pi/2) / asin((1 - sqrt R)/(2 R^1/4)), R = R1 R2"),
        row("finesse (from kappa)", fin.from_kappa, "", "pi c / (2 L kappa)"),
        row("kappa (linear)", kappa_linear(&c), "rad/s", "c (1 - R1 R2) / (4 L)"),
        row("kappa", kappa, "rad/s", "-c ln(R1 R2) / (4 L)"),
        row("kappa/2pi", to_hz(kappa), "Hz", "kappa / 2pi"),
        row("D_comb", d_comb(&x.envelope)?, "s", "2 pi / integral of envelope"),
        row("g sqrt(N)/2pi", to_hz(g), "Hz", "sqrt(d c / (D_comb L_cav)) / 2pi"),
        row("F d - pi", impedance_match_check(&c, &a), "", "F_exact d_tilde - pi"),
        row("pi-pulse Rabi/2pi", to_hz(pp.omega), "Hz", "(pi / tau) / 2pi"),
        row("pi-pulse intensity", pp.intensity_w_per_cm2, "W/cm^2", "I0 (Omega/Omega0)^2"),
        row("pi-pulse power", pp.power_w, "W", "I pi (D/2)^2"),
    ])
}

pub fn format_table(rows: &[DerivationRow]) -> String {
    let wq = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(0);
    let wu = rows.iter().map(|r| r.unit.len()).max().unwrap_or(0);
    rows.iter()
        .map(|r| format!("{:<wq$}  {:>14.6e}  {:<wu$}  {}\n", r.quantity, r.value, r.unit, r.formula))
        .collect()
}
