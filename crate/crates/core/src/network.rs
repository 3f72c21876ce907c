//! Four-click heralding of ion-ion entanglement through two memory-loaded repeater ends.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::C64;

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(format!("{name} = {v} must lie in [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiencies {
    pub eta_det: f64,
    pub eta_ion: f64,
    /// Memory emission including conversion (the repeater-end efficiency).
    pub eta_mem: f64,
}

impl Efficiencies {
    pub fn new(eta_det: f64, eta_ion: f64, eta_mem: f64) -> Result<Self> {
        check_fraction("eta_det", eta_det)?;
        check_fraction("eta_ion", eta_ion)?;
        check_fraction("eta_mem", eta_mem)?;
        Ok(Self { eta_det, eta_ion, eta_mem })
    }

    /// `eta_mem = eta_afc_shaping × eta_qfc`.
    pub fn from_parts(eta_det: f64, eta_ion: f64, eta_afc_shaping: f64, eta_qfc: f64) -> Result<Self> {
        check_fraction("eta_afc_shaping", eta_afc_shaping)?;
        check_fraction("eta_qfc", eta_qfc)?;
        Self::new(eta_det, eta_ion, eta_afc_shaping * eta_qfc)
    }

    pub fn ideal() -> Self {
        Self {
            eta_det: 1.0,
            eta_ion: 1.0,
            eta_mem: 1.0,
        }
    }

    pub fn with_memory_factor(self, factor: f64) -> Result<Self> {
        Self::new(self.eta_det, self.eta_ion, self.eta_mem * factor)
    }
}

/// Squared waveform overlaps on the two sides of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub x_a: f64,
    pub x_b: f64,
}

impl OverlapPair {
    pub fn new(x_a: f64, x_b: f64) -> Result<Self> {
        check_fraction("x_a", x_a)?;
        check_fraction("x_b", x_b)?;
        Ok(Self { x_a, x_b })
    }

    pub fn symmetric(x: f64) -> Result<Self> {
        Self::new(x, x)
    }
}

/// Basis order: |g_H g_H⟩, |g_H g_V⟩, |g_V g_H⟩, |g_V g_V⟩ (ion A first).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    pub rho: [[C64; 4]; 4],
}

impl TwoQubitState {
    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.rho[i][i].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                e = e.max((self.rho[i][j] - self.rho[j][i].conj()).norm());
            }
        }
        e
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let m = Matrix4::from_fn(|i, j| (self.rho[i][j] + self.rho[j][i].conj()) * 0.5);
        let ev = m.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn expectation(&self, psi: &[C64; 4]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += psi[i].conj() * self.rho[i][j] * psi[j];
            }
        }
        acc.re
    }
}

/// (|g_V g_H⟩ + |g_H g_V⟩)/√2.
pub fn psi_plus() -> [C64; 4] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    [z, h, h, z]
}

pub fn psi_minus() -> [C64; 4] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    [z, h, -h, z]
}

/// η_det⁴·η_ion²·η_mem²/8.
pub fn four_click_probability(eff: &Efficiencies) -> f64 {
    eff.eta_det.powi(4) * eff.eta_ion.powi(2) * eff.eta_mem.powi(2) / 8.0
}

/// ½(1+x_A x_B)|Ψ⁺⟩⟨Ψ⁺| + ½(1−x_A x_B)|Ψ⁻⟩⟨Ψ⁻|.
pub fn heralded_state(x: &OverlapPair) -> TwoQubitState {
    let xx = x.x_a * x.x_b;
    let mut rho = [[C64::new(0.0, 0.0); 4]; 4];
    for (w, v) in [(0.5 * (1.0 + xx), psi_plus()), (0.5 * (1.0 - xx), psi_minus())] {
        for i in 0..4 {
            for j in 0..4 {
                rho[i][j] += v[i] * v[j].conj() * w;
            }
        }
    }
    TwoQubitState { rho }
}

pub fn fidelity_pure(x: &OverlapPair) -> f64 {
    0.5 * (1.0 + x.x_a * x.x_b)
}

/// Inputs are emission-conditioned means of x(s) on each side.
pub fn fidelity_mixed(mean_a: f64, mean_b: f64) -> Result<f64> {
    check_fraction("mean overlap A", mean_a)?;
    check_fraction("mean overlap B", mean_b)?;
    Ok(0.5 * (1.0 + mean_a * mean_b))
}

/// Both sides sharing the infinite-window visibility `v`.
pub fn fidelity_from_visibility(v: f64) -> Result<f64> {
    fidelity_mixed(v, v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportInput {
    pub label: String,
    /// Multiplies the baseline η_mem (shaping efficiency ratio × filter retention).
    pub memory_factor: f64,
    /// Infinite-window HOM visibility, the same on both sides.
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub eta_mem: f64,
    pub visibility: f64,
    pub p_4cl: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub efficiencies: Efficiencies,
    pub repeater_fidelity: f64,
    pub rows: Vec<ReportRow>,
}

/// Heralding probability and fidelity per scenario.
///
/// `repeater_fidelity` < 1 scales F, which is then an upper bound.
pub fn scenario_report(eff: &Efficiencies, inputs: &[ReportInput], repeater_fidelity: f64) -> Result<NetworkReport> {
    check_fraction("repeater_fidelity", repeater_fidelity)?;
    let rows = inputs
        .iter()
        .map(|inp| {
            let e = eff.with_memory_factor(inp.memory_factor)?;
            Ok(ReportRow {
                label: inp.label.clone(),
                eta_mem: e.eta_mem,
                visibility: inp.visibility,
                p_4cl: four_click_probability(&e),
                fidelity: fidelity_from_visibility(inp.visibility)? * repeater_fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkReport {
        efficiencies: *eff,
        repeater_fidelity,
        rows,
    })
}

impl NetworkReport {
    pub fn to_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(8);
        let mut s = format!(
            "eta_det = {:.3}  eta_ion = {:.3}  eta_mem = {:.3}\n{:<w$}  {:>8}  {:>8}  {:>10}  {:>8}\n",
            self.efficiencies.eta_det, self.efficiencies.eta_ion, self.efficiencies.eta_mem, "scenario", "eta_mem", "V_inf", "P_4cl", "F"
        );
        for r in &self.rows {
            s += &format!(
                "{:<w$}  {:>8.4}  {:>8.4}  {:>10.3e}  {:>8.4}\n",
                r.label, r.eta_mem, r.visibility, r.p_4cl, r.fidelity
            );
        }
        s
    }
}
