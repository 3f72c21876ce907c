//! Hong-Ou-Mandel visibilities between pure and mixed single photons.

pub mod sobol;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shaper::golden_max;
use crate::waveform::{load_csv, overlap_shifted, Envelope, C64};
use sobol::{rotate, Sobol2};

/// One emission branch: `psi` delayed by `shift`, with probability `weight`.
#[derive(Debug, Clone)]
pub struct Component {
    pub weight: f64,
    pub shift: f64,
    pub psi: Envelope,
}

/// `p0 |0⟩⟨0| + Σ w_k |Ψ_k(·−s_k)⟩⟨Ψ_k(·−s_k)|`.
#[derive(Debug, Clone)]
pub struct MixedPhoton {
    pub p0: f64,
    pub components: Vec<Component>,
}

impl MixedPhoton {
    pub fn new(p0: f64, components: Vec<Component>) -> Result<Self> {
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::invalid(format!("vacuum weight {p0} must lie in [0, 1)")));
        }
        if components.is_empty() {
            return Err(Error::invalid("a photon needs at least one component"));
        }
        let mut total = p0;
        for (i, c) in components.iter().enumerate() {
            if !(c.weight >= 0.0) || !c.shift.is_finite() {
                return Err(Error::invalid(format!("component {i} has a bad weight or shift")));
            }
            let n = c.psi.norm_sqr();
            if (n - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("component {i} is not normalized (‖ψ‖² = {n:.9})")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("p0 + Σw = {total:.12} is not 1")));
        }
        Ok(Self { p0, components })
    }

    pub fn pure(psi: Envelope) -> Result<Self> {
        Self::new(
            0.0,
            vec![Component {
                weight: 1.0,
                shift: 0.0,
                psi: psi.normalized()?,
            }],
        )
    }

    /// The same photon delayed by `dt`.
    pub fn delayed(&self, dt: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.shift += dt;
        }
        out
    }

    pub fn emission_probability(&self) -> f64 {
        1.0 - self.p0
    }

    /// Time span covered by all components.
    pub fn support(&self) -> (f64, f64) {
        self.components.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.psi.grid.t0 + c.shift), hi.max(c.psi.grid.t_end() + c.shift))
        })
    }

    /// ρ(t1, t2) = Σ w Ψ(t1−s) Ψ*(t2−s), unnormalized.
    fn rho(&self, t1: f64, t2: f64) -> C64 {
        self.components
            .iter()
            .map(|c| c.psi.sample_cubic(t1 - c.shift) * c.psi.sample_cubic(t2 - c.shift).conj() * c.weight)
            .sum()
    }
}

/// Normalizes a point-mass shift distribution into a mixture.
///
/// An empty distribution means a single undelayed emission.
pub fn build_mixture(psi: &Envelope, p0: f64, shifts: &[(f64, f64)]) -> Result<MixedPhoton> {
    let psi = psi.normalized()?;
    if shifts.is_empty() {
        return MixedPhoton::new(
            p0,
            vec![Component {
                weight: 1.0 - p0,
                shift: 0.0,
                psi,
            }],
        );
    }
    if shifts.iter().any(|(_, m)| !(*m >= 0.0)) {
        return Err(Error::invalid("shift masses must be non-negative"));
    }
    let total: f64 = shifts.iter().map(|(_, m)| m).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("shift distribution carries no mass"));
    }
    let components = shifts
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|&(s, m)| Component {
            weight: (1.0 - p0) * m / total,
            shift: s,
            psi: psi.clone(),
        })
        .collect();
    MixedPhoton::new(p0, components)
}

fn pair_overlap_sq(a: &Component, b: &Component) -> f64 {
    overlap_shifted(&b.psi, b.shift, &a.psi, a.shift).norm_sqr()
}

/// |⟨Ψ_b|Ψ_a⟩|².
pub fn visibility_pure_pure(a: &Envelope, b: &Envelope) -> Result<f64> {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::invalid("visibility needs non-empty waveforms"));
    }
    Ok((overlap_shifted(b, 0.0, a, 0.0).norm_sqr() / (na * nb)).min(1.0))
}

pub fn visibility_pure_mixed(pure: &Envelope, mixed: &MixedPhoton) -> Result<f64> {
    visibility_mixed_mixed_asymptotic(&MixedPhoton::pure(pure.clone())?, mixed)
}

/// Emission-conditioned double sum of squared component overlaps.
pub fn visibility_mixed_mixed_asymptotic(a: &MixedPhoton, b: &MixedPhoton) -> Result<f64> {
    let (ea, eb) = (a.emission_probability(), b.emission_probability());
    if !(ea > 0.0 && eb > 0.0) {
        return Err(Error::invalid("a photon with unit vacuum weight cannot interfere"));
    }
    let pairs: Vec<(&Component, &Component)> = a
        .components
        .iter()
        .flat_map(|ca| b.components.iter().map(move |cb| (ca, cb)))
        .collect();
    let terms: Vec<f64> = pairs
        .par_iter()
        .map(|(ca, cb)| ca.weight * cb.weight * pair_overlap_sq(ca, cb))
        .collect();
    let sum: f64 = terms.iter().sum();
    Ok((sum / (ea * eb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoincidenceWindow {
    Finite(f64),
    Infinite,
}

impl CoincidenceWindow {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_infinite() && t > 0.0 {
            return Ok(Self::Infinite);
        }
        if !(t > 0.0) {
            return Err(Error::invalid(format!("coincidence window {t:e} s must be positive")));
        }
        Ok(Self::Finite(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmcOptions {
    /// Points per randomization.
    pub samples: usize,
    pub shifts: usize,
    pub seed: u64,
    /// Flag the result when stderr exceeds this.
    pub tolerance: Option<f64>,
}

impl Default for QmcOptions {
    fn default() -> Self {
        Self {
            samples: 4096,
            shifts: 32,
            seed: 0,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedVisibility {
    pub value: f64,
    pub stderr: f64,
    pub flagged: bool,
}

/// Visibility with coincidences restricted to |t1 − t2| ≤ T.
///
/// The strip is sampled as (u = t1, v = t1 − t2); numerator and denominator
/// share the points of each randomization.
pub fn visibility_windowed(
    a: &MixedPhoton,
    b: &MixedPhoton,
    w: CoincidenceWindow,
    opts: &QmcOptions,
) -> Result<WindowedVisibility> {
    if opts.samples < 1000 {
        return Err(Error::invalid(format!("need at least 1000 samples, got {}", opts.samples)));
    }
    if opts.shifts < 2 {
        return Err(Error::invalid("need at least two randomizations for an error estimate"));
    }
    let (la, ha) = a.support();
    let (lb, hb) = b.support();
    let (lo, hi) = (la.min(lb), ha.max(hb));
    let span = hi - lo;
    let t = match w {
        CoincidenceWindow::Finite(t) => t.min(span),
        CoincidenceWindow::Infinite => span,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<[f64; 2]> = (0..opts.shifts)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let estimates: Vec<f64> = shifts
        .par_iter()
        .map(|&shift| {
            let mut num = 0.0;
            let mut den = 0.0;
            for p in Sobol2::new().take(opts.samples) {
                let [x, y] = rotate(p, shift);
                let t1 = lo + x * span;
                let t2 = t1 - (2.0 * y - 1.0) * t;
                let ga = a.rho(t1, t2);
                let gb = b.rho(t1, t2);
                num += 2.0 * (ga * gb.conj()).re;
                den += a.rho(t1, t1).re * b.rho(t2, t2).re + a.rho(t2, t2).re * b.rho(t1, t1).re;
            }
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        })
        .collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    Ok(WindowedVisibility {
        value: mean,
        stderr,
        flagged: opts.tolerance.is_some_and(|tol| stderr > tol),
    })
}

/// Delay of `b` maximizing the asymptotic visibility, searched over `[lo, hi]`.
pub fn best_delay(a: &MixedPhoton, b: &MixedPhoton, lo: f64, hi: f64, coarse: usize) -> Result<(f64, f64)> {
    if !(hi > lo) || coarse < 2 {
        return Err(Error::invalid("delay search needs hi > lo and at least two coarse points"));
    }
    let f = |d: f64| visibility_mixed_mixed_asymptotic(a, &b.delayed(d)).unwrap_or(0.0);
    let step = (hi - lo) / (coarse - 1) as f64;
    let (mut best_d, mut best_v) = (lo, f64::NEG_INFINITY);
    for i in 0..coarse {
        let d = lo + i as f64 * step;
        let v = f(d);
        if v > best_v {
            best_d = d;
            best_v = v;
        }
    }
    let (d, v) = golden_max(f, best_d - step, best_d + step, step * 1e-3);
    Ok(if v >= best_v { (d, v) } else { (best_d, best_v) })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub weight: f64,
    pub shift_s: f64,
    pub waveform_csv_path: String,
}

/// Mixture description stored as JSON next to its waveform CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureFile {
    pub p0: f64,
    pub components: Vec<ComponentFile>,
}

/// Reads a mixture JSON; relative CSV paths resolve against its directory.
pub fn load_mixture(path: &Path) -> Result<MixedPhoton> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let spec: MixtureFile =
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut comps = Vec::with_capacity(spec.components.len());
    for c in &spec.components {
        let p = base.join(&c.waveform_csv_path);
        comps.push(Component {
            weight: c.weight,
            shift: c.shift_s,
            psi: load_csv(&p)?.normalized()?,
        });
    }
    MixedPhoton::new(spec.p0, comps)
}
