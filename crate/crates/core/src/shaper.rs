//! Piecewise waveform shaping with partial readout pulses.
//!
//! A target `f` on `[a, b]` is approximated by `Σ p_j e^{iθ_j} h(t − c_j)` with
//! one copy of the unshaped echo `h` per bin.

use std::f64::consts::{PI, SQRT_2};

use libm::erf;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlPulse, PulseKind, PulseSchedule};
use crate::error::{Error, Result};
use crate::waveform::{Envelope, C64};

/// `n_shape` equal bins covering `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub a: f64,
    pub b: f64,
    pub n_shape: usize,
    /// Manual shift applied to every centre.
    #[serde(default)]
    pub offset: f64,
}

impl BinLayout {
    pub fn new(a: f64, b: f64, n_shape: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("bin layout needs b > a, got [{a:e}, {b:e}]")));
        }
        if n_shape == 0 {
            return Err(Error::invalid("n_shape must be at least 1"));
        }
        Ok(Self {
            a,
            b,
            n_shape,
            offset: 0.0,
        })
    }

    /// Layout of `n_shape` bins of width `width` centred on `center`.
    pub fn centered(center: f64, width: f64, n_shape: usize) -> Result<Self> {
        let half = 0.5 * width * n_shape as f64;
        Self::new(center - half, center + half, n_shape)
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn bin_width(&self) -> f64 {
        (self.b - self.a) / self.n_shape as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.bin_width() + self.offset
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_shape).map(|j| self.center(j)).collect()
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        let c = self.center(j);
        let h = 0.5 * self.bin_width();
        (c - h, c + h)
    }
}

/// Trapezoid of a complex integrand over `[lo, hi]` with `n` panels.
fn integrate(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> C64) -> C64 {
    let h = (hi - lo) / n as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

fn panels(width: f64, dt: f64) -> usize {
    (4 * (width / dt).ceil() as usize).max(64)
}

/// J_j = ∫_bin f*(t) h(t − c_j) dt; `h` has its local origin at the bin centre.
///
/// Unless `crop` is set, the 99% energy support of `h` must lie inside one bin.
pub fn bin_overlaps(target: &Envelope, h_in: &Envelope, layout: &BinLayout, crop: bool) -> Result<Vec<C64>> {
    let w = layout.bin_width();
    if !crop {
        let (s0, s1) = h_in.energy_support(0.99);
        let tol = 1e-9 * w;
        if s0 < -0.5 * w - tol || s1 > 0.5 * w + tol {
            return Err(Error::invalid(format!(
                "h_in support [{s0:.4e}, {s1:.4e}] s is wider than a bin of {w:.4e} s"
            )));
        }
    }
    let dt = target.grid.dt.min(h_in.grid.dt);
    let n = panels(w, dt);
    Ok((0..layout.n_shape)
        .map(|j| {
            let (lo, hi) = layout.bounds(j);
            let c = layout.center(j);
            integrate(lo, hi, n, |t| target.sample_cubic(t).conj() * h_in.sample_cubic(t - c))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalWeights {
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
    pub r: f64,
}

/// p_j = |J_j|/‖J‖, θ_j = −arg J_j, R = ‖J‖.
pub fn optimal_weights(j: &[C64]) -> Result<OptimalWeights> {
    let r = j.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(Error::invalid("target is orthogonal to every translate of h_in"));
    }
    Ok(OptimalWeights {
        p: j.iter().map(|z| z.norm() / r).collect(),
        theta: j.iter().map(|z| if z.norm() > 0.0 { -z.arg() } else { 0.0 }).collect(),
        r,
    })
}

/// |Σ p_j e^{iθ_j} J_j|.
pub fn shaped_overlap(p: &[f64], theta: &[f64], j: &[C64]) -> f64 {
    p.iter()
        .zip(theta)
        .zip(j)
        .map(|((p, t), z)| C64::from_polar(*p, *t) * z)
        .sum::<C64>()
        .norm()
}

/// Absolute amplitudes to the readout fractions q_j.
pub fn absolute_to_relative(p: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = p.iter().map(|x| x * x).sum();
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::invalid("absolute amplitudes must be non-negative"));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("Σp² = {total} is not 1")));
    }
    // suffix sums of p²
    let mut tail = vec![0.0; p.len() + 1];
    for i in (0..p.len()).rev() {
        tail[i] = tail[i + 1] + p[i] * p[i];
    }
    let mut q = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        let p2 = pi * pi;
        if p2 == 0.0 {
            q.push(0.0);
            continue;
        }
        let q2 = p2 / tail[i];
        if !(q2 <= 1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "chain exhausted before bin {i}: needs q² = {q2:.6}"
            )));
        }
        q.push(q2.min(1.0).sqrt());
    }
    Ok(q)
}

/// p_j = q_j Π_{k<j} √(1 − q_k²).
pub fn relative_to_absolute(q: &[f64]) -> Vec<f64> {
    let mut left = 1.0f64;
    q.iter()
        .map(|&qj| {
            let p = qj * left.sqrt();
            left *= 1.0 - qj * qj;
            p
        })
        .collect()
}

/// Pulse areas 2·arcsin(q_j).
pub fn relative_to_areas(q: &[f64]) -> Vec<f64> {
    q.iter().map(|&x| 2.0 * x.clamp(0.0, 1.0).asin()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingPlan {
    pub layout: BinLayout,
    pub overlaps: Vec<C64>,
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
    pub areas: Vec<f64>,
    /// Predicted overlap R.
    pub r: f64,
}

pub fn plan_shaping(target: &Envelope, h_in: &Envelope, layout: &BinLayout, crop: bool) -> Result<ShapingPlan> {
    let overlaps = bin_overlaps(target, h_in, layout, crop)?;
    let w = optimal_weights(&overlaps)?;
    let q = absolute_to_relative(&w.p)?;
    let areas = relative_to_areas(&q);
    Ok(ShapingPlan {
        layout: *layout,
        overlaps,
        p: w.p,
        theta: w.theta,
        q,
        areas,
        r: w.r,
    })
}

/// Crop interval `[alpha, beta]` in the local time of `h_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CropSpec {
    pub fn new(m: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(beta > alpha) {
            return Err(Error::invalid("crop needs beta > alpha"));
        }
        Ok(Self { m, alpha, beta })
    }

    /// `[−Mσ, Mσ]` with σ the amplitude standard deviation.
    pub fn gaussian(m: f64, sigma: f64) -> Result<Self> {
        Self::new(m, -m * sigma, m * sigma)
    }

    /// `[0, M·decay]`.
    pub fn exponential(m: f64, decay: f64) -> Result<Self> {
        Self::new(m, 0.0, m * decay)
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticOverlap {
    pub value: f64,
    /// Energy of `h_in` kept inside the crop.
    pub kept_energy: f64,
    /// False when `h_in` is not real and single-signed on the crop.
    pub within_hypotheses: bool,
}

/// (1/√(β−α))·|∫_α^β h_in dt|.
pub fn asymptotic_overlap(h_in: &Envelope, crop: &CropSpec) -> AsymptoticOverlap {
    let n = panels(crop.width(), h_in.grid.dt);
    let mean = integrate(crop.alpha, crop.beta, n, |t| h_in.sample_cubic(t));
    let kept = integrate(crop.alpha, crop.beta, n, |t| C64::new(h_in.sample_cubic(t).norm_sqr(), 0.0)).re;
    let peak = h_in.samples.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let tol = 1e-9 * peak;
    let (mut pos, mut neg, mut imag) = (false, false, false);
    for (i, z) in h_in.samples.iter().enumerate() {
        let t = h_in.grid.t(i);
        if t < crop.alpha || t > crop.beta {
            continue;
        }
        pos |= z.re > tol;
        neg |= z.re < -tol;
        imag |= z.im.abs() > tol;
    }
    AsymptoticOverlap {
        value: mean.norm() / crop.width().sqrt(),
        kept_energy: kept,
        within_hypotheses: !(pos && neg) && !imag,
    }
}

/// π^{1/4}·erf(M/√2)/√M.
pub fn gaussian_crop_limit(m: f64) -> f64 {
    PI.powf(0.25) * erf(m / SQRT_2) / m.sqrt()
}

/// √(2/M)·(1 − e^{−M}).
pub fn exponential_crop_limit(m: f64) -> f64 {
    (2.0 / m).sqrt() * (1.0 - (-m).exp())
}

/// Energy kept by a ±Mσ crop of a Gaussian amplitude: erf(M).
pub fn gaussian_kept_energy(m: f64) -> f64 {
    erf(m)
}

/// π^{1/4}·erf(M/√2)/√(M·erf(M)).
pub fn renormalized_asymptotic_overlap(m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::invalid("crop factor must be positive"));
    }
    if m < 1e-6 {
        // series limit, avoids 0/0
        return Ok(1.0 - m * m / 12.0);
    }
    Ok(PI.powf(0.25) * erf(m / SQRT_2) / (m * erf(m)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropKind {
    Gaussian,
    Exponential,
}

/// Golden-section maximum of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Best crop factor M* in (0, 10] and the overlap limit there.
pub fn optimize_crop(kind: CropKind) -> (f64, f64) {
    match kind {
        CropKind::Gaussian => golden_max(gaussian_crop_limit, 1e-6, 10.0, 1e-4),
        CropKind::Exponential => golden_max(exponential_crop_limit, 1e-6, 10.0, 1e-4),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReadoutMode {
    Plain,
    /// Echoes cropped to ±Mσ; σ is the amplitude standard deviation.
    Cropped { m: f64, sigma: f64 },
}

/// Timing of the storage, synchronization and readout pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutTiming {
    /// Centre of the input photon.
    pub input_center: f64,
    pub input_fwhm: f64,
    /// Comb period Δ (rad/s).
    pub delta: f64,
    /// Control pulse duration τ.
    pub tau: f64,
    /// Storage pulse ends this many input FWHMs before the first echo.
    pub storage_margin: f64,
    /// Spin storage time between the storage pulse and the next pulse.
    pub hold: f64,
    pub mode: ReadoutMode,
    pub sync: bool,
}

impl ReadoutTiming {
    pub fn rephasing_time(&self) -> f64 {
        2.0 * PI / self.delta
    }

    /// Delay between a pulse acting on the stored excitation and the echo it releases.
    pub fn echo_lag(&self) -> f64 {
        self.storage_margin * self.input_fwhm + 0.5 * self.tau
    }

    pub fn storage_center(&self) -> f64 {
        self.input_center + self.rephasing_time() - self.echo_lag()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutPlan {
    pub schedule: PulseSchedule,
    pub readout_centers: Vec<f64>,
    pub echo_centers: Vec<f64>,
    pub spacing: f64,
    pub warnings: Vec<String>,
}

impl ReadoutPlan {
    /// Window holding the shaped output.
    pub fn output_window(&self, timing: &ReadoutTiming) -> (f64, f64) {
        let first = self.readout_centers[0] + 0.5 * timing.tau;
        let last = *self.echo_centers.last().unwrap();
        let tail = (0.5 * self.spacing).max(3.0 * timing.input_fwhm);
        (first, last + tail)
    }
}

/// Storage π-pulse, optional synchronization pair, then one readout per bin.
pub fn build_readout_schedule(plan: &ShapingPlan, timing: &ReadoutTiming) -> Result<ReadoutPlan> {
    let mut warnings = Vec::new();
    let w = plan.layout.bin_width();
    let (spacing, lead) = match timing.mode {
        ReadoutMode::Plain => (w, 0.5 * w),
        ReadoutMode::Cropped { m, sigma } => {
            let s = 2.0 * m * sigma;
            if (s - w).abs() > 1e-6 * w {
                return Err(Error::invalid(format!(
                    "cropped spacing 2Mσ = {s:.4e} s differs from the bin width {w:.4e} s"
                )));
            }
            (s, m * sigma)
        }
    };
    if !(timing.tau > 0.0) || !(timing.delta > 0.0) || !(timing.input_fwhm > 0.0) {
        return Err(Error::invalid("τ, Δ and the input FWHM must be positive"));
    }
    if timing.tau > spacing / 10.0 {
        warnings.push(format!(
            "τ = {:.3e} s exceeds a tenth of the readout spacing {:.3e} s",
            timing.tau, spacing
        ));
    }
    let lag = timing.echo_lag();
    let s = timing.storage_center();
    let mut pulses = vec![ControlPulse::centered(s, timing.tau, PI, 0.0, PulseKind::Storage)];
    let (first, echo_lag) = if timing.sync {
        let d = lag - lead;
        if d < timing.tau {
            return Err(Error::invalid(format!(
                "synchronization pulses {d:.3e} s apart would overlap"
            )));
        }
        let y1 = s + timing.hold;
        let y2 = y1 + d;
        pulses.push(ControlPulse::centered(y1, timing.tau, PI, 0.0, PulseKind::Synchronization));
        pulses.push(ControlPulse::centered(y2, timing.tau, PI, 0.0, PulseKind::Synchronization));
        (y2 + spacing, lead)
    } else {
        if plan.layout.n_shape > 1 && lag > spacing - 0.5 * w {
            warnings.push(format!(
                "echo lag {lag:.3e} s exceeds the readout spacing; echoes will straddle later pulses"
            ));
        }
        (s + timing.hold, lag)
    };
    let mut readout_centers = Vec::with_capacity(plan.layout.n_shape);
    let mut echo_centers = Vec::with_capacity(plan.layout.n_shape);
    for j in 0..plan.layout.n_shape {
        let r = first + j as f64 * spacing;
        readout_centers.push(r);
        echo_centers.push(r + echo_lag);
        if plan.areas[j] > 0.0 {
            pulses.push(ControlPulse::centered(
                r,
                timing.tau,
                plan.areas[j],
                plan.theta[j],
                PulseKind::Readout,
            ));
        }
    }
    Ok(ReadoutPlan {
        schedule: PulseSchedule::new(pulses)?,
        readout_centers,
        echo_centers,
        spacing,
        warnings,
    })
}
