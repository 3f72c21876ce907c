//! Scalar cavity-AFC equations with rectangular control pulses.
//!
//! ```text
//! dE/dt   = -κE + i g√N Σ √n_k P_k + √(2κ) E_in
//! dP_k/dt = -(γ_P + iω_k) P_k + i g√N √n_k E + (i/2) Ω(t) S_k
//! dS_k/dt = -γ_S S_k + (i/2) Ω*(t) P_k
//! E_out   = √(2κ) E - E_in
//! ```

pub mod rk8;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::comb::{build_comb, CombGrid, CombSpec};
use crate::error::{Error, Result};
use crate::waveform::{Envelope, TimeGrid, C64};
use rk8::{LinearStages, Rk8, DOP853, STAGES};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Memory parameters; rates in rad/s (κ, g√N) and 1/s (γ's).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    pub kappa: f64,
    pub g_sqrt_n: f64,
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub comb: CombGrid,
}

impl MemoryParams {
    /// κ = 2π×55 MHz, g√N = 2π×8.4 MHz, lossless, default Pr:YSO comb.
    pub fn pr_yso() -> Result<Self> {
        Ok(Self {
            kappa: 2.0 * PI * 55e6,
            g_sqrt_n: 2.0 * PI * 8.4e6,
            gamma_p: 0.0,
            gamma_s: 0.0,
            comb: build_comb(&CombSpec::pr_yso())?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::invalid("κ must be positive"));
        }
        if !(self.g_sqrt_n >= 0.0) {
            return Err(Error::invalid("g√N must be non-negative"));
        }
        if !(self.gamma_p >= 0.0 && self.gamma_s >= 0.0) {
            return Err(Error::invalid("decay rates must be non-negative"));
        }
        if self.comb.is_empty() || self.comb.omegas.len() != self.comb.weights.len() {
            return Err(Error::invalid("comb grid is empty or inconsistent"));
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.gamma_p == 0.0 && self.gamma_s == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Storage,
    Synchronization,
    Readout,
}

/// Rectangular control pulse with constant complex Rabi frequency `rabi·e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    pub start: f64,
    pub duration: f64,
    pub rabi: f64,
    pub phase: f64,
    pub kind: PulseKind,
}

impl ControlPulse {
    /// Pulse of the given area centred on `center`.
    pub fn centered(center: f64, duration: f64, area: f64, phase: f64, kind: PulseKind) -> Self {
        Self {
            start: center - 0.5 * duration,
            duration,
            rabi: area / duration,
            phase,
            kind,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn center(&self) -> f64 {
        self.start + 0.5 * self.duration
    }

    pub fn area(&self) -> f64 {
        self.rabi * self.duration
    }
}

/// Time-ordered, non-overlapping pulses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pulses: Vec<ControlPulse>,
}

impl PulseSchedule {
    pub fn new(pulses: Vec<ControlPulse>) -> Result<Self> {
        for (i, p) in pulses.iter().enumerate() {
            if !(p.duration > 0.0) {
                return Err(Error::invalid(format!("pulse #{i} has non-positive duration")));
            }
            if !p.rabi.is_finite() || !p.start.is_finite() {
                return Err(Error::invalid(format!("pulse #{i} is not finite")));
            }
        }
        for i in 1..pulses.len() {
            let (a, b) = (&pulses[i - 1], &pulses[i]);
            if !(b.start > a.start) || b.start < a.end() - 1e-15 {
                return Err(Error::PulseOverlap {
                    first: i - 1,
                    second: i,
                    end: a.end(),
                    start: b.start,
                });
            }
        }
        Ok(Self { pulses })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pulses(&self) -> &[ControlPulse] {
        &self.pulses
    }

    pub fn min_duration(&self) -> Option<f64> {
        self.pulses.iter().map(|p| p.duration).reduce(f64::min)
    }
}

/// Largest admissible step and the scale that sets it.
pub fn step_limit(params: &MemoryParams, schedule: &PulseSchedule) -> (f64, &'static str) {
    let mut best = (1.0 / (20.0 * params.kappa), "cavity 1/(20κ)");
    if let Some(tau) = schedule.min_duration() {
        let l = tau / 20.0;
        if l < best.0 {
            best = (l, "pulse τ/20");
        }
    }
    let w = params.comb.max_abs_omega();
    if w > 0.0 {
        let l = 2.0 * PI / (20.0 * w);
        if l < best.0 {
            best = (l, "detuning 2π/(20·max|ω_k|)");
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOptions {
    /// Budget sampling stride in steps.
    pub budget_every: usize,
    /// Full state history stride; `None` keeps no history.
    pub trace_every: Option<usize>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            budget_every: 100,
            trace_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub e: C64,
    pub p: Vec<C64>,
    pub s: Vec<C64>,
}

/// Conservation terms sampled along the run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BudgetTrace {
    pub t: Vec<f64>,
    pub field: Vec<f64>,
    pub polarization: Vec<f64>,
    pub spin: Vec<f64>,
    pub emitted: Vec<f64>,
    pub future_input: Vec<f64>,
}

impl BudgetTrace {
    pub fn total(&self, i: usize) -> f64 {
        self.field[i] + self.polarization[i] + self.spin[i] + self.emitted[i] + self.future_input[i]
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub e_out: Envelope,
    /// ∫|E_in|² of the supplied input (trapezoidal).
    pub input_energy: f64,
    pub budget: BudgetTrace,
    /// max_t |1 - budget(t)/input| over every step.
    pub max_budget_deviation: f64,
    pub lossless: bool,
    pub trace: Option<Vec<SimState>>,
    pub final_state: SimState,
}

struct StepPulse {
    i0: usize,
    i1: usize,
    omega: C64,
}

fn snap_pulses(schedule: &PulseSchedule, grid: &TimeGrid) -> Result<Vec<StepPulse>> {
    let mut out = Vec::with_capacity(schedule.pulses().len());
    for (k, p) in schedule.pulses().iter().enumerate() {
        if p.start < grid.t0 - 0.5 * grid.dt || p.end() > grid.t_end() + 0.5 * grid.dt {
            return Err(Error::invalid(format!(
                "pulse #{k} [{:.6e}, {:.6e}] s lies outside the grid",
                p.start,
                p.end()
            )));
        }
        let i0 = ((p.start - grid.t0) / grid.dt).round() as usize;
        let mut i1 = ((p.end() - grid.t0) / grid.dt).round() as usize;
        if i1 <= i0 {
            i1 = i0 + 1;
        }
        // Edges land on grid points; the area is kept.
        let rabi = p.area() / ((i1 - i0) as f64 * grid.dt);
        out.push(StepPulse {
            i0,
            i1: i1.min(grid.n - 1),
            omega: C64::from_polar(rabi, p.phase),
        });
    }
    Ok(out)
}

/// Precomputed free-evolution coefficients for Ω = 0 steps.
struct FreeStepper {
    /// β_k α_s(z_k), row per class.
    w: Vec<[C64; STAGES]>,
    r: Vec<C64>,
    /// h β_k γ_l(z_k).
    u: Vec<[C64; STAGES]>,
    g: [[C64; STAGES]; STAGES],
}

impl FreeStepper {
    fn new(params: &MemoryParams, h: f64) -> Self {
        let k = params.comb.len();
        let mut w = Vec::with_capacity(k);
        let mut r = Vec::with_capacity(k);
        let mut u = Vec::with_capacity(k);
        let mut g = [[ZERO; STAGES]; STAGES];
        for (om, n) in params.comb.omegas.iter().zip(&params.comb.weights) {
            let beta = I * params.g_sqrt_n * n.sqrt();
            let a = C64::new(-params.gamma_p, -om);
            let ls = LinearStages::new(a * h);
            let mut wk = [ZERO; STAGES];
            let mut uk = [ZERO; STAGES];
            for s in 0..STAGES {
                wk[s] = beta * ls.alpha[s];
                uk[s] = beta * h * ls.gamma[s];
                for l in 0..s {
                    g[s][l] += beta * beta * h * ls.beta[s][l];
                }
            }
            w.push(wk);
            r.push(ls.r);
            u.push(uk);
        }
        Self { w, r, u, g }
    }
}

fn sum_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Integrates the scalar equations on `grid` from zero initial conditions.
pub fn simulate(
    params: &MemoryParams,
    input: &Envelope,
    schedule: &PulseSchedule,
    grid: &TimeGrid,
) -> Result<SimOutput> {
    simulate_with(params, input, schedule, grid, &SimOptions::default())
}

pub fn simulate_with(
    params: &MemoryParams,
    input: &Envelope,
    schedule: &PulseSchedule,
    grid: &TimeGrid,
    opts: &SimOptions,
) -> Result<SimOutput> {
    params.validate()?;
    let (limit, scale) = step_limit(params, schedule);
    if grid.dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            dt: grid.dt,
            limit,
            scale,
        });
    }
    let e0 = input.sample_cubic(grid.t0).norm_sqr();
    let peak = input.samples.iter().fold(0.0f64, |m, z| m.max(z.norm_sqr()));
    if e0 > 1e-8 * peak {
        return Err(Error::invalid(
            "input envelope must vanish at the start of the simulation grid",
        ));
    }
    let pulses = snap_pulses(schedule, grid)?;

    let k = params.comb.len();
    let h = grid.dt;
    let kappa = params.kappa;
    let sq2k = (2.0 * kappa).sqrt();
    let tab = &DOP853;
    let free = FreeStepper::new(params, h);
    let sqrt_n: Vec<f64> = params.comb.weights.iter().map(|n| n.sqrt()).collect();
    let s_decay = (-params.gamma_s * h).exp();
    let ein_at = |t: f64| input.sample_cubic(t);

    let mut e = ZERO;
    let mut p = vec![ZERO; k];
    let mut s = vec![ZERO; k];
    let mut q_out = 0.0;
    let mut f_in = 0.0;

    let mut e_out = Vec::with_capacity(grid.n);
    let mut partial = Vec::with_capacity(grid.n);
    let mut budget = BudgetTrace::default();
    let mut budget_raw: Vec<(f64, f64, f64, f64, f64, f64)> = Vec::new();
    let mut trace = opts.trace_every.map(|_| Vec::new());
    let every = opts.budget_every.max(1);

    let mut generic_y = vec![ZERO; 2 * k + 3];
    let mut generic = Rk8::new(2 * k + 3);
    let mut next_pulse = 0usize;

    let mut record = |i: usize, e: C64, p: &[C64], s: &[C64], q: f64, f: f64| {
        let t = grid.t(i);
        let field = e.norm_sqr();
        let pol = sum_sq(p);
        let spin = sum_sq(s);
        partial.push(field + pol + spin + q - f);
        e_out.push(e * sq2k - ein_at(t));
        if i % every == 0 || i + 1 == grid.n {
            budget_raw.push((t, field, pol, spin, q, f));
        }
        if let (Some(tr), Some(stride)) = (trace.as_mut(), opts.trace_every) {
            if i % stride.max(1) == 0 {
                tr.push(SimState {
                    t,
                    e,
                    p: p.to_vec(),
                    s: s.to_vec(),
                });
            }
        }
    };

    let mut ein = [ZERO; STAGES];
    let mut es = [ZERO; STAGES];
    let mut ke = [ZERO; STAGES];

    record(0, e, &p, &s, q_out, f_in);
    for i in 0..grid.n - 1 {
        let t = grid.t(i);
        while next_pulse < pulses.len() && pulses[next_pulse].i1 <= i {
            next_pulse += 1;
        }
        let omega = match pulses.get(next_pulse) {
            Some(sp) if sp.i0 <= i && i < sp.i1 => sp.omega,
            _ => ZERO,
        };

        if omega == ZERO {
            for st in 0..STAGES {
                ein[st] = ein_at(t + tab.c[st] * h);
            }
            let mut d = [ZERO; STAGES];
            for (wk, pk) in free.w.iter().zip(&p) {
                for st in 0..STAGES {
                    d[st] += wk[st] * pk;
                }
            }
            let mut q_inc = 0.0;
            let mut f_inc = 0.0;
            for st in 0..STAGES {
                let mut acc = e;
                for j in 0..st {
                    acc += ke[j] * (h * tab.a[st][j]);
                }
                es[st] = acc;
                let mut coupling = d[st];
                for l in 0..st {
                    coupling += free.g[st][l] * es[l];
                }
                ke[st] = -kappa * acc + coupling + sq2k * ein[st];
                let b = tab.b[st];
                if b != 0.0 {
                    q_inc += b * (acc * sq2k - ein[st]).norm_sqr();
                    f_inc += b * ein[st].norm_sqr();
                }
            }
            let mut e_new = e;
            for st in 0..STAGES {
                e_new += ke[st] * (h * tab.b[st]);
            }
            for ((pk, rk), uk) in p.iter_mut().zip(&free.r).zip(&free.u) {
                let mut acc = *pk * rk;
                for l in 0..STAGES {
                    acc += uk[l] * es[l];
                }
                *pk = acc;
            }
            if s_decay != 1.0 {
                for sk in s.iter_mut() {
                    *sk *= s_decay;
                }
            }
            e = e_new;
            q_out += h * q_inc;
            f_in += h * f_inc;
        } else {
            generic_y[0] = e;
            generic_y[1..=k].copy_from_slice(&p);
            generic_y[k + 1..=2 * k].copy_from_slice(&s);
            generic_y[2 * k + 1] = C64::new(q_out, 0.0);
            generic_y[2 * k + 2] = C64::new(f_in, 0.0);
            let g = params.g_sqrt_n;
            let half_om = 0.5 * I * omega;
            let half_om_c = 0.5 * I * omega.conj();
            let omegas = &params.comb.omegas;
            let gp = params.gamma_p;
            let gs = params.gamma_s;
            let mut f = |tt: f64, y: &[C64], dy: &mut [C64]| {
                let ein_t = ein_at(tt);
                let ee = y[0];
                let mut coupling = ZERO;
                for j in 0..k {
                    let pj = y[1 + j];
                    let sj = y[1 + k + j];
                    coupling += pj * sqrt_n[j];
                    dy[1 + j] = C64::new(-gp, -omegas[j]) * pj + I * g * sqrt_n[j] * ee + half_om * sj;
                    dy[1 + k + j] = -gs * sj + half_om_c * pj;
                }
                dy[0] = -kappa * ee + I * g * coupling + sq2k * ein_t;
                dy[2 * k + 1] = C64::new((ee * sq2k - ein_t).norm_sqr(), 0.0);
                dy[2 * k + 2] = C64::new(ein_t.norm_sqr(), 0.0);
            };
            generic.step(&mut f, t, &mut generic_y, h);
            e = generic_y[0];
            p.copy_from_slice(&generic_y[1..=k]);
            s.copy_from_slice(&generic_y[k + 1..=2 * k]);
            q_out = generic_y[2 * k + 1].re;
            f_in = generic_y[2 * k + 2].re;
        }

        if (i % 1024 == 0 || i + 2 == grid.n) && !(e.re.is_finite() && e.im.is_finite() && sum_sq(&p).is_finite()) {
            return Err(Error::NonFinite { t: grid.t(i + 1) });
        }
        record(i + 1, e, &p, &s, q_out, f_in);
    }

    let f_end = f_in;
    let lossless = params.is_lossless();
    let max_dev = if f_end > 0.0 {
        partial
            .iter()
            .map(|x| (1.0 - (x + f_end) / f_end).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    for (t, field, pol, spin, q, f) in budget_raw {
        budget.t.push(t);
        budget.field.push(field);
        budget.polarization.push(pol);
        budget.spin.push(spin);
        budget.emitted.push(q);
        budget.future_input.push(f_end - f);
    }
    Ok(SimOutput {
        e_out: Envelope::new(*grid, e_out)?,
        input_energy: input.norm_sqr(),
        budget,
        max_budget_deviation: max_dev,
        lossless,
        trace,
        final_state: SimState {
            t: grid.t_end(),
            e,
            p,
            s,
        },
    })
}

/// Largest relative deviation of the conservation budget over the run.
pub fn energy_budget(output: &SimOutput) -> Result<f64> {
    if !output.lossless {
        return Err(Error::invalid("energy budget requires γ_P = γ_S = 0"));
    }
    Ok(output.max_budget_deviation)
}

/// ∫_window |E_out|² / ∫|E_in|².
pub fn window_efficiency(output: &SimOutput, t1: f64, t2: f64) -> Result<f64> {
    let g = &output.e_out.grid;
    let tol = 1e-9 * g.dt.max(1e-30);
    if t1 < g.t0 - tol || t2 > g.t_end() + tol || !(t2 > t1) {
        return Err(Error::invalid(format!(
            "window [{t1:.6e}, {t2:.6e}] s is not inside the grid [{:.6e}, {:.6e}] s",
            g.t0,
            g.t_end()
        )));
    }
    if !(output.input_energy > 0.0) {
        return Err(Error::invalid("input carries no energy"));
    }
    Ok(output.e_out.energy_in(t1, t2) / output.input_energy)
}

/// η_abs = 4x/(1+x)², x = C/C_opt.
pub fn analytic_eta_abs(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid("C/C_opt must be non-negative"));
    }
    Ok(4.0 * x / (1.0 + x).powi(2))
}

/// η_F · 16x²/(1+x)⁴ · e^{-2γ_P·2π/Δ}.
pub fn analytic_eta_first_echo(x: f64, eta_f: f64, gamma_p: f64, delta: f64) -> Result<f64> {
    if !(x >= 0.0) || !(0.0..=1.0).contains(&eta_f) || !(gamma_p >= 0.0) || !(delta > 0.0) {
        return Err(Error::invalid("first-echo arguments out of range"));
    }
    Ok(eta_f * 16.0 * x * x / (1.0 + x).powi(4) * (-2.0 * gamma_p * 2.0 * PI / delta).exp())
}

/// Population transferred by a rectangular pulse at detuning ω.
pub fn rabi_transfer(omega_detuning: f64, rabi: f64, duration: f64) -> f64 {
    let ups = (rabi * rabi + omega_detuning * omega_detuning).sqrt();
    let x = 0.5 * ups * duration;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    0.25 * rabi * rabi * duration * duration * sinc * sinc
}
