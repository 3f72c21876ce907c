use std::f64::consts::PI;

use afc_core::comb::{build_comb, c_opt, eta_f, CombSpec, ShapeKind};
use afc_core::dynamics::{
    analytic_eta_abs, analytic_eta_first_echo, simulate, window_efficiency, ControlPulse, MemoryParams, PulseKind,
    PulseSchedule, SimOutput,
};
use afc_core::shaper::{build_readout_schedule, plan_shaping, BinLayout, ReadoutMode, ReadoutTiming};
use afc_core::waveform::{make_gaussian, Envelope, TimeGrid, C64};

const KAPPA: f64 = 2.0 * PI * 55e6;
const GAMMA: f64 = 2.0 * PI * 4e6;
const FWHM: f64 = 330e-9;
const TC: f64 = 1.5e-6;
const DT: f64 = 0.144e-9;

fn dirac_spec() -> CombSpec {
    CombSpec {
        tooth: ShapeKind::Dirac,
        classes_per_tooth: 1,
        ..CombSpec::pr_yso()
    }
}

fn period() -> f64 {
    2.0 * PI / CombSpec::pr_yso().delta
}

fn memory(spec: &CombSpec, x: f64, gamma_s: f64) -> MemoryParams {
    let c = x * c_opt(&spec.envelope).unwrap();
    MemoryParams {
        kappa: KAPPA,
        g_sqrt_n: (c * KAPPA * GAMMA).sqrt(),
        gamma_p: 0.0,
        gamma_s,
        comb: build_comb(spec).unwrap(),
    }
}

fn run(params: &MemoryParams, schedule: &PulseSchedule, horizon: f64) -> (Envelope, SimOutput) {
    let grid = TimeGrid::spanning(0.0, horizon, DT).unwrap();
    let input = make_gaussian(grid, TC, FWHM).unwrap();
    let out = simulate(params, &input, schedule, &grid).unwrap();
    (input, out)
}

fn echo_window() -> (f64, f64) {
    let t = TC + period();
    (t - 2e-6, t + 2e-6)
}

#[test]
fn absorption_follows_impedance_law() {
    let spec = dirac_spec();
    let cut = TC + 4.0 * FWHM;
    for x in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let p = memory(&spec, x, 0.0);
        let (_, out) = run(&p, &PulseSchedule::empty(), cut);
        let sim = 1.0 - window_efficiency(&out, 0.0, cut).unwrap();
        let exact = analytic_eta_abs(x).unwrap();
        println!("x = {x}: absorbed {sim:.4}, law {exact:.4}");
        assert!((sim - exact).abs() / exact < 0.05, "x = {x}: {sim} vs {exact}");
    }
}

#[test]
fn matched_dirac_echo() {
    let spec = dirac_spec();
    let p = memory(&spec, 1.0, 0.0);
    let horizon = TC + 4.5 * period();
    let (input, out) = run(&p, &PulseSchedule::empty(), horizon);
    let (e0, e1) = echo_window();
    let eta = window_efficiency(&out, e0, e1).unwrap();
    println!("first echo {eta:.5}");
    assert!(eta >= 0.95);

    // timing
    let g = &out.e_out.grid;
    let (mut m0, mut m1) = (0.0, 0.0);
    for i in g.index_of(e0)..g.index_of(e1) {
        let w = out.e_out.samples[i].norm_sqr();
        m0 += w;
        m1 += w * g.t(i);
    }
    let centroid = m1 / m0;
    assert!((centroid - TC - period()).abs() < FWHM, "echo centroid {centroid:e}");

    // no echo-sized window between the reflection and the echo carries energy
    let span = 6.0 * FWHM;
    let mut t = TC + 3.0 * FWHM;
    let mut worst: f64 = 0.0;
    while t + span <= TC + period() - 3.0 * FWHM {
        worst = worst.max(window_efficiency(&out, t, t + span).unwrap());
        t += 0.25 * span;
    }
    println!("largest early window {worst:.3e}");
    assert!(worst < 1e-4);

    // π phase relative to the delayed input
    let mut acc = C64::new(0.0, 0.0);
    for i in g.index_of(e0)..g.index_of(e1) {
        acc += input.sample_cubic(g.t(i) - period()).conj() * out.e_out.samples[i];
    }
    assert!(acc.re < 0.0, "{acc}");

    // everything comes back out
    let total = window_efficiency(&out, 0.0, horizon).unwrap();
    let stored: f64 = out.final_state.p.iter().map(|z| z.norm_sqr()).sum::<f64>()
        + out.final_state.e.norm_sqr();
    println!("emitted {total:.6}, left inside {stored:.2e}, budget {:.2e}", out.max_budget_deviation);
    assert!((total - 1.0).abs() < 1e-3);
}

#[test]
fn gaussian_teeth_dephasing() {
    let dirac = dirac_spec();
    let gauss = CombSpec::pr_yso();
    let horizon = echo_window().1;
    let (_, od) = run(&memory(&dirac, 1.0, 0.0), &PulseSchedule::empty(), horizon);
    let (_, og) = run(&memory(&gauss, 1.0, 0.0), &PulseSchedule::empty(), horizon);
    let (e0, e1) = echo_window();
    let ed = window_efficiency(&od, e0, e1).unwrap();
    let eg = window_efficiency(&og, e0, e1).unwrap();
    let ef = eta_f(&gauss.tooth, gauss.delta).unwrap();
    let analytic = analytic_eta_first_echo(1.0, ef, 0.0, gauss.delta).unwrap();
    println!("dirac {ed:.5}, gaussian {eg:.5}, η_F {ef:.5}, ratio {:.5}", eg / ed);
    assert!((eg - analytic).abs() / analytic < 0.05);
    assert!((eg / ed - ef).abs() / ef < 0.005);

    // finer tooth sampling barely moves the echo
    let fine = CombSpec {
        classes_per_tooth: 41,
        ..gauss
    };
    let (_, of) = run(&memory(&fine, 1.0, 0.0), &PulseSchedule::empty(), horizon);
    let ef41 = window_efficiency(&of, e0, e1).unwrap();
    println!("41 classes {ef41:.5}");
    assert!((ef41 - eg).abs() / eg < 5e-3);
}

fn stored_echo(params: &MemoryParams, tau: f64, hold: f64) -> (f64, f64, f64, Envelope) {
    let lag = 3.0 * FWHM + 0.5 * tau;
    let s = TC + period() - lag;
    let r = s + hold;
    let schedule = PulseSchedule::new(vec![
        ControlPulse::centered(s, tau, PI, 0.0, PulseKind::Storage),
        ControlPulse::centered(r, tau, PI, 0.0, PulseKind::Readout),
    ])
    .unwrap();
    let echo = r + lag;
    let (_, out) = run(params, &schedule, echo + 2e-6);
    let eta = window_efficiency(&out, r + 0.5 * tau, echo + 2e-6).unwrap();
    (eta, r - s, echo, out.e_out)
}

#[test]
fn spin_storage_decay_and_shape() {
    let spec = dirac_spec();
    let gamma_s = 1.0 / 40e-6;
    let lossy = memory(&spec, 1.0, gamma_s);
    let (h1, h2) = (2e-6, 6e-6);
    let (a, _, _, _) = stored_echo(&lossy, 70e-9, h1);
    let (b, _, _, _) = stored_echo(&lossy, 70e-9, h2);
    let fit = (a / b).ln() / (2.0 * (h2 - h1));
    println!("γ_S fit {fit:.5e} vs {gamma_s:.5e}");
    assert!((fit - gamma_s).abs() / gamma_s < 0.01);

    // a short pulse pair only delays the echo
    let clean = memory(&spec, 1.0, 0.0);
    let tau = 10e-9;
    let (eta, delay, _, e_stored) = stored_echo(&clean, tau, 3e-6);
    let (_, free) = run(&clean, &PulseSchedule::empty(), echo_window().1);
    let (e0, e1) = echo_window();
    let g = &free.e_out.grid;
    let mut acc = C64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for i in g.index_of(e0)..g.index_of(e1) {
        let a = free.e_out.samples[i];
        let b = e_stored.sample_cubic(g.t(i) + delay);
        acc += a.conj() * b;
        na += a.norm_sqr();
        nb += b.norm_sqr();
    }
    let ov = acc.norm() / (na * nb).sqrt();
    println!("stored echo {eta:.4}, shape overlap {ov:.5}");
    assert!(ov >= 0.98);
}

#[test]
fn shaped_bins_carry_target_weights() {
    let spec = dirac_spec();
    let params = memory(&spec, 1.0, 0.0);
    let target = make_gaussian(TimeGrid::spanning(-8e-6, 8e-6, 2e-9).unwrap(), 0.0, 4e-6)
        .unwrap()
        .normalized()
        .unwrap();
    let h_in = make_gaussian(TimeGrid::spanning(-3e-6, 3e-6, 1e-9).unwrap(), 0.0, FWHM).unwrap();
    let w = 1.5e-6;
    let layout = BinLayout::centered(0.0, w, 4).unwrap();
    let plan = plan_shaping(&target, &h_in, &layout, false).unwrap();
    let timing = ReadoutTiming {
        input_center: TC,
        input_fwhm: FWHM,
        delta: spec.delta,
        tau: 70e-9,
        storage_margin: 3.0,
        hold: 0.5e-6,
        mode: ReadoutMode::Plain,
        sync: true,
    };
    let readout = build_readout_schedule(&plan, &timing).unwrap();
    assert!(readout.warnings.is_empty(), "{:?}", readout.warnings);
    assert!(readout.echo_centers[0] - readout.readout_centers[0] <= w);

    let last = *readout.echo_centers.last().unwrap() + w;
    let (_, out) = run(&params, &readout.schedule, last);
    let energies: Vec<f64> = readout
        .echo_centers
        .iter()
        .map(|&c| window_efficiency(&out, c - 0.5 * w, c + 0.5 * w).unwrap())
        .collect();
    let total: f64 = energies.iter().sum();
    for (j, (&e, &p)) in energies.iter().zip(plan.p.iter()).enumerate() {
        let frac = e / total;
        println!("bin {j}: {frac:.5} vs p² {:.5}", p * p);
        assert!((frac - p * p).abs() / (p * p) < 0.03, "bin {j}");
    }
    // the first echo starts right after its readout
    let (r0, c0) = (readout.readout_centers[0], readout.echo_centers[0]);
    let onset = window_efficiency(&out, r0, r0 + w).unwrap();
    assert!(onset > 0.9 * energies[0], "{onset} vs {}", energies[0]);
    assert!(c0 > r0);
}
