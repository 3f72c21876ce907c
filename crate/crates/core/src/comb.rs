//! Atomic frequency comb distributions and their analytic constants.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Line shape `u(ω)` with unit peak; `width` is γ in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    Dirac,
    /// `1` on `|ω| ≤ γ/2`.
    Rectangular { width: f64 },
    /// `exp(-ω²/2γ²)`.
    Gaussian { width: f64 },
    /// `γ²/(ω² + γ²)`.
    Lorentzian { width: f64 },
}

impl ShapeKind {
    pub fn width(&self) -> Option<f64> {
        match *self {
            ShapeKind::Dirac => None,
            ShapeKind::Rectangular { width }
            | ShapeKind::Gaussian { width }
            | ShapeKind::Lorentzian { width } => Some(width),
        }
    }

    fn check(&self) -> Result<()> {
        match self.width() {
            Some(w) if !(w > 0.0 && w.is_finite()) => {
                Err(Error::invalid(format!("shape width must be positive, got {w}")))
            }
            _ => Ok(()),
        }
    }

    fn require_width(&self, what: &str) -> Result<f64> {
        self.check()?;
        self.width()
            .ok_or_else(|| Error::invalid(format!("{what} is undefined for a dirac shape")))
    }

    pub fn value(&self, w: f64) -> f64 {
        match *self {
            ShapeKind::Dirac => {
                if w == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ShapeKind::Rectangular { width } => {
                if w.abs() <= 0.5 * width * (1.0 + 1e-9) {
                    1.0
                } else {
                    0.0
                }
            }
            ShapeKind::Gaussian { width } => (-0.5 * (w / width).powi(2)).exp(),
            ShapeKind::Lorentzian { width } => width * width / (w * w + width * width),
        }
    }

    /// ∫ u(ω) dω.
    pub fn area(&self) -> Result<f64> {
        let g = self.require_width("area")?;
        Ok(match self {
            ShapeKind::Rectangular { .. } => g,
            ShapeKind::Gaussian { .. } => (2.0 * PI).sqrt() * g,
            ShapeKind::Lorentzian { .. } => PI * g,
            ShapeKind::Dirac => unreachable!(),
        })
    }

    pub fn fwhm(&self) -> Result<f64> {
        let g = self.require_width("FWHM")?;
        Ok(match self {
            ShapeKind::Rectangular { .. } => g,
            ShapeKind::Gaussian { .. } => 2.0 * (2.0 * LN_2).sqrt() * g,
            ShapeKind::Lorentzian { .. } => 2.0 * g,
            ShapeKind::Dirac => unreachable!(),
        })
    }

    /// ũ(t) = ∫ u(ω) e^{-iωt} dω (real for these even shapes). Dirac gives 1.
    pub fn fourier(&self, t: f64) -> f64 {
        match *self {
            ShapeKind::Dirac => 1.0,
            ShapeKind::Rectangular { width } => {
                let x = 0.5 * width * t;
                width * if x == 0.0 { 1.0 } else { x.sin() / x }
            }
            ShapeKind::Gaussian { width } => {
                (2.0 * PI).sqrt() * width * (-0.5 * width * width * t * t).exp()
            }
            ShapeKind::Lorentzian { width } => PI * width * (-width * t.abs()).exp(),
        }
    }
}

/// Area of the central peak of the comb's Fourier transform.
pub fn d_comb(envelope: &ShapeKind) -> Result<f64> {
    // ṽ(0)/∫v scaled by 2π; ṽ(0) = ∫v and the peak of v is 1.
    Ok(2.0 * PI / envelope.area()?)
}

/// C_opt = 2/(Γ·D_comb).
pub fn c_opt(envelope: &ShapeKind) -> Result<f64> {
    let g = envelope.require_width("C_opt")?;
    Ok(2.0 / (g * d_comb(envelope)?))
}

/// C = (g√N)²/(κΓ).
pub fn cooperativity(g_sqrt_n: f64, kappa: f64, gamma: f64) -> Result<f64> {
    if !(g_sqrt_n >= 0.0 && kappa > 0.0 && gamma > 0.0) {
        return Err(Error::invalid("cooperativity needs g√N ≥ 0, κ > 0, Γ > 0"));
    }
    Ok(g_sqrt_n * g_sqrt_n / (kappa * gamma))
}

/// Tooth-dephasing factor (w̃(2π/Δ)/w̃(0))².
pub fn eta_f(tooth: &ShapeKind, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("comb period must be positive"));
    }
    if let Some(w) = tooth.width() {
        tooth.check()?;
        if w >= delta {
            return Err(Error::invalid(format!(
                "tooth width {w:.4e} rad/s must be below the period {delta:.4e} rad/s"
            )));
        }
    }
    let t = 2.0 * PI / delta;
    Ok((tooth.fourier(t) / tooth.fourier(0.0)).powi(2))
}

/// Comb specification; all frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombSpec {
    pub envelope: ShapeKind,
    pub tooth: ShapeKind,
    /// Comb period Δ.
    pub delta: f64,
    pub n_teeth: usize,
    pub classes_per_tooth: usize,
}

/// Δ = Γ/(N_teeth − 1).
pub fn delta_from_teeth(gamma: f64, n_teeth: usize) -> f64 {
    gamma / (n_teeth.max(2) - 1) as f64
}

impl CombSpec {
    /// Rectangular 4 MHz envelope, 67 Gaussian 1 kHz teeth, 21 classes per tooth.
    pub fn pr_yso() -> Self {
        let gamma = 2.0 * PI * 4e6;
        Self {
            envelope: ShapeKind::Rectangular { width: gamma },
            tooth: ShapeKind::Gaussian { width: 2.0 * PI * 1e3 },
            delta: delta_from_teeth(gamma, 67),
            n_teeth: 67,
            classes_per_tooth: 21,
        }
    }

    /// Envelope width Γ (errors for a dirac envelope).
    pub fn gamma(&self) -> Result<f64> {
        self.envelope.require_width("envelope width")
    }

    /// Hard errors only; see [`CombSpec::warnings`] for regime advice.
    pub fn validate(&self) -> Result<()> {
        self.envelope.check()?;
        self.tooth.check()?;
        if matches!(self.envelope, ShapeKind::Dirac) {
            return Err(Error::invalid("comb envelope cannot be dirac"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("comb period Δ must be positive"));
        }
        if self.n_teeth < 3 {
            return Err(Error::invalid(format!("need at least 3 teeth, got {}", self.n_teeth)));
        }
        if self.classes_per_tooth == 0 || self.classes_per_tooth % 2 == 0 {
            return Err(Error::invalid(format!(
                "classes_per_tooth must be odd and ≥ 1, got {}",
                self.classes_per_tooth
            )));
        }
        if !matches!(self.tooth, ShapeKind::Dirac) && self.classes_per_tooth < 3 {
            return Err(Error::invalid(format!(
                "a finite-width tooth needs ≥ 3 classes, got {}",
                self.classes_per_tooth
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(g) = self.gamma() {
            if g / self.delta < 4.0 {
                out.push(format!("Γ/Δ = {:.3} is below 4", g / self.delta));
            }
        }
        if let Some(w) = self.tooth.width() {
            if self.delta / w < 2.0 {
                out.push(format!("Δ/γ_tooth = {:.3} is below 2", self.delta / w));
            }
        }
        if let ShapeKind::Rectangular { width } = self.envelope {
            let reach = 0.5 * (self.n_teeth - 1) as f64 * self.delta;
            if reach > 0.5 * width * (1.0 + 1e-9) {
                out.push("teeth beyond the rectangular envelope are dropped".to_string());
            }
        }
        out
    }

    /// Tooth offsets relative to the tooth centre, with shape weights.
    fn tooth_samples(&self) -> Vec<(f64, f64)> {
        let n = self.classes_per_tooth;
        match self.tooth {
            ShapeKind::Dirac => vec![(0.0, 1.0)],
            ShapeKind::Rectangular { width } => (0..n)
                .map(|i| ((i as f64 + 0.5) / n as f64 * width - 0.5 * width, 1.0))
                .collect(),
            ShapeKind::Gaussian { width } => {
                let reach = 4.0 * width;
                (0..n)
                    .map(|i| {
                        let x = -reach + 2.0 * reach * i as f64 / (n - 1) as f64;
                        (x, self.tooth.value(x))
                    })
                    .collect()
            }
            ShapeKind::Lorentzian { width } => {
                let reach = (10.0 * width).min(0.5 * self.delta);
                (0..n)
                    .map(|i| {
                        let x = -reach + 2.0 * reach * i as f64 / (n - 1) as f64;
                        (x, self.tooth.value(x))
                    })
                    .collect()
            }
        }
    }
}

/// Discrete frequency classes `(ω_k, n_k)` with Σ n_k = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombGrid {
    pub omegas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CombGrid {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn max_abs_omega(&self) -> f64 {
        self.omegas.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Single class at zero detuning.
    pub fn single(omega: f64) -> Self {
        Self {
            omegas: vec![omega],
            weights: vec![1.0],
        }
    }
}

/// Samples the comb into frequency classes.
pub fn build_comb(spec: &CombSpec) -> Result<CombGrid> {
    spec.validate()?;
    let tooth = spec.tooth_samples();
    let half = 0.5 * (spec.n_teeth - 1) as f64;
    let mut omegas = Vec::with_capacity(spec.n_teeth * tooth.len());
    let mut weights = Vec::with_capacity(omegas.capacity());
    for m in 0..spec.n_teeth {
        let center = (m as f64 - half) * spec.delta;
        let v = spec.envelope.value(center);
        if v <= 0.0 {
            continue;
        }
        for &(x, w) in &tooth {
            omegas.push(center + x);
            weights.push(v * w);
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("comb has no teeth inside its envelope"));
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(CombGrid { omegas, weights })
}

/// F_AFC = Δ / FWHM of a tooth.
pub fn comb_finesse(spec: &CombSpec) -> Result<f64> {
    Ok(spec.delta / spec.tooth.fwhm()?)
}

/// Continuous density n(ω) = Z·v(ω)·Σ_m w(ω − mΔ), Z = Δ/(∫v·∫w).
pub fn comb_density(spec: &CombSpec, w: f64) -> Result<f64> {
    let z = spec.delta / (spec.envelope.area()? * spec.tooth.area()?);
    let v = spec.envelope.value(w);
    if v == 0.0 {
        return Ok(0.0);
    }
    let m0 = (w / spec.delta).round();
    let mut acc = 0.0;
    for dm in -3..=3 {
        let c = (m0 + dm as f64) * spec.delta;
        acc += spec.tooth.value(w - c);
    }
    Ok(z * v * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_PI: f64 = 2.0 * PI;

    #[test]
    fn table_constants() {
        let g = TWO_PI * 4e6;
        let rect = ShapeKind::Rectangular { width: g };
        let gauss = ShapeKind::Gaussian { width: g };
        let lor = ShapeKind::Lorentzian { width: g };
        assert!((d_comb(&rect).unwrap() - TWO_PI / g).abs() < 1e-20);
        assert!((d_comb(&gauss).unwrap() - TWO_PI.sqrt() / g).abs() < 1e-20);
        assert!((d_comb(&lor).unwrap() - 2.0 / g).abs() < 1e-20);
        assert!((c_opt(&rect).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert!((c_opt(&gauss).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((c_opt(&lor).unwrap() - 1.0).abs() < 1e-12);
        assert!(d_comb(&ShapeKind::Dirac).is_err());
        assert!((rect.fwhm().unwrap() - g).abs() < 1e-6);
        assert!((gauss.fwhm().unwrap() - 2.0 * (2.0 * LN_2).sqrt() * g).abs() < 1e-6);
        assert!((lor.fwhm().unwrap() - 2.0 * g).abs() < 1e-6);
    }

    #[test]
    fn fourier_matches_numeric_transform() {
        for s in [
            ShapeKind::Rectangular { width: 3.0 },
            ShapeKind::Gaussian { width: 0.7 },
            ShapeKind::Lorentzian { width: 0.5 },
        ] {
            for t in [0.0, 0.4, 1.3] {
                let h = 1e-4;
                let mut acc = 0.0;
                let mut w = -400.0;
                while w < 400.0 {
                    acc += s.value(w + 0.5 * h) * ((w + 0.5 * h) * t).cos() * h;
                    w += h;
                }
                assert!((acc - s.fourier(t)).abs() < 5e-3, "{s:?} t={t}: {acc} vs {}", s.fourier(t));
            }
        }
    }

    #[test]
    fn cooperativity_pr_yso() {
        let c = cooperativity(TWO_PI * 8.4e6, TWO_PI * 55e6, TWO_PI * 4e6).unwrap();
        assert!((c - 0.3207).abs() < 1e-3);
        assert!((c - 1.0 / PI).abs() < 0.01);
        let c2 = cooperativity(2.0 * TWO_PI * 8.4e6, TWO_PI * 55e6, TWO_PI * 4e6).unwrap();
        assert!((c2 / c - 4.0).abs() < 1e-12);
        let rect = ShapeKind::Rectangular { width: 1.0 };
        let g = (c_opt(&rect).unwrap() * 3.0 * 1.0).sqrt();
        assert!((cooperativity(g, 3.0, 1.0).unwrap() / c_opt(&rect).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirac_rect_comb_is_flat() {
        let g = TWO_PI * 4e6;
        let spec = CombSpec {
            envelope: ShapeKind::Rectangular { width: g },
            tooth: ShapeKind::Dirac,
            delta: delta_from_teeth(g, 67),
            n_teeth: 67,
            classes_per_tooth: 1,
        };
        let c = build_comb(&spec).unwrap();
        assert_eq!(c.len(), 67);
        for w in &c.weights {
            assert!((w - 1.0 / 67.0).abs() < 1e-15);
        }
        assert!((spec.delta / TWO_PI - 60.606e3).abs() < 1.0);
    }

    #[test]
    fn pr_yso_comb_sizes() {
        let spec = CombSpec::pr_yso();
        let c = build_comb(&spec).unwrap();
        assert_eq!(c.len(), 67 * 21);
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(c.weights.iter().all(|&w| w >= 0.0));
        assert!(spec.warnings().is_empty());
    }

    #[test]
    fn spec_rejections() {
        let mut s = CombSpec::pr_yso();
        s.classes_per_tooth = 1;
        assert!(build_comb(&s).is_err());
        s.classes_per_tooth = 20;
        assert!(build_comb(&s).is_err());
        s.classes_per_tooth = 21;
        s.n_teeth = 2;
        assert!(build_comb(&s).is_err());
    }

    #[test]
    fn eta_f_values() {
        let delta = TWO_PI * 61e3;
        let gauss = ShapeKind::Gaussian { width: TWO_PI * 1e3 };
        let e = eta_f(&gauss, delta).unwrap();
        // direct evaluation of exp(-γ²(2π/Δ)²)
        let g = TWO_PI * 1e3;
        let oracle = (-(g * TWO_PI / delta).powi(2)).exp();
        assert!((e - oracle).abs() < 1e-14);
        assert!((e - 0.9894).abs() < 1e-4);
        let spec = CombSpec {
            delta,
            ..CombSpec::pr_yso()
        };
        let f = comb_finesse(&spec).unwrap();
        assert!((f - 25.9).abs() < 0.05, "finesse {f}");
        assert!((e - (-7.0 / (f * f)).exp()).abs() < 2e-4);
        assert_eq!(eta_f(&ShapeKind::Dirac, delta).unwrap(), 1.0);
        let rect = ShapeKind::Rectangular { width: TWO_PI * 5e3 };
        let x = PI * 5.0 / 61.0;
        assert!((eta_f(&rect, delta).unwrap() - (x.sin() / x).powi(2)).abs() < 1e-12);
        assert!((comb_finesse(&CombSpec { tooth: rect, ..spec }).unwrap() - 61.0 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn density_ratio_gaussian_teeth() {
        let spec = CombSpec::pr_yso();
        let n0 = comb_density(&spec, 0.0).unwrap();
        let ratio = TWO_PI * n0 / d_comb(&spec.envelope).unwrap();
        let expect = comb_finesse(&spec).unwrap() * 2.0 * (LN_2 / PI).sqrt();
        assert!((ratio / expect - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn normalization_holds(n_teeth in 3usize..60, cpt in 0usize..15, w_rel in 0.01f64..0.4, kind in 0u8..3) {
            let gamma = TWO_PI * 4e6;
            let delta = delta_from_teeth(gamma, n_teeth);
            let w = w_rel * delta;
            let tooth = match kind {
                0 => ShapeKind::Gaussian { width: w },
                1 => ShapeKind::Rectangular { width: w },
                _ => ShapeKind::Lorentzian { width: w },
            };
            let spec = CombSpec {
                envelope: ShapeKind::Rectangular { width: gamma },
                tooth,
                delta,
                n_teeth,
                classes_per_tooth: 2 * cpt + 3,
            };
            let c = build_comb(&spec).unwrap();
            prop_assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(c.weights.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn constants_ignore_tooth(g in 1e5f64..1e8, w in 1.0f64..1e4) {
            let env = ShapeKind::Gaussian { width: g };
            let a = CombSpec { envelope: env, tooth: ShapeKind::Dirac, delta: g / 10.0, n_teeth: 11, classes_per_tooth: 1 };
            let b = CombSpec { tooth: ShapeKind::Gaussian { width: w }, classes_per_tooth: 21, ..a };
            prop_assert_eq!(d_comb(&a.envelope).unwrap(), d_comb(&b.envelope).unwrap());
            prop_assert_eq!(c_opt(&a.envelope).unwrap(), c_opt(&b.envelope).unwrap());
        }

        #[test]
        fn eta_f_monotone(w1 in 1.0f64..3e4, w2 in 1.0f64..3e4) {
            let delta = TWO_PI * 61e3;
            let (lo, hi) = if w1 < w2 { (w1, w2) } else { (w2, w1) };
            let a = eta_f(&ShapeKind::Gaussian { width: lo }, delta).unwrap();
            let b = eta_f(&ShapeKind::Gaussian { width: hi }, delta).unwrap();
            prop_assert!(a >= b);
        }
    }
}
