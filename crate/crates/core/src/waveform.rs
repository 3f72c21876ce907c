//! Complex single-photon envelopes on uniform time grids.

use std::f64::consts::{LN_2, PI};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Uniform sampling `t_i = t0 + i·dt`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if n < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 samples, got {n}")));
        }
        if !t0.is_finite() || !(t0 + (n - 1) as f64 * dt).is_finite() {
            return Err(Error::invalid("grid span is not finite"));
        }
        Ok(Self { t0, dt, n })
    }

    /// Grid covering `[t0, t1]` with step at most `dt`.
    pub fn spanning(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::invalid(format!("empty span [{t0}, {t1}]")));
        }
        let n = ((t1 - t0) / dt).ceil() as usize + 1;
        Self::new(t0, dt, n.max(2))
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    /// Nearest index, clamped to the grid.
    pub fn index_of(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.n - 1)
        }
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        let tol = 1e-9 * self.dt;
        self.n == other.n
            && (self.t0 - other.t0).abs() <= tol
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }
}

/// Sampled complex amplitude; `|e|²` is a probability density in s⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub grid: TimeGrid,
    pub samples: Vec<C64>,
}

/// Trapezoidal integral of uniformly spaced values.
pub fn trapz(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

impl Envelope {
    pub fn new(grid: TimeGrid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::invalid(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.n
            )));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            samples: vec![C64::new(0.0, 0.0); grid.n],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> C64) -> Self {
        let samples = (0..grid.n).map(|i| f(grid.t(i))).collect();
        Self { grid, samples }
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    /// ∫|e|² dt (trapezoidal).
    pub fn norm_sqr(&self) -> f64 {
        trapz(&self.intensity(), self.grid.dt)
    }

    /// ∫|e|² over `[t1, t2]`, partial end cells included linearly.
    pub fn energy_in(&self, t1: f64, t2: f64) -> f64 {
        let g = &self.grid;
        let lo = t1.max(g.t0);
        let hi = t2.min(g.t_end());
        if hi <= lo {
            return 0.0;
        }
        let inten = |t: f64| self.sample_linear(t).norm_sqr();
        let i_lo = ((lo - g.t0) / g.dt).ceil() as usize;
        let i_hi = ((hi - g.t0) / g.dt).floor() as usize;
        if i_lo > i_hi {
            return 0.5 * (inten(lo) + inten(hi)) * (hi - lo);
        }
        let mut acc = 0.5 * (inten(lo) + self.samples[i_lo].norm_sqr()) * (g.t(i_lo) - lo);
        for i in i_lo..i_hi {
            acc += 0.5 * (self.samples[i].norm_sqr() + self.samples[i + 1].norm_sqr()) * g.dt;
        }
        acc += 0.5 * (self.samples[i_hi].norm_sqr() + inten(hi)) * (hi - g.t(i_hi));
        acc
    }

    pub fn scaled(&self, k: C64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * k).collect(),
        }
    }

    /// Unit-norm copy; fails on an all-zero envelope.
    pub fn normalized(&self) -> Result<Self> {
        let e = self.norm_sqr();
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::invalid("cannot normalize a zero-energy envelope"));
        }
        Ok(self.scaled(C64::new(1.0 / e.sqrt(), 0.0)))
    }

    /// Linear interpolation, zero outside the grid.
    pub fn sample_linear(&self, t: f64) -> C64 {
        let g = &self.grid;
        let x = (t - g.t0) / g.dt;
        if x < 0.0 || x > (g.n - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let i = (x.floor() as usize).min(g.n - 2);
        let f = x - i as f64;
        self.samples[i] * (1.0 - f) + self.samples[i + 1] * f
    }

    /// Four-point cubic Lagrange interpolation, zero outside the grid.
    pub fn sample_cubic(&self, t: f64) -> C64 {
        let g = &self.grid;
        let x = (t - g.t0) / g.dt;
        let last = (g.n - 1) as f64;
        if x < 0.0 || x > last {
            return C64::new(0.0, 0.0);
        }
        let i = (x.floor() as usize).min(g.n - 2);
        if i == 0 || i + 2 >= g.n {
            return self.sample_linear(t);
        }
        let f = x - i as f64;
        let y = &self.samples;
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        y[i - 1] * w0 + y[i] * w1 + y[i + 1] * w2 + y[i + 2] * w3
    }

    /// Intensity FWHM from linear crossings of half the peak.
    pub fn intensity_fwhm(&self) -> f64 {
        let inten = self.intensity();
        let (imax, &pk) = inten
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        let half = 0.5 * pk;
        let g = &self.grid;
        let mut left = g.t0;
        for i in (0..imax).rev() {
            if inten[i] < half {
                let f = (half - inten[i]) / (inten[i + 1] - inten[i]);
                left = g.t(i) + f * g.dt;
                break;
            }
        }
        let mut right = g.t_end();
        for i in imax + 1..g.n {
            if inten[i] < half {
                let f = (inten[i - 1] - half) / (inten[i - 1] - inten[i]);
                right = g.t(i - 1) + f * g.dt;
                break;
            }
        }
        right - left
    }

    /// Intensity-weighted mean time.
    pub fn centroid(&self) -> f64 {
        let inten = self.intensity();
        let tw: Vec<f64> = inten.iter().enumerate().map(|(i, p)| p * self.grid.t(i)).collect();
        trapz(&tw, self.grid.dt) / trapz(&inten, self.grid.dt)
    }

    /// Smallest centred interval holding `fraction` of the energy, as (lo, hi).
    pub fn energy_support(&self, fraction: f64) -> (f64, f64) {
        let inten = self.intensity();
        let total: f64 = inten.iter().sum();
        let tail = 0.5 * (1.0 - fraction) * total;
        let mut acc = 0.0;
        let mut lo = 0;
        for (i, p) in inten.iter().enumerate() {
            acc += p;
            if acc > tail {
                lo = i;
                break;
            }
        }
        acc = 0.0;
        let mut hi = inten.len() - 1;
        for (i, p) in inten.iter().enumerate().rev() {
            acc += p;
            if acc > tail {
                hi = i;
                break;
            }
        }
        (self.grid.t(lo), self.grid.t(hi))
    }
}

fn check_resolvable(width: f64, dt: f64, what: &str) -> Result<()> {
    if !(width > 4.0 * dt) {
        return Err(Error::invalid(format!(
            "{what} {width:.4e} s is not resolvable on a grid with dt = {dt:.4e} s (needs > 4·dt)"
        )));
    }
    Ok(())
}

/// Amplitude standard deviation of a Gaussian with the given intensity FWHM.
pub fn gaussian_amplitude_sigma(intensity_fwhm: f64) -> f64 {
    intensity_fwhm / (2.0 * LN_2.sqrt())
}

/// Normalized Gaussian whose `|·|²` has the requested FWHM.
pub fn make_gaussian(grid: TimeGrid, center: f64, intensity_fwhm: f64) -> Result<Envelope> {
    check_resolvable(intensity_fwhm, grid.dt, "intensity FWHM")?;
    let s = gaussian_amplitude_sigma(intensity_fwhm);
    Envelope::from_fn(grid, |t| {
        let x = (t - center) / s;
        C64::new((-0.5 * x * x).exp(), 0.0)
    })
    .normalized()
}

/// Normalized one-sided exponential `e^{-(t-start)/decay}`, zero before `start`.
pub fn make_exponential(grid: TimeGrid, start: f64, decay: f64) -> Result<Envelope> {
    if !(decay > grid.dt) {
        return Err(Error::invalid(format!(
            "decay {decay:.4e} s must exceed dt = {:.4e} s",
            grid.dt
        )));
    }
    Envelope::from_fn(grid, |t| {
        if t < start {
            C64::new(0.0, 0.0)
        } else {
            C64::new((-(t - start) / decay).exp(), 0.0)
        }
    })
    .normalized()
}

/// Asymmetric hyperbolic-secant amplitude `1/(e^{-x/r} + e^{x/f})`.
fn asym_sech(x: f64, r: f64, f: f64) -> f64 {
    // Evaluated in a form that cannot overflow.
    let a = -x / r;
    let b = x / f;
    let m = a.max(b);
    (-m).exp() / ((a - m).exp() + (b - m).exp())
}

fn asym_peak(r: f64, f: f64) -> f64 {
    r * f / (r + f) * (f / r).ln()
}

fn asym_unit_fwhm(r: f64, f: f64) -> f64 {
    let x0 = asym_peak(r, f);
    let half = 0.5 * asym_sech(x0, r, f).powi(2);
    let crossing = |dir: f64| {
        let mut lo = 0.0;
        let mut hi = r.max(f);
        while asym_sech(x0 + dir * hi, r, f).powi(2) > half {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if asym_sech(x0 + dir * mid, r, f).powi(2) > half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    crossing(-1.0) + crossing(1.0)
}

/// Ion-like profile with fast rise and slow fall, peaked at the grid midpoint.
pub fn make_asymmetric_ion_like(grid: TimeGrid, rise: f64, fall: f64, fwhm: f64) -> Result<Envelope> {
    let mid = 0.5 * (grid.t0 + grid.t_end());
    make_asymmetric_ion_like_at(grid, mid, rise, fall, fwhm)
}

/// As [`make_asymmetric_ion_like`] with an explicit intensity-peak time.
pub fn make_asymmetric_ion_like_at(
    grid: TimeGrid,
    peak: f64,
    rise: f64,
    fall: f64,
    fwhm: f64,
) -> Result<Envelope> {
    if !(rise > 0.0 && fall > 0.0) {
        return Err(Error::invalid("rise and fall times must be positive"));
    }
    if rise > fall {
        return Err(Error::invalid(format!(
            "rise ({rise:.4e} s) must not exceed fall ({fall:.4e} s)"
        )));
    }
    check_resolvable(fwhm, grid.dt, "FWHM")?;
    let lambda = fwhm / asym_unit_fwhm(rise, fall);
    let (r, f) = (lambda * rise, lambda * fall);
    let x0 = asym_peak(r, f);
    Envelope::from_fn(grid, |t| C64::new(asym_sech(t - peak + x0, r, f), 0.0)).normalized()
}

/// ∫ a*(t) b(t) dt on a shared grid.
pub fn overlap(a: &Envelope, b: &Envelope) -> Result<C64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(format!(
            "overlap needs identical grids ({:?} vs {:?}); resample first",
            a.grid, b.grid
        )));
    }
    Ok(overlap_unchecked(&a.samples, &b.samples, a.grid.dt))
}

fn overlap_unchecked(a: &[C64], b: &[C64], dt: f64) -> C64 {
    let n = a.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        acc += a[i].conj() * b[i];
    }
    acc -= 0.5 * (a[0].conj() * b[0] + a[n - 1].conj() * b[n - 1]);
    acc * dt
}

/// ∫ a*(t - sa) b(t - sb) dt, evaluated on `a`'s grid with cubic interpolation of `b`.
pub fn overlap_shifted(a: &Envelope, sa: f64, b: &Envelope, sb: f64) -> C64 {
    let g = &a.grid;
    let vals: Vec<C64> = (0..g.n)
        .map(|i| a.samples[i].conj() * b.sample_cubic(g.t(i) + sa - sb))
        .collect();
    let n = vals.len();
    let s: C64 = vals.iter().sum::<C64>() - 0.5 * (vals[0] + vals[n - 1]);
    s * g.dt
}

/// Indicator band `|ω - center| ≤ half_width` in angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBoxFilter {
    pub half_width: f64,
    pub center: f64,
}

impl SpectralBoxFilter {
    pub fn new(half_width: f64, center: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::invalid(format!("filter half-width must be positive, got {half_width}")));
        }
        Ok(Self { half_width, center })
    }

    /// From Hz values; multiplies by 2π.
    pub fn from_hz(half_width_hz: f64, center_hz: f64) -> Result<Self> {
        Self::new(2.0 * PI * half_width_hz, 2.0 * PI * center_hz)
    }
}

/// Angular frequency of DFT bin `m` for a component `e^{-iωt}`.
fn bin_omega(m: usize, n: usize, dt: f64) -> f64 {
    let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    -2.0 * PI * k / (n as f64 * dt)
}

/// Sharp spectral cut; returns the filtered envelope and retained energy fraction.
///
/// The grid period is the transform period; pad with [`resample`] beforehand
/// when the pulse sits near the grid edges.
pub fn box_filter(e: &Envelope, f: &SpectralBoxFilter) -> Result<(Envelope, f64)> {
    let g = e.grid;
    let resolution = 2.0 * PI / (g.n as f64 * g.dt);
    if !(resolution < f.half_width / 10.0) {
        return Err(Error::invalid(format!(
            "spectral resolution {resolution:.4e} rad/s is too coarse for half-width {:.4e} rad/s; \
             grid span must exceed {:.4e} s",
            f.half_width,
            20.0 * PI / f.half_width
        )));
    }
    let mut buf = e.samples.clone();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(g.n).process(&mut buf);
    for (m, z) in buf.iter_mut().enumerate() {
        if (bin_omega(m, g.n, g.dt) - f.center).abs() > f.half_width {
            *z = C64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(g.n).process(&mut buf);
    let scale = 1.0 / g.n as f64;
    for z in buf.iter_mut() {
        *z *= scale;
    }
    let e_in: f64 = e.samples.iter().map(|z| z.norm_sqr()).sum();
    let e_out: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    let retained = if e_in > 0.0 { e_out / e_in } else { 0.0 };
    Ok((Envelope { grid: g, samples: buf }, retained))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Lanczos-windowed sinc, 16 lobes.
    BandLimited,
}

#[derive(Debug, Clone)]
pub struct Resampled {
    pub envelope: Envelope,
    /// Some target points fell outside the source and were zero-filled.
    pub extrapolated: bool,
}

fn lanczos(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.abs() >= a {
        0.0
    } else {
        let px = PI * x;
        a * px.sin() * (px / a).sin() / (px * px)
    }
}

/// Angular frequency below which `fraction` of the spectral energy lies.
pub fn spectral_extent(e: &Envelope, fraction: f64) -> f64 {
    let g = e.grid;
    let mut buf = e.samples.clone();
    FftPlanner::<f64>::new().plan_fft_forward(g.n).process(&mut buf);
    let mut bins: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(m, z)| (bin_omega(m, g.n, g.dt).abs(), z.norm_sqr()))
        .collect();
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = bins.iter().map(|b| b.1).sum();
    let mut acc = 0.0;
    for (w, p) in &bins {
        acc += p;
        if acc >= fraction * total {
            return *w;
        }
    }
    bins.last().map(|b| b.0).unwrap_or(0.0)
}

/// Moves an envelope onto another grid.
pub fn resample(e: &Envelope, grid: TimeGrid, method: Interpolation) -> Result<Resampled> {
    if e.grid.same_as(&grid) {
        return Ok(Resampled {
            envelope: e.clone(),
            extrapolated: false,
        });
    }
    let (s0, s1) = (e.grid.t0, e.grid.t_end());
    if grid.t_end() < s0 || grid.t0 > s1 {
        return Err(Error::invalid("target grid does not overlap the source support"));
    }
    // the stretched kernel low-passes, so only linear downsampling can alias
    if grid.dt > e.grid.dt && method == Interpolation::Linear {
        let band = spectral_extent(e, 1.0 - 1e-10);
        let nyquist = PI / grid.dt;
        if band > nyquist {
            return Err(Error::invalid(format!(
                "downsampling to dt = {:.4e} s aliases: envelope band {band:.4e} rad/s exceeds Nyquist {nyquist:.4e} rad/s",
                grid.dt
            )));
        }
    }
    let extrapolated = grid.t0 < s0 - 1e-9 * e.grid.dt || grid.t_end() > s1 + 1e-9 * e.grid.dt;
    let samples = match method {
        Interpolation::Linear => (0..grid.n).map(|i| e.sample_linear(grid.t(i))).collect(),
        Interpolation::BandLimited => {
            let a = 16.0;
            // Kernel is stretched when downsampling so it also low-passes.
            let stretch = (grid.dt / e.grid.dt).max(1.0);
            let reach = (a * stretch).ceil() as i64;
            (0..grid.n)
                .map(|i| {
                    let x = (grid.t(i) - s0) / e.grid.dt;
                    if x < -0.5 || x > (e.grid.n - 1) as f64 + 0.5 {
                        return C64::new(0.0, 0.0);
                    }
                    let c = x.floor() as i64;
                    let mut acc = C64::new(0.0, 0.0);
                    let mut wsum = 0.0;
                    for j in (c - reach + 1)..=(c + reach) {
                        let w = lanczos((x - j as f64) / stretch, a);
                        wsum += w;
                        if j >= 0 && j < e.grid.n as i64 {
                            acc += e.samples[j as usize] * w;
                        }
                    }
                    acc / wsum
                })
                .collect()
        }
    };
    Ok(Resampled {
        envelope: Envelope { grid, samples },
        extrapolated,
    })
}

/// Writes `t,re,im` rows with round-trip float formatting.
pub fn save_csv(e: &Envelope, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::with_capacity(48 * e.grid.n + 16);
    out.push_str("t,re,im\n");
    for (i, z) in e.samples.iter().enumerate() {
        out.push_str(&format!("{:e},{:e},{:e}\n", e.grid.t(i), z.re, z.im));
    }
    std::fs::write(path, out).map_err(io)
}

/// Reads a `t,re,im` CSV; time must be strictly increasing and uniform.
pub fn load_csv(path: &Path) -> Result<Envelope> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Envelope> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(format!("missing column '{name}'")))
    };
    let (it, ire, iim) = (col("t")?, col("re")?, col("im")?);
    let mut ts = Vec::new();
    let mut zs = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(format!("row {}: {e}", row + 1)))?;
        let field = |i: usize, name: &str| -> Result<f64> {
            let s = rec
                .get(i)
                .ok_or_else(|| Error::Csv(format!("row {}: missing '{name}'", row + 1)))?;
            s.parse::<f64>()
                .map_err(|_| Error::Csv(format!("row {}: bad '{name}' value '{s}'", row + 1)))
        };
        ts.push(field(it, "t")?);
        zs.push(C64::new(field(ire, "re")?, field(iim, "im")?));
    }
    if ts.len() < 2 {
        return Err(Error::Csv("need at least two rows".into()));
    }
    let n = ts.len();
    let dt = (ts[n - 1] - ts[0]) / (n - 1) as f64;
    for i in 1..n {
        if !(ts[i] > ts[i - 1]) {
            return Err(Error::Csv(format!("row {}: time not strictly increasing", i + 1)));
        }
        let expect = ts[0] + i as f64 * dt;
        if (ts[i] - expect).abs() > 1e-6 * dt {
            return Err(Error::Csv(format!("row {}: non-uniform time grid", i + 1)));
        }
    }
    Envelope::new(TimeGrid::new(ts[0], dt, n)?, zs)
}
