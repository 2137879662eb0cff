//! Discrete Fourier helpers for period-1 grids.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Forward DFT `X_k = Σ_j v_j e^{-2πijk/n}`.
pub fn dft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT including the `1/n` factor.
pub fn idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let n = buf.len() as f64;
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf.iter_mut().for_each(|c| *c /= n);
    buf
}

/// Signed wavenumber of DFT bin `k` on an `n`-point grid.
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Derivative of the trigonometric interpolant of period-1 samples.
///
/// The Nyquist mode is dropped, so the result is real.
pub fn derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut spec = dft(values);
    for (k, c) in spec.iter_mut().enumerate() {
        if 2 * k == n {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, 2.0 * PI * wavenumber(k, n));
        }
    }
    idft(&spec).into_iter().map(|c| c.re).collect()
}

/// `∫₀ˣ (g − ḡ) ds` at the grid points, where `ḡ` is the mean of the samples.
///
/// Spectrally accurate for smooth periodic `g`; the result is periodic.
pub fn periodic_antiderivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut spec = dft(values);
    spec[0] = Complex64::new(0.0, 0.0);
    for (k, c) in spec.iter_mut().enumerate().skip(1) {
        if 2 * k == n {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, 2.0 * PI * wavenumber(k, n));
        }
    }
    let mut out: Vec<f64> = idft(&spec).into_iter().map(|c| c.re).collect();
    let offset = out[0];
    out.iter_mut().for_each(|v| *v -= offset);
    out
}

/// Real trigonometric interpolant of samples at `j/n`, evaluated anywhere.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nyquist: f64,
    n: usize,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let spec = dft(samples);
        let nf = n as f64;
        let top = (n - 1) / 2;
        let cos = (1..=top).map(|k| 2.0 * spec[k].re / nf).collect();
        let sin = (1..=top).map(|k| -2.0 * spec[k].im / nf).collect();
        let nyquist = if n.is_multiple_of(2) && n > 0 { spec[n / 2].re / nf } else { 0.0 };
        Self { mean: spec[0].re / nf, cos, sin, nyquist, n }
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut acc = self.mean;
        let step = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut rot = step;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a * rot.re + b * rot.im;
            rot *= step;
        }
        if self.nyquist != 0.0 {
            acc += self.nyquist * (PI * self.n as f64 * x).cos();
        }
        acc
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let step = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut rot = step;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            acc += w * (b * rot.re - a * rot.im);
            rot *= step;
        }
        if self.nyquist != 0.0 {
            let w = PI * self.n as f64;
            acc -= self.nyquist * w * (w * x).sin();
        }
        acc
    }
}
