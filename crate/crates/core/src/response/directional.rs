use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lubrication::wrap_angle;

/// Components smaller than this fraction of the dominant one are treated as
/// absent when forming the forward/backward ratio.
pub const RATIO_FLOOR: f64 = 1e-3;

/// Whirl components at ±1X.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalResponse {
    /// |Z₊| [m].
    pub forward_amplitude: f64,
    /// ∠Z₊ [rad], referenced to the first sample of the window.
    pub forward_phase: f64,
    /// |Z₋| [m].
    pub backward_amplitude: f64,
    /// ∠Z₋ [rad].
    pub backward_phase: f64,
    /// Whole revolutions in the analysis window.
    pub revolutions: usize,
    pub samples: usize,
}

impl DirectionalResponse {
    /// `|Z₊|/|Z₋|` with the backward amplitude floored at [`RATIO_FLOOR`] of
    /// the dominant component; the flag is set when the floor was applied.
    pub fn fb_floored(&self) -> (f64, bool) {
        let floor = RATIO_FLOOR * self.forward_amplitude.max(self.backward_amplitude);
        if self.backward_amplitude < floor || self.backward_amplitude == 0.0 {
            (self.forward_amplitude / floor.max(f64::MIN_POSITIVE), true)
        } else {
            (self.forward_amplitude / self.backward_amplitude, false)
        }
    }
}

/// Response parameters used for identification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseParameters {
    /// Forward-to-backward amplitude ratio.
    pub fb: f64,
    /// Orbit angle: circular mean of the forward and backward phases, in (−π, π].
    pub phi: f64,
}

/// `fb = |Z₊|/|Z₋|` and `φ = mean(∠Z₊, ∠Z₋)`.
pub fn response_parameters(response: &DirectionalResponse) -> Result<ResponseParameters> {
    let (fb, floored) = response.fb_floored();
    if floored {
        return Err(Error::RatioOverflow {
            backward: response.backward_amplitude,
            floor: RATIO_FLOOR * response.forward_amplitude.max(response.backward_amplitude),
        });
    }
    Ok(ResponseParameters {
        fb,
        phi: circular_mean(response.forward_phase, response.backward_phase),
    })
}

/// Mean of two angles along the shorter arc between them, reduced to (−π, π].
///
/// `(π/4, −π/4) → 0` and `(π − 0.1, −π + 0.1) → π`.
pub fn circular_mean(a: f64, b: f64) -> f64 {
    let m = a + 0.5 * wrap_angle(b - a);
    let r = wrap_angle(m);
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Longest window, in samples, not exceeding `available` that spans a whole
/// number of revolutions exactly (to 1e-9 of a revolution). If no such window
/// exists the nearest whole-revolution length is used instead.
pub fn analysis_window(available: usize, speed: f64, dt: f64) -> Result<usize> {
    if !(speed != 0.0 && speed.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(
            "analysis needs a non-zero speed and positive time step".into(),
        ));
    }
    let revs_per_sample = speed.abs() / (2.0 * PI) * dt;
    let max_revs = (available as f64 * revs_per_sample + 1e-9).floor() as usize;
    if max_revs < 2 {
        return Err(Error::InsufficientData(format!(
            "{available} samples hold fewer than 2 revolutions"
        )));
    }
    for r in (2..=max_revs).rev().take(5000) {
        let n = (r as f64 / revs_per_sample).round() as usize;
        if n <= available && (n as f64 * revs_per_sample - r as f64).abs() <= 1e-9 * r as f64 {
            return Ok(n);
        }
    }
    Ok(((max_revs as f64 / revs_per_sample).round() as usize).min(available))
}

/// DFT bins of `Z = V + iW` nearest to `+Ω` and `−Ω`, normalised so that a
/// pure phasor `A e^{iΩt}` gives `A`.
pub(crate) fn phasors(v: &[f64], w: &[f64], speed: f64, dt: f64) -> (Complex<f64>, Complex<f64>) {
    let n = v.len();
    let k = (speed / (2.0 * PI) * dt * n as f64).round();
    let sign = k.signum();
    let k = k.abs() as i64;
    let mut fwd = Complex::new(0.0, 0.0);
    let mut bwd = Complex::new(0.0, 0.0);
    for (j, (&x, &y)) in v.iter().zip(w).enumerate() {
        // reduce the bin phase modulo n before scaling to keep it exact
        // the same twiddles serve ±Ω, so reversing the speed swaps the
        // components exactly
        let m = ((k * j as i64) % n as i64) as f64;
        let (s, c) = (2.0 * PI * m / n as f64).sin_cos();
        let s = sign * s;
        let z = Complex::new(x, y);
        fwd += z * Complex::new(c, -s);
        bwd += z * Complex::new(c, s);
    }
    (fwd / n as f64, bwd / n as f64)
}

/// Forward and backward whirl components of the longest integer-period
/// window at the end of the signals.
pub fn directional_components(
    v: &[f64],
    w: &[f64],
    speed: f64,
    dt: f64,
) -> Result<DirectionalResponse> {
    if v.len() != w.len() {
        return Err(Error::InvalidInput(
            "V and W histories differ in length".into(),
        ));
    }
    let n = analysis_window(v.len(), speed, dt)?;
    let start = v.len() - n;
    let (fwd, bwd) = phasors(&v[start..], &w[start..], speed, dt);
    Ok(DirectionalResponse {
        forward_amplitude: fwd.norm(),
        forward_phase: fwd.arg(),
        backward_amplitude: bwd.norm(),
        backward_phase: bwd.arg(),
        revolutions: (n as f64 * speed.abs() / (2.0 * PI) * dt).round() as usize,
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumLine {
    pub frequency_hz: f64,
    pub value: Complex<f64>,
}

/// Full spectrum of `Z = V + iW`, normalised by the sample count and ordered
/// from negative to positive frequency.
pub fn spectrum(v: &[f64], w: &[f64], dt: f64) -> Vec<SpectrumLine> {
    let n = v.len().min(w.len());
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = v.iter().zip(w).map(|(&x, &y)| Complex::new(x, y)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut lines: Vec<SpectrumLine> = buf
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            let signed = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n as f64
            };
            SpectrumLine {
                frequency_hz: signed / (n as f64 * dt),
                value: x * scale,
            }
        })
        .collect();
    lines.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    lines
}

pub fn write_spectrum_csv<W: Write>(mut out: W, lines: &[SpectrumLine]) -> std::io::Result<()> {
    writeln!(out, "freq_hz,real,imag,magnitude")?;
    for l in lines {
        writeln!(
            out,
            "{:.6},{:e},{:e},{:e}",
            l.frequency_hz,
            l.value.re,
            l.value.im,
            l.value.norm()
        )?;
    }
    Ok(())
}
