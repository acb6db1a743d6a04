//! Butterworth bandpass design and zero-phase filtering.
//!
//! Design route: analog lowpass prototype poles → lowpass-to-bandpass
//! transform in zero/pole/gain form → bilinear transform with frequency
//! prewarping → expansion to transfer-function coefficients. Application is
//! forward-backward (zero phase) with odd-reflection edge padding of three
//! times the digital filter order and steady-state initial conditions.

use rustfft::num_complex::Complex64;

use crate::scalar::Scalar;

use super::{PpgTrace, SignalError};

/// Bandpass design parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    pub fs: f64,
}

impl BandpassSpec {
    pub fn new(low_hz: f64, high_hz: f64, order: usize, fs: f64) -> Result<Self, SignalError> {
        if order < 1 {
            return Err(SignalError::InvalidFilterOrder);
        }
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
            return Err(SignalError::InvalidBandEdges);
        }
        Ok(Self {
            low_hz,
            high_hz,
            order,
            fs,
        })
    }

    /// The 0.75-2.5 Hz second-order band used for adult heart rates.
    pub fn heart_rate(fs: f64) -> Result<Self, SignalError> {
        Self::new(0.75, 2.5, 2, fs)
    }
}

/// Digital filter as transfer-function coefficients, `a[0]` normalized to 1.
#[derive(Debug, Clone)]
pub struct DigitalFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl DigitalFilter {
    /// Magnitude of the frequency response at `f_hz`.
    pub fn magnitude_at(&self, f_hz: f64, fs: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * f_hz / fs;
        let z_inv = Complex64::new(omega.cos(), -omega.sin());
        let eval = |coeffs: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &c in coeffs.iter().rev() {
                acc = acc * z_inv + c;
            }
            acc
        };
        (eval(&self.b) / eval(&self.a)).norm()
    }
}

/// Design the digital Butterworth bandpass for `spec` (2·order poles).
pub fn design_bandpass(spec: &BandpassSpec) -> Result<DigitalFilter, SignalError> {
    // Re-validate: specs can be built with struct syntax.
    let spec = BandpassSpec::new(spec.low_hz, spec.high_hz, spec.order, spec.fs)?;
    let n = spec.order;
    let c = 2.0 * spec.fs; // bilinear constant

    // Prewarped analog band edges.
    let warp = |f: f64| c * (std::f64::consts::PI * f / spec.fs).tan();
    let wl = warp(spec.low_hz);
    let wh = warp(spec.high_hz);
    let w0 = (wl * wh).sqrt();
    let bw = wh - wl;

    // Analog prototype poles on the unit circle, left half-plane.
    let proto: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * (2.0 * k as f64 + n as f64 + 1.0) / (2.0 * n as f64);
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect();

    // Lowpass → bandpass: each pole splits in two; n zeros appear at s = 0.
    let mut analog_poles = Vec::with_capacity(2 * n);
    for &p in &proto {
        let shifted = p * (bw / 2.0);
        let disc = (shifted * shifted - Complex64::new(w0 * w0, 0.0)).sqrt();
        analog_poles.push(shifted + disc);
        analog_poles.push(shifted - disc);
    }
    let analog_gain = bw.powi(n as i32);

    // Bilinear transform. Analog zeros at the origin land on z = 1; the n
    // zeros at infinity land on z = -1.
    let cc = Complex64::new(c, 0.0);
    let digital_poles: Vec<Complex64> = analog_poles.iter().map(|&p| (cc + p) / (cc - p)).collect();
    let mut digital_zeros = vec![Complex64::new(1.0, 0.0); n];
    digital_zeros.extend(vec![Complex64::new(-1.0, 0.0); n]);

    // Gain: k · Π(c − z_analog) / Π(c − p_analog), zeros all at the origin.
    let num: Complex64 = Complex64::new(c.powi(n as i32), 0.0);
    let den: Complex64 = analog_poles
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * (cc - p));
    let digital_gain = analog_gain * (num / den).re;

    let b: Vec<f64> = poly_from_roots(&digital_zeros)
        .iter()
        .map(|z| z.re * digital_gain)
        .collect();
    let a: Vec<f64> = poly_from_roots(&digital_poles).iter().map(|z| z.re).collect();
    Ok(DigitalFilter { b, a })
}

/// Expand `Π (x − r_i)` into descending-power coefficients.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        coeffs.push(Complex64::new(0.0, 0.0));
        for i in (1..coeffs.len()).rev() {
            let prev = coeffs[i - 1];
            coeffs[i] -= r * prev;
        }
    }
    coeffs
}

/// Zero-phase bandpass: design for `spec`, then filter forward and backward
/// with odd-reflection padding. Output length equals input length.
pub fn butterworth_bandpass<S: Scalar>(
    trace: &PpgTrace<S>,
    spec: &BandpassSpec,
) -> Result<PpgTrace<S>, SignalError> {
    if (spec.fs - trace.fs()).abs() > 1e-9 {
        // The design must match the data rate; treat a mismatch as bad edges
        // relative to the trace's Nyquist.
        return Err(SignalError::InvalidBandEdges);
    }
    let filter = design_bandpass(spec)?;
    let filtered = filtfilt(&filter, trace.samples());
    Ok(trace.with_samples(filtered))
}

/// Forward-backward application of `filter` with odd-reflection padding.
pub fn filtfilt<S: Scalar>(filter: &DigitalFilter, x: &[S]) -> Vec<S> {
    let b: Vec<S> = filter.b.iter().map(|&v| S::from_f64_c(v)).collect();
    let a: Vec<S> = filter.a.iter().map(|&v| S::from_f64_c(v)).collect();
    let n = x.len();
    let pad = (3 * (b.len() - 1)).min(n.saturating_sub(1));

    // Odd reflection about the first and last samples.
    let two = S::from_f64_c(2.0);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(two * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(two * x[n - 1] - x[n - 1 - i]);
    }

    let zi = steady_state_conditions(&filter.b, &filter.a);
    let zi_s: Vec<S> = zi.iter().map(|&v| S::from_f64_c(v)).collect();

    let forward = lfilter(&b, &a, &ext, &scale_state(&zi_s, ext[0]));
    let mut rev: Vec<S> = forward.into_iter().rev().collect();
    let back = lfilter(&b, &a, &rev, &scale_state(&zi_s, rev[0]));
    rev = back.into_iter().rev().collect();

    rev[pad..pad + n].to_vec()
}

fn scale_state<S: Scalar>(zi: &[S], x0: S) -> Vec<S> {
    zi.iter().map(|&z| z * x0).collect()
}

/// Direct-form II transposed IIR filter with initial state `zi`.
fn lfilter<S: Scalar>(b: &[S], a: &[S], x: &[S], zi: &[S]) -> Vec<S> {
    let order = b.len() - 1;
    let mut z = zi.to_vec();
    debug_assert_eq!(z.len(), order);
    let mut y = Vec::with_capacity(x.len());
    for &xm in x {
        let ym = b[0] * xm + z[0];
        for i in 0..order - 1 {
            z[i] = b[i + 1] * xm + z[i + 1] - a[i + 1] * ym;
        }
        z[order - 1] = b[order] * xm - a[order] * ym;
        y.push(ym);
    }
    y
}

/// Steady-state filter state for a unit step input, so that filtering a
/// constant produces no transient.
fn steady_state_conditions(b: &[f64], a: &[f64]) -> Vec<f64> {
    let n = b.len() - 1;
    // Solve (I − Cᵀ)·zi = B with C the companion matrix of `a` and
    // B[i] = b[i+1] − a[i+1]·b[0].
    let mut m = vec![vec![0.0f64; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    // Companion transpose: first column −a[1..], ones on the superdiagonal.
    for i in 0..n {
        m[i][0] += a[i + 1];
        if i + 1 < n {
            m[i][i + 1] -= 1.0;
        }
    }
    let mut rhs: Vec<f64> = (0..n).map(|i| b[i + 1] - a[i + 1] * b[0]).collect();

    // Small dense solve with partial pivoting.
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            let (pivot_rows, rest) = m.split_at_mut(row);
            let pivot = &pivot_rows[col];
            for (a, b) in rest[0][col..n].iter_mut().zip(&pivot[col..n]) {
                *a -= f * b;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut zi = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = rhs[row];
        for (coef, z) in m[row][row + 1..n].iter().zip(&zi[row + 1..n]) {
            v -= coef * z;
        }
        zi[row] = v / m[row][row];
    }
    zi
}
