//! Third-order Butterworth low-pass, designed digitally via the bilinear
//! transform with frequency prewarping and applied as a causal direct-form II
//! transposed filter.

use super::SignalError;
use crate::scalar::Real;

/// Filter order is fixed; the analog prototype polynomial below is the
/// third-order Butterworth denominator.
pub const BUTTERWORTH_ORDER: usize = 3;

/// Coefficients of the order-3 analog prototype `s^3 + 2s^2 + 2s + 1`,
/// ascending in `s`.
const PROTOTYPE: [f64; 4] = [1.0, 2.0, 2.0, 1.0];

/// Design parameters for the low-pass. The cutoff must sit strictly below
/// Nyquist for the bilinear transform to be defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButterworthSpec<S> {
    cutoff_hz: S,
    sample_rate_hz: S,
}

impl<S: Real> ButterworthSpec<S> {
    pub fn new(cutoff_hz: S, sample_rate_hz: S) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > S::zero()) {
            return Err(SignalError::BadRate {
                hz: sample_rate_hz.to_f64_lossy(),
            });
        }
        let nyquist = sample_rate_hz / S::c(2.0);
        if !(cutoff_hz.is_finite() && cutoff_hz > S::zero() && cutoff_hz < nyquist) {
            return Err(SignalError::BadCutoff {
                cutoff_hz: cutoff_hz.to_f64_lossy(),
                nyquist_hz: nyquist.to_f64_lossy(),
            });
        }
        Ok(Self {
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn cutoff_hz(&self) -> S {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> S {
        self.sample_rate_hz
    }

    /// Builds the digital filter. The analog prototype is scaled to the
    /// prewarped cutoff `w = 2*fs*tan(pi*fc/fs)` and mapped through
    /// `s = 2*fs*(z-1)/(z+1)`, which pins the -3 dB point exactly at `fc`.
    pub fn design(&self) -> LowpassFilter<S> {
        let fs = self.sample_rate_hz;
        let k = S::c(2.0) * fs;
        let w = k * (S::c(std::f64::consts::PI) * self.cutoff_hz / fs).tan();

        // den(z) = sum_j proto[j] * w^(3-j) * K^j * (z-1)^j * (z+1)^(3-j),
        // num(z) = w^3 * (z+1)^3, both ascending in z.
        let mut den = [S::zero(); 4];
        for (j, &p) in PROTOTYPE.iter().enumerate() {
            let scale = S::c(p) * w.powi((BUTTERWORTH_ORDER - j) as i32) * k.powi(j as i32);
            let term = poly_mul(&binomial_pow(-S::one(), j), &binomial_pow(S::one(), 3 - j));
            for (d, t) in den.iter_mut().zip(term) {
                *d += scale * t;
            }
        }
        let num: Vec<S> = binomial_pow(S::one(), 3)
            .into_iter()
            .map(|c| c * w.powi(3))
            .collect();

        // Convert to z^-1 form normalized by the leading denominator term.
        let lead = den[3];
        let mut b = [S::zero(); 4];
        let mut a = [S::zero(); 4];
        for i in 0..4 {
            b[i] = num[3 - i] / lead;
            a[i] = den[3 - i] / lead;
        }
        LowpassFilter {
            b,
            a,
            sample_rate_hz: fs,
        }
    }
}

/// Expands `(z + c)^n` as coefficients ascending in `z`.
fn binomial_pow<S: Real>(c: S, n: usize) -> Vec<S> {
    let mut poly = vec![S::one()];
    for _ in 0..n {
        poly = poly_mul(&poly, &[c, S::one()]);
    }
    poly
}

fn poly_mul<S: Real>(p: &[S], q: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); p.len() + q.len() - 1];
    for (i, &pi) in p.iter().enumerate() {
        for (j, &qj) in q.iter().enumerate() {
            out[i + j] += pi * qj;
        }
    }
    out
}

/// A realized low-pass: `y[n] = sum b_i x[n-i] - sum a_i y[n-i]`, `a[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowpassFilter<S> {
    b: [S; 4],
    a: [S; 4],
    sample_rate_hz: S,
}

impl<S: Real> LowpassFilter<S> {
    pub fn coefficients(&self) -> (&[S; 4], &[S; 4]) {
        (&self.b, &self.a)
    }

    /// Causal forward pass (direct form II transposed). Output length equals
    /// input length. The state starts at the steady state for a constant
    /// input equal to the first sample, so a segment that opens on an
    /// already-steady signal shows no spin-up artifact; the initial state is
    /// linear in that sample, which keeps the whole pass linear.
    pub fn apply(&self, input: &[S]) -> Vec<S> {
        let [b0, b1, b2, b3] = self.b;
        let [_, a1, a2, a3] = self.a;
        let mut out = Vec::with_capacity(input.len());
        let Some(&x0) = input.first() else {
            return out;
        };
        let y0 = self.dc_gain() * x0;
        let mut s3 = b3 * x0 - a3 * y0;
        let mut s2 = b2 * x0 - a2 * y0 + s3;
        let mut s1 = b1 * x0 - a1 * y0 + s2;
        for &x in input {
            let y = b0 * x + s1;
            s1 = b1 * x - a1 * y + s2;
            s2 = b2 * x - a2 * y + s3;
            s3 = b3 * x - a3 * y;
            out.push(y);
        }
        out
    }

    /// Gain at zero frequency; unity by construction up to rounding.
    pub fn dc_gain(&self) -> S {
        let num: S = self.b.iter().copied().sum();
        let den: S = self.a.iter().copied().sum();
        num / den
    }

    /// Magnitude of the frequency response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: S) -> S {
        let omega = S::c(std::f64::consts::TAU) * freq_hz / self.sample_rate_hz;
        let eval = |coef: &[S; 4]| {
            let mut re = S::zero();
            let mut im = S::zero();
            for (k, &c) in coef.iter().enumerate() {
                let phase = omega * S::c(k as f64);
                re += c * phase.cos();
                im -= c * phase.sin();
            }
            (re * re + im * im).sqrt()
        };
        eval(&self.b) / eval(&self.a)
    }
}
