//! CMSE objective and the inner-loop alternating optimization of the receive
//! combiner `w` and the transmit coefficients `a` for a fixed antenna layout.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{hermitian_solve, SquareMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct Combiner {
    pub w: Vec<Complex64>,
}

impl Combiner {
    pub fn zeros(m: usize) -> Self {
        Self {
            w: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `w^H h`
    pub fn project(&self, h: &[Complex64]) -> Complex64 {
        self.w.iter().zip(h).map(|(w, h)| w.conj() * h).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransmitCoeffs {
    pub a: Vec<Complex64>,
    pub power_cap: f64,
}

impl TransmitCoeffs {
    /// Every user at full power with zero phase.
    pub fn full_power(k: usize, power_cap: f64) -> Self {
        Self {
            a: vec![Complex64::new(power_cap.sqrt(), 0.0); k],
            power_cap,
        }
    }

    pub fn respects_cap(&self) -> bool {
        self.a.iter().all(|a| a.norm_sqr() <= self.power_cap + 1e-9)
    }
}

/// Receiver noise variance `σ²` in milliwatts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {variance}"
            )));
        }
        Ok(Self { variance })
    }
}

/// The two terms of the CMSE: signal misalignment and amplified noise.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CmseBreakdown {
    pub misalignment: f64,
    pub noise_term: f64,
}

impl CmseBreakdown {
    pub fn total(&self) -> f64 {
        self.misalignment + self.noise_term
    }
}

fn check_dims(channels: &[Vec<Complex64>], combiner: &Combiner, coeffs: &TransmitCoeffs) -> Result<()> {
    check_len("transmit coefficients vs users", channels.len(), coeffs.a.len())?;
    for h in channels {
        check_len("channel vs combiner length", combiner.w.len(), h.len())?;
    }
    Ok(())
}

/// `Σ_k |a_k w^H h_k - 1|²`
pub fn misalignment(channels: &[Vec<Complex64>], combiner: &Combiner, a: &[Complex64]) -> f64 {
    channels
        .iter()
        .zip(a)
        .map(|(h, a)| (a * combiner.project(h) - 1.0).norm_sqr())
        .sum()
}

/// `Σ_k |a_k w^H h_k - 1|² + σ² ||w||²`
pub fn cmse(
    channels: &[Vec<Complex64>],
    combiner: &Combiner,
    coeffs: &TransmitCoeffs,
    noise: NoiseSpec,
) -> Result<CmseBreakdown> {
    check_dims(channels, combiner, coeffs)?;
    Ok(CmseBreakdown {
        misalignment: misalignment(channels, combiner, &coeffs.a),
        noise_term: noise.variance * combiner.norm_sqr(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean of `|x̂ - x|²` with `CN(0, 1)` user symbols and `CN(0, σ² I)`
/// receiver noise, simulating the received signal directly.
pub fn monte_carlo_cmse<R: Rng + ?Sized>(
    channels: &[Vec<Complex64>],
    combiner: &Combiner,
    coeffs: &TransmitCoeffs,
    noise: NoiseSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    check_dims(channels, combiner, coeffs)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let m = combiner.w.len();
    let cn = |var: f64, rng: &mut R| {
        let sd = (0.5 * var).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(sd * re, sd * im)
    };

    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        for ym in y.iter_mut() {
            *ym = cn(noise.variance, rng);
        }
        let mut target = Complex64::new(0.0, 0.0);
        for (h, a) in channels.iter().zip(&coeffs.a) {
            let s = cn(1.0, rng);
            target += s;
            for (ym, hm) in y.iter_mut().zip(h) {
                *ym += hm * a * s;
            }
        }
        let estimate = combiner.project(&y);
        let err = (estimate - target).norm_sqr();
        sum += err;
        sum_sq += err * err;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
    })
}

/// MMSE combiner for fixed transmit coefficients:
/// `w = (Σ_k |a_k|² h_k h_k^H + σ² I)^{-1} Σ_k a_k h_k`.
pub fn optimal_combiner(
    channels: &[Vec<Complex64>],
    coeffs: &TransmitCoeffs,
    noise: NoiseSpec,
) -> Result<Combiner> {
    let m = channels.first().map_or(0, Vec::len);
    check_dims(channels, &Combiner::zeros(m), coeffs)?;

    let mut system = SquareMatrix::zeros(m);
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    for (h, a) in channels.iter().zip(&coeffs.a) {
        system.add_outer(a.norm_sqr(), h);
        for (r, hm) in rhs.iter_mut().zip(h) {
            *r += a * hm;
        }
    }
    system.add_diagonal(noise.variance);
    Ok(Combiner {
        w: hermitian_solve(&system, &rhs)?,
    })
}

/// Per-user optimal transmit coefficient for a given effective gain `b = w^H h`:
/// invert the gain if the power cap allows, otherwise transmit at full power
/// with the conjugate phase. A zero gain gets full power at zero phase.
pub fn optimal_coefficient(b: Complex64, power_cap: f64) -> Complex64 {
    let amplitude = power_cap.sqrt();
    let magnitude = b.norm();
    if magnitude == 0.0 {
        return Complex64::new(amplitude, 0.0);
    }
    Complex64::from_polar(amplitude.min(1.0 / magnitude), -b.arg())
}

pub fn optimal_coeffs(
    channels: &[Vec<Complex64>],
    combiner: &Combiner,
    power_cap: f64,
) -> Result<TransmitCoeffs> {
    if !(power_cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power cap must be positive, got {power_cap}"
        )));
    }
    for h in channels {
        check_len("channel vs combiner length", combiner.w.len(), h.len())?;
    }
    Ok(TransmitCoeffs {
        a: channels
            .iter()
            .map(|h| optimal_coefficient(combiner.project(h), power_cap))
            .collect(),
        power_cap,
    })
}

/// Stopping rule of the inner alternating loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    /// Absolute CMSE decrement below which the loop stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "inner loop needs tol > 0 and max_iter >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolution {
    pub combiner: Combiner,
    pub coeffs: TransmitCoeffs,
    pub cmse: f64,
    pub breakdown: CmseBreakdown,
    pub iterations: usize,
    /// CMSE after each `(w, a)` update, starting with the warm-start value
    /// when one was supplied.
    pub trace: Vec<f64>,
}

/// Alternates the closed-form combiner and coefficient updates until the
/// CMSE decrement drops below `cfg.tol`.
///
/// Without a warm start every user begins at full power. A warm start
/// contributes its coefficients; its combiner only fixes the reference
/// CMSE that the first decrement is measured against. An update that does
/// not lower the CMSE ends the loop and the previous iterate is returned, so
/// the trace never increases.
pub fn inner_loop(
    channels: &[Vec<Complex64>],
    noise: NoiseSpec,
    power_cap: f64,
    init: Option<(&Combiner, &TransmitCoeffs)>,
    cfg: &InnerConfig,
) -> Result<InnerSolution> {
    cfg.validate()?;
    if !(power_cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power cap must be positive, got {power_cap}"
        )));
    }
    let k = channels.len();
    let mut trace = Vec::with_capacity(cfg.max_iter + 1);
    // Previous iterate, returned instead of an update that rounding made
    // slightly worse.
    let mut accepted: Option<(Combiner, CmseBreakdown)> = None;
    let mut coeffs = match init {
        Some((w0, a0)) => {
            let mut a0 = a0.clone();
            a0.power_cap = power_cap;
            let start = cmse(channels, w0, &a0, noise)?;
            trace.push(start.total());
            accepted = Some((w0.clone(), start));
            a0
        }
        None => TransmitCoeffs::full_power(k, power_cap),
    };

    let mut iterations = 0;
    loop {
        let combiner = optimal_combiner(channels, &coeffs, noise)?;
        let next = optimal_coeffs(channels, &combiner, power_cap)?;
        iterations += 1;
        let breakdown = cmse(channels, &combiner, &next, noise)?;
        let current = breakdown.total();
        if !current.is_finite() {
            return Err(Error::NonFinite("inner-loop CMSE"));
        }
        let previous = accepted.as_ref().map_or(f64::INFINITY, |(_, b)| b.total());
        if current > previous {
            let (combiner, breakdown) = accepted.expect("finite previous CMSE implies an iterate");
            return Ok(InnerSolution {
                combiner,
                coeffs,
                cmse: previous,
                breakdown,
                iterations,
                trace,
            });
        }
        coeffs = next;
        trace.push(current);
        if previous - current < cfg.tol || iterations >= cfg.max_iter {
            return Ok(InnerSolution {
                combiner,
                coeffs,
                cmse: current,
                breakdown,
                iterations,
                trace,
            });
        }
        accepted = Some((combiner, breakdown));
    }
}
