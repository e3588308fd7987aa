use std::cell::RefCell;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::domain::Zone;
use crate::error::{Error, Result};

pub const ETA_EZ: f64 = -2.05;
pub const DELTA_ETA: f64 = 1.0;
pub const ETA_PZ: f64 = ETA_EZ - DELTA_ETA;

pub const N_SUMMARIES: usize = 10;
pub const MIN_SERIES_LEN: usize = 64;

/// Zone of an excitability value. Boundaries belong to the lower zone.
pub fn classify_zone(eta: f64) -> Zone {
    if eta > ETA_EZ {
        Zone::Epileptogenic
    } else if eta > ETA_PZ {
        Zone::Propagation
    } else {
        Zone::Healthy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpileptorParams {
    pub eta: f64,
    pub tau: f64,
    pub x_init: f64,
    pub z_init: f64,
}

impl EpileptorParams {
    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        match *theta {
            [eta, tau, x_init, z_init] => Ok(EpileptorParams { eta, tau, x_init, z_init }),
            _ => Err(Error::Dimension {
                what: "Epileptor parameters",
                found: theta.len(),
                expected: 4,
            }),
        }
    }
}

/// Reduced two-variable Epileptor, Euler-integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct EpileptorModel {
    pub input_current: f64,
    pub step: f64,
    pub steps: usize,
    pub obs_noise_std: f64,
}

impl Default for EpileptorModel {
    fn default() -> Self {
        EpileptorModel {
            input_current: 3.1,
            step: 0.05,
            steps: 2000,
            obs_noise_std: 0.1,
        }
    }
}

impl EpileptorModel {
    /// Noise-free `x(t)` after each Euler step.
    pub fn trajectory(&self, p: &EpileptorParams) -> Result<Vec<f64>> {
        if !(p.tau > 0.0) || ![p.eta, p.tau, p.x_init, p.z_init].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("invalid Epileptor parameters {p:?}")));
        }
        super::record_call();
        let (mut x, mut z) = (p.x_init, p.z_init);
        let h = self.step;
        let mut out = Vec::with_capacity(self.steps);
        for k in 0..self.steps {
            let dx = 1.0 - x * x * x - 2.0 * x * x - z + self.input_current;
            let dz = (4.0 * (x - p.eta) - z) / p.tau;
            x += h * dx;
            z += h * dz;
            if !(x.is_finite() && z.is_finite()) || x.abs() > 1e6 || z.abs() > 1e6 {
                return Err(Error::Integration(format!("Epileptor overflow at step {k}")));
            }
            out.push(x);
        }
        Ok(out)
    }

    /// Trajectory with Gaussian observation noise on `x`.
    pub fn simulate<R: Rng + ?Sized>(&self, p: &EpileptorParams, rng: &mut R) -> Result<Vec<f64>> {
        let mut xs = self.trajectory(p)?;
        for v in &mut xs {
            let e: f64 = StandardNormal.sample(rng);
            *v += self.obs_noise_std * e;
        }
        Ok(xs)
    }
}

pub fn simulate_epileptor<R: Rng + ?Sized>(p: &EpileptorParams, rng: &mut R) -> Result<Vec<f64>> {
    EpileptorModel::default().simulate(p, rng)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Ten summary statistics in fixed order: mean, median, std, skewness,
/// excess kurtosis, 6th standardized moment, mean moving RMS (window n/32),
/// onset fraction (first `x > 0`, 1.0 if never), peak-to-peak, and the
/// largest non-DC periodogram value `|X_k|^2 / n`.
pub fn summarize_epileptor(series: &[f64]) -> Result<[f64; N_SUMMARIES]> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::invalid(format!("series of length {n} is shorter than {MIN_SERIES_LEN}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Epileptor series".into()));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4, mut m6) = (0.0, 0.0, 0.0, 0.0);
    for &v in series {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        m6 += d2 * d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    m6 /= nf;
    let std = m2.sqrt();
    let (skew, kurt, sixth) = if std > 1e-12 {
        (m3 / (m2 * std), m4 / (m2 * m2) - 3.0, m6 / (m2 * m2 * m2))
    } else {
        (0.0, 0.0, 0.0)
    };

    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let amplitude = sorted[n - 1] - sorted[0];

    let window = n / 32;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in series {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let positions = n - window + 1;
    let envelope = (0..positions)
        .map(|i| ((prefix[i + window] - prefix[i]) / window as f64).max(0.0).sqrt())
        .sum::<f64>()
        / positions as f64;

    let onset = series.iter().position(|&v| v > 0.0).map_or(1.0, |i| i as f64 / nf);

    let mut spectrum: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut spectrum));
    let spectral = spectrum[1..=n / 2].iter().map(|c| c.norm_sqr() / nf).fold(0.0, f64::max);

    Ok([mean, median, std, skew, kurt, sixth, envelope, onset, amplitude, spectral])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::seeded_rng;

    fn params(eta: f64, tau: f64) -> EpileptorParams {
        EpileptorParams {
            eta,
            tau,
            x_init: -2.0,
            z_init: 3.0,
        }
    }

    #[test]
    fn zone_thresholds() {
        assert_eq!(classify_zone(-1.0), Zone::Epileptogenic);
        assert_eq!(classify_zone(-2.5), Zone::Propagation);
        assert_eq!(classify_zone(-4.0), Zone::Healthy);
        assert_eq!(classify_zone(-2.05), Zone::Propagation);
        assert_eq!(classify_zone(-2.05 + 1e-12), Zone::Epileptogenic);
        assert_eq!(classify_zone(-3.05), Zone::Healthy);
        assert_eq!(classify_zone(-3.05 + 1e-12), Zone::Propagation);
    }

    #[test]
    fn healthy_region_settles() {
        let m = EpileptorModel::default();
        for tau in [10.0, 30.0, 50.0] {
            let xs = m.trajectory(&params(-4.0, tau)).unwrap();
            let tail = &xs[xs.len() * 9 / 10..];
            let max_step = tail.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            assert!(max_step < 1e-3, "tau={tau}: {max_step}");
        }
    }

    fn mean_crossings(xs: &[f64]) -> usize {
        let half = &xs[xs.len() / 2..];
        let mean = half.iter().sum::<f64>() / half.len() as f64;
        half.windows(2).filter(|w| (w[0] - mean).signum() != (w[1] - mean).signum()).count()
    }

    #[test]
    fn epileptogenic_region_oscillates() {
        let m = EpileptorModel::default();
        let xs = m.trajectory(&params(-1.0, 10.0)).unwrap();
        assert!(mean_crossings(&xs) >= 4);
        // Inside the relaxation band the oscillation persists at full amplitude.
        let xs = m.trajectory(&params(-1.5, 10.0)).unwrap();
        assert!(mean_crossings(&xs) >= 4);
        let tail = &xs[xs.len() * 3 / 4..];
        let span = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
        assert!(span > 1.0, "{span}");
    }

    #[test]
    fn same_seed_same_series() {
        let p = params(-2.5, 20.0);
        let a = simulate_epileptor(&p, &mut seeded_rng(9)).unwrap();
        let b = simulate_epileptor(&p, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_series_summaries() {
        for c in [-1.5, 0.7] {
            let s = summarize_epileptor(&vec![c; 256]).unwrap();
            assert!((s[0] - c).abs() < 1e-12);
            assert!((s[1] - c).abs() < 1e-12);
            assert!(s[2].abs() < 1e-12);
            assert_eq!(s[8], 0.0);
            assert_eq!(s[7], if c > 0.0 { 0.0 } else { 1.0 });
            assert!((s[6] - c.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn sinusoid_power_sits_in_its_bin() {
        let n = 512;
        let k0 = 12;
        let amp = 2.0;
        let xs: Vec<f64> = (0..n).map(|i| amp * (2.0 * std::f64::consts::PI * (k0 * i) as f64 / n as f64).sin()).collect();
        let s = summarize_epileptor(&xs).unwrap();
        // |X_k0| = n * amp / 2.
        let expected = (n as f64 * amp / 2.0).powi(2) / n as f64;
        assert!((s[9] - expected).abs() < 1e-6 * expected);
        assert!(s[0].abs() < 1e-12);
        assert!((s[2] - amp / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn noise_free_summaries_do_not_depend_on_seed() {
        let m = EpileptorModel {
            obs_noise_std: 0.0,
            ..Default::default()
        };
        let p = params(-1.5, 20.0);
        let a = summarize_epileptor(&m.simulate(&p, &mut seeded_rng(1)).unwrap()).unwrap();
        let b = summarize_epileptor(&m.simulate(&p, &mut seeded_rng(2)).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(summarize_epileptor(&[0.0; 63]).is_err());
    }
}
