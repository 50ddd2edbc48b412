//! Welch-method power spectral density of force time series.
//!
//! Overlapping windowed segments, averaged one-sided periodograms with the
//! standard window power normalization, frequency axis in Strouhal units.

use crate::error::{Error, Result};

/// Window functions for the segment periodograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Periodic Hamming window (the referenced routine's default).
    Hamming,
    /// Periodic Hann window.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Hamming => "hamming",
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(WindowKind::Hamming),
            "hann" => Ok(WindowKind::Hann),
            "rectangular" => Ok(WindowKind::Rectangular),
            _ => Err(Error::Config(format!(
                "unknown window `{s}` (hamming, hann, rectangular)"
            ))),
        }
    }

    fn values(&self, n: usize) -> Vec<f64> {
        let tau = std::f64::consts::TAU;
        (0..n)
            .map(|j| {
                let phase = tau * j as f64 / n as f64;
                match self {
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

/// Welch estimator configuration.
#[derive(Debug, Clone, Copy)]
pub struct PsdConfig {
    pub segment_length: usize,
    /// Fraction of a segment shared with its successor, in [0, 1).
    pub overlap_fraction: f64,
    pub window: WindowKind,
    /// Uniform sampling interval of the signal.
    pub dt: f64,
}

impl PsdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_length < 2 {
            return Err(Error::Config(format!(
                "segment length must be at least 2, got {}",
                self.segment_length
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap fraction must lie in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!(
                "sampling interval must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// One-sided power spectral density on a Strouhal frequency axis.
#[derive(Debug, Clone)]
pub struct PsdResult {
    /// St = f c / U for the supplied chord and velocity scales.
    pub strouhal: Vec<f64>,
    /// Power per unit frequency (density normalization).
    pub psd: Vec<f64>,
    /// Frequency resolution in Strouhal units.
    pub d_st: f64,
    pub segments: usize,
}

/// In-place complex DFT (not normalized), mixed-radix Cooley-Tukey with a
/// naive fallback for large prime factors.
fn dft(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    if n <= 1 {
        return;
    }
    let p = smallest_prime_factor(n);
    if p == n {
        naive_dft(re, im);
        return;
    }
    let m = n / p;
    // decimate into p sub-sequences
    let mut sub_re = vec![0.0; n];
    let mut sub_im = vec![0.0; n];
    for r in 0..p {
        for j in 0..m {
            sub_re[r * m + j] = re[j * p + r];
            sub_im[r * m + j] = im[j * p + r];
        }
        dft(
            &mut sub_re[r * m..(r + 1) * m],
            &mut sub_im[r * m..(r + 1) * m],
        );
    }
    let tau = std::f64::consts::TAU;
    for k in 0..n {
        let (mut acc_re, mut acc_im) = (0.0, 0.0);
        for r in 0..p {
            let angle = -tau * (k * r) as f64 / n as f64;
            let (s, c) = angle.sin_cos();
            let xr = sub_re[r * m + (k % m)];
            let xi = sub_im[r * m + (k % m)];
            acc_re += xr * c - xi * s;
            acc_im += xr * s + xi * c;
        }
        re[k] = acc_re;
        im[k] = acc_im;
    }
}

fn smallest_prime_factor(n: usize) -> usize {
    if n % 2 == 0 {
        return 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n % f == 0 {
            return f;
        }
        f += 2;
    }
    n
}

fn naive_dft(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    let tau = std::f64::consts::TAU;
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n {
        let (mut ar, mut ai) = (0.0, 0.0);
        for j in 0..n {
            let angle = -tau * ((k * j) % n) as f64 / n as f64;
            let (s, c) = angle.sin_cos();
            ar += re[j] * c - im[j] * s;
            ai += re[j] * s + im[j] * c;
        }
        out_re[k] = ar;
        out_im[k] = ai;
    }
    re.copy_from_slice(&out_re);
    im.copy_from_slice(&out_im);
}

/// Welch power spectral density of a uniformly sampled signal.
///
/// The frequency axis is converted to Strouhal numbers St = f chord / u_ref.
pub fn welch_psd(signal: &[f64], config: &PsdConfig, chord: f64, u_ref: f64) -> Result<PsdResult> {
    config.validate()?;
    let len = config.segment_length;
    if signal.len() < len {
        return Err(Error::InsufficientData(format!(
            "signal has {} samples, shorter than one segment of {len}",
            signal.len()
        )));
    }
    let overlap = (config.overlap_fraction * len as f64).floor() as usize;
    let step = (len - overlap).max(1);
    let window = config.window.values(len);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fs = 1.0 / config.dt;
    let n_bins = len / 2 + 1;
    let mut psd = vec![0.0f64; n_bins];
    let mut segments = 0usize;
    let mut re = vec![0.0f64; len];
    let mut im = vec![0.0f64; len];
    let mut start = 0usize;
    while start + len <= signal.len() {
        for j in 0..len {
            re[j] = signal[start + j] * window[j];
            im[j] = 0.0;
        }
        dft(&mut re, &mut im);
        for (k, p) in psd.iter_mut().enumerate() {
            let mag2 = re[k] * re[k] + im[k] * im[k];
            // one-sided density: double everything except DC and Nyquist
            let one_sided = if k == 0 || (len % 2 == 0 && k == len / 2) {
                1.0
            } else {
                2.0
            };
            *p += one_sided * mag2 / (fs * window_power);
        }
        segments += 1;
        start += step;
    }
    for p in &mut psd {
        *p /= segments as f64;
    }
    let df = fs / len as f64;
    let st_scale = chord / u_ref;
    Ok(PsdResult {
        strouhal: (0..n_bins).map(|k| k as f64 * df * st_scale).collect(),
        psd,
        d_st: df * st_scale,
        segments,
    })
}

/// Check timestamps for uniform sampling (when available) and return dt.
pub fn verify_uniform_sampling(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two samples to determine the sampling interval".into(),
        ));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        let d = w[1] - w[0];
        if (d - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
            return Err(Error::Sampling(format!(
                "non-uniform sampling detected: intervals {dt} and {d}"
            )));
        }
    }
    Ok(dt)
}

/// The `k` most prominent local maxima of a PSD, sorted by power.
pub fn dominant_peaks(result: &PsdResult, k: usize) -> Result<Vec<(f64, f64)>> {
    if k == 0 {
        return Err(Error::Config("peak count must be at least 1".into()));
    }
    let p = &result.psd;
    let mut peaks: Vec<(usize, f64)> = Vec::new(); // (bin, prominence)
    for i in 1..p.len().saturating_sub(1) {
        if !(p[i] > p[i - 1] && p[i] > p[i + 1]) {
            continue;
        }
        // topographic prominence: lowest saddle to higher terrain on each side
        let mut left_min = p[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            left_min = left_min.min(p[j]);
            if p[j] > p[i] {
                break;
            }
        }
        let mut right_min = p[i];
        let mut j = i;
        while j + 1 < p.len() {
            j += 1;
            right_min = right_min.min(p[j]);
            if p[j] > p[i] {
                break;
            }
        }
        peaks.push((i, p[i] - left_min.max(right_min)));
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(k);
    let mut out: Vec<(f64, f64)> = peaks
        .into_iter()
        .map(|(i, _)| (result.strouhal[i], p[i]))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    /// Brute-force DFT oracle.
    fn dft_oracle(x: &[f64]) -> Vec<(f64, f64)> {
        let n = x.len();
        let tau = std::f64::consts::TAU;
        (0..n)
            .map(|k| {
                let mut acc = (0.0, 0.0);
                for (j, &v) in x.iter().enumerate() {
                    let angle = -tau * (k * j) as f64 / n as f64;
                    acc.0 += v * angle.cos();
                    acc.1 += v * angle.sin();
                }
                acc
            })
            .collect()
    }

    #[test]
    fn mixed_radix_dft_matches_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [16usize, 60, 100, 17, 250, 125] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut re = x.clone();
            let mut im = vec![0.0; n];
            dft(&mut re, &mut im);
            let oracle = dft_oracle(&x);
            let scale = (n as f64).sqrt();
            for k in 0..n {
                assert!(
                    (re[k] - oracle[k].0).abs() <= 1e-10 * scale,
                    "n={n} k={k}: {} vs {}",
                    re[k],
                    oracle[k].0
                );
                assert!((im[k] - oracle[k].1).abs() <= 1e-10 * scale);
            }
        }
    }

    fn config(len: usize, window: WindowKind, dt: f64) -> PsdConfig {
        PsdConfig {
            segment_length: len,
            overlap_fraction: 0.5,
            window,
            dt,
        }
    }

    #[test]
    fn on_bin_sine_peaks_exactly_at_its_bin() {
        // f0 = m / (L dt) with even m: every 50%-overlapped segment sees the
        // same phase, the peak lands exactly on bin m
        let (len, dt, m) = (256usize, 0.01, 12usize);
        let f0 = m as f64 / (len as f64 * dt);
        let n = len * 4;
        let signal: Vec<f64> = (0..n)
            .map(|i| (std::f64::consts::TAU * f0 * i as f64 * dt).sin())
            .collect();
        let out = welch_psd(&signal, &config(len, WindowKind::Hamming, dt), 1.0, 1.0).unwrap();
        let peak_bin = out
            .psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak_bin, m);
        // expected Strouhal location: f0 * chord / U
        assert!((out.strouhal[peak_bin] - f0).abs() < 1e-12);
        // peak at least 30 dB above the median floor
        let mut sorted = out.psd.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!(out.psd[peak_bin] >= 1e3 * median.max(1e-300));
    }

    #[test]
    fn white_noise_satisfies_parseval() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 1 << 15;
        let signal: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0f64)).collect();
        let mean = signal.iter().sum::<f64>() / n as f64;
        let variance = signal.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let dt = 0.05;
        let out = welch_psd(&signal, &config(1024, WindowKind::Hamming, dt), 1.0, 1.0).unwrap();
        let integral: f64 = out.psd.iter().sum::<f64>() * (1.0 / (1024.0 * dt));
        let rel = (integral - variance).abs() / variance;
        assert!(rel < 0.02, "Parseval mismatch {rel:.4}");
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let signal = vec![3.25f64; 2048];
        let out = welch_psd(
            &signal,
            &config(512, WindowKind::Rectangular, 0.1),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(out.psd[0] > 0.0);
        for (k, &p) in out.psd.iter().enumerate().skip(1) {
            assert!(p <= 1e-20 * out.psd[0], "bin {k} holds {p:.3e}");
        }
    }

    #[test]
    fn rectangular_window_full_period_sine_is_leakage_free() {
        let (len, dt, m) = (200usize, 0.02, 5usize);
        let f0 = m as f64 / (len as f64 * dt);
        let signal: Vec<f64> = (0..len)
            .map(|i| (std::f64::consts::TAU * f0 * i as f64 * dt).sin())
            .collect();
        let out = welch_psd(&signal, &config(len, WindowKind::Rectangular, dt), 1.0, 1.0).unwrap();
        for (k, &p) in out.psd.iter().enumerate() {
            if k == m {
                assert!(p > 0.0);
            } else {
                assert!(p <= 1e-20 * out.psd[m], "leakage at bin {k}: {p:.3e}");
            }
        }
    }

    #[test]
    fn signal_shorter_than_segment_is_an_error() {
        let signal = vec![0.0; 100];
        match welch_psd(&signal, &config(256, WindowKind::Hamming, 0.1), 1.0, 1.0) {
            Err(Error::InsufficientData(_)) => {}
            other => panic!("expected InsufficientData, got {other:?}"),
        }
    }

    #[test]
    fn strouhal_axis_resolution() {
        // d_f = 1 / (L dt); chord and U scale it into Strouhal units
        let out = welch_psd(
            &vec![0.0f64; 1024],
            &config(256, WindowKind::Hamming, 0.5),
            2.0,
            4.0,
        )
        .unwrap();
        let expect = 1.0 / (256.0 * 0.5) * (2.0 / 4.0);
        assert!((out.d_st - expect).abs() < 1e-15);
        assert!((out.strouhal[1] - expect).abs() < 1e-15);
    }

    #[test]
    fn two_tone_peaks_in_power_order() {
        let (len, dt) = (512usize, 0.01);
        let f1 = 8.0 / (len as f64 * dt);
        let f2 = 50.0 / (len as f64 * dt);
        let n = len * 8;
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                0.3 * (std::f64::consts::TAU * f1 * t).sin()
                    + 1.0 * (std::f64::consts::TAU * f2 * t).sin()
            })
            .collect();
        let out = welch_psd(&signal, &config(len, WindowKind::Hamming, dt), 1.0, 1.0).unwrap();
        let peaks = dominant_peaks(&out, 2).unwrap();
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].0 - f2).abs() < 2.0 * out.d_st, "strongest at f2");
        assert!((peaks[1].0 - f1).abs() < 2.0 * out.d_st);
        assert!(peaks[0].1 > peaks[1].1);
    }

    #[test]
    fn monotone_spectrum_has_at_most_one_peak() {
        let result = PsdResult {
            strouhal: (0..10).map(|i| i as f64).collect(),
            psd: (0..10).map(|i| 10.0 - i as f64).collect(),
            d_st: 1.0,
            segments: 1,
        };
        let peaks = dominant_peaks(&result, 3).unwrap();
        assert!(peaks.len() <= 1);
    }

    #[test]
    fn zero_peak_count_rejected() {
        let result = PsdResult {
            strouhal: vec![0.0],
            psd: vec![1.0],
            d_st: 1.0,
            segments: 1,
        };
        assert!(matches!(dominant_peaks(&result, 0), Err(Error::Config(_))));
    }

    #[test]
    fn doubling_segments_halves_estimator_variance() {
        // variance across bins of the white-noise PSD estimate scales ~1/K
        let mut ratios = Vec::new();
        for seed in 0..10u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let long: Vec<f64> = (0..1 << 14).map(|_| rng.random_range(-1.0..1.0f64)).collect();
            let short = &long[..1 << 13];
            let cfg = config(512, WindowKind::Hamming, 0.1);
            let var_of = |sig: &[f64]| {
                let out = welch_psd(sig, &cfg, 1.0, 1.0).unwrap();
                // skip DC/Nyquist edges
                let inner = &out.psd[1..out.psd.len() - 1];
                let m = inner.iter().sum::<f64>() / inner.len() as f64;
                inner.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / inner.len() as f64
            };
            ratios.push(var_of(short) / var_of(&long));
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(
            (mean_ratio - 2.0).abs() <= 0.5,
            "variance ratio {mean_ratio:.3} (per-seed {ratios:?})"
        );
    }

    #[test]
    fn uniform_sampling_check() {
        assert!((verify_uniform_sampling(&[0.0, 0.1, 0.2, 0.3]).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            verify_uniform_sampling(&[0.0, 0.1, 0.25]),
            Err(Error::Sampling(_))
        ));
    }
}
