//! Signal-level monitoring data: log ingestion, dBm conversions, Gaussian
//! low-pass smoothing, and error metrics.

use std::fmt::Write as _;

use chrono::Timelike;
use thiserror::Error;

use crate::exec;
use crate::geometry::Pointing;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("power must be positive to convert to dBm, got {0} mW")]
    NonpositivePower(f64),
    #[error("record {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("record {line}: time does not increase strictly")]
    NonMonotonicTime { line: usize },
    #[error("log holds no samples")]
    EmptyLog,
    #[error("value lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series holds no samples")]
    EmptySeries,
    #[error("invalid smoothing config: {0}")]
    InvalidSmoothing(String),
}

/// Power level in dBm for a power in milliwatts.
pub fn dbm_from_mw(p_mw: f64) -> Result<f64, SignalError> {
    if !(p_mw > 0.0) {
        return Err(SignalError::NonpositivePower(p_mw));
    }
    Ok(10.0 * p_mw.log10())
}

/// Power in milliwatts for a level in dBm; inverse of [`dbm_from_mw`].
pub fn mw_from_dbm(x_dbm: f64) -> f64 {
    10f64.powf(x_dbm / 10.0)
}

/// One signal-level measurement: seconds of day (UTC, fractional allowed)
/// and a level in dBm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    pub time_s: f64,
    pub level_dbm: f64,
}

/// A time-ordered signal-level series. Gaps are allowed; they are exposed by
/// [`SignalSeries::segments`] and smoothed around, never interpolated over.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries {
    samples: Vec<SignalSample>,
    nominal_rate: f64,
}

/// A gap splits the series when sample spacing exceeds this multiple of the
/// nominal spacing.
const GAP_FACTOR: f64 = 5.0;

impl SignalSeries {
    pub fn new(samples: Vec<SignalSample>, nominal_rate: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::EmptySeries);
        }
        if !(nominal_rate > 0.0) {
            return Err(SignalError::InvalidSmoothing(format!(
                "nominal rate must be positive, got {nominal_rate}"
            )));
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].time_s <= pair[0].time_s {
                return Err(SignalError::NonMonotonicTime { line: i + 2 });
            }
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.level_dbm.is_finite() || !s.time_s.is_finite() {
                return Err(SignalError::MalformedRecord {
                    line: i + 1,
                    reason: "non-finite sample".into(),
                });
            }
        }
        Ok(Self { samples, nominal_rate })
    }

    /// Builds a series, deriving the nominal rate from the median spacing.
    pub fn from_samples(samples: Vec<SignalSample>) -> Result<Self, SignalError> {
        let rate = nominal_rate_of(&samples).unwrap_or(1.0);
        Self::new(samples, rate)
    }

    pub fn samples(&self) -> &[SignalSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn first_time(&self) -> f64 {
        self.samples[0].time_s
    }

    pub fn last_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].time_s
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.time_s)
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.level_dbm)
    }

    /// Half-open index ranges of gap-free runs; the whole series when there
    /// are no gaps wider than [`GAP_FACTOR`] nominal spacings.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let limit = GAP_FACTOR / self.nominal_rate;
        let mut ranges = Vec::new();
        let mut start = 0;
        for i in 1..self.samples.len() {
            if self.samples[i].time_s - self.samples[i - 1].time_s > limit {
                ranges.push((start, i));
                start = i;
            }
        }
        ranges.push((start, self.samples.len()));
        ranges
    }

    /// Restriction to samples with `from <= t <= to`.
    pub fn window(&self, from: f64, to: f64) -> Result<SignalSeries, SignalError> {
        let samples: Vec<SignalSample> = self
            .samples
            .iter()
            .copied()
            .filter(|s| s.time_s >= from && s.time_s <= to)
            .collect();
        if samples.is_empty() {
            return Err(SignalError::EmptySeries);
        }
        SignalSeries::new(samples, self.nominal_rate)
    }
}

fn nominal_rate_of(samples: &[SignalSample]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let mut spacings: Vec<f64> = samples.windows(2).map(|w| w[1].time_s - w[0].time_s).collect();
    spacings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = spacings.len();
    let median = if n % 2 == 1 {
        spacings[n / 2]
    } else {
        0.5 * (spacings[n / 2 - 1] + spacings[n / 2])
    };
    (median > 0.0).then(|| 1.0 / median)
}

/// Gaussian low-pass parameters: standard deviation in seconds and the
/// kernel half-width in standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    pub sigma_seconds: f64,
    pub truncation: f64,
}

impl SmoothingConfig {
    pub fn new(sigma_seconds: f64, truncation: f64) -> Result<Self, SignalError> {
        if !(sigma_seconds > 0.0) {
            return Err(SignalError::InvalidSmoothing("sigma must be positive".into()));
        }
        if !(truncation >= 3.0) {
            return Err(SignalError::InvalidSmoothing(
                "kernel must extend at least 3 sigmas".into(),
            ));
        }
        Ok(Self { sigma_seconds, truncation })
    }

    /// Sigma given in samples at the series' nominal rate.
    pub fn from_sigma_samples(sigma_samples: f64, nominal_rate: f64) -> Result<Self, SignalError> {
        Self::new(sigma_samples / nominal_rate, 4.0)
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        // The minimally-smoothed setting of the offset-cycle evaluation.
        Self { sigma_seconds: 5.0, truncation: 4.0 }
    }
}

/// Gaussian convolution against actual sample times, with the kernel
/// renormalized at segment boundaries. Gap-separated segments are smoothed
/// independently; output times equal input times.
pub fn smooth(series: &SignalSeries, cfg: &SmoothingConfig) -> SignalSeries {
    let samples = series.samples();
    let segments = series.segments();
    let mut segment_of = vec![0usize; samples.len()];
    for (si, (lo, hi)) in segments.iter().enumerate() {
        for s in segment_of.iter_mut().take(*hi).skip(*lo) {
            *s = si;
        }
    }
    let radius = cfg.truncation * cfg.sigma_seconds;
    let inv_two_sigma_sq = 0.5 / (cfg.sigma_seconds * cfg.sigma_seconds);

    let smoothed = exec::map_indexed(samples.len(), |i| {
        let (lo, hi) = segments[segment_of[i]];
        let t_i = samples[i].time_s;
        let mut weight_sum = 0.0;
        let mut level_sum = 0.0;
        // Scan outward only as far as the truncated kernel reaches.
        let mut j = i;
        loop {
            let dt = t_i - samples[j].time_s;
            if dt > radius {
                break;
            }
            let w = (-dt * dt * inv_two_sigma_sq).exp();
            weight_sum += w;
            level_sum += w * samples[j].level_dbm;
            if j == lo {
                break;
            }
            j -= 1;
        }
        let mut j = i + 1;
        while j < hi {
            let dt = samples[j].time_s - t_i;
            if dt > radius {
                break;
            }
            let w = (-dt * dt * inv_two_sigma_sq).exp();
            weight_sum += w;
            level_sum += w * samples[j].level_dbm;
            j += 1;
        }
        SignalSample {
            time_s: t_i,
            level_dbm: level_sum / weight_sum,
        }
    });
    SignalSeries {
        samples: smoothed,
        nominal_rate: series.nominal_rate,
    }
}

/// Mean absolute and mean squared error between two equal-length value lists.
pub fn mae_mse(a: &[f64], b: &[f64]) -> Result<(f64, f64), SignalError> {
    if a.len() != b.len() {
        return Err(SignalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(SignalError::EmptySeries);
    }
    let n = a.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        abs += d.abs();
        sq += d * d;
    }
    Ok((abs / n, sq / n))
}

/// Parses a signal log: CSV with header
/// `time_utc,level_dbm[,azimuth_deg,elevation_deg]`, times ISO-8601 with
/// optional date and fractional seconds. Records must already be in time
/// order; the nominal rate comes from the median spacing.
pub fn ingest_log(text: &str) -> Result<SignalSeries, SignalError> {
    let mut samples = Vec::new();
    let mut last_time: Option<f64> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') || content.starts_with("time_utc") {
            continue;
        }
        let fields: Vec<&str> = content.split(',').collect();
        if fields.len() != 2 && fields.len() != 4 {
            return Err(SignalError::MalformedRecord {
                line,
                reason: format!("expected 2 or 4 fields, got {}", fields.len()),
            });
        }
        let time_s = parse_time_of_day(fields[0].trim()).ok_or_else(|| {
            SignalError::MalformedRecord {
                line,
                reason: format!("bad time `{}`", fields[0].trim()),
            }
        })?;
        let level_dbm: f64 = fields[1].trim().parse().map_err(|_| SignalError::MalformedRecord {
            line,
            reason: format!("bad level `{}`", fields[1].trim()),
        })?;
        for f in fields.iter().skip(2) {
            // Pointing columns are optional context; validate, don't store.
            let _: f64 = f.trim().parse().map_err(|_| SignalError::MalformedRecord {
                line,
                reason: format!("bad pointing field `{}`", f.trim()),
            })?;
        }
        if let Some(prev) = last_time {
            if time_s <= prev {
                return Err(SignalError::NonMonotonicTime { line });
            }
        }
        last_time = Some(time_s);
        samples.push(SignalSample { time_s, level_dbm });
    }
    if samples.is_empty() {
        return Err(SignalError::EmptyLog);
    }
    SignalSeries::from_samples(samples)
}

/// Writes the signal log CSV, with pointing columns when provided (one
/// pointing per sample). Levels use the shortest representation that parses
/// back to the same value.
pub fn write_log(series: &SignalSeries, pointings: Option<&[Pointing]>) -> String {
    let mut out = String::new();
    match pointings {
        Some(_) => out.push_str("time_utc,level_dbm,azimuth_deg,elevation_deg\n"),
        None => out.push_str("time_utc,level_dbm\n"),
    }
    for (i, s) in series.samples().iter().enumerate() {
        out.push_str(&format_time_of_day(s.time_s));
        let _ = write!(out, ",{}", s.level_dbm);
        if let Some(ps) = pointings {
            let p = ps[i];
            let _ = write!(out, ",{:.6},{:.6}", p.azimuth_deg(), p.elevation_deg());
        }
        out.push('\n');
    }
    out
}

/// Accepts `HH:MM:SS[.fff]`, `YYYY-MM-DDTHH:MM:SS[.fff]`, and RFC 3339; the
/// date part, when present, is dropped (logs cover a single day).
pub fn parse_time_of_day(text: &str) -> Option<f64> {
    let time = if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(text) {
        dt.time()
    } else if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f") {
        dt.time()
    } else if let Ok(t) = chrono::NaiveTime::parse_from_str(text, "%H:%M:%S%.f") {
        t
    } else {
        return None;
    };
    Some(f64::from(time.num_seconds_from_midnight()) + f64::from(time.nanosecond()) * 1e-9)
}

/// Seconds of day as `HH:MM:SS`, with microseconds appended only when the
/// time is fractional.
pub fn format_time_of_day(time_s: f64) -> String {
    let mut secs = time_s.floor();
    let mut micros = ((time_s - secs) * 1e6).round() as u32;
    if micros >= 1_000_000 {
        secs += 1.0;
        micros = 0;
    }
    let s = secs as u64;
    let hms = format!("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60);
    if micros == 0 {
        hms
    } else {
        format!("{hms}.{micros:06}")
    }
}
