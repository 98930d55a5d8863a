//! Training-data generation from operational measurements: detect the times
//! at which the received signal level peaks, then read off the intended and
//! commanded pointings at those times.
//!
//! The routine runs in stages over the smoothed level series: preliminary
//! maxima where the curvature is negative, mean-shift clustering of the
//! candidate times, heavy-ball refinement of each cluster center on the
//! interpolated level, and a second mean-shift merge of the refined
//! positions.

use thiserror::Error;

use crate::exec;
use crate::geometry::Pointing;
use crate::signalio::{smooth, SignalError, SignalSeries, SmoothingConfig};
use crate::tracktab::{Schedule, TrackTabError, TrackingTable};

/// Pairs whose intended and actual pointings differ by at least this much on
/// either axis are dropped as implausible.
pub const PAIR_SANITY_BOUND_DEG: f64 = 5.0;

#[derive(Debug, Error)]
pub enum MaximaError {
    #[error("series holds {0} samples, need at least 5")]
    SeriesTooShort(usize),
    #[error("no signal level maxima found")]
    NoMaximaFound,
    #[error("series, schedule, and tables share no time span")]
    SpanMismatch,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    TrackTab(#[from] TrackTabError),
}

/// Free parameters of the extraction routine.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximaConfig {
    pub smoothing: SmoothingConfig,
    /// Curvature gate in dBm/s^2 (non-positive): samples qualify as
    /// preliminary-maximum candidates where the second derivative falls
    /// below this.
    pub curvature_threshold: f64,
    /// Mean-shift window for merging preliminary maxima, seconds.
    pub meanshift_bandwidth: f64,
    /// Heavy-ball step size, s^2/dBm.
    pub hb_step: f64,
    /// Heavy-ball momentum, in [0, 1).
    pub hb_momentum: f64,
    pub hb_max_iters: usize,
    /// Convergence threshold on the iterate movement, seconds.
    pub hb_tol: f64,
    /// Mean-shift window for merging refined maxima, seconds.
    pub merge_bandwidth: f64,
}

impl MaximaConfig {
    /// Defaults tied to the calibration schedule: clustering bandwidth of
    /// half a block, merge bandwidth of one block.
    pub fn for_block_duration(block_secs: f64) -> Result<Self, MaximaError> {
        let cfg = Self {
            smoothing: SmoothingConfig::default(),
            curvature_threshold: 0.0,
            meanshift_bandwidth: block_secs / 2.0,
            hb_step: 25.0,
            hb_momentum: 0.8,
            hb_max_iters: 200,
            hb_tol: 0.5,
            merge_bandwidth: block_secs,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MaximaError> {
        if !(self.meanshift_bandwidth > 0.0) || !(self.merge_bandwidth > 0.0) {
            return Err(MaximaError::InvalidConfig("bandwidths must be positive".into()));
        }
        if !(self.hb_tol > 0.0) {
            return Err(MaximaError::InvalidConfig("hb_tol must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.hb_momentum) {
            return Err(MaximaError::InvalidConfig("hb_momentum must be in [0, 1)".into()));
        }
        if self.curvature_threshold > 0.0 {
            return Err(MaximaError::InvalidConfig(
                "curvature threshold must be non-positive".into(),
            ));
        }
        Ok(())
    }
}

/// A detected signal-level maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedMaximum {
    pub time_s: f64,
    pub level_dbm: f64,
    pub cluster_size: usize,
    pub refined: bool,
}

/// One training observation: the pointing the original trajectory intended
/// at the maximum time, and the pointing the antenna actually held there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingPair {
    pub intended: Pointing,
    pub actual: Pointing,
}

/// Preliminary maxima of an already-smoothed series: within each maximal run
/// of samples whose discrete second derivative falls below the threshold,
/// the level-argmax sample is emitted, provided it is a local maximum of the
/// series. Runs are evaluated per gap-free segment.
pub fn preliminary_maxima(
    series: &SignalSeries,
    cfg: &MaximaConfig,
) -> Result<Vec<DetectedMaximum>, MaximaError> {
    if series.len() < 5 {
        return Err(MaximaError::SeriesTooShort(series.len()));
    }
    let samples = series.samples();
    let mut found = Vec::new();
    for (lo, hi) in series.segments() {
        if hi - lo < 5 {
            continue;
        }
        let mut run: Option<(usize, usize)> = None;
        for i in lo + 1..hi - 1 {
            let dt_l = samples[i].time_s - samples[i - 1].time_s;
            let dt_r = samples[i + 1].time_s - samples[i].time_s;
            let slope_l = (samples[i].level_dbm - samples[i - 1].level_dbm) / dt_l;
            let slope_r = (samples[i + 1].level_dbm - samples[i].level_dbm) / dt_r;
            let curvature = 2.0 * (slope_r - slope_l) / (dt_l + dt_r);
            if curvature < cfg.curvature_threshold {
                run = match run {
                    Some((s, _)) => Some((s, i)),
                    None => Some((i, i)),
                };
            } else if let Some(region) = run.take() {
                if let Some(m) = region_maximum(samples, region) {
                    found.push(m);
                }
            }
        }
        if let Some(region) = run {
            if let Some(m) = region_maximum(samples, region) {
                found.push(m);
            }
        }
    }
    Ok(found)
}

/// Level-argmax of an inclusive index region, kept only when it is a local
/// maximum of the series (this discards runs produced by concave ramps).
fn region_maximum(
    samples: &[crate::signalio::SignalSample],
    (start, end): (usize, usize),
) -> Option<DetectedMaximum> {
    let mut best = start;
    for i in start..=end {
        if samples[i].level_dbm > samples[best].level_dbm {
            best = i;
        }
    }
    let is_local_max = best > 0
        && best + 1 < samples.len()
        && samples[best].level_dbm >= samples[best - 1].level_dbm
        && samples[best].level_dbm >= samples[best + 1].level_dbm;
    is_local_max.then(|| DetectedMaximum {
        time_s: samples[best].time_s,
        level_dbm: samples[best].level_dbm,
        cluster_size: 1,
        refined: false,
    })
}

/// A mean-shift mode and the indices of the input times it attracted.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanShiftCluster {
    pub center: f64,
    pub members: Vec<usize>,
}

const MEANSHIFT_MAX_ITERS: usize = 500;
const MEANSHIFT_SHIFT_TOL: f64 = 1e-12;

/// One-dimensional mean shift with a flat kernel of half-width `bandwidth`:
/// every point iterates to the mean of its window until the shift vanishes;
/// modes closer than `bandwidth / 2` merge. Returned centers are sorted and
/// are fixed points of a further mean-shift step.
pub fn meanshift_cluster(times: &[f64], bandwidth: f64) -> Vec<MeanShiftCluster> {
    if times.is_empty() {
        return Vec::new();
    }
    let shift_to_mode = |start: f64| -> f64 {
        let mut x = start;
        for _ in 0..MEANSHIFT_MAX_ITERS {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &t in times {
                if (t - x).abs() <= bandwidth {
                    sum += t;
                    count += 1;
                }
            }
            let next = sum / count as f64;
            let shift = (next - x).abs();
            x = next;
            if shift < MEANSHIFT_SHIFT_TOL {
                break;
            }
        }
        x
    };
    let modes = exec::map_indexed(times.len(), |i| shift_to_mode(times[i]));

    // Merge modes closer than half a bandwidth, then re-converge the merged
    // centers so they remain fixed points.
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| modes[a].partial_cmp(&modes[b]).unwrap());
    let mut clusters: Vec<MeanShiftCluster> = Vec::new();
    for idx in order {
        match clusters.last_mut() {
            Some(c) if (modes[idx] - c.center).abs() < bandwidth / 2.0 => {
                c.members.push(idx);
                // Running mean of member modes keeps the merge symmetric.
                let sum: f64 = c.members.iter().map(|&m| modes[m]).sum();
                c.center = sum / c.members.len() as f64;
            }
            _ => clusters.push(MeanShiftCluster {
                center: modes[idx],
                members: vec![idx],
            }),
        }
    }
    for c in &mut clusters {
        c.center = shift_to_mode(c.center);
        c.members.sort_unstable();
    }
    clusters
}

/// Result of one heavy-ball refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedMaximum {
    pub time_s: f64,
    pub converged: bool,
}

/// Ascends the piecewise-linearly interpolated level by the heavy-ball
/// iteration `t+ = t + step * g(t) + momentum * (t - t_prev)`, where `g` is
/// the central finite-difference gradient over one sample spacing. The
/// iterate stays inside `window`. A step that would lower the level is
/// halved until it does not; convergence means a nonzero movement smaller
/// than `hb_tol`. Non-convergence is not an error: the last iterate comes
/// back flagged.
pub fn heavy_ball_refine(
    series: &SignalSeries,
    start: f64,
    cfg: &MaximaConfig,
    window: (f64, f64),
) -> RefinedMaximum {
    let lo = window.0.max(series.first_time());
    let hi = window.1.min(series.last_time());
    let clamp = |t: f64| t.clamp(lo, hi);
    let h = 1.0 / series.nominal_rate();

    let grad = |t: f64| -> f64 {
        let a = (t - h / 2.0).max(series.first_time());
        let b = (t + h / 2.0).min(series.last_time());
        if b <= a {
            return 0.0;
        }
        (interpolate_level(series, b) - interpolate_level(series, a)) / (b - a)
    };

    let mut t_prev = clamp(start);
    let mut t_cur = t_prev;
    let mut converged = false;
    for _ in 0..cfg.hb_max_iters {
        let g = grad(t_cur);
        let mut step = cfg.hb_step * g + cfg.hb_momentum * (t_cur - t_prev);
        let level_here = interpolate_level(series, t_cur);
        let mut cand = clamp(t_cur + step);
        let mut halvings = 0;
        while interpolate_level(series, cand) < level_here - 1e-12 {
            if halvings >= 30 {
                // Even a vanishing step loses level: refuse to move.
                cand = t_cur;
                break;
            }
            step *= 0.5;
            cand = clamp(t_cur + step);
            halvings += 1;
        }
        let delta = cand - t_cur;
        t_prev = t_cur;
        t_cur = cand;
        if delta != 0.0 && delta.abs() < cfg.hb_tol {
            converged = true;
            break;
        }
    }
    RefinedMaximum { time_s: t_cur, converged }
}

/// Piecewise-linear interpolation of the level at time `t` (clamped to the
/// series span).
pub fn interpolate_level(series: &SignalSeries, t: f64) -> f64 {
    let samples = series.samples();
    let t = t.clamp(series.first_time(), series.last_time());
    let idx = samples.partition_point(|s| s.time_s <= t);
    if idx == 0 {
        return samples[0].level_dbm;
    }
    if idx == samples.len() {
        return samples[idx - 1].level_dbm;
    }
    let (a, b) = (samples[idx - 1], samples[idx]);
    let lambda = (t - a.time_s) / (b.time_s - a.time_s);
    a.level_dbm + lambda * (b.level_dbm - a.level_dbm)
}

/// Per-stage record of the extraction pipeline, for plot-ready diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub preliminary: Vec<DetectedMaximum>,
    pub cluster_centers: Vec<f64>,
    pub refined: Vec<RefinedMaximum>,
    pub finals: Vec<DetectedMaximum>,
}

impl Diagnostics {
    /// Delimited text, one `stage,time_utc,level_dbm` row per candidate.
    pub fn to_csv(&self, series: &SignalSeries) -> String {
        let mut out = String::from("stage,time_utc,level_dbm\n");
        let mut push = |stage: &str, time: f64, level: f64| {
            out.push_str(&format!(
                "{stage},{},{level}\n",
                crate::signalio::format_time_of_day(time)
            ));
        };
        for m in &self.preliminary {
            push("preliminary", m.time_s, m.level_dbm);
        }
        for &c in &self.cluster_centers {
            push("clustered", c, interpolate_level(series, c));
        }
        for r in &self.refined {
            push("refined", r.time_s, interpolate_level(series, r.time_s));
        }
        for m in &self.finals {
            push("final", m.time_s, m.level_dbm);
        }
        out
    }
}

/// Everything the extraction run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Final maxima, strictly increasing in time.
    pub maxima: Vec<DetectedMaximum>,
    /// Training pairs, one per kept maximum (parallel to `pair_times`).
    pub pairs: Vec<TrainingPair>,
    pub pair_times: Vec<f64>,
    /// Maxima whose pairs failed the per-axis sanity bound.
    pub dropped: Vec<(f64, TrainingPair)>,
    pub diagnostics: Diagnostics,
}

/// The full training-data routine: smooth, detect preliminary maxima, merge
/// by mean shift, refine each cluster with the heavy ball, merge again, and
/// pair each final maximum time with the intended (original table) and
/// actual (commanded table) pointings at that time.
pub fn extract_training_set(
    raw: &SignalSeries,
    schedule: &Schedule,
    original: &TrackingTable,
    commanded: &TrackingTable,
    cfg: &MaximaConfig,
) -> Result<Extraction, MaximaError> {
    cfg.validate()?;
    let lo = raw
        .first_time()
        .max(f64::from(schedule.start().seconds()))
        .max(f64::from(original.first_time().seconds()))
        .max(f64::from(commanded.first_time().seconds()));
    let hi = raw
        .last_time()
        .min(f64::from(schedule.end().seconds()))
        .min(f64::from(original.last_time().seconds()))
        .min(f64::from(commanded.last_time().seconds()));
    if hi <= lo {
        return Err(MaximaError::SpanMismatch);
    }
    let windowed = raw.window(lo, hi).map_err(|_| MaximaError::SpanMismatch)?;
    let smoothed = smooth(&windowed, &cfg.smoothing);

    let preliminary = preliminary_maxima(&smoothed, cfg)?;
    if preliminary.is_empty() {
        return Err(MaximaError::NoMaximaFound);
    }
    let candidate_times: Vec<f64> = preliminary.iter().map(|m| m.time_s).collect();
    let clusters = meanshift_cluster(&candidate_times, cfg.meanshift_bandwidth);

    let refined = exec::map_indexed(clusters.len(), |i| {
        let c = &clusters[i];
        let member_lo = c.members.iter().map(|&m| candidate_times[m]).fold(f64::INFINITY, f64::min);
        let member_hi = c.members.iter().map(|&m| candidate_times[m]).fold(f64::NEG_INFINITY, f64::max);
        let window = (
            member_lo - cfg.meanshift_bandwidth / 2.0,
            member_hi + cfg.meanshift_bandwidth / 2.0,
        );
        heavy_ball_refine(&smoothed, c.center, cfg, window)
    });

    let refined_times: Vec<f64> = refined.iter().map(|r| r.time_s).collect();
    let merged = meanshift_cluster(&refined_times, cfg.merge_bandwidth);

    let mut maxima: Vec<DetectedMaximum> = merged
        .iter()
        .map(|c| DetectedMaximum {
            time_s: c.center,
            level_dbm: interpolate_level(&smoothed, c.center),
            cluster_size: c
                .members
                .iter()
                .map(|&m| clusters[m].members.len())
                .sum(),
            refined: c.members.iter().all(|&m| refined[m].converged),
        })
        .collect();
    maxima.sort_by(|a, b| a.time_s.partial_cmp(&b.time_s).unwrap());

    let mut pairs = Vec::new();
    let mut pair_times = Vec::new();
    let mut dropped = Vec::new();
    for m in &maxima {
        let intended = original.interpolate(m.time_s)?;
        let actual = commanded.interpolate(m.time_s)?;
        let pair = TrainingPair { intended, actual };
        let daz = wrapped_difference(actual.azimuth_deg(), intended.azimuth_deg());
        let del = actual.elevation_deg() - intended.elevation_deg();
        if daz.abs() < PAIR_SANITY_BOUND_DEG && del.abs() < PAIR_SANITY_BOUND_DEG {
            pairs.push(pair);
            pair_times.push(m.time_s);
        } else {
            dropped.push((m.time_s, pair));
        }
    }

    let diagnostics = Diagnostics {
        preliminary,
        cluster_centers: clusters.iter().map(|c| c.center).collect(),
        refined,
        finals: maxima.clone(),
    };
    Ok(Extraction {
        maxima,
        pairs,
        pair_times,
        dropped,
        diagnostics,
    })
}

/// Azimuth difference folded to (-180, 180].
pub(crate) fn wrapped_difference(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}
