//! Tracking tables: the file-based pointing interface of the antenna.
//!
//! A table is an ordered list of `HH:MM:SS azimuth elevation` records, at
//! most 100 of them; the antenna aligns with the listed points and linearly
//! interpolates the pointing in between. This module parses, validates,
//! serializes, and interpolates tables, and generates the two calibration
//! table layouts: alternating original/learned intervals and offset cycles.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{GeometryError, Pointing, Transform};

/// Hard limit of the antenna's file interface.
pub const MAX_TRACK_POINTS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum TrackTabError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: time does not increase strictly")]
    NonMonotonicTime { line: usize },
    #[error("table holds {0} points, the antenna accepts at most {MAX_TRACK_POINTS}")]
    TooManyPoints(usize),
    #[error("table needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("line {line}: angle out of range: {source}")]
    AngleOutOfRange {
        line: usize,
        source: GeometryError,
    },
    #[error("query time {0:.3} s outside table span")]
    OutOfRangeTime(f64),
    #[error("plan would realize {0} track points, limit is {MAX_TRACK_POINTS}")]
    PlanOverflow(usize),
    #[error("plan spans {plan_end} s but the table ends at {table_end} s")]
    PlanOutsideSpan { plan_end: u32, table_end: u32 },
    #[error("invalid interval plan: {0}")]
    InvalidPlan(String),
    #[error("invalid offset cycle: {0}")]
    InvalidOffsetCycle(String),
    #[error("invalid time of day: {0}")]
    InvalidTime(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Time of day in UTC at 1-second resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u32);

impl TimeOfDay {
    pub fn from_seconds(s: u32) -> Result<Self, TrackTabError> {
        if s >= 86_400 {
            return Err(TrackTabError::InvalidTime(format!("{s} s is not within one day")));
        }
        Ok(Self(s))
    }

    pub fn from_hms(h: u32, m: u32, s: u32) -> Result<Self, TrackTabError> {
        if h >= 24 || m >= 60 || s >= 60 {
            return Err(TrackTabError::InvalidTime(format!("{h:02}:{m:02}:{s:02}")));
        }
        Ok(Self(h * 3600 + m * 60 + s))
    }

    pub fn seconds(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:02}:{:02}:{:02}",
            self.0 / 3600,
            (self.0 / 60) % 60,
            self.0 % 60
        )
    }
}

impl FromStr for TimeOfDay {
    type Err = TrackTabError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || TrackTabError::InvalidTime(text.to_string());
        let mut parts = text.split(':');
        let mut field = |width: usize| -> Result<u32, TrackTabError> {
            let p = parts.next().ok_or_else(bad)?;
            if p.len() != width || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            p.parse().map_err(|_| bad())
        };
        let (h, m, s) = (field(2)?, field(2)?, field(2)?);
        if parts.next().is_some() {
            return Err(bad());
        }
        Self::from_hms(h, m, s)
    }
}

/// One tracking-table record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub time: TimeOfDay,
    pub pointing: Pointing,
}

/// A validated tracking table: strictly increasing times, 2..=100 points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingTable {
    points: Vec<TrackPoint>,
}

impl TrackingTable {
    pub fn new(points: Vec<TrackPoint>) -> Result<Self, TrackTabError> {
        if points.len() < 2 {
            return Err(TrackTabError::TooFewPoints(points.len()));
        }
        if points.len() > MAX_TRACK_POINTS {
            return Err(TrackTabError::TooManyPoints(points.len()));
        }
        for (i, pair) in points.windows(2).enumerate() {
            if pair[1].time <= pair[0].time {
                return Err(TrackTabError::NonMonotonicTime { line: i + 2 });
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first_time(&self) -> TimeOfDay {
        self.points[0].time
    }

    pub fn last_time(&self) -> TimeOfDay {
        self.points[self.points.len() - 1].time
    }

    /// Pointing at `at` seconds of day (fractional allowed): piecewise-linear
    /// in each angle against time, exact at the nodes.
    pub fn interpolate(&self, at: f64) -> Result<Pointing, TrackTabError> {
        let t0 = f64::from(self.first_time().seconds());
        let t1 = f64::from(self.last_time().seconds());
        if !(t0..=t1).contains(&at) {
            return Err(TrackTabError::OutOfRangeTime(at));
        }
        let idx = self
            .points
            .partition_point(|p| f64::from(p.time.seconds()) <= at);
        if idx == 0 {
            return Ok(self.points[0].pointing);
        }
        if idx == self.points.len() {
            return Ok(self.points[idx - 1].pointing);
        }
        let (a, b) = (&self.points[idx - 1], &self.points[idx]);
        let ta = f64::from(a.time.seconds());
        let tb = f64::from(b.time.seconds());
        let lambda = (at - ta) / (tb - ta);
        let az = a.pointing.azimuth_deg() + lambda * (b.pointing.azimuth_deg() - a.pointing.azimuth_deg());
        let el = a.pointing.elevation_deg()
            + lambda * (b.pointing.elevation_deg() - a.pointing.elevation_deg());
        Ok(Pointing::wrapped(az, el))
    }

    /// Restriction of the table to `[from, to]`, with interpolated boundary
    /// nodes when the cut falls between records.
    pub fn window(&self, from: TimeOfDay, to: TimeOfDay) -> Result<TrackingTable, TrackTabError> {
        if to <= from {
            return Err(TrackTabError::InvalidTime(format!(
                "empty window {from}..{to}"
            )));
        }
        let mut points = Vec::new();
        let start = self.interpolate(f64::from(from.seconds()))?;
        points.push(TrackPoint { time: from, pointing: start });
        for p in &self.points {
            if p.time > from && p.time < to {
                points.push(*p);
            }
        }
        let end = self.interpolate(f64::from(to.seconds()))?;
        points.push(TrackPoint { time: to, pointing: end });
        TrackingTable::new(points)
    }
}

/// Parses the tracking-table text format: one `HH:MM:SS az el` record per
/// line, `#` comment lines and blank lines ignored, angles in degrees.
pub fn parse(text: &str) -> Result<TrackingTable, TrackTabError> {
    let mut points = Vec::new();
    let mut last_time: Option<TimeOfDay> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut fields = content.split_whitespace();
        let (Some(ts), Some(az), Some(el), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(TrackTabError::MalformedLine {
                line,
                reason: "expected `HH:MM:SS azimuth elevation`".into(),
            });
        };
        let time: TimeOfDay = ts.parse().map_err(|_| TrackTabError::MalformedLine {
            line,
            reason: format!("bad time `{ts}`"),
        })?;
        let az: f64 = az.parse().map_err(|_| TrackTabError::MalformedLine {
            line,
            reason: format!("bad azimuth `{az}`"),
        })?;
        let el: f64 = el.parse().map_err(|_| TrackTabError::MalformedLine {
            line,
            reason: format!("bad elevation `{el}`"),
        })?;
        let pointing =
            Pointing::new(az, el).map_err(|source| TrackTabError::AngleOutOfRange { line, source })?;
        if let Some(prev) = last_time {
            if time <= prev {
                return Err(TrackTabError::NonMonotonicTime { line });
            }
        }
        last_time = Some(time);
        points.push(TrackPoint { time, pointing });
        if points.len() > MAX_TRACK_POINTS {
            return Err(TrackTabError::TooManyPoints(points.len()));
        }
    }
    TrackingTable::new(points)
}

/// Serializes a table in the antenna file format; angles carry exactly two
/// decimals, rounded half away from zero.
pub fn serialize(table: &TrackingTable) -> String {
    let mut out = String::new();
    for p in table.points() {
        out.push_str(&format!(
            "{} {} {}\n",
            p.time,
            format_angle(p.pointing.azimuth_deg()),
            format_angle(p.pointing.elevation_deg())
        ));
    }
    out
}

/// Two-decimal angle formatting with half-up rounding (Table-style output).
/// The epsilon absorbs binary representation error so that values entered as
/// exact decimal halves round up.
fn format_angle(deg: f64) -> String {
    let scaled = deg.abs() * 100.0;
    let rounded = (scaled + 0.5 + 1e-9).floor() / 100.0;
    let signed = if deg < 0.0 { -rounded } else { rounded };
    // -0.00 would serialize with a stray sign
    let signed = if signed == 0.0 { 0.0 } else { signed };
    format!("{signed:.2}")
}

/// Label of one interval of a calibration plan or schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLabel {
    Original,
    Learned,
    Transition,
}

impl BlockLabel {
    fn as_str(self) -> &'static str {
        match self {
            BlockLabel::Original => "original",
            BlockLabel::Learned => "learned",
            BlockLabel::Transition => "transition",
        }
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockLabel {
    type Err = TrackTabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(BlockLabel::Original),
            "learned" => Ok(BlockLabel::Learned),
            "transition" => Ok(BlockLabel::Transition),
            other => Err(TrackTabError::MalformedLine {
                line: 0,
                reason: format!("unknown block label `{other}`"),
            }),
        }
    }
}

/// A sequence of equal-duration labeled blocks tiling part of a track.
///
/// Transitions may only sit between an original and a learned block (in
/// either order); they carry no track points, so the antenna's own linear
/// interpolation realizes the convex combination across them.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPlan {
    block_secs: u32,
    labels: Vec<BlockLabel>,
}

impl IntervalPlan {
    pub fn new(block_secs: u32, labels: Vec<BlockLabel>) -> Result<Self, TrackTabError> {
        if block_secs < 2 {
            return Err(TrackTabError::InvalidPlan("block duration below 2 s".into()));
        }
        if labels.is_empty() {
            return Err(TrackTabError::InvalidPlan("no blocks".into()));
        }
        for (i, label) in labels.iter().enumerate() {
            if *label != BlockLabel::Transition {
                continue;
            }
            let prev = i.checked_sub(1).map(|j| labels[j]);
            let next = labels.get(i + 1).copied();
            let ok = matches!(
                (prev, next),
                (Some(BlockLabel::Original), Some(BlockLabel::Learned))
                    | (Some(BlockLabel::Learned), Some(BlockLabel::Original))
            );
            if !ok {
                return Err(TrackTabError::InvalidPlan(format!(
                    "transition at block {i} is not between an original and a learned block"
                )));
            }
        }
        Ok(Self { block_secs, labels })
    }

    /// Plan repeating `original, transition, learned, transition` until the
    /// span is covered (truncated to end on a non-transition block).
    pub fn symmetric_alternating(block_secs: u32, span_secs: u32) -> Result<Self, TrackTabError> {
        Self::repeating(block_secs, span_secs, &[
            BlockLabel::Original,
            BlockLabel::Transition,
            BlockLabel::Learned,
            BlockLabel::Transition,
        ])
    }

    /// Plan repeating `original, transition, learned`; the antenna slews
    /// back at the learned/original boundary.
    pub fn sawtooth_alternating(block_secs: u32, span_secs: u32) -> Result<Self, TrackTabError> {
        Self::repeating(block_secs, span_secs, &[
            BlockLabel::Original,
            BlockLabel::Transition,
            BlockLabel::Learned,
        ])
    }

    fn repeating(
        block_secs: u32,
        span_secs: u32,
        pattern: &[BlockLabel],
    ) -> Result<Self, TrackTabError> {
        if block_secs == 0 {
            return Err(TrackTabError::InvalidPlan("zero block duration".into()));
        }
        let n = (span_secs / block_secs) as usize;
        let mut labels: Vec<BlockLabel> =
            pattern.iter().copied().cycle().take(n.max(1)).collect();
        while labels.last() == Some(&BlockLabel::Transition) {
            labels.pop();
        }
        Self::new(block_secs, labels)
    }

    pub fn block_secs(&self) -> u32 {
        self.block_secs
    }

    pub fn labels(&self) -> &[BlockLabel] {
        &self.labels
    }

    pub fn span_secs(&self) -> u32 {
        self.block_secs * self.labels.len() as u32
    }
}

/// One realized schedule interval, in seconds of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleBlock {
    pub start: TimeOfDay,
    pub end: TimeOfDay,
    pub label: BlockLabel,
}

/// The sidecar record of which pointing type each interval of a generated
/// table carries; the table format itself has no room for metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub blocks: Vec<ScheduleBlock>,
}

impl Schedule {
    pub fn start(&self) -> TimeOfDay {
        self.blocks[0].start
    }

    pub fn end(&self) -> TimeOfDay {
        self.blocks[self.blocks.len() - 1].end
    }

    /// Median block duration in seconds; the pipeline ties its clustering
    /// bandwidths to this.
    pub fn median_block_secs(&self) -> f64 {
        let mut durations: Vec<u32> = self
            .blocks
            .iter()
            .map(|b| b.end.seconds() - b.start.seconds())
            .collect();
        durations.sort_unstable();
        let n = durations.len();
        if n % 2 == 1 {
            f64::from(durations[n / 2])
        } else {
            f64::from(durations[n / 2 - 1] + durations[n / 2]) / 2.0
        }
    }

    /// Label of the block covering second-of-day `t`, if any.
    pub fn label_at(&self, t: f64) -> Option<BlockLabel> {
        self.blocks
            .iter()
            .find(|b| f64::from(b.start.seconds()) <= t && t <= f64::from(b.end.seconds()))
            .map(|b| b.label)
    }

    /// Delimited text with one `start_utc,end_utc,label` row per block.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("start_utc,end_utc,label\n");
        for b in &self.blocks {
            out.push_str(&format!("{},{},{}\n", b.start, b.end, b.label));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TrackTabError> {
        let mut blocks = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') || content.starts_with("start_utc") {
                continue;
            }
            let fields: Vec<&str> = content.split(',').collect();
            if fields.len() != 3 {
                return Err(TrackTabError::MalformedLine {
                    line,
                    reason: "expected `start_utc,end_utc,label`".into(),
                });
            }
            let start: TimeOfDay = fields[0].trim().parse()?;
            let end: TimeOfDay = fields[1].trim().parse()?;
            if end <= start {
                return Err(TrackTabError::MalformedLine {
                    line,
                    reason: "block ends before it starts".into(),
                });
            }
            let label: BlockLabel = fields[2].trim().parse()?;
            blocks.push(ScheduleBlock { start, end, label });
        }
        if blocks.is_empty() {
            return Err(TrackTabError::MalformedLine {
                line: 0,
                reason: "schedule holds no blocks".into(),
            });
        }
        Ok(Self { blocks })
    }
}

/// Realizes an interval plan over `original`'s span: original blocks carry
/// the interpolated original pointings at their boundaries, learned blocks
/// carry the transform applied to them, transitions carry nothing. Where a
/// learned block directly abuts an original block the later node is shifted
/// by one second so times stay strictly increasing (a fast slew).
pub fn generate_alternating(
    original: &TrackingTable,
    t: &Transform,
    plan: &IntervalPlan,
) -> Result<(TrackingTable, Schedule), TrackTabError> {
    let start = original.first_time();
    let plan_end = start.seconds() + plan.span_secs();
    if plan_end > original.last_time().seconds() {
        return Err(TrackTabError::PlanOutsideSpan {
            plan_end,
            table_end: original.last_time().seconds(),
        });
    }
    let mut points: Vec<TrackPoint> = Vec::new();
    let mut blocks = Vec::with_capacity(plan.labels().len());
    for (i, label) in plan.labels().iter().enumerate() {
        let b0 = start.seconds() + plan.block_secs() * i as u32;
        let b1 = b0 + plan.block_secs();
        blocks.push(ScheduleBlock {
            start: TimeOfDay::from_seconds(b0)?,
            end: TimeOfDay::from_seconds(b1)?,
            label: *label,
        });
        if *label == BlockLabel::Transition {
            continue;
        }
        for boundary in [b0, b1] {
            let mut node_time = boundary;
            let node = |at: u32| -> Result<Pointing, TrackTabError> {
                let base = original.interpolate(f64::from(at))?;
                Ok(match label {
                    BlockLabel::Original => base,
                    BlockLabel::Learned => t.apply(base),
                    BlockLabel::Transition => unreachable!(),
                })
            };
            let mut pointing = node(node_time)?;
            if let Some(last) = points.last() {
                if last.time.seconds() == node_time {
                    if last.pointing == pointing {
                        // Shared boundary of two blocks of the same type.
                        continue;
                    }
                    // Learned/original adjacency: a one-second slew.
                    node_time += 1;
                    pointing = node(node_time)?;
                }
                if last.time.seconds() >= node_time {
                    return Err(TrackTabError::InvalidPlan(
                        "blocks too short to separate boundary nodes".into(),
                    ));
                }
            }
            points.push(TrackPoint {
                time: TimeOfDay::from_seconds(node_time)?,
                pointing,
            });
        }
    }
    if points.len() > MAX_TRACK_POINTS {
        return Err(TrackTabError::PlanOverflow(points.len()));
    }
    Ok((TrackingTable::new(points)?, Schedule { blocks }))
}

/// Offset-cycle configuration: every second track point holds the learned
/// pointing, the points in between deviate by `radius_deg` in a direction
/// that advances by `step_deg` per offset point, closing after
/// `cycle_length` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetCycleConfig {
    pub radius_deg: f64,
    pub step_deg: f64,
    pub cycle_length: usize,
    pub dwell_secs: u32,
}

impl OffsetCycleConfig {
    pub fn new(
        radius_deg: f64,
        step_deg: f64,
        dwell_secs: u32,
    ) -> Result<Self, TrackTabError> {
        if !(radius_deg > 0.0) {
            return Err(TrackTabError::InvalidOffsetCycle("radius must be positive".into()));
        }
        if !(step_deg > 0.0) || (360.0 / step_deg).fract().abs() > 1e-9 {
            return Err(TrackTabError::InvalidOffsetCycle(
                "step must divide 360 degrees".into(),
            ));
        }
        if dwell_secs == 0 {
            return Err(TrackTabError::InvalidOffsetCycle("zero dwell".into()));
        }
        let directions = (360.0 / step_deg).round() as usize;
        Ok(Self {
            radius_deg,
            step_deg,
            cycle_length: 2 * directions + 1,
            dwell_secs,
        })
    }

    /// Planar offset of track point index `k` within the cycle, as
    /// `(delta_azimuth, delta_elevation)`. Even indices carry no offset; the
    /// offset direction is measured from the positive elevation axis,
    /// advancing towards positive azimuth.
    pub fn offset_at(&self, k: usize) -> (f64, f64) {
        if k % 2 == 0 {
            return (0.0, 0.0);
        }
        let dir = (((k - 1) / 2) as f64 * self.step_deg).to_radians();
        (self.radius_deg * dir.sin(), self.radius_deg * dir.cos())
    }
}

/// Generates the offset-cycle validation table over `base`'s span: learned
/// pointings at even indices, learned plus the cycle offset at odd indices,
/// one point per dwell.
pub fn generate_offset_cycle(
    base: &TrackingTable,
    t: &Transform,
    cfg: &OffsetCycleConfig,
) -> Result<(TrackingTable, Schedule), TrackTabError> {
    let start = base.first_time().seconds();
    let span = base.last_time().seconds() - start;
    let count = (span / cfg.dwell_secs) as usize + 1;
    if count > MAX_TRACK_POINTS {
        return Err(TrackTabError::PlanOverflow(count));
    }
    if count < cfg.cycle_length {
        return Err(TrackTabError::InvalidOffsetCycle(format!(
            "span fits only {count} points, a full cycle needs {}",
            cfg.cycle_length
        )));
    }

    let mut points = Vec::with_capacity(count);
    let mut blocks = Vec::with_capacity(count);
    let half = cfg.dwell_secs / 2;
    for k in 0..count {
        let tk = start + cfg.dwell_secs * k as u32;
        let learned = t.apply(base.interpolate(f64::from(tk))?);
        let (daz, del) = cfg.offset_at(k);
        let pointing = Pointing::wrapped(learned.azimuth_deg() + daz, learned.elevation_deg() + del);
        points.push(TrackPoint {
            time: TimeOfDay::from_seconds(tk)?,
            pointing,
        });
        // Sidecar: tag a window around each zero-offset point as learned.
        let b0 = tk.saturating_sub(half).max(start);
        let b1 = (tk + half).min(start + span);
        if b1 > b0 {
            blocks.push(ScheduleBlock {
                start: TimeOfDay::from_seconds(b0)?,
                end: TimeOfDay::from_seconds(b1)?,
                label: if k % 2 == 0 {
                    BlockLabel::Learned
                } else {
                    BlockLabel::Transition
                },
            });
        }
    }
    Ok((TrackingTable::new(points)?, Schedule { blocks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::IMPROVED_CAL;
    use approx::assert_abs_diff_eq;

    const TABLE_I: &str = "\
07:18:21 114.67 0.00
07:29:45 116.97 1.53
07:41:09 119.28 3.03
";

    fn ramp_table(start: u32, end: u32) -> TrackingTable {
        let points = vec![
            TrackPoint {
                time: TimeOfDay::from_seconds(start).unwrap(),
                pointing: Pointing::new(115.0, 0.0).unwrap(),
            },
            TrackPoint {
                time: TimeOfDay::from_seconds(end).unwrap(),
                pointing: Pointing::new(245.0, 0.0).unwrap(),
            },
        ];
        TrackingTable::new(points).unwrap()
    }

    #[test]
    fn parses_typical_excerpt() {
        let table = parse(TABLE_I).unwrap();
        assert_eq!(table.len(), 3);
        let p = table.points()[0];
        assert_eq!(p.time.to_string(), "07:18:21");
        assert_eq!(p.pointing.azimuth_deg(), 114.67);
        assert_eq!(p.pointing.elevation_deg(), 0.00);
        assert_eq!(table.points()[2].pointing.azimuth_deg(), 119.28);
        assert_eq!(table.points()[2].pointing.elevation_deg(), 3.03);
    }

    #[test]
    fn parse_serialize_round_trip_is_identity() {
        let table = parse(TABLE_I).unwrap();
        assert_eq!(serialize(&table), TABLE_I);
        let again = parse(&serialize(&table)).unwrap();
        assert_eq!(again, table);
    }

    #[test]
    fn serialize_rounds_half_up() {
        assert_eq!(format_angle(119.275), "119.28");
        assert_eq!(format_angle(119.274), "119.27");
        assert_eq!(format_angle(0.005), "0.01");
        assert_eq!(format_angle(-3.125), "-3.13");
        assert_eq!(format_angle(-0.001), "0.00");
    }

    #[test]
    fn rejects_duplicate_timestamps() {
        let text = "07:18:21 114.67 0.00\n07:18:21 114.70 0.10\n";
        assert_eq!(
            parse(text),
            Err(TrackTabError::NonMonotonicTime { line: 2 })
        );
    }

    #[test]
    fn rejects_more_than_the_point_limit() {
        let mut text = String::new();
        for i in 0..101u32 {
            text.push_str(&format!(
                "{} 120.00 10.00\n",
                TimeOfDay::from_seconds(30_000 + 60 * i).unwrap()
            ));
        }
        assert_eq!(parse(&text), Err(TrackTabError::TooManyPoints(101)));
    }

    #[test]
    fn reports_malformed_lines_with_numbers() {
        let text = "# comment\n07:18:21 114.67\n";
        match parse(text) {
            Err(TrackTabError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_angles() {
        let text = "07:18:21 114.67 95.00\n07:29:45 116.97 1.53\n";
        assert!(matches!(
            parse(text),
            Err(TrackTabError::AngleOutOfRange { line: 1, .. })
        ));
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_midpoints() {
        let table = parse(TABLE_I).unwrap();
        let at_node = table.interpolate(f64::from(7 * 3600 + 18 * 60 + 21)).unwrap();
        assert_eq!(at_node.azimuth_deg(), 114.67);
        // Temporal midpoint of the first two records.
        let mid = f64::from(7 * 3600 + 18 * 60 + 21 + 342);
        let p = table.interpolate(mid).unwrap();
        assert_abs_diff_eq!(p.azimuth_deg(), 115.82, epsilon = 1e-12);
        assert_abs_diff_eq!(p.elevation_deg(), 0.765, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_rejects_times_outside_span() {
        let table = parse(TABLE_I).unwrap();
        assert!(matches!(
            table.interpolate(0.0),
            Err(TrackTabError::OutOfRangeTime(_))
        ));
    }

    #[test]
    fn alternating_with_identity_matches_resampled_original() {
        let original = ramp_table(30_000, 40_000);
        let plan = IntervalPlan::symmetric_alternating(600, 9_600).unwrap();
        let (table, schedule) =
            generate_alternating(&original, &Transform::identity(), &plan).unwrap();
        for p in table.points() {
            let expect = original.interpolate(f64::from(p.time.seconds())).unwrap();
            assert_abs_diff_eq!(
                p.pointing.azimuth_deg(),
                expect.azimuth_deg(),
                epsilon = 1e-12
            );
        }
        assert_eq!(schedule.start().seconds(), 30_000);
        assert_eq!(schedule.median_block_secs(), 600.0);
    }

    #[test]
    fn alternating_emits_two_nodes_per_labeled_block() {
        let original = ramp_table(30_000, 40_000);
        let plan = IntervalPlan::symmetric_alternating(360, 8_640).unwrap();
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let (table, schedule) = generate_alternating(&original, &t, &plan).unwrap();
        let labeled = schedule
            .blocks
            .iter()
            .filter(|b| b.label != BlockLabel::Transition)
            .count();
        assert_eq!(table.len(), 2 * labeled);
        assert!(table.len() <= MAX_TRACK_POINTS);
    }

    #[test]
    fn six_minute_blocks_over_long_track_overflow() {
        // A full-day track at 6-minute blocks needs more than 100 points;
        // 10-minute blocks keep the same span under the limit.
        let original = ramp_table(3_600, 3_600 + 50_400);
        let six = IntervalPlan::symmetric_alternating(360, 50_400).unwrap();
        assert!(matches!(
            generate_alternating(&original, &Transform::identity(), &six),
            Err(TrackTabError::PlanOverflow(_))
        ));
        let ten = IntervalPlan::symmetric_alternating(600, 50_400).unwrap();
        assert!(generate_alternating(&original, &Transform::identity(), &ten).is_ok());
    }

    #[test]
    fn plan_rejects_misplaced_transitions() {
        assert!(IntervalPlan::new(
            600,
            vec![BlockLabel::Transition, BlockLabel::Learned]
        )
        .is_err());
        assert!(IntervalPlan::new(
            600,
            vec![
                BlockLabel::Original,
                BlockLabel::Transition,
                BlockLabel::Original
            ]
        )
        .is_err());
    }

    #[test]
    fn offset_cycle_directions() {
        let cfg = OffsetCycleConfig::new(0.75, 45.0, 60).unwrap();
        assert_eq!(cfg.cycle_length, 17);
        assert_eq!(cfg.offset_at(0), (0.0, 0.0));
        let (daz1, del1) = cfg.offset_at(1);
        assert_abs_diff_eq!(daz1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(del1, 0.75, epsilon = 1e-12);
        // One 45-degree step: equal components.
        let (daz3, del3) = cfg.offset_at(3);
        assert_abs_diff_eq!(daz3, 0.75 * std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(del3, 0.75 * std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn offset_cycle_magnitudes_and_balance() {
        let cfg = OffsetCycleConfig::new(0.75, 45.0, 60).unwrap();
        let (mut sum_az, mut sum_el) = (0.0, 0.0);
        for k in 0..cfg.cycle_length - 1 {
            let (daz, del) = cfg.offset_at(k);
            if k % 2 == 1 {
                assert_abs_diff_eq!((daz * daz + del * del).sqrt(), 0.75, epsilon = 1e-12);
            }
            sum_az += daz;
            sum_el += del;
        }
        assert_abs_diff_eq!(sum_az, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sum_el, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn offset_cycle_table_applies_offsets_on_learned_pointing() {
        let base = ramp_table(30_000, 32_000);
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let cfg = OffsetCycleConfig::new(0.75, 45.0, 120).unwrap();
        let (table, _) = generate_offset_cycle(&base, &t, &cfg).unwrap();
        assert_eq!(table.len(), 17);
        let learned0 = t.apply(base.interpolate(30_000.0).unwrap());
        assert_eq!(table.points()[0].pointing, learned0);
        let learned1 = t.apply(base.interpolate(30_120.0).unwrap());
        assert_abs_diff_eq!(
            table.points()[1].pointing.elevation_deg(),
            learned1.elevation_deg() + 0.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn offset_cycle_reports_overflow() {
        let base = ramp_table(20_000, 40_000);
        let cfg = OffsetCycleConfig::new(0.75, 45.0, 60).unwrap();
        assert!(matches!(
            generate_offset_cycle(&base, &Transform::identity(), &cfg),
            Err(TrackTabError::PlanOverflow(_))
        ));
    }

    #[test]
    fn schedule_csv_round_trip() {
        let schedule = Schedule {
            blocks: vec![
                ScheduleBlock {
                    start: TimeOfDay::from_seconds(30_000).unwrap(),
                    end: TimeOfDay::from_seconds(30_600).unwrap(),
                    label: BlockLabel::Original,
                },
                ScheduleBlock {
                    start: TimeOfDay::from_seconds(30_600).unwrap(),
                    end: TimeOfDay::from_seconds(31_200).unwrap(),
                    label: BlockLabel::Transition,
                },
            ],
        };
        let csv = schedule.to_csv();
        assert!(csv.starts_with("start_utc,end_utc,label\n"));
        assert_eq!(Schedule::from_csv(&csv).unwrap(), schedule);
    }

    #[test]
    fn window_inserts_interpolated_boundaries() {
        let table = ramp_table(30_000, 40_000);
        let cut = table
            .window(
                TimeOfDay::from_seconds(32_000).unwrap(),
                TimeOfDay::from_seconds(35_000).unwrap(),
            )
            .unwrap();
        assert_eq!(cut.first_time().seconds(), 32_000);
        assert_eq!(cut.last_time().seconds(), 35_000);
        let expect = table.interpolate(32_000.0).unwrap();
        assert_eq!(cut.points()[0].pointing, expect);
    }
}
