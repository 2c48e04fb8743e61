//! Distribution summaries of diffusion range and distances.

use std::borrow::Borrow;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::engine::DistanceSummary;
use crate::model::{BoundClass, ParticipantId, TimeInstant, SECONDS_PER_DAY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no samples")]
    EmptyInput,
    #[error("sample is not a finite number")]
    NonFinite,
    #[error("percentile {0} outside (0, 1]")]
    InvalidPercentile(f64),
    #[error("growth curves do not share the grid")]
    GridMismatch,
}

/// Percentiles reported per participant for diffusion ranges.
pub const TABLE_PERCENTILES: [f64; 4] = [0.70, 0.50, 0.30, 0.10];
/// Percentiles drawn as bands around horizon-growth curves.
pub const BAND_PERCENTILES: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Empirical cumulative distribution over a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ecdf {
    values: Vec<f64>,
    cumulative: Vec<usize>,
    n: usize,
}

/// `ceil(p * n)` with a guard against `0.7 * 10 = 7.000000000000001`.
fn nearest_rank(p: f64, n: usize) -> usize {
    ((p * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

fn check_percentile(p: f64) -> Result<(), MetricsError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(MetricsError::InvalidPercentile(p))
    }
}

impl Ecdf {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Result<Self, MetricsError> {
        let mut sorted: Vec<f64> = samples.into_iter().collect();
        if sorted.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        sorted.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut cumulative = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            if values.last() == Some(&v) {
                *cumulative.last_mut().unwrap() = i + 1;
            } else {
                values.push(v);
                cumulative.push(i + 1);
            }
        }
        Ok(Self { values, cumulative, n: sorted.len() })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Distinct values with their cumulative fractions; the last fraction is exactly 1.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().zip(&self.cumulative).map(move |(&v, &c)| (v, c as f64 / self.n as f64))
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.values.partition_point(|&v| v <= x);
        if i == 0 {
            0.0
        } else {
            self.cumulative[i - 1] as f64 / self.n as f64
        }
    }

    /// Nearest-rank quantile: the `ceil(p * n)`-th smallest sample.
    pub fn quantile(&self, p: f64) -> Result<f64, MetricsError> {
        check_percentile(p)?;
        let rank = nearest_rank(p, self.n);
        Ok(self.values[self.cumulative.partition_point(|&c| c < rank)])
    }

    /// Lower end of the range reached by the top `p` share of samples:
    /// the nearest-rank quantile at `1 - p`, or the minimum for `p = 1`.
    pub fn upper_share_floor(&self, p: f64) -> Result<f64, MetricsError> {
        check_percentile(p)?;
        let rank = nearest_rank(1.0 - p, self.n);
        Ok(self.values[self.cumulative.partition_point(|&c| c < rank)])
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PercentileRow {
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Range `[upper_share_floor(p), max]` per percentile, in the order given, plus the maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileTable {
    pub rows: Vec<PercentileRow>,
    pub max: f64,
}

pub fn percentile_table(ecdf: &Ecdf) -> PercentileTable {
    percentile_table_for(ecdf, &TABLE_PERCENTILES).expect("fixed percentiles are valid")
}

pub fn percentile_table_for(ecdf: &Ecdf, percentiles: &[f64]) -> Result<PercentileTable, MetricsError> {
    let max = ecdf.max();
    let rows = percentiles
        .iter()
        .map(|&p| Ok(PercentileRow { p, lower: ecdf.upper_share_floor(p)?, upper: max }))
        .collect::<Result<_, MetricsError>>()?;
    Ok(PercentileTable { rows, max })
}

/// Horizon size divided by the participant count, one sample per participant.
pub fn normalized_ranges<S: Borrow<DistanceSummary>>(summaries: impl IntoIterator<Item = S>, n_participants: usize) -> Result<Ecdf, MetricsError> {
    if n_participants == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ecdf::from_samples(summaries.into_iter().map(|s| s.borrow().horizon_size as f64 / n_participants as f64))
}

pub fn absolute_ranges<S: Borrow<DistanceSummary>>(summaries: impl IntoIterator<Item = S>) -> Result<Ecdf, MetricsError> {
    Ecdf::from_samples(summaries.into_iter().map(|s| s.borrow().horizon_size as f64))
}

/// Minimal hop counts and minimal durations (seconds) pooled over all reachable ordered pairs.
pub fn distance_ecdfs<S: Borrow<DistanceSummary>>(summaries: impl IntoIterator<Item = S>) -> Result<(Ecdf, Ecdf), MetricsError> {
    let mut hops = Vec::new();
    let mut durations = Vec::new();
    for s in summaries {
        for d in s.borrow().targets.values() {
            hops.push(d.min_hops as f64);
            durations.push(d.min_duration as f64);
        }
    }
    Ok((Ecdf::from_samples(hops)?, Ecdf::from_samples(durations)?))
}

/// Per grid instant, nearest-rank percentiles of the horizon sizes across sources.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthBands {
    pub grid: Vec<TimeInstant>,
    pub percentiles: Vec<f64>,
    /// `values[i][j]`: percentile `j` at grid instant `i`.
    pub values: Vec<Vec<usize>>,
}

impl GrowthBands {
    fn from_columns(grid: &[TimeInstant], mut columns: Vec<Vec<usize>>, percentiles: &[f64]) -> Result<Self, MetricsError> {
        percentiles.iter().try_for_each(|&p| check_percentile(p))?;
        let values = columns
            .iter_mut()
            .map(|col| {
                if col.is_empty() {
                    return Err(MetricsError::EmptyInput);
                }
                col.sort_unstable();
                Ok(percentiles.iter().map(|&p| col[nearest_rank(p, col.len()) - 1]).collect())
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { grid: grid.to_vec(), percentiles: percentiles.to_vec(), values })
    }
}

pub fn growth_bands(curves: &[Vec<(TimeInstant, usize)>], grid: &[TimeInstant], percentiles: &[f64]) -> Result<GrowthBands, MetricsError> {
    if curves.is_empty() || grid.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut columns = vec![Vec::with_capacity(curves.len()); grid.len()];
    for curve in curves {
        if curve.len() != grid.len() || curve.iter().zip(grid).any(|(&(t, _), &g)| t != g) {
            return Err(MetricsError::GridMismatch);
        }
        for (col, &(_, count)) in columns.iter_mut().zip(curve) {
            col.push(count);
        }
    }
    GrowthBands::from_columns(grid, columns, percentiles)
}

/// Everything the analysis writes, reduced from a summary stream in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub participants: usize,
    pub horizons: Vec<(ParticipantId, usize)>,
    pub normalized: Ecdf,
    pub absolute: Ecdf,
    /// `None` when no pair of participants is connected.
    pub hops: Option<Ecdf>,
    pub durations: Option<Ecdf>,
    pub growth: GrowthBands,
    pub bounds: Vec<(BoundClass, usize)>,
}

pub struct MetricsAccumulator {
    n_participants: usize,
    grid: Vec<TimeInstant>,
    horizons: Vec<(ParticipantId, usize)>,
    hops: Vec<f64>,
    durations: Vec<f64>,
    growth_columns: Vec<Vec<usize>>,
}

impl MetricsAccumulator {
    pub fn new(n_participants: usize, grid: Vec<TimeInstant>) -> Self {
        let growth_columns = vec![Vec::with_capacity(n_participants); grid.len()];
        Self { n_participants, grid, horizons: Vec::with_capacity(n_participants), hops: Vec::new(), durations: Vec::new(), growth_columns }
    }

    pub fn push(&mut self, summary: &DistanceSummary) {
        self.horizons.push((summary.source.clone(), summary.horizon_size));
        for d in summary.targets.values() {
            self.hops.push(d.min_hops as f64);
            self.durations.push(d.min_duration as f64);
        }
        for (col, (_, count)) in self.growth_columns.iter_mut().zip(summary.growth(&self.grid)) {
            col.push(count);
        }
    }

    pub fn finish(self, bounds: Vec<(BoundClass, usize)>, band_percentiles: &[f64]) -> Result<Analysis, MetricsError> {
        let n = self.n_participants;
        if n == 0 {
            return Err(MetricsError::EmptyInput);
        }
        let normalized = Ecdf::from_samples(self.horizons.iter().map(|&(_, h)| h as f64 / n as f64))?;
        let absolute = Ecdf::from_samples(self.horizons.iter().map(|&(_, h)| h as f64))?;
        let hops = Ecdf::from_samples(self.hops).ok();
        let durations = Ecdf::from_samples(self.durations).ok();
        let growth = GrowthBands::from_columns(&self.grid, self.growth_columns, band_percentiles)?;
        Ok(Analysis { participants: n, horizons: self.horizons, normalized, absolute, hops, durations, growth, bounds })
    }
}

fn days(seconds: f64) -> f64 {
    seconds / SECONDS_PER_DAY as f64
}

/// Column formatting of each metric in the CSV outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    NormalizedRange,
    AbsoluteRange,
    TopologicalDistance,
    TemporalDistanceDays,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Self::NormalizedRange => "normalized_range",
            Self::AbsoluteRange => "absolute_range",
            Self::TopologicalDistance => "topological_distance",
            Self::TemporalDistanceDays => "temporal_distance_days",
        }
    }

    /// Renders a raw sample (seconds for temporal distances).
    pub fn format(self, raw: f64) -> String {
        match self {
            Self::NormalizedRange => format!("{raw:.6}"),
            Self::AbsoluteRange | Self::TopologicalDistance => format!("{}", raw as i64),
            Self::TemporalDistanceDays => format!("{:.3}", days(raw)),
        }
    }
}

impl Analysis {
    pub fn horizons_csv(&self) -> String {
        let mut out = String::from("participant,horizon_size,normalized\n");
        for (p, h) in &self.horizons {
            writeln!(out, "{p},{h},{:.6}", *h as f64 / self.participants as f64).unwrap();
        }
        out
    }

    fn ecdf_csv(ecdf: Option<&Ecdf>, metric: Metric) -> String {
        let mut out = String::from("value,cum_fraction\n");
        for (v, f) in ecdf.into_iter().flat_map(Ecdf::points) {
            writeln!(out, "{},{f:.6}", metric.format(v)).unwrap();
        }
        out
    }

    pub fn topological_ecdf_csv(&self) -> String {
        Self::ecdf_csv(self.hops.as_ref(), Metric::TopologicalDistance)
    }

    pub fn temporal_ecdf_csv(&self) -> String {
        Self::ecdf_csv(self.durations.as_ref(), Metric::TemporalDistanceDays)
    }

    pub fn tables(&self, percentiles: &[f64]) -> Result<Vec<(Metric, PercentileTable)>, MetricsError> {
        let mut tables = vec![
            (Metric::NormalizedRange, percentile_table_for(&self.normalized, percentiles)?),
            (Metric::AbsoluteRange, percentile_table_for(&self.absolute, percentiles)?),
        ];
        if let (Some(h), Some(d)) = (&self.hops, &self.durations) {
            tables.push((Metric::TopologicalDistance, percentile_table_for(h, percentiles)?));
            tables.push((Metric::TemporalDistanceDays, percentile_table_for(d, percentiles)?));
        }
        Ok(tables)
    }

    pub fn percentiles_csv(&self, percentiles: &[f64]) -> Result<String, MetricsError> {
        let mut out = String::from("metric,p,lower,upper\n");
        for (metric, table) in self.tables(percentiles)? {
            for row in &table.rows {
                writeln!(out, "{},{:.2},{},{}", metric.name(), row.p, metric.format(row.lower), metric.format(row.upper)).unwrap();
            }
            writeln!(out, "{},max,{},{}", metric.name(), metric.format(table.max), metric.format(table.max)).unwrap();
        }
        Ok(out)
    }

    pub fn bounds_csv(&self) -> String {
        let total: usize = self.bounds.iter().map(|&(_, c)| c).sum();
        let mut out = String::from("class,count,share\n");
        for &(class, count) in &self.bounds {
            let share = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            writeln!(out, "{class},{count},{share:.6}").unwrap();
        }
        out
    }

    pub fn growth_bands_csv(&self) -> String {
        let mut out = String::from("t");
        for p in &self.growth.percentiles {
            write!(out, ",p{}", (p * 100.0).round() as u32).unwrap();
        }
        out.push('\n');
        for (t, row) in self.growth.grid.iter().zip(&self.growth.values) {
            write!(out, "{t}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}
