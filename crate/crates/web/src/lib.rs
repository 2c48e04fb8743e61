//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; the page does the plotting.

use std::collections::BTreeMap;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use review_diffusion::metrics::{percentile_table, Analysis, Ecdf, MetricsAccumulator, PercentileTable, BAND_PERCENTILES};
use review_diffusion::model::SECONDS_PER_DAY;
use review_diffusion::synthetic::{generate, SyntheticParams};
use review_diffusion::{build_successor_dag, fixtures, shortest_witness, GraphFile, SummaryStream, TemporalHypergraph, TimeInstant};

const GRID_POINTS: i64 = 28;

#[derive(Debug, Serialize)]
pub struct FigureChannel {
    pub id: String,
    pub closed: i64,
    pub members: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct FigureTarget {
    pub hops: u32,
    pub duration: i64,
    pub arrival: i64,
    /// Channel ids of a minimum-hop journey.
    pub witness: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct FigureView {
    pub channels: Vec<FigureChannel>,
    pub arcs: Vec<(String, String)>,
    pub sources: BTreeMap<String, BTreeMap<String, FigureTarget>>,
}

/// Reachability in the six-participant example for the given close times.
pub fn figure_view(e1: i64, e2: i64, e3: i64, e4: i64) -> Result<FigureView, String> {
    if [e1, e2, e3, e4].iter().any(|t| !(0..=10).contains(t)) {
        return Err("close times must lie in [0, 10]".into());
    }
    let graph = fixtures::figure_with_closes(e1, e2, e3, e4);
    let dag = build_successor_dag(&graph);
    let id = |c: u32| graph.channel(c).id.clone();
    let channels = graph
        .channels()
        .iter()
        .map(|c| FigureChannel { id: c.id.clone(), closed: c.closed.seconds(), members: c.participants.iter().map(|p| p.as_str().to_owned()).collect() })
        .collect();
    let arcs = dag.arcs().map(|(e, f)| (id(e), id(f))).collect();
    let mut sources = BTreeMap::new();
    for summary in SummaryStream::new(&graph, Some(1)) {
        let mut targets = BTreeMap::new();
        for (target, d) in &summary.targets {
            let witness = shortest_witness(&graph, &dag, summary.source.as_str(), target.as_str())
                .map_err(|e| e.to_string())?
                .map(|j| j.hops)
                .unwrap_or_default();
            targets.insert(
                target.as_str().to_owned(),
                FigureTarget { hops: d.min_hops, duration: d.min_duration, arrival: d.earliest_arrival.seconds(), witness },
            );
        }
        sources.insert(summary.source.as_str().to_owned(), targets);
    }
    Ok(FigureView { channels, arcs, sources })
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    fn from_ecdf(ecdf: Option<&Ecdf>, scale: f64) -> Self {
        let (x, y) = ecdf.map(|e| e.points().map(|(v, f)| (v * scale, f)).unzip()).unwrap_or_default();
        Self { x, y }
    }
}

#[derive(Debug, Serialize)]
pub struct Bands {
    /// Grid instants as days since the window start.
    pub days: Vec<f64>,
    pub percentiles: Vec<f64>,
    pub values: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisView {
    pub participants: usize,
    pub channels: usize,
    pub normalized: Curve,
    pub hops: Curve,
    pub duration_days: Curve,
    pub normalized_table: PercentileTable,
    pub absolute_table: PercentileTable,
    pub growth: Bands,
    pub bounds: BTreeMap<String, usize>,
}

/// At most `GRID_POINTS` evenly spaced instants ending at the window end.
fn grid(graph: &TemporalHypergraph) -> Vec<TimeInstant> {
    let window = graph.window();
    let step = (window.length() + GRID_POINTS - 1) / GRID_POINTS;
    let mut grid: Vec<TimeInstant> = (1..).map(|k| window.start() + k * step).take_while(|&t| t < window.end()).collect();
    grid.push(window.end());
    grid
}

pub fn analysis_view(graph: &TemporalHypergraph) -> Result<AnalysisView, String> {
    let grid = grid(graph);
    let mut acc = MetricsAccumulator::new(graph.participant_count(), grid.clone());
    for summary in SummaryStream::new(graph, Some(1)) {
        acc.push(&summary);
    }
    let a: Analysis = acc.finish(graph.bound_histogram(), &BAND_PERCENTILES).map_err(|e| e.to_string())?;
    let start = graph.window().start();
    let day = SECONDS_PER_DAY as f64;
    Ok(AnalysisView {
        participants: graph.participant_count(),
        channels: graph.channel_count(),
        normalized: Curve::from_ecdf(Some(&a.normalized), 1.0),
        hops: Curve::from_ecdf(a.hops.as_ref(), 1.0),
        duration_days: Curve::from_ecdf(a.durations.as_ref(), 1.0 / day),
        normalized_table: percentile_table(&a.normalized),
        absolute_table: percentile_table(&a.absolute),
        growth: Bands {
            days: grid.iter().map(|&t| (t - start) as f64 / day).collect(),
            percentiles: a.growth.percentiles,
            values: a.growth.values,
        },
        bounds: a.bounds.iter().map(|(class, count)| (class.as_str().to_owned(), *count)).collect(),
    })
}

pub fn synthetic_view(participants: usize, channels: usize, weeks: u32, lifespan_days: f64, skew: f64, seed: u64) -> Result<AnalysisView, String> {
    if !(2..=5000).contains(&participants) || !(1..=20_000).contains(&channels) || !(1..=12).contains(&weeks) {
        return Err("participants in 2..=5000, channels in 1..=20000, weeks in 1..=12".into());
    }
    if !(lifespan_days > 0.0 && lifespan_days.is_finite()) || !(skew >= 0.0 && skew.is_finite()) {
        return Err("lifespan must be positive and skew non-negative".into());
    }
    let params = SyntheticParams { participants, channels, weeks, mean_lifespan_days: lifespan_days, activity_skew: skew, seed, ..SyntheticParams::default() };
    analysis_view(&generate(&params))
}

pub fn graph_view(json: &str) -> Result<AnalysisView, String> {
    let file: GraphFile = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let graph = file.into_graph().map_err(|e| e.to_string())?;
    analysis_view(&graph)
}

fn to_js<T: Serialize>(result: Result<T, String>) -> Result<String, JsError> {
    let value = result.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = exploreFigure)]
pub fn explore_figure(e1: i32, e2: i32, e3: i32, e4: i32) -> Result<String, JsError> {
    to_js(figure_view(e1.into(), e2.into(), e3.into(), e4.into()))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate(participants: u32, channels: u32, weeks: u32, lifespan_days: f64, skew: f64, seed: u32) -> Result<String, JsError> {
    to_js(synthetic_view(participants as usize, channels as usize, weeks, lifespan_days, skew, seed.into()))
}

#[wasm_bindgen(js_name = analyzeGraph)]
pub fn analyze_graph(json: &str) -> Result<String, JsError> {
    to_js(graph_view(json))
}
