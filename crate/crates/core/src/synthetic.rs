//! Seeded synthetic review networks for benchmarks, demos and property tests.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{build_graph, Channel, ObservationWindow, TemporalHypergraph, TimeInstant, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    /// Size of the participant pool; inactive participants do not appear in the graph.
    pub participants: usize,
    pub channels: usize,
    pub window_start: TimeInstant,
    pub weeks: u32,
    /// Mean channel lifespan in days.
    pub mean_lifespan_days: f64,
    /// Zipf exponent of participant activity.
    pub activity_skew: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            participants: 200,
            channels: 800,
            // 2020-02-03T00:00:00Z, a Monday
            window_start: TimeInstant(1_580_688_000),
            weeks: 4,
            mean_lifespan_days: 2.0,
            activity_skew: 0.8,
            seed: 7,
        }
    }
}

/// Generates a review network: skewed participant activity, 2 + geometric
/// channel sizes, uniform openings and exponential lifespans. Some channels
/// start before the window so every bound class occurs.
pub fn generate(params: &SyntheticParams) -> TemporalHypergraph {
    assert!(params.participants >= 2 && params.channels >= 1 && params.weeks >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let start = params.window_start;
    let end = start + SECONDS_PER_DAY * 7 * params.weeks as i64;
    let window = ObservationWindow::new(start, end).expect("positive window");
    let weights: Vec<f64> = (0..params.participants).map(|i| 1.0 / ((i + 1) as f64).powf(params.activity_skew)).collect();
    let activity = WeightedIndex::new(&weights).expect("positive weights");
    let mean_lifespan = params.mean_lifespan_days * SECONDS_PER_DAY as f64;

    let channels = (0..params.channels).map(|i| {
        let mut size = 2;
        while size < params.participants.min(12) && rng.gen_bool(0.45) {
            size += 1;
        }
        let mut members = Vec::with_capacity(size);
        while members.len() < size {
            let p = activity.sample(&mut rng);
            if !members.contains(&p) {
                members.push(p);
            }
        }
        let opened = TimeInstant(rng.gen_range(start.seconds() - 2 * SECONDS_PER_DAY..end.seconds()));
        let lifespan = (-(1.0 - rng.gen::<f64>()).ln() * mean_lifespan) as i64;
        let closed = (opened + lifespan).max(start);
        Channel::new(format!("c{i:06}"), opened, closed, members.iter().map(|p| format!("p{p:05}")))
            .expect("generated channel is valid")
    });
    build_graph(channels.collect::<Vec<_>>(), window).expect("generated graph is non-empty")
}
