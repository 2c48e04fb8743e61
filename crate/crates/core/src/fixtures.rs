//! Small hand-built networks with known reachability, bundled for tests and `selfcheck`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{build_graph, Channel, ObservationWindow, TemporalHypergraph, TimeInstant};

pub struct Fixture {
    pub name: String,
    pub graph: TemporalHypergraph,
}

fn channel(id: &str, closed: i64, members: &[&str]) -> Channel {
    Channel::new(id, TimeInstant(0), TimeInstant(closed), members.iter().copied()).expect("fixture channel")
}

fn small_window() -> ObservationWindow {
    ObservationWindow::new(TimeInstant(0), TimeInstant(10)).expect("fixture window")
}

/// The six-participant, four-channel example with close times
/// e1 = 1, e2 = 2, e4 = 3, e3 = 4.
pub fn figure_all_reachable() -> TemporalHypergraph {
    figure_with_closes(1, 2, 4, 3)
}

/// Same memberships with e1 closing last (e1 > e2 >= e3, e4 <= e2).
pub fn figure_blocked() -> TemporalHypergraph {
    figure_with_closes(3, 2, 2, 1)
}

pub fn figure_with_closes(e1: i64, e2: i64, e3: i64, e4: i64) -> TemporalHypergraph {
    build_graph(
        vec![
            channel("e1", e1, &["v1", "v2", "v3"]),
            channel("e2", e2, &["v2", "v4"]),
            channel("e3", e3, &["v3", "v5", "v6"]),
            channel("e4", e4, &["v4", "v5", "v6"]),
        ],
        small_window(),
    )
    .expect("figure graph")
}

/// Two pairwise-chatting cliques whose channels alternate in time and share the broker `b`.
pub fn interleaved_cliques() -> TemporalHypergraph {
    build_graph(
        vec![
            channel("a1", 1, &["a1", "a2"]),
            channel("c1", 2, &["c1", "b"]),
            channel("a2", 3, &["a2", "b"]),
            channel("c2", 4, &["c1", "c2"]),
            channel("a3", 5, &["a1", "b"]),
            channel("c3", 6, &["c2", "b"]),
            channel("a4", 7, &["a2", "a1"]),
        ],
        small_window(),
    )
    .expect("cliques graph")
}

/// Hub `h` in `k` channels closing at 1..=k, each with two fresh leaves.
pub fn star(k: usize) -> TemporalHypergraph {
    let leaves: Vec<[String; 2]> = (0..k).map(|i| [format!("l{i}a"), format!("l{i}b")]).collect();
    let channels = leaves
        .iter()
        .enumerate()
        .map(|(i, [a, b])| Channel::new(format!("s{i}"), TimeInstant(0), TimeInstant(i as i64 + 1), ["h", a.as_str(), b.as_str()]))
        .collect::<Result<Vec<_>, _>>()
        .expect("star channels");
    let window = ObservationWindow::new(TimeInstant(0), TimeInstant(k as i64 + 1)).expect("star window");
    build_graph(channels, window).expect("star graph")
}

/// Random graph with up to `max_participants` and `max_channels`, small close-time
/// range so ties and parallel hyperedges are common.
pub fn random_small(seed: u64, max_participants: usize, max_channels: usize) -> TemporalHypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_participants);
    let m = rng.gen_range(1..=max_channels);
    let horizon = rng.gen_range(1..=2 * m as i64);
    let mut channels: Vec<Channel> = Vec::with_capacity(m);
    for i in 0..m {
        if i > 0 && rng.gen_bool(0.1) {
            // parallel hyperedge
            let twin = channels[rng.gen_range(0..i)].clone();
            channels.push(Channel { id: format!("r{i:02}"), ..twin });
            continue;
        }
        let size = rng.gen_range(1..=n.min(4));
        let mut members: Vec<String> = Vec::with_capacity(size);
        while members.len() < size {
            let p = format!("u{:02}", rng.gen_range(0..n));
            if !members.contains(&p) {
                members.push(p);
            }
        }
        let closed = rng.gen_range(0..=horizon);
        let opened = closed - rng.gen_range(0..=3);
        channels.push(Channel::new(format!("r{i:02}"), TimeInstant(opened), TimeInstant(closed), members).expect("random channel"));
    }
    let window = ObservationWindow::new(TimeInstant(0), TimeInstant(horizon + 1)).expect("random window");
    build_graph(channels, window).expect("random graph")
}

/// The fixture set run by `selfcheck`.
pub fn bundled() -> Vec<Fixture> {
    let mut fixtures = vec![
        Fixture { name: "figure-all-reachable".into(), graph: figure_all_reachable() },
        Fixture { name: "figure-blocked".into(), graph: figure_blocked() },
        Fixture { name: "interleaved-cliques".into(), graph: interleaved_cliques() },
        Fixture { name: "star-5".into(), graph: star(5) },
    ];
    fixtures.extend((0..24).map(|seed| Fixture { name: format!("random-{seed:02}"), graph: random_small(seed, 12, 15) }));
    fixtures
}
