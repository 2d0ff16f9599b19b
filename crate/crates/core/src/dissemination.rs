//! Susceptible-infected dissemination on temporal graphs, and the two binary
//! classification tasks built from it:
//!
//! - ct1: SI spreading (class 1) against vertices that switch to infected at
//!   random regardless of contacts (class 0), with the switch rate calibrated
//!   so both classes reach the same expected final infected fraction;
//! - ct2: SI spreading with a low (class 0) and a high (class 1) contagion
//!   probability.
//!
//! Updates are synchronous: at step `t` a susceptible vertex can only be
//! infected by a neighbour in `N_t(v)` that was infected before `t`.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::seeds::{derive_seed, stream_rng};
use crate::temporal_graph::{Dataset, DynamicGraph, LabelStream, TemporalEdge};

const TAG_TOPOLOGY: u64 = 1;
const TAG_CT1: u64 = 2;
const TAG_CT2: u64 = 3;
const TAG_CALIBRATION: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiConfig {
    /// Contagion probability `p` per step of contact with an infected vertex.
    pub infection_probability: f64,
    pub initial_infected: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchConfig {
    /// Per-step probability that a susceptible vertex becomes infected.
    pub rate: f64,
    pub initial_infected: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum EdgeModel {
    /// Reuse the edges of an existing graph.
    Replayed(DynamicGraph),
    /// Independent Erdős–Rényi snapshot with edge probability `q` per step.
    RandomTemporal { edge_probability: f64 },
}

#[derive(Clone, Debug)]
pub struct TopologySpec {
    pub num_vertices: usize,
    pub horizon: usize,
    pub edge_model: EdgeModel,
}

/// Knobs shared by the task generators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskOptions {
    pub initial_infected: usize,
    /// Monte-Carlo repetitions per topology when calibrating ct1.
    pub calibration_reps: usize,
    pub seed: u64,
}

impl TaskOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            initial_infected: 1,
            calibration_reps: 64,
            seed,
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// Undirected random temporal graph: every pair is linked at each step with
/// probability `q`, independently.
pub fn random_temporal_graph(
    num_vertices: usize,
    horizon: usize,
    q: f64,
    seed: u64,
) -> Result<DynamicGraph> {
    check_probability("edge probability", q)?;
    let mut rng = stream_rng(seed, 0);
    let mut edges = Vec::new();
    for t in 1..=horizon {
        for u in 0..num_vertices {
            for v in u + 1..num_vertices {
                if rng.random::<f64>() < q {
                    edges.push(TemporalEdge::new(u, v, t));
                }
            }
        }
    }
    DynamicGraph::new(num_vertices, horizon, edges, false)
}

pub fn generate_topologies(
    spec: &TopologySpec,
    count: usize,
    seed: u64,
) -> Result<Vec<DynamicGraph>> {
    match &spec.edge_model {
        EdgeModel::Replayed(g) => Ok(vec![g.clone(); count]),
        EdgeModel::RandomTemporal { edge_probability } => map_indexed(count, |i| {
            random_temporal_graph(
                spec.num_vertices,
                spec.horizon,
                *edge_probability,
                derive_seed(seed, &[TAG_TOPOLOGY, i as u64]),
            )
        })
        .into_iter()
        .collect(),
    }
}

fn seed_infections(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Option<usize>>> {
    if k > n {
        return Err(Error::Config(format!(
            "{k} initial infections in a {n}-vertex graph"
        )));
    }
    let mut infected_at = vec![None; n];
    for v in sample(rng, n, k).iter() {
        infected_at[v] = Some(0);
    }
    Ok(infected_at)
}

/// Infection times under the SI process; `Some(0)` marks initial infections.
pub fn si_infection_times(topology: &DynamicGraph, cfg: &SiConfig) -> Result<Vec<Option<usize>>> {
    check_probability("infection probability", cfg.infection_probability)?;
    let mut rng = stream_rng(cfg.seed, 0);
    let infected_at = seed_infections(topology.num_vertices(), cfg.initial_infected, &mut rng)?;
    Ok(spread_si(
        topology,
        infected_at,
        cfg.infection_probability,
        &mut rng,
    ))
}

/// SI process started from the given `sources`.
pub fn si_from_sources(
    topology: &DynamicGraph,
    sources: &[usize],
    p: f64,
    seed: u64,
) -> Result<Vec<Option<usize>>> {
    check_probability("infection probability", p)?;
    let n = topology.num_vertices();
    let mut infected_at = vec![None; n];
    for &v in sources {
        if v >= n {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                num_vertices: n,
            });
        }
        infected_at[v] = Some(0);
    }
    Ok(spread_si(
        topology,
        infected_at,
        p,
        &mut stream_rng(seed, 0),
    ))
}

fn spread_si(
    topology: &DynamicGraph,
    mut infected_at: Vec<Option<usize>>,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<usize>> {
    let mut newly = Vec::new();
    for snap in topology.snapshots() {
        let t = snap.time();
        newly.clear();
        for v in 0..infected_at.len() {
            if infected_at[v].is_some() {
                continue;
            }
            let exposed = snap
                .neighbors(v)
                .iter()
                .any(|&u| infected_at[u].is_some_and(|s| s < t));
            if exposed && rng.random::<f64>() < p {
                newly.push(v);
            }
        }
        for &v in &newly {
            infected_at[v] = Some(t);
        }
    }
    infected_at
}

/// Binary label stream of an SI process on `topology`.
pub fn simulate_si(topology: &DynamicGraph, cfg: &SiConfig) -> Result<LabelStream> {
    Ok(LabelStream::from_switch_times(&si_infection_times(
        topology, cfg,
    )?))
}

/// Infection times when every susceptible vertex switches with probability
/// `rate` per step, ignoring edges. One uniform is drawn per vertex and step
/// whether or not the vertex is still susceptible.
pub fn switch_infection_times(
    topology: &DynamicGraph,
    cfg: &SwitchConfig,
) -> Result<Vec<Option<usize>>> {
    check_probability("switch rate", cfg.rate)?;
    let n = topology.num_vertices();
    let mut rng = stream_rng(cfg.seed, 0);
    let mut infected_at = seed_infections(n, cfg.initial_infected, &mut rng)?;
    for t in 1..=topology.horizon() {
        for slot in infected_at.iter_mut() {
            let u: f64 = rng.random();
            if slot.is_none() && u < cfg.rate {
                *slot = Some(t);
            }
        }
    }
    Ok(infected_at)
}

pub fn simulate_random_switch(topology: &DynamicGraph, cfg: &SwitchConfig) -> Result<LabelStream> {
    Ok(LabelStream::from_switch_times(&switch_infection_times(
        topology, cfg,
    )?))
}

fn infected_fraction(times: &[Option<usize>]) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    times.iter().filter(|t| t.is_some()).count() as f64 / times.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub rate: f64,
    /// Monte-Carlo mean final infected fraction of the SI class.
    pub si_fraction: f64,
    /// Same for the random-switch class at `rate`.
    pub switch_fraction: f64,
}

/// Fits the random-switch rate whose mean final infected fraction matches
/// that of SI with probability `p` over `topologies`.
///
/// Both sides are Monte-Carlo estimates. The switch side uses common random
/// numbers across candidate rates: a susceptible vertex ends up infected iff
/// the smallest of its per-step uniforms is below the rate, so the estimate
/// is monotone in the rate and bisection is well defined.
pub fn calibrate_switch_rate(
    topologies: &[DynamicGraph],
    p: f64,
    opts: &TaskOptions,
) -> Result<Calibration> {
    check_probability("infection probability", p)?;
    let reps = opts.calibration_reps.max(1);
    let jobs = topologies.len() * reps;
    let base = derive_seed(opts.seed, &[TAG_CALIBRATION]);

    let si: Vec<f64> = map_indexed(jobs, |j| {
        let cfg = SiConfig {
            infection_probability: p,
            initial_infected: opts.initial_infected,
            seed: derive_seed(base, &[0, j as u64]),
        };
        si_infection_times(&topologies[j / reps], &cfg).map(|t| infected_fraction(&t))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let si_fraction = si.iter().sum::<f64>() / jobs.max(1) as f64;

    // Per run: initial fraction and the per-vertex minimum uniforms.
    let runs: Vec<(f64, Vec<f64>)> = map_indexed(jobs, |j| {
        let g = &topologies[j / reps];
        let n = g.num_vertices();
        let mut rng = stream_rng(derive_seed(base, &[1, j as u64]), 0);
        let seeded = seed_infections(n, opts.initial_infected, &mut rng)?;
        let mut minima: Vec<f64> = vec![f64::INFINITY; n];
        for _ in 0..g.horizon() {
            for m in minima.iter_mut() {
                *m = m.min(rng.random::<f64>());
            }
        }
        let susceptible: Vec<f64> = minima
            .into_iter()
            .zip(&seeded)
            .filter(|(_, s)| s.is_none())
            .map(|(m, _)| m)
            .collect();
        Ok((opts.initial_infected as f64 / n.max(1) as f64, susceptible))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let sizes: Vec<f64> = (0..jobs)
        .map(|j| topologies[j / reps].num_vertices().max(1) as f64)
        .collect();
    let switch_fraction = |rate: f64| -> f64 {
        let total: f64 = runs
            .iter()
            .zip(&sizes)
            .map(|((init, minima), n)| {
                init + minima.iter().filter(|&&m| m < rate).count() as f64 / n
            })
            .sum();
        total / jobs.max(1) as f64
    };

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if switch_fraction(mid) < si_fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        rate: hi,
        si_fraction,
        switch_fraction: switch_fraction(hi),
    })
}

/// ct1: for each topology one SI(`p`) graph (class 1) and one calibrated
/// random-switch graph (class 0).
pub fn generate_ct1(
    topologies: &[DynamicGraph],
    p: f64,
    opts: &TaskOptions,
) -> Result<(Dataset, Calibration)> {
    if topologies.is_empty() {
        return Err(Error::Config(
            "task generation needs at least one topology".into(),
        ));
    }
    let calibration = calibrate_switch_rate(topologies, p, opts)?;
    let pairs = map_indexed(topologies.len(), |i| {
        let g = &topologies[i];
        let si = simulate_si(
            g,
            &SiConfig {
                infection_probability: p,
                initial_infected: opts.initial_infected,
                seed: derive_seed(opts.seed, &[TAG_CT1, i as u64, 1]),
            },
        )?;
        let switch = simulate_random_switch(
            g,
            &SwitchConfig {
                rate: calibration.rate,
                initial_infected: opts.initial_infected,
                seed: derive_seed(opts.seed, &[TAG_CT1, i as u64, 0]),
            },
        )?;
        Ok([
            (g.clone().with_labels(si)?, 1u8),
            (g.clone().with_labels(switch)?, 0u8),
        ])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((
        Dataset::from_pairs(pairs.into_iter().flatten())?,
        calibration,
    ))
}

/// ct2: for each topology one SI(`p_low`) graph (class 0) and one
/// SI(`p_high`) graph (class 1).
pub fn generate_ct2(
    topologies: &[DynamicGraph],
    p_low: f64,
    p_high: f64,
    opts: &TaskOptions,
) -> Result<Dataset> {
    if topologies.is_empty() {
        return Err(Error::Config(
            "task generation needs at least one topology".into(),
        ));
    }
    let pairs = map_indexed(topologies.len(), |i| {
        let g = &topologies[i];
        let run = |p: f64, class: u8| -> Result<(DynamicGraph, u8)> {
            let labels = simulate_si(
                g,
                &SiConfig {
                    infection_probability: p,
                    initial_infected: opts.initial_infected,
                    seed: derive_seed(opts.seed, &[TAG_CT2, i as u64, class as u64]),
                },
            )?;
            Ok((g.clone().with_labels(labels)?, class))
        };
        Ok([run(p_high, 1)?, run(p_low, 0)?])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Dataset::from_pairs(pairs.into_iter().flatten())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(horizon: usize) -> DynamicGraph {
        DynamicGraph::new_static(5, horizon, &[(0, 1), (0, 2), (0, 3), (0, 4)], false).unwrap()
    }

    fn hub_si(p: f64, seed: u64) -> Vec<Option<usize>> {
        si_from_sources(&star(1), &[0], p, seed).unwrap()
    }

    #[test]
    fn p_one_infects_every_exposed_vertex() {
        let g = DynamicGraph::new(
            4,
            3,
            [
                TemporalEdge::new(0, 1, 1),
                TemporalEdge::new(1, 2, 2),
                TemporalEdge::new(2, 3, 2),
            ],
            false,
        )
        .unwrap();
        let cfg = SiConfig {
            infection_probability: 1.0,
            initial_infected: 0,
            seed: 1,
        };
        assert_eq!(si_infection_times(&g, &cfg).unwrap(), vec![None; 4]);
        let times = si_from_sources(&g, &[0], 1.0, 7).unwrap();
        // 1 at t=1; 2 at t=2 (from 1); 3 is only adjacent to 2 at t=2, when 2
        // was still susceptible, so it stays susceptible.
        assert_eq!(times, vec![Some(0), Some(1), Some(2), None]);
    }

    #[test]
    fn p_zero_keeps_labels() {
        let g = random_temporal_graph(10, 5, 0.5, 3).unwrap();
        let cfg = SiConfig {
            infection_probability: 0.0,
            initial_infected: 2,
            seed: 4,
        };
        let times = si_infection_times(&g, &cfg).unwrap();
        assert_eq!(times.iter().filter(|t| t.is_some()).count(), 2);
        assert!(times.iter().all(|t| matches!(t, None | Some(0))));
    }

    #[test]
    fn star_hub_expected_new_infections() {
        let runs = 100_000;
        let total: usize = (0..runs)
            .map(|s| {
                hub_si(0.5, s)
                    .iter()
                    .skip(1)
                    .filter(|t| t.is_some())
                    .count()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn switch_limits() {
        let g = DynamicGraph::new(6, 4, [], false).unwrap();
        let none = switch_infection_times(
            &g,
            &SwitchConfig {
                rate: 0.0,
                initial_infected: 0,
                seed: 1,
            },
        )
        .unwrap();
        assert!(none.iter().all(Option::is_none));
        let all = switch_infection_times(
            &g,
            &SwitchConfig {
                rate: 1.0,
                initial_infected: 0,
                seed: 1,
            },
        )
        .unwrap();
        assert!(all.iter().all(|t| *t == Some(1)));
    }

    #[test]
    fn seed_determinism() {
        let g = random_temporal_graph(15, 8, 0.2, 9).unwrap();
        let cfg = SiConfig {
            infection_probability: 0.4,
            initial_infected: 1,
            seed: 12,
        };
        assert_eq!(
            simulate_si(&g, &cfg).unwrap(),
            simulate_si(&g, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_invalid_probabilities() {
        let g = DynamicGraph::new(2, 1, [], false).unwrap();
        let cfg = SiConfig {
            infection_probability: 1.5,
            initial_infected: 1,
            seed: 0,
        };
        assert!(simulate_si(&g, &cfg).is_err());
        assert!(random_temporal_graph(3, 1, -0.1, 0).is_err());
        let too_many = SiConfig {
            infection_probability: 0.5,
            initial_infected: 3,
            seed: 0,
        };
        assert!(simulate_si(&g, &too_many).is_err());
    }

    #[test]
    fn ct_tasks_are_balanced() {
        let topo = generate_topologies(
            &TopologySpec {
                num_vertices: 12,
                horizon: 6,
                edge_model: EdgeModel::RandomTemporal {
                    edge_probability: 0.2,
                },
            },
            20,
            5,
        )
        .unwrap();
        let opts = TaskOptions::new(5);
        let (ct1, cal) = generate_ct1(&topo, 0.5, &opts).unwrap();
        assert_eq!(ct1.len(), 40);
        assert_eq!(ct1.class_counts(), [20, 20]);
        assert!((0.0..=1.0).contains(&cal.rate));
        let ct2 = generate_ct2(&topo, 0.2, 0.8, &opts).unwrap();
        assert_eq!(ct2.class_counts(), [20, 20]);
        assert!(generate_ct2(&[], 0.2, 0.8, &opts).is_err());
    }

    #[test]
    fn isolated_vertices_never_spread() {
        let topo = vec![DynamicGraph::new(8, 5, [], false).unwrap(); 4];
        let opts = TaskOptions::new(2);
        let (ct1, _) = generate_ct1(&topo, 0.5, &opts).unwrap();
        for lg in ct1.graphs().iter().filter(|g| g.class == 1) {
            assert_eq!(lg.graph.labels().active_fraction(5), 1.0 / 8.0);
        }
    }
}
