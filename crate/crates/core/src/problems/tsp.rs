use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{argmax_priority, CandidateFailure, EvalReport, ProblemError};
use crate::dsl::{evaluate, EvalLimits, Program, Value};

const CLUSTERS: usize = 3;
const CLUSTER_STD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TspMode {
    #[default]
    Uniform,
    GaussianMixture,
}

impl std::str::FromStr for TspMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(TspMode::Uniform),
            "gaussian-mixture" | "gaussian" => Ok(TspMode::GaussianMixture),
            other => Err(format!("unknown TSP mode `{other}`")),
        }
    }
}

/// Euclidean TSP instance with a precomputed distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    coords: Vec<[f64; 2]>,
    dist: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TspFile {
    coords: Vec<[f64; 2]>,
}

impl Serialize for TspInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TspFile {
            coords: self.coords.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TspInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = TspFile::deserialize(d)?;
        TspInstance::new(file.coords).map_err(serde::de::Error::custom)
    }
}

impl TspInstance {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self, ProblemError> {
        if coords.len() < 3 {
            return Err(ProblemError::InvalidInstance(format!(
                "a tour needs at least 3 cities, got {}",
                coords.len()
            )));
        }
        if coords.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ProblemError::InvalidInstance(
                "coordinates must be finite".into(),
            ));
        }
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self { coords, dist })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.coords.len() + j]
    }
}

pub fn gen_tsp(seed: u64, n_cities: usize, mode: TspMode) -> Result<TspInstance, ProblemError> {
    if n_cities < 3 {
        return Err(ProblemError::InvalidParameter(format!(
            "n_cities must be at least 3, got {n_cities}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = match mode {
        TspMode::Uniform => (0..n_cities)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect(),
        TspMode::GaussianMixture => {
            let centers: Vec<[f64; 2]> = (0..CLUSTERS)
                .map(|_| [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)])
                .collect();
            let noise = Normal::new(0.0, CLUSTER_STD).expect("valid std");
            let raw: Vec<[f64; 2]> = (0..n_cities)
                .map(|_| {
                    let c = centers[rng.random_range(0..CLUSTERS)];
                    [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]
                })
                .collect();
            rescale_unit_square(raw)
        }
    };
    TspInstance::new(coords)
}

/// Min-max rescales each axis into [0, 1]; a degenerate axis maps to 0.5.
fn rescale_unit_square(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    for axis in 0..2 {
        let lo = pts.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = pts
            .iter()
            .map(|p| p[axis])
            .fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for p in &mut pts {
            p[axis] = if span > 0.0 {
                ((p[axis] - lo) / span).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
    }
    pts
}

pub fn tour_length(instance: &TspInstance, tour: &[usize]) -> f64 {
    let n = tour.len();
    (0..n)
        .map(|i| instance.dist(tour[i], tour[(i + 1) % n]))
        .sum()
}

/// Greedy nearest-neighbour tour from city 0 (ties to the lowest index).
pub fn nearest_neighbor_tour(instance: &TspInstance) -> Vec<usize> {
    let n = instance.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = 0;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for (j, &seen) in visited.iter().enumerate() {
            if !seen && instance.dist(cur, j) < best {
                best = instance.dist(cur, j);
                next = j;
            }
        }
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    tour
}

/// 2-opt local search with a first-improvement scan in index order, repeated
/// until a full pass finds no improving move.
pub fn two_opt(instance: &TspInstance, tour: &mut [usize]) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    const EPS: f64 = 1e-12;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 2 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, d) = (tour[j], tour[(j + 1) % n]);
                let delta = instance.dist(a, c) + instance.dist(b, d)
                    - instance.dist(a, b)
                    - instance.dist(c, d);
                if delta < -EPS {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}

/// Reference tour length: nearest neighbour followed by 2-opt.
pub fn tsp_reference(instance: &TspInstance) -> f64 {
    let mut tour = nearest_neighbor_tour(instance);
    two_opt(instance, &mut tour);
    tour_length(instance, &tour)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspRun {
    pub tour: Vec<usize>,
    pub length: f64,
}

/// Builds a tour from city 0, moving to the highest-priority unvisited city.
pub fn construct_tsp(
    instance: &TspInstance,
    program: &Program,
) -> Result<TspRun, CandidateFailure> {
    let n = instance.len();
    let limits = EvalLimits::default();
    let mut unvisited: Vec<usize> = (1..n).collect();
    // Sum of distances from each city to every currently unvisited city.
    let mut sum_to_unvisited: Vec<f64> = (0..n)
        .map(|j| unvisited.iter().map(|&k| instance.dist(j, k)).sum())
        .collect();
    let mut tour = Vec::with_capacity(n);
    let mut cur = 0;
    tour.push(0);
    let mut inputs: HashMap<&str, Value> = HashMap::with_capacity(4);

    while !unvisited.is_empty() {
        let u = unvisited.len();
        inputs.insert(
            "dist_to_current",
            Value::Vector(unvisited.iter().map(|&j| instance.dist(cur, j)).collect()),
        );
        inputs.insert(
            "dist_to_start",
            Value::Vector(unvisited.iter().map(|&j| instance.dist(0, j)).collect()),
        );
        inputs.insert(
            "mean_dist_remaining",
            Value::Vector(
                unvisited
                    .iter()
                    .map(|&j| {
                        if u > 1 {
                            sum_to_unvisited[j] / (u - 1) as f64
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ),
        );
        inputs.insert(
            "visited_fraction",
            Value::Scalar(tour.len() as f64 / n as f64),
        );

        let out = evaluate(program, &inputs, &limits)?;
        let pick = match &out {
            Value::Vector(p) if p.len() == u => argmax_priority(p).unwrap_or(0),
            Value::Vector(p) => {
                return Err(CandidateFailure::WrongShape(format!(
                    "priority vector has length {} but there are {u} unvisited cities",
                    p.len()
                )))
            }
            Value::Scalar(_) => {
                return Err(CandidateFailure::WrongShape(
                    "priority function returned a scalar; it must return one priority per unvisited city"
                        .into(),
                ))
            }
        };
        let next = unvisited.remove(pick);
        for (j, s) in sum_to_unvisited.iter_mut().enumerate() {
            *s -= instance.dist(j, next);
        }
        tour.push(next);
        cur = next;
    }

    let length = tour_length(instance, &tour);
    Ok(TspRun { tour, length })
}

pub fn simulate_tsp(
    instance: &TspInstance,
    program: &Program,
) -> Result<EvalReport, CandidateFailure> {
    let run = construct_tsp(instance, program)?;
    Ok(EvalReport::new(run.length, tsp_reference(instance)))
}
