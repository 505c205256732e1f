use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use serde::{Deserialize, Serialize};

use super::{argmax_priority, CandidateFailure, EvalReport, ProblemError};
use crate::dsl::{evaluate, EvalLimits, Program, Value};

/// An online bin packing instance: items in arrival order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObpInstance {
    pub capacity: u32,
    pub items: Vec<u32>,
}

impl ObpInstance {
    pub fn new(capacity: u32, items: Vec<u32>) -> Result<Self, ProblemError> {
        let inst = Self { capacity, items };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.capacity == 0 {
            return Err(ProblemError::InvalidInstance(
                "capacity must be positive".into(),
            ));
        }
        if self.items.is_empty() {
            return Err(ProblemError::InvalidInstance("item list is empty".into()));
        }
        if let Some(bad) = self.items.iter().find(|&&w| w == 0 || w > self.capacity) {
            return Err(ProblemError::InvalidInstance(format!(
                "item size {bad} outside [1, {}]",
                self.capacity
            )));
        }
        Ok(())
    }
}

/// Draws `n_items` sizes from Weibull(shape, scale), rounded up and clamped
/// into `[1, capacity]`.
pub fn gen_obp(
    seed: u64,
    n_items: usize,
    capacity: u32,
    shape: f64,
    scale: f64,
) -> Result<ObpInstance, ProblemError> {
    if n_items == 0 {
        return Err(ProblemError::InvalidParameter(
            "n_items must be at least 1".into(),
        ));
    }
    if capacity < 2 {
        return Err(ProblemError::InvalidParameter(
            "capacity must be at least 2".into(),
        ));
    }
    if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!(
            "Weibull shape and scale must be positive (got shape={shape}, scale={scale})"
        )));
    }
    let dist = Weibull::new(scale, shape)
        .map_err(|e| ProblemError::InvalidParameter(format!("Weibull: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..n_items)
        .map(|_| {
            let x: f64 = dist.sample(&mut rng);
            x.ceil().clamp(1.0, capacity as f64) as u32
        })
        .collect();
    Ok(ObpInstance { capacity, items })
}

/// Martello–Toth L2 lower bound on the optimal number of bins, maximized over
/// every integer threshold `0 <= alpha <= capacity / 2`.
pub fn obp_lower_bound(instance: &ObpInstance) -> u64 {
    let c = instance.capacity as usize;
    // count[w], weight[w]: prefix sums over item sizes 0..=w
    let mut count = vec![0u64; c + 2];
    let mut weight = vec![0u64; c + 2];
    for &w in &instance.items {
        count[w as usize + 1] += 1;
        weight[w as usize + 1] += w as u64;
    }
    for i in 1..count.len() {
        count[i] += count[i - 1];
        weight[i] += weight[i - 1];
    }
    // Items with size in [lo, hi].
    let range = |lo: usize, hi: usize| -> (u64, u64) {
        if lo > hi {
            return (0, 0);
        }
        (count[hi + 1] - count[lo], weight[hi + 1] - weight[lo])
    };
    let cap = c as u64;
    let half = c / 2; // sizes <= half satisfy 2w <= c
    let mut best = 0u64;
    for alpha in 0..=half {
        // J1: w > c - alpha
        let (n1, _) = range(c - alpha + 1, c);
        // J2: c/2 < w <= c - alpha
        let (n2, w2) = range(half + 1, c - alpha);
        // J3: alpha <= w <= c/2
        let (_, w3) = range(alpha, half);
        let free_in_j2 = n2 * cap - w2;
        let extra = w3.saturating_sub(free_in_j2).div_ceil(cap);
        best = best.max(n1 + n2 + extra);
    }
    best.max(1)
}

/// Full trace of an online packing run.
#[derive(Debug, Clone, PartialEq)]
pub struct ObpRun {
    /// Final load of every opened bin.
    pub loads: Vec<u32>,
    /// Bin chosen for each item, in arrival order.
    pub assignment: Vec<usize>,
}

/// Packs `instance` online using `program` as the bin priority function.
pub fn pack_obp(instance: &ObpInstance, program: &Program) -> Result<ObpRun, CandidateFailure> {
    let limits = EvalLimits::default();
    let cap = instance.capacity;
    let mut remaining: Vec<u32> = Vec::new();
    let mut assignment = Vec::with_capacity(instance.items.len());
    let mut feasible: Vec<usize> = Vec::new();
    let mut inputs: HashMap<&str, Value> = HashMap::with_capacity(3);

    for &item in &instance.items {
        feasible.clear();
        feasible.extend((0..remaining.len()).filter(|&b| remaining[b] >= item));

        let chosen = if feasible.is_empty() {
            None
        } else {
            inputs.insert("item", Value::Scalar(item as f64));
            inputs.insert(
                "cap_remaining",
                Value::Vector(feasible.iter().map(|&b| remaining[b] as f64).collect()),
            );
            inputs.insert(
                "bin_index",
                Value::Vector(feasible.iter().map(|&b| b as f64).collect()),
            );
            let out = evaluate(program, &inputs, &limits)?;
            let priorities = match &out {
                Value::Vector(p) if p.len() == feasible.len() => p,
                Value::Vector(p) => {
                    return Err(CandidateFailure::WrongShape(format!(
                        "priority vector has length {} but there are {} feasible bins",
                        p.len(),
                        feasible.len()
                    )))
                }
                Value::Scalar(_) => {
                    return Err(CandidateFailure::WrongShape(
                        "priority function returned a scalar; it must return one priority per feasible bin"
                            .into(),
                    ))
                }
            };
            argmax_priority(priorities).map(|i| feasible[i])
        };

        let bin = match chosen {
            Some(b) => b,
            None => {
                remaining.push(cap);
                remaining.len() - 1
            }
        };
        assert!(remaining[bin] >= item, "bin {bin} overfilled");
        remaining[bin] -= item;
        assignment.push(bin);
    }

    Ok(ObpRun {
        loads: remaining.iter().map(|r| cap - r).collect(),
        assignment,
    })
}

/// Bins used by `program` on `instance`, reported against the L2 lower bound.
pub fn simulate_obp(
    instance: &ObpInstance,
    program: &Program,
) -> Result<EvalReport, CandidateFailure> {
    let run = pack_obp(instance, program)?;
    let lb = obp_lower_bound(instance);
    Ok(EvalReport::new(run.loads.len() as f64, lb as f64))
}
