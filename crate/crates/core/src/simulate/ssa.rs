//! Direct and next-reaction samplers.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{dependency_graph, SimError, Simulator};
use crate::semantics::{propensity, ReactionNetwork};

fn checked(net: &ReactionNetwork, j: usize, x: &[f64], t: f64) -> Result<f64, SimError> {
    let a = propensity(&net.reactions[j], x);
    if a.is_finite() && a >= 0.0 {
        Ok(a)
    } else {
        Err(SimError::InvalidPropensity { rule: net.reactions[j].source_rule.clone(), value: a, time: t })
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

fn fire(net: &ReactionNetwork, j: usize, x: &mut [f64]) {
    for (i, d) in net.reactions[j].stoich() {
        x[i] += d as f64;
    }
}

fn snapshot(x: &[f64]) -> Vec<u64> {
    x.iter().map(|&v| v as u64).collect()
}

/// Gillespie's direct method: one uniform for the waiting time, one for
/// the reaction.
pub struct DirectMethod;

impl Simulator for DirectMethod {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn sample(&self, net: &ReactionNetwork, grid: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u64>>, SimError> {
        let deps = dependency_graph(net);
        let mut x = net.init_f64();
        let mut a = (0..net.reactions.len())
            .map(|j| checked(net, j, &x, 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        let mut t = 0.0;
        let mut out = Vec::with_capacity(grid.len());
        let next = |t: f64, a: &[f64], rng: &mut ChaCha8Rng| {
            let a0: f64 = a.iter().sum();
            if a0 > 0.0 {
                t + exp_sample(rng, a0)
            } else {
                f64::INFINITY
            }
        };
        let mut tn = next(t, &a, rng);
        for &g in grid {
            while tn <= g {
                t = tn;
                let a0: f64 = a.iter().sum();
                let target = rng.random::<f64>() * a0;
                let mut acc = 0.0;
                let mut j = a.iter().rposition(|&v| v > 0.0).expect("positive total propensity");
                for (k, &v) in a.iter().enumerate() {
                    acc += v;
                    if target < acc && v > 0.0 {
                        j = k;
                        break;
                    }
                }
                fire(net, j, &mut x);
                for &k in &deps[j] {
                    a[k] = checked(net, k, &x, t)?;
                }
                tn = next(t, &a, rng);
            }
            out.push(snapshot(&x));
        }
        Ok(out)
    }
}

/// Gibson and Bruck's next-reaction method with absolute putative times
/// kept in an ordered set.
pub struct NextReactionMethod;

fn key(t: f64) -> u64 {
    // Non-negative floats order like their bit patterns.
    t.to_bits()
}

impl Simulator for NextReactionMethod {
    fn name(&self) -> &'static str {
        "next-reaction"
    }

    fn sample(&self, net: &ReactionNetwork, grid: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u64>>, SimError> {
        let deps = dependency_graph(net);
        let n = net.reactions.len();
        let mut x = net.init_f64();
        let mut a = vec![0.0; n];
        let mut tau = vec![f64::INFINITY; n];
        let mut queue = BTreeSet::new();
        for j in 0..n {
            a[j] = checked(net, j, &x, 0.0)?;
            if a[j] > 0.0 {
                tau[j] = exp_sample(rng, a[j]);
            }
            queue.insert((key(tau[j]), j));
        }
        let mut out = Vec::with_capacity(grid.len());
        for &g in grid {
            while let Some(&(_, mu)) = queue.first() {
                let t = tau[mu];
                if t > g {
                    break;
                }
                fire(net, mu, &mut x);
                for &k in &deps[mu] {
                    let old = a[k];
                    let new = checked(net, k, &x, t)?;
                    let next = if new == 0.0 {
                        f64::INFINITY
                    } else if k != mu && old > 0.0 {
                        t + old / new * (tau[k] - t)
                    } else {
                        t + exp_sample(rng, new)
                    };
                    queue.remove(&(key(tau[k]), k));
                    a[k] = new;
                    tau[k] = next;
                    queue.insert((key(next), k));
                }
            }
            out.push(snapshot(&x));
        }
        Ok(out)
    }
}
