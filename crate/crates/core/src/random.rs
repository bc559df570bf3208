//! Seeded random networks and evidence, for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Cpt, Evidence, Network, Variable};

#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub variables: usize,
    pub max_states: usize,
    pub max_parents: usize,
    pub edge_probability: f64,
    /// Keep every CPT entry at least this large (0 allows exact zeros).
    pub min_entry: f64,
    /// Upper bound on the product of all cardinalities.
    pub max_joint: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            variables: 8,
            max_states: 4,
            max_parents: 3,
            edge_probability: 0.4,
            min_entry: 0.0,
            max_joint: 1 << 16,
        }
    }
}

/// A random probability row; with `min_entry == 0` some entries may be zero.
pub fn random_row<R: Rng + ?Sized>(rng: &mut R, k: usize, min_entry: f64) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k)
        .map(|_| if min_entry == 0.0 && rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.05..1.0) })
        .collect();
    if row.iter().all(|&x| x == 0.0) {
        row[rng.gen_range(0..k)] = 1.0;
    }
    let total: f64 = row.iter().sum();
    let floor = min_entry.min(0.5 / k as f64);
    row.iter_mut().for_each(|x| *x = floor + (1.0 - floor * k as f64) * *x / total);
    row
}

/// Random DAG over `X0..Xn` (topological by index) with random CPTs.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> Network {
    let mut cards = Vec::with_capacity(spec.variables);
    let mut joint = 1usize;
    for i in 0..spec.variables {
        let remaining = spec.variables - i - 1;
        let budget = spec.max_joint / joint / 2usize.pow(remaining as u32);
        let k = rng.gen_range(2..=spec.max_states.max(2)).min(budget.max(2));
        joint *= k;
        cards.push(k);
    }
    let variables: Vec<Variable> = cards
        .iter()
        .enumerate()
        .map(|(i, &k)| Variable {
            name: format!("X{i}"),
            states: (0..k).map(|s| format!("s{s}")).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    let mut cpts = Vec::new();
    for i in 0..spec.variables {
        let mut candidates: Vec<usize> = (0..i).collect();
        candidates.shuffle(rng);
        let parents: Vec<usize> = candidates
            .into_iter()
            .filter(|_| rng.gen_bool(spec.edge_probability))
            .take(spec.max_parents)
            .collect();
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let table = (0..rows).map(|_| random_row(rng, cards[i], spec.min_entry)).collect();
        for &p in &parents {
            edges.push((format!("X{p}"), format!("X{i}")));
        }
        cpts.push(Cpt {
            child: format!("X{i}"),
            parents: parents.iter().map(|p| format!("X{p}")).collect(),
            table,
        });
    }
    Network::new(variables, edges, cpts).expect("generated network is valid")
}

/// Random hard evidence on about `fraction` of the variables.
pub fn random_evidence<R: Rng + ?Sized>(rng: &mut R, net: &Network, fraction: f64) -> Evidence {
    let mut evidence = Evidence::new();
    for v in net.variables() {
        if rng.gen_bool(fraction) {
            evidence.insert(v.name.clone(), v.states[rng.gen_range(0..v.states.len())].clone());
        }
    }
    evidence
}
