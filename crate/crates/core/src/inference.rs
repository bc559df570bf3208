//! Exact posterior computation by variable elimination.
//!
//! Only ancestors of the query and evidence variables take part in a query;
//! the remaining (barren) nodes sum to one and are dropped. Elimination order
//! is greedy min-fill with lexicographic tie-breaking.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::graph::{Evidence, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub variable: String,
    pub states: Vec<String>,
    pub distribution: Vec<f64>,
}

impl Posterior {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.states.iter().position(|s| s == state).map(|i| self.distribution[i])
    }

    fn point_mass(net: &Network, var: usize, state: usize) -> Posterior {
        let mut distribution = vec![0.0; net.cardinality(var)];
        distribution[state] = 1.0;
        Posterior {
            variable: net.name(var).to_string(),
            states: net.variable(var).states.clone(),
            distribution,
        }
    }
}

/// Shape of an elimination run.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStats {
    pub order: Vec<String>,
    /// Largest scope of a product formed before summing out a variable.
    pub max_product_scope: usize,
    /// Largest scope of a factor produced by summing out.
    pub max_message_scope: usize,
}

impl EliminationStats {
    pub fn induced_width(&self) -> usize {
        self.max_product_scope.saturating_sub(1)
    }
}

struct Prepared {
    factors: Vec<Factor>,
    eliminate: Vec<usize>,
}

fn prepare(net: &Network, targets: &[usize], observed: &[Option<usize>]) -> Prepared {
    let seeds = targets
        .iter()
        .copied()
        .chain((0..net.len()).filter(|&v| observed[v].is_some()));
    let relevant = net.ancestors_of(seeds);
    let mut factors = Vec::new();
    for v in (0..net.len()).filter(|&v| relevant[v]) {
        let mut f = Factor::from_cpt(net, v);
        for &u in f.scope().to_vec().iter() {
            if let Some(s) = observed[u] {
                f = f.reduce(u, s);
            }
        }
        factors.push(f);
    }
    let eliminate = (0..net.len())
        .filter(|&v| relevant[v] && observed[v].is_none() && !targets.contains(&v))
        .collect();
    Prepared { factors, eliminate }
}

/// Greedy min-fill ordering over the interaction graph of `factors`.
fn min_fill(net: &Network, factors: &[Factor], eliminate: &[usize]) -> Vec<usize> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in factors {
        for &a in f.scope() {
            let entry = adj.entry(a).or_default();
            entry.extend(f.scope().iter().copied().filter(|&b| b != a));
        }
    }
    let mut remaining: BTreeSet<usize> = eliminate.iter().copied().collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let best = remaining
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let fill = |v: usize| {
                    let nb: Vec<usize> = adj.get(&v).map(|s| s.iter().copied().collect()).unwrap_or_default();
                    let mut fill = 0usize;
                    for i in 0..nb.len() {
                        for j in i + 1..nb.len() {
                            if !adj[&nb[i]].contains(&nb[j]) {
                                fill += 1;
                            }
                        }
                    }
                    fill
                };
                fill(a).cmp(&fill(b)).then_with(|| net.name(a).cmp(net.name(b)))
            })
            .expect("nonempty");
        let nb: Vec<usize> = adj.remove(&best).map(|s| s.into_iter().collect()).unwrap_or_default();
        for &a in &nb {
            let entry = adj.get_mut(&a).expect("symmetric adjacency");
            entry.remove(&best);
            entry.extend(nb.iter().copied().filter(|&b| b != a));
        }
        remaining.remove(&best);
        order.push(best);
    }
    order
}

fn eliminate_all(mut factors: Vec<Factor>, order: &[usize]) -> (Factor, usize, usize) {
    let (mut max_product, mut max_message) = (0, 0);
    for &var in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(var));
        factors = without;
        let Some(product) = with.into_iter().reduce(|a, b| a.product(&b)) else {
            continue;
        };
        max_product = max_product.max(product.scope().len());
        let message = product.sum_out(var);
        max_message = max_message.max(message.scope().len());
        factors.push(message);
    }
    let result = factors
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .unwrap_or_else(|| Factor::scalar(1.0));
    (result, max_product, max_message)
}

/// Unnormalized joint factor over the unobserved `targets` (in the given order)
/// and the evidence, i.e. P(targets, evidence).
fn joint_factor(net: &Network, targets: &[usize], observed: &[Option<usize>], order: Option<&[usize]>) -> Factor {
    let prepared = prepare(net, targets, observed);
    let order = match order {
        Some(o) => o.iter().copied().filter(|v| prepared.eliminate.contains(v)).collect(),
        None => min_fill(net, &prepared.factors, &prepared.eliminate),
    };
    let (mut result, _, _) = eliminate_all(prepared.factors, &order);
    // targets with no relevant factor contribute a uniform 1 per state
    for &t in targets {
        if !result.contains(t) {
            let card = net.cardinality(t);
            result = result.product(&Factor::new(vec![t], vec![card], vec![1.0; card]));
        }
    }
    result.permuted(targets)
}

/// Min-fill elimination order for a query over `targets` given `evidence`.
pub fn elimination_order(net: &Network, targets: &[&str], evidence: &Evidence) -> Result<Vec<String>> {
    Ok(elimination_stats(net, targets, evidence)?.order)
}

pub fn elimination_stats(net: &Network, targets: &[&str], evidence: &Evidence) -> Result<EliminationStats> {
    let observed = net.evidence_states(evidence)?;
    let targets: Vec<usize> = targets.iter().map(|t| net.resolve(t)).collect::<Result<_>>()?;
    let targets: Vec<usize> = targets.into_iter().filter(|&t| observed[t].is_none()).collect();
    let prepared = prepare(net, &targets, &observed);
    let order = min_fill(net, &prepared.factors, &prepared.eliminate);
    let (_, max_product_scope, max_message_scope) = eliminate_all(prepared.factors, &order);
    Ok(EliminationStats {
        order: order.iter().map(|&v| net.name(v).to_string()).collect(),
        max_product_scope,
        max_message_scope,
    })
}

/// P(evidence); 1 for empty evidence, 0 is a valid result.
pub fn probability_of_evidence(net: &Network, evidence: &Evidence) -> Result<f64> {
    let observed = net.evidence_states(evidence)?;
    Ok(joint_factor(net, &[], &observed, None).total())
}

pub(crate) fn probability_of_states(net: &Network, observed: &[Option<usize>]) -> f64 {
    joint_factor(net, &[], observed, None).total()
}

/// Posterior of `target` given `evidence`.
pub fn marginal(net: &Network, target: &str, evidence: &Evidence) -> Result<Posterior> {
    marginal_with_order(net, target, evidence, None)
}

/// As [`marginal`], eliminating in the given order (variable names) instead of min-fill.
pub fn marginal_with_order(
    net: &Network,
    target: &str,
    evidence: &Evidence,
    order: Option<&[String]>,
) -> Result<Posterior> {
    let var = net.resolve(target)?;
    let observed = net.evidence_states(evidence)?;
    let order: Option<Vec<usize>> = order
        .map(|o| o.iter().map(|n| net.resolve(n)).collect::<Result<_>>())
        .transpose()?;
    marginal_ids(net, var, &observed, order.as_deref())
}

pub(crate) fn marginal_ids(
    net: &Network,
    var: usize,
    observed: &[Option<usize>],
    order: Option<&[usize]>,
) -> Result<Posterior> {
    if let Some(s) = observed[var] {
        if joint_factor(net, &[], observed, order).total() <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        return Ok(Posterior::point_mass(net, var, s));
    }
    let joint = joint_factor(net, &[var], observed, order);
    let normalized = joint.normalized().ok_or(Error::ZeroProbabilityEvidence)?;
    Ok(Posterior {
        variable: net.name(var).to_string(),
        states: net.variable(var).states.clone(),
        distribution: normalized.values().to_vec(),
    })
}

/// Posterior of every variable under the same evidence, keyed by variable name.
pub fn posterior_all(net: &Network, evidence: &Evidence) -> Result<BTreeMap<String, Posterior>> {
    posterior_all_with_order(net, evidence, None)
}

pub fn posterior_all_with_order(
    net: &Network,
    evidence: &Evidence,
    order: Option<&[String]>,
) -> Result<BTreeMap<String, Posterior>> {
    let observed = net.evidence_states(evidence)?;
    let order: Option<Vec<usize>> = order
        .map(|o| o.iter().map(|n| net.resolve(n)).collect::<Result<_>>())
        .transpose()?;
    if joint_factor(net, &[], &observed, order.as_deref()).total() <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }
    (0..net.len())
        .map(|v| Ok((net.name(v).to_string(), marginal_ids(net, v, &observed, order.as_deref())?)))
        .collect()
}

/// Normalized joint posterior over several distinct, unobserved variables.
/// Values are row-major over `targets` (last fastest).
pub fn joint_posterior(net: &Network, targets: &[&str], evidence: &Evidence) -> Result<Vec<f64>> {
    let observed = net.evidence_states(evidence)?;
    let ids: Vec<usize> = targets.iter().map(|t| net.resolve(t)).collect::<Result<_>>()?;
    let distinct: BTreeSet<usize> = ids.iter().copied().collect();
    if distinct.len() != ids.len() {
        return Err(Error::OverlappingSets(targets.iter().map(|s| s.to_string()).collect()));
    }
    if let Some(&v) = ids.iter().find(|&&v| observed[v].is_some()) {
        return Err(Error::OverlappingSets(vec![net.name(v).to_string()]));
    }
    let joint = joint_factor(net, &ids, &observed, None);
    Ok(joint.normalized().ok_or(Error::ZeroProbabilityEvidence)?.values().to_vec())
}

/// Full joint enumeration. Exponential; used as an independent check on
/// variable elimination.
pub mod enumeration {
    use super::*;

    pub const MAX_VARIABLES: usize = 24;

    /// Visits every total assignment consistent with `observed` with its joint probability.
    fn for_each_assignment(net: &Network, observed: &[Option<usize>], mut visit: impl FnMut(&[usize], f64)) {
        let n = net.len();
        let mut states: Vec<usize> = (0..n).map(|v| observed[v].unwrap_or(0)).collect();
        loop {
            visit(&states, net.joint_of_states(&states));
            let mut d = n;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                if observed[d].is_some() {
                    continue;
                }
                states[d] += 1;
                if states[d] < net.cardinality(d) {
                    break;
                }
                states[d] = 0;
            }
        }
    }

    fn guard(net: &Network) -> Result<()> {
        if net.len() > MAX_VARIABLES {
            return Err(Error::TooLargeForEnumeration(net.len()));
        }
        Ok(())
    }

    pub fn brute_force_evidence_probability(net: &Network, evidence: &Evidence) -> Result<f64> {
        guard(net)?;
        let observed = net.evidence_states(evidence)?;
        let mut total = 0.0;
        for_each_assignment(net, &observed, |_, p| total += p);
        Ok(total)
    }

    /// Posteriors of all variables in one pass over the joint.
    pub fn brute_force_all(net: &Network, evidence: &Evidence) -> Result<BTreeMap<String, Posterior>> {
        guard(net)?;
        let observed = net.evidence_states(evidence)?;
        let mut mass: Vec<Vec<f64>> = (0..net.len()).map(|v| vec![0.0; net.cardinality(v)]).collect();
        let mut total = 0.0;
        for_each_assignment(net, &observed, |states, p| {
            total += p;
            for (v, &s) in states.iter().enumerate() {
                mass[v][s] += p;
            }
        });
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        Ok(mass
            .into_iter()
            .enumerate()
            .map(|(v, m)| {
                let post = Posterior {
                    variable: net.name(v).to_string(),
                    states: net.variable(v).states.clone(),
                    distribution: m.into_iter().map(|x| x / total).collect(),
                };
                (net.name(v).to_string(), post)
            })
            .collect())
    }

    pub fn brute_force_marginal(net: &Network, target: &str, evidence: &Evidence) -> Result<Posterior> {
        let var = net.resolve(target)?;
        let all = brute_force_all(net, evidence)?;
        Ok(all[net.name(var)].clone())
    }

    /// Normalized joint posterior of two variables, row-major (x, y).
    pub fn brute_force_pair(net: &Network, x: &str, y: &str, evidence: &Evidence) -> Result<Vec<f64>> {
        guard(net)?;
        let (xi, yi) = (net.resolve(x)?, net.resolve(y)?);
        let observed = net.evidence_states(evidence)?;
        let cy = net.cardinality(yi);
        let mut mass = vec![0.0; net.cardinality(xi) * cy];
        let mut total = 0.0;
        for_each_assignment(net, &observed, |states, p| {
            total += p;
            mass[states[xi] * cy + states[yi]] += p;
        });
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        Ok(mass.into_iter().map(|m| m / total).collect())
    }
}
