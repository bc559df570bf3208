//! One-way parameter sensitivity and evidence sensitivity.
//!
//! Varying a single CPT entry `t` with proportional co-variation of the rest
//! of its row makes both P(h, e) and P(e) linear in `t`, so the posterior is
//! the ratio `(alpha * t + beta) / (gamma * t + delta)`. The coefficients are
//! recovered from two re-inferences at `t = 0` and `t = 1`.
//!
//! The sensitivity value of a parameter is `|f'(t0)|`. Information metrics
//! are in bits.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{row_index, row_states, Cpt, Evidence, Network};
use crate::inference::{self, probability_of_states};

/// A single CPT cell: `P(variable = state | parents = configuration)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParameterRef {
    pub variable: String,
    pub parent_configuration: BTreeMap<String, String>,
    pub state: String,
}

impl ParameterRef {
    pub fn new(variable: &str, parents: &[(&str, &str)], state: &str) -> Self {
        ParameterRef {
            variable: variable.to_string(),
            parent_configuration: parents.iter().map(|(p, s)| (p.to_string(), s.to_string())).collect(),
            state: state.to_string(),
        }
    }

    pub fn from_ids(net: &Network, var: usize, row: usize, state: usize) -> Self {
        let parents = net.parents(var);
        let states = row_states(&net.parent_cards(var), row);
        ParameterRef {
            variable: net.name(var).to_string(),
            parent_configuration: parents
                .iter()
                .zip(states)
                .map(|(&p, s)| (net.name(p).to_string(), net.variable(p).states[s].clone()))
                .collect(),
            state: net.variable(var).states[state].clone(),
        }
    }

    /// (variable id, row, state) of the referenced cell.
    pub fn locate(&self, net: &Network) -> Result<(usize, usize, usize)> {
        let var = net.resolve(&self.variable)?;
        let state = net.state_id(var, &self.state)?;
        let mut config = Vec::with_capacity(net.parents(var).len());
        let mut used = 0;
        for &p in net.parents(var) {
            let (_, s) = self
                .parent_configuration
                .iter()
                .find(|(k, _)| net.resolve(k).ok() == Some(p))
                .ok_or_else(|| Error::PartialAssignment(vec![net.name(p).to_string()]))?;
            config.push(net.state_id(p, s)?);
            used += 1;
        }
        if used != self.parent_configuration.len() {
            return Err(Error::DanglingReference(format!(
                "parameter of `{}` names non-parent variables",
                self.variable
            )));
        }
        Ok((var, row_index(&net.parent_cards(var), &config), state))
    }

    /// Every CPT cell of the network, in (variable, row, state) order.
    pub fn all(net: &Network) -> Vec<ParameterRef> {
        let mut ids: Vec<usize> = (0..net.len()).collect();
        ids.sort_by(|&a, &b| net.name(a).cmp(net.name(b)));
        ids.into_iter()
            .flat_map(|v| {
                let rows = net.cpt(v).table.len();
                let card = net.cardinality(v);
                (0..rows).flat_map(move |r| (0..card).map(move |s| (v, r, s)))
            })
            .map(|(v, r, s)| ParameterRef::from_ids(net, v, r, s))
            .collect()
    }
}

/// Sets `row[state] = t` and rescales the other entries proportionally.
pub fn covary_row(row: &[f64], state: usize, t: f64) -> std::result::Result<Vec<f64>, ()> {
    let t0 = row[state];
    if t == t0 {
        return Ok(row.to_vec());
    }
    let rest: f64 = row.iter().enumerate().filter(|&(i, _)| i != state).map(|(_, p)| p).sum();
    if rest <= 0.0 {
        return Err(());
    }
    let scale = (1.0 - t) / rest;
    Ok(row
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == state { t } else { p * scale })
        .collect())
}

/// Proportional co-variation of one CPT cell to the value `t`.
pub fn covary_cpt_row(cpt: &Cpt, row: usize, state: usize, t: f64) -> Result<Cpt> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterOutOfRange(t));
    }
    let values = covary_row(&cpt.table[row], state, t)
        .map_err(|_| Error::DegenerateRow { variable: cpt.child.clone(), row })?;
    let mut out = cpt.clone();
    out.table[row] = values;
    Ok(out)
}

/// Network with one parameter co-varied to `t`.
pub fn covary_network(net: &Network, parameter: &ParameterRef, t: f64) -> Result<Network> {
    let (var, row, state) = parameter.locate(net)?;
    let cpt = covary_cpt_row(net.cpt(var), row, state, t)?;
    Ok(net.with_row(var, row, cpt.table[row].clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityFunction {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub t0: f64,
    pub hypothesis: (String, String),
    pub evidence: Evidence,
    pub parameter: ParameterRef,
}

impl SensitivityFunction {
    pub fn eval(&self, t: f64) -> f64 {
        (self.alpha * t + self.beta) / (self.gamma * t + self.delta)
    }

    pub fn at_t0(&self) -> f64 {
        self.eval(self.t0)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let d = self.gamma * t + self.delta;
        (self.alpha * self.delta - self.beta * self.gamma) / (d * d)
    }

    /// `|f'(t0)|`.
    pub fn sensitivity_value(&self) -> f64 {
        self.derivative(self.t0).abs()
    }

    pub fn is_linear(&self) -> bool {
        self.gamma == 0.0
    }

    /// Parameter value at which the function reaches `target`, if one exists.
    pub fn solve(&self, target: f64) -> Option<f64> {
        // target * (gamma t + delta) = alpha t + beta
        let denom = self.alpha - target * self.gamma;
        if denom.abs() < 1e-300 {
            return None;
        }
        Some((target * self.delta - self.beta) / denom)
    }
}

pub fn sensitivity_value(sf: &SensitivityFunction) -> f64 {
    sf.sensitivity_value()
}

/// Linear coefficients (slope, intercept) of P(extra ∧ evidence) as a function
/// of the parameter; `extra` may be empty.
pub(crate) fn linear_mass(
    net: &Network,
    var: usize,
    row: usize,
    state: usize,
    observed: &[Option<usize>],
) -> Result<(f64, f64)> {
    let degenerate = || Error::DegenerateRow { variable: net.name(var).to_string(), row };
    let r0 = covary_row(&net.cpt(var).table[row], state, 0.0).map_err(|_| degenerate())?;
    let r1 = covary_row(&net.cpt(var).table[row], state, 1.0).map_err(|_| degenerate())?;
    let m0 = probability_of_states(&net.with_row(var, row, r0), observed);
    let m1 = probability_of_states(&net.with_row(var, row, r1), observed);
    Ok((m1 - m0, m0))
}

pub fn sensitivity_function(
    net: &Network,
    hypothesis: (&str, &str),
    evidence: &Evidence,
    parameter: &ParameterRef,
) -> Result<SensitivityFunction> {
    let observed = net.evidence_states(evidence)?;
    let h = net.resolve(hypothesis.0)?;
    let hs = net.state_id(h, hypothesis.1)?;
    if observed[h].is_some() {
        return Err(Error::HypothesisObserved(net.name(h).to_string()));
    }
    let (var, row, state) = parameter.locate(net)?;
    let t0 = net.cpt(var).table[row][state];
    let mut with_h = observed.clone();
    with_h[h] = Some(hs);
    let (alpha, beta) = linear_mass(net, var, row, state, &with_h)?;
    let (gamma, delta) = linear_mass(net, var, row, state, &observed)?;
    let (mut alpha, mut beta, mut gamma, mut delta) = (alpha, beta, gamma, delta);
    // exact zero when the denominator does not depend on t
    if evidence.is_empty() || gamma.abs() <= 1e-15 * delta.abs() {
        gamma = 0.0;
    }
    let scale = if delta > 0.0 { delta } else { gamma };
    if scale != 0.0 {
        alpha /= scale;
        beta /= scale;
        gamma /= scale;
        delta /= scale;
    }
    Ok(SensitivityFunction {
        alpha,
        beta,
        gamma,
        delta,
        t0,
        hypothesis: (net.name(h).to_string(), hypothesis.1.to_string()),
        evidence: net.canonical_evidence(evidence)?,
        parameter: ParameterRef::from_ids(net, var, row, state),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedParameter {
    pub parameter: ParameterRef,
    pub function: SensitivityFunction,
    pub sensitivity_value: f64,
}

/// Ranks parameters by descending `|f'(t0)|`; ties broken by (variable, row,
/// state). Cells with value 1 in their row cannot be co-varied and are skipped.
pub fn rank_parameters(
    net: &Network,
    hypothesis: (&str, &str),
    evidence: &Evidence,
    candidates: Option<&[ParameterRef]>,
) -> Result<Vec<RankedParameter>> {
    let all;
    let candidates = match candidates {
        Some(c) => c,
        None => {
            all = ParameterRef::all(net);
            &all
        }
    };
    let results: Vec<Result<Option<(usize, usize, usize, RankedParameter)>>> = candidates
        .par_iter()
        .map(|p| {
            let (var, row, state) = p.locate(net)?;
            match sensitivity_function(net, hypothesis, evidence, p) {
                Ok(function) => Ok(Some((
                    var,
                    row,
                    state,
                    RankedParameter {
                        parameter: function.parameter.clone(),
                        sensitivity_value: function.sensitivity_value(),
                        function,
                    },
                ))),
                Err(Error::DegenerateRow { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut ranked = Vec::with_capacity(results.len());
    for r in results {
        if let Some(item) = r? {
            ranked.push(item);
        }
    }
    ranked.sort_by(|a, b| {
        b.3.sensitivity_value
            .total_cmp(&a.3.sensitivity_value)
            .then_with(|| net.name(a.0).cmp(net.name(b.0)))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(ranked.into_iter().map(|(_, _, _, r)| r).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSensitivityRange {
    pub variable: String,
    pub min_posterior: f64,
    pub max_posterior: f64,
    pub current: f64,
    pub min_state: String,
    pub max_state: String,
}

impl EvidenceSensitivityRange {
    pub fn width(&self) -> f64 {
        self.max_posterior - self.min_posterior
    }
}

/// Range of P(hypothesis | evidence, V = v) over single findings on each
/// unobserved variable V, widest first (ties by name).
pub fn evidence_sensitivity_ranges(
    net: &Network,
    hypothesis: (&str, &str),
    evidence: &Evidence,
) -> Result<Vec<EvidenceSensitivityRange>> {
    let observed = net.evidence_states(evidence)?;
    let h = net.resolve(hypothesis.0)?;
    let hs = net.state_id(h, hypothesis.1)?;
    if observed[h].is_some() {
        return Err(Error::HypothesisObserved(net.name(h).to_string()));
    }
    let current = inference::marginal_ids(net, h, &observed, None)?.distribution[hs];
    let vars: Vec<usize> = (0..net.len()).filter(|&v| v != h && observed[v].is_none()).collect();
    let mut ranges: Vec<EvidenceSensitivityRange> = vars
        .par_iter()
        .map(|&v| {
            let mut best: Option<(f64, usize, f64, usize)> = None;
            for s in 0..net.cardinality(v) {
                let mut finding = observed.clone();
                finding[v] = Some(s);
                let p_e = probability_of_states(net, &finding);
                if p_e <= 0.0 {
                    continue;
                }
                finding[h] = Some(hs);
                let post = probability_of_states(net, &finding) / p_e;
                best = Some(match best {
                    None => (post, s, post, s),
                    Some((lo, ls, hi, hsx)) => {
                        let (lo, ls) = if post < lo { (post, s) } else { (lo, ls) };
                        let (hi, hsx) = if post > hi { (post, s) } else { (hi, hsx) };
                        (lo, ls, hi, hsx)
                    }
                });
            }
            let (lo, ls, hi, hx) = best.expect("some finding has positive probability");
            EvidenceSensitivityRange {
                variable: net.name(v).to_string(),
                min_posterior: lo,
                max_posterior: hi,
                current,
                min_state: net.variable(v).states[ls].clone(),
                max_state: net.variable(v).states[hx].clone(),
            }
        })
        .collect();
    ranges.sort_by(|a, b| b.width().total_cmp(&a.width()).then_with(|| a.variable.cmp(&b.variable)));
    Ok(ranges)
}

fn entropy_of(dist: &[f64]) -> f64 {
    -dist.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// H(X | evidence) in bits.
pub fn entropy(net: &Network, x: &str, evidence: &Evidence) -> Result<f64> {
    let post = inference::marginal(net, x, evidence)?;
    Ok(entropy_of(&post.distribution))
}

/// Mutual information of a joint distribution given row-major as `rows x cols`.
pub fn mutual_information_of(joint: &[f64], rows: usize, cols: usize) -> f64 {
    assert_eq!(joint.len(), rows * cols);
    let px: Vec<f64> = (0..rows).map(|i| joint[i * cols..(i + 1) * cols].iter().sum()).collect();
    let py: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| joint[i * cols + j]).sum()).collect();
    let mut mi = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let p = joint[i * cols + j];
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// I(X; Y | evidence) in bits from the pairwise joint posterior.
pub fn mutual_information(net: &Network, x: &str, y: &str, evidence: &Evidence) -> Result<f64> {
    let (xi, yi) = (net.resolve(x)?, net.resolve(y)?);
    if xi == yi {
        return Err(Error::OverlappingSets(vec![net.name(xi).to_string()]));
    }
    let observed = net.evidence_states(evidence)?;
    if observed[xi].is_some() || observed[yi].is_some() {
        if probability_of_states(net, &observed) <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        return Ok(0.0);
    }
    let joint = inference::joint_posterior(net, &[net.name(xi), net.name(yi)], evidence)?;
    Ok(mutual_information_of(&joint, net.cardinality(xi), net.cardinality(yi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Variable;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn covary_proportional() {
        let cpt = Cpt::prior("X", vec![0.2, 0.3, 0.5]);
        let out = covary_cpt_row(&cpt, 0, 0, 0.4).unwrap();
        let row = &out.table[0];
        assert!(close(row[0], 0.4) && close(row[1], 0.225) && close(row[2], 0.375));
        assert_eq!(covary_cpt_row(&cpt, 0, 0, 0.2).unwrap(), cpt);
        assert_eq!(covary_cpt_row(&cpt, 0, 0, 1.0).unwrap().table[0], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn degenerate_row() {
        let cpt = Cpt::prior("X", vec![1.0, 0.0]);
        assert_eq!(covary_cpt_row(&cpt, 0, 0, 0.5).unwrap_err().kind(), "DegenerateRow");
        assert_eq!(covary_cpt_row(&cpt, 0, 0, 1.0).unwrap(), cpt);
        assert_eq!(covary_cpt_row(&cpt, 0, 0, 1.5).unwrap_err().kind(), "ParameterOutOfRange");
    }

    fn single() -> Network {
        Network::new(vec![Variable::new("R", &["a", "b"])], vec![], vec![Cpt::prior("R", vec![0.3, 0.7])]).unwrap()
    }

    #[test]
    fn self_parameter_is_identity() {
        let net = single();
        let p = ParameterRef::new("R", &[], "a");
        let sf = sensitivity_function(&net, ("R", "a"), &Evidence::new(), &p).unwrap();
        assert!(close(sf.alpha, 1.0) && close(sf.beta, 0.0));
        assert_eq!((sf.gamma, sf.delta), (0.0, 1.0));
        assert!(close(sf.sensitivity_value(), 1.0));
    }

    #[test]
    fn sensitivity_values_of_reference_shapes() {
        let mk = |alpha: f64, beta: f64| SensitivityFunction {
            alpha,
            beta,
            gamma: 0.0,
            delta: 1.0,
            t0: 0.37,
            hypothesis: ("H".into(), "h".into()),
            evidence: Evidence::new(),
            parameter: ParameterRef::new("H", &[], "h"),
        };
        assert!(close(mk(1.0, 0.0).sensitivity_value(), 1.0));
        assert!(close(mk(0.3285, 0.3318).sensitivity_value(), 0.3285));
        assert!(close(mk(-0.4724, 0.6123).sensitivity_value(), 0.4724));
    }

    #[test]
    fn single_node_ranking_ties_break_by_state() {
        let ranked = rank_parameters(&single(), ("R", "a"), &Evidence::new(), None).unwrap();
        assert_eq!(ranked.len(), 2);
        assert!(ranked.iter().all(|r| close(r.sensitivity_value, 1.0)));
        assert_eq!(ranked[0].parameter.state, "a");
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy_of(&[0.5, 0.5]), 1.0));
        assert_eq!(entropy_of(&[1.0, 0.0]), 0.0);
        assert!(close(entropy_of(&[0.5, 0.25, 0.125, 0.125]), 1.75));
    }

    #[test]
    fn copy_has_one_bit() {
        let net = Network::new(
            vec![Variable::new("X", &["0", "1"]), Variable::new("Y", &["0", "1"])],
            vec![("X".into(), "Y".into())],
            vec![Cpt::prior("X", vec![0.5, 0.5]), Cpt::new("Y", &["X"], vec![vec![1.0, 0.0], vec![0.0, 1.0]])],
        )
        .unwrap();
        let mi = mutual_information(&net, "X", "Y", &Evidence::new()).unwrap();
        assert!((mi - 1.0).abs() < 1e-12);
        let back = mutual_information(&net, "Y", "X", &Evidence::new()).unwrap();
        assert!((mi - back).abs() < 1e-15);
    }
}
