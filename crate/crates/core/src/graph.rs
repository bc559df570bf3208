//! Discrete variables, DAG structure, conditional probability tables and the
//! purely graphical queries on them (topological order, d-separation, Markov
//! blankets) together with the factorized joint distribution.
//!
//! CPT rows are indexed by parent configuration with the *last* parent
//! varying fastest. Rows must sum to one within [`NORMALIZATION_TOLERANCE`];
//! they are never renormalized on load.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Partial assignment of observed states (hard evidence only).
pub type Evidence = BTreeMap<String, String>;

/// Total assignment of a state to every variable of a network.
pub type Assignment = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, states: &[&str]) -> Self {
        Variable {
            name: name.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |detail: &str| Error::InvalidVariable {
            variable: self.name.clone(),
            detail: detail.to_string(),
        };
        if self.name.is_empty() {
            return Err(invalid("empty name"));
        }
        if self.states.len() < 2 {
            return Err(invalid("fewer than two states"));
        }
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if s.is_empty() {
                return Err(invalid("empty state label"));
            }
            if !seen.insert(s.as_str()) {
                return Err(invalid(&format!("duplicate state `{s}`")));
            }
        }
        Ok(())
    }
}

/// Conditional probability table of `child` given an ordered parent list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    /// One row per parent configuration (last parent fastest), one column per child state.
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new<S: Into<String>>(child: S, parents: &[&str], table: Vec<Vec<f64>>) -> Self {
        Cpt {
            child: child.into(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    pub fn prior<S: Into<String>>(child: S, row: Vec<f64>) -> Self {
        Cpt { child: child.into(), parents: Vec::new(), table: vec![row] }
    }
}

/// Row index of a parent configuration given parent cardinalities (last fastest).
pub fn row_index(cards: &[usize], states: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), states.len());
    cards
        .iter()
        .zip(states)
        .fold(0, |acc, (&card, &s)| acc * card + s)
}

/// Inverse of [`row_index`].
pub fn row_states(cards: &[usize], mut row: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        out[i] = row % cards[i];
        row /= cards[i];
    }
    out
}

/// A validated, immutable discrete Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    cpts: Vec<Cpt>,
}

impl Network {
    pub fn new(variables: Vec<Variable>, edges: Vec<(String, String)>, cpts: Vec<Cpt>) -> Result<Self> {
        let mut index = HashMap::with_capacity(variables.len());
        for (i, v) in variables.iter().enumerate() {
            v.validate()?;
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::InvalidVariable {
                    variable: v.name.clone(),
                    detail: "duplicate variable name".into(),
                });
            }
        }
        let lookup = |name: &str, what: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::DanglingReference(format!("{what} refers to unknown variable `{name}`")))
        };

        let n = variables.len();
        let mut edge_ids = Vec::with_capacity(edges.len());
        let mut edge_parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (p, c) in &edges {
            let (pi, ci) = (lookup(p, "edge")?, lookup(c, "edge")?);
            if pi == ci {
                return Err(Error::CycleDetected(vec![p.clone()]));
            }
            if !edge_parents[ci].insert(pi) {
                return Err(Error::DanglingReference(format!("duplicate edge {p} -> {c}")));
            }
            edge_ids.push((pi, ci));
        }

        let mut slots: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            let ci = lookup(&cpt.child, "CPT")?;
            if slots[ci].is_some() {
                return Err(Error::CptShapeMismatch {
                    variable: cpt.child.clone(),
                    detail: "more than one CPT".into(),
                });
            }
            slots[ci] = Some(cpt);
        }

        let mut parents = Vec::with_capacity(n);
        let mut ordered_cpts = Vec::with_capacity(n);
        for (i, slot) in slots.into_iter().enumerate() {
            let var = &variables[i];
            let cpt = slot.ok_or_else(|| Error::CptShapeMismatch {
                variable: var.name.clone(),
                detail: "missing CPT".into(),
            })?;
            let mut pids = Vec::with_capacity(cpt.parents.len());
            for p in &cpt.parents {
                pids.push(lookup(p, "CPT parent")?);
            }
            let declared: BTreeSet<usize> = pids.iter().copied().collect();
            if declared.len() != pids.len() || declared != edge_parents[i] {
                return Err(Error::CptShapeMismatch {
                    variable: var.name.clone(),
                    detail: format!("CPT parents {:?} do not match graph parents", cpt.parents),
                });
            }
            let rows: usize = pids.iter().map(|&p| variables[p].cardinality()).product();
            if cpt.table.len() != rows {
                return Err(Error::CptShapeMismatch {
                    variable: var.name.clone(),
                    detail: format!("expected {rows} rows, found {}", cpt.table.len()),
                });
            }
            for (r, row) in cpt.table.iter().enumerate() {
                if row.len() != var.cardinality() {
                    return Err(Error::CptShapeMismatch {
                        variable: var.name.clone(),
                        detail: format!("row {r} has {} columns, expected {}", row.len(), var.cardinality()),
                    });
                }
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::CptShapeMismatch {
                        variable: var.name.clone(),
                        detail: format!("row {r} has an entry outside [0, 1]"),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(Error::RowNotNormalized { variable: var.name.clone(), row: r, sum });
                }
            }
            parents.push(pids);
            ordered_cpts.push(cpt);
        }

        let mut children = vec![Vec::new(); n];
        for &(p, c) in &edge_ids {
            children[p].push(c);
        }
        for ch in &mut children {
            ch.sort_by(|&a, &b| variables[a].name.cmp(&variables[b].name));
        }

        let net = Network { variables, index, edges: edge_ids, parents, children, cpts: ordered_cpts };
        net.check_acyclic()?;
        Ok(net)
    }

    fn check_acyclic(&self) -> Result<()> {
        let order = self.kahn();
        if order.len() == self.len() {
            return Ok(());
        }
        let placed: BTreeSet<usize> = order.into_iter().collect();
        let mut stuck: Vec<String> = (0..self.len())
            .filter(|i| !placed.contains(i))
            .map(|i| self.variables[i].name.clone())
            .collect();
        stuck.sort();
        Err(Error::CycleDetected(stuck))
    }

    /// Kahn's algorithm with lexicographic tie-breaking; shorter than `len()` iff cyclic.
    fn kahn(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<(&str, usize)> = (0..self.len())
            .filter(|&i| indegree[i] == 0)
            .map(|i| (self.variables[i].name.as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(first) = ready.pop_first() {
            let v = first.1;
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert((self.variables[c].name.as_str(), c));
                }
            }
        }
        order
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: usize) -> &Variable {
        &self.variables[id]
    }

    pub fn name(&self, id: usize) -> &str {
        &self.variables[id].name
    }

    pub fn cardinality(&self, id: usize) -> usize {
        self.variables[id].cardinality()
    }

    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn cpt(&self, id: usize) -> &Cpt {
        &self.cpts[id]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges.iter().map(|&(p, c)| (self.name(p), self.name(c)))
    }

    /// Exact-name lookup.
    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Resolves a variable by exact name, or by the last `.`-separated segment
    /// of a qualified name when that suffix is unique in the network.
    pub fn resolve(&self, name: &str) -> Result<usize> {
        if let Some(id) = self.id(name) {
            return Ok(id);
        }
        let suffix = format!(".{name}");
        let mut hits = self.variables.iter().enumerate().filter(|(_, v)| v.name.ends_with(&suffix));
        match (hits.next(), hits.next()) {
            (Some((id, _)), None) => Ok(id),
            _ => Err(Error::UnknownVariable(name.to_string())),
        }
    }

    pub fn state_id(&self, var: usize, state: &str) -> Result<usize> {
        self.variables[var].state_index(state).ok_or_else(|| Error::UnknownState {
            variable: self.variables[var].name.clone(),
            state: state.to_string(),
        })
    }

    /// Resolves evidence to a per-variable observed state index.
    pub fn evidence_states(&self, evidence: &Evidence) -> Result<Vec<Option<usize>>> {
        let mut out = vec![None; self.len()];
        for (name, state) in evidence {
            let id = self.resolve(name)?;
            let s = self.state_id(id, state)?;
            match out[id] {
                Some(prev) if prev != s => {
                    return Err(Error::OverlappingSets(vec![self.name(id).to_string()]));
                }
                _ => out[id] = Some(s),
            }
        }
        Ok(out)
    }

    /// Evidence with every key replaced by the variable's full name.
    pub fn canonical_evidence(&self, evidence: &Evidence) -> Result<Evidence> {
        let states = self.evidence_states(evidence)?;
        Ok(states
            .iter()
            .enumerate()
            .filter_map(|(v, s)| s.map(|s| (self.name(v).to_string(), self.variables[v].states[s].clone())))
            .collect())
    }

    /// Cardinalities of the parents of `id`, in CPT order.
    pub fn parent_cards(&self, id: usize) -> Vec<usize> {
        self.parents[id].iter().map(|&p| self.cardinality(p)).collect()
    }

    /// Parents precede children; ties broken by variable name.
    pub fn topological_order(&self) -> Vec<String> {
        self.kahn().into_iter().map(|i| self.name(i).to_string()).collect()
    }

    pub fn topological_ids(&self) -> Vec<usize> {
        self.kahn()
    }

    pub fn ancestors_of(&self, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        mark
    }

    fn ids_of<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> Result<BTreeSet<usize>> {
        names.into_iter().map(|n| self.resolve(n)).collect()
    }

    /// Whether `x` and `y` are d-separated given `z` (reachability, no path enumeration).
    pub fn d_separated(&self, x: &BTreeSet<String>, y: &BTreeSet<String>, z: &BTreeSet<String>) -> Result<bool> {
        let (xs, ys, zs) = (self.ids_of(x)?, self.ids_of(y)?, self.ids_of(z)?);
        let mut overlap: Vec<String> = xs
            .intersection(&ys)
            .chain(xs.intersection(&zs))
            .chain(ys.intersection(&zs))
            .map(|&i| self.name(i).to_string())
            .collect();
        if !overlap.is_empty() {
            overlap.sort();
            overlap.dedup();
            return Err(Error::OverlappingSets(overlap));
        }
        let reach = self.reachable(&xs, &zs);
        Ok(ys.iter().all(|&v| !reach[v]))
    }

    /// Nodes reachable from `sources` along active trails given `observed`.
    pub fn reachable(&self, sources: &BTreeSet<usize>, observed: &BTreeSet<usize>) -> Vec<bool> {
        let n = self.len();
        let in_z: Vec<bool> = (0..n).map(|i| observed.contains(&i)).collect();
        let z_anc = self.ancestors_of(observed.iter().copied());

        // direction: true = arrived from a child (moving up), false = from a parent.
        let mut visited = vec![[false; 2]; n];
        let mut reach = vec![false; n];
        let mut queue: VecDeque<(usize, bool)> = sources.iter().map(|&s| (s, true)).collect();
        while let Some((v, up)) = queue.pop_front() {
            if visited[v][up as usize] {
                continue;
            }
            visited[v][up as usize] = true;
            if !in_z[v] {
                reach[v] = true;
            }
            if up && !in_z[v] {
                queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                queue.extend(self.children[v].iter().map(|&c| (c, false)));
            } else if !up {
                if !in_z[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if z_anc[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        for s in sources {
            reach[*s] = false;
        }
        reach
    }

    /// Parents, children and the children's other parents of `x`.
    pub fn markov_blanket(&self, x: &str) -> Result<BTreeSet<String>> {
        let id = self.resolve(x)?;
        let mut blanket: BTreeSet<usize> = self.parents[id].iter().copied().collect();
        for &c in &self.children[id] {
            blanket.insert(c);
            blanket.extend(self.parents[c].iter().copied());
        }
        blanket.remove(&id);
        Ok(blanket.into_iter().map(|i| self.name(i).to_string()).collect())
    }

    /// Product of the CPT entries selected by a total assignment.
    pub fn joint_probability(&self, assignment: &Assignment) -> Result<f64> {
        let states = self.evidence_states(assignment)?;
        let missing: Vec<String> = states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| self.name(i).to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::PartialAssignment(missing));
        }
        let states: Vec<usize> = states.into_iter().map(Option::unwrap).collect();
        Ok(self.joint_of_states(&states))
    }

    /// Joint probability of a total assignment given as state indices per variable id.
    pub fn joint_of_states(&self, states: &[usize]) -> f64 {
        (0..self.len())
            .map(|v| self.cpts[v].table[self.row_of(v, states)][states[v]])
            .product()
    }

    /// CPT row of `v` selected by a full state vector.
    pub fn row_of(&self, v: usize, states: &[usize]) -> usize {
        self.parents[v]
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + states[p])
    }

    /// Returns a copy of the network with the CPT of `variable` replaced.
    pub fn with_cpt(&self, cpt: Cpt) -> Result<Network> {
        let id = self.id(&cpt.child).ok_or_else(|| Error::UnknownVariable(cpt.child.clone()))?;
        let mut cpts = self.cpts.clone();
        cpts[id] = cpt;
        Network::new(self.variables.clone(), self.edge_names(), cpts)
    }

    /// Replaces one CPT row without revalidating the whole network; the row
    /// must already be normalized.
    pub(crate) fn with_row(&self, var: usize, row: usize, values: Vec<f64>) -> Network {
        debug_assert_eq!(values.len(), self.cardinality(var));
        let mut net = self.clone();
        net.cpts[var].table[row] = values;
        net
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges().map(|(p, c)| (p.to_string(), c.to_string())).collect()
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            variables: self.variables.clone(),
            edges: self.edge_names(),
            cpts: self
                .cpts
                .iter()
                .map(|c| (c.child.clone(), CptEntry { parents: c.parents.clone(), table: c.table.clone() }))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Network> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
        file.build()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        Network::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk network format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub variables: Vec<Variable>,
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, CptEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptEntry {
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl NetworkFile {
    pub fn build(self) -> Result<Network> {
        let cpts = self
            .cpts
            .into_iter()
            .map(|(child, e)| Cpt { child, parents: e.parents, table: e.table })
            .collect();
        Network::new(self.variables, self.edges, cpts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn binary(name: &str) -> Variable {
        Variable::new(name, &["0", "1"])
    }

    fn edge(p: &str, c: &str) -> (String, String) {
        (p.to_string(), c.to_string())
    }

    fn two_node() -> Network {
        Network::new(
            vec![Variable::new("A", &["a1", "a2"]), Variable::new("B", &["b1", "b2"])],
            vec![edge("A", "B")],
            vec![
                Cpt::prior("A", vec![0.6, 0.4]),
                Cpt::new("B", &["A"], vec![vec![0.7, 0.3], vec![0.2, 0.8]]),
            ],
        )
        .unwrap()
    }

    fn collider() -> Network {
        Network::new(
            vec![binary("X"), binary("Y"), binary("Z")],
            vec![edge("X", "Z"), edge("Y", "Z")],
            vec![
                Cpt::prior("X", vec![0.5, 0.5]),
                Cpt::prior("Y", vec![0.5, 0.5]),
                Cpt::new("Z", &["X", "Y"], vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.3, 0.7], vec![0.1, 0.9]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn minimal_network_builds() {
        let net = two_node();
        assert_eq!(net.len(), 2);
        assert_eq!(net.edges().count(), 1);
    }

    #[test]
    fn two_cycle_rejected() {
        let err = Network::new(
            vec![binary("A"), binary("B")],
            vec![edge("A", "B"), edge("B", "A")],
            vec![
                Cpt::new("A", &["B"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
                Cpt::new("B", &["A"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
            ],
        )
        .unwrap_err();
        assert_eq!(err, Error::CycleDetected(vec!["A".into(), "B".into()]));
    }

    #[test]
    fn unnormalized_row_rejected() {
        let err = Network::new(vec![binary("A")], vec![], vec![Cpt::prior("A", vec![0.5, 0.4])]).unwrap_err();
        match err {
            Error::RowNotNormalized { row, sum, .. } => {
                assert_eq!(row, 0);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_and_reference_errors() {
        let err = Network::new(vec![binary("A")], vec![], vec![Cpt::prior("A", vec![0.2, 0.3, 0.5])]).unwrap_err();
        assert_eq!(err.kind(), "CptShapeMismatch");
        let err = Network::new(vec![binary("A")], vec![edge("Q", "A")], vec![]).unwrap_err();
        assert_eq!(err.kind(), "DanglingReference");
        let err = Network::new(vec![binary("A")], vec![], vec![]).unwrap_err();
        assert_eq!(err.kind(), "CptShapeMismatch");
        let err = Network::new(
            vec![binary("A"), binary("B")],
            vec![],
            vec![Cpt::prior("A", vec![0.5, 0.5]), Cpt::new("B", &["A"], vec![vec![0.5, 0.5]; 2])],
        )
        .unwrap_err();
        assert_eq!(err.kind(), "CptShapeMismatch");
    }

    #[test]
    fn topological_order_ties_break_by_name() {
        let net = Network::new(
            vec![binary("C"), binary("B"), binary("A")],
            vec![edge("A", "C"), edge("B", "C")],
            vec![
                Cpt::prior("A", vec![0.5, 0.5]),
                Cpt::prior("B", vec![0.5, 0.5]),
                Cpt::new("C", &["A", "B"], vec![vec![0.5, 0.5]; 4]),
            ],
        )
        .unwrap();
        assert_eq!(net.topological_order(), vec!["A", "B", "C"]);
    }

    #[test]
    fn collider_d_separation() {
        let net = collider();
        assert!(net.d_separated(&set(&["X"]), &set(&["Y"]), &set(&[])).unwrap());
        assert!(!net.d_separated(&set(&["X"]), &set(&["Y"]), &set(&["Z"])).unwrap());
        assert_eq!(
            net.d_separated(&set(&["X"]), &set(&["Y"]), &set(&["X"])).unwrap_err().kind(),
            "OverlappingSets"
        );
    }

    #[test]
    fn chain_d_separation() {
        let net = Network::new(
            vec![binary("X"), binary("Z"), binary("Y")],
            vec![edge("X", "Z"), edge("Z", "Y")],
            vec![
                Cpt::prior("X", vec![0.5, 0.5]),
                Cpt::new("Z", &["X"], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
                Cpt::new("Y", &["Z"], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            ],
        )
        .unwrap();
        assert!(net.d_separated(&set(&["X"]), &set(&["Y"]), &set(&["Z"])).unwrap());
        assert!(!net.d_separated(&set(&["X"]), &set(&["Y"]), &set(&[])).unwrap());
    }

    #[test]
    fn blankets() {
        let net = collider();
        assert_eq!(net.markov_blanket("X").unwrap(), set(&["Y", "Z"]));
        assert_eq!(net.markov_blanket("Z").unwrap(), set(&["X", "Y"]));
        let lone = Network::new(vec![binary("A")], vec![], vec![Cpt::prior("A", vec![0.5, 0.5])]).unwrap();
        assert!(lone.markov_blanket("A").unwrap().is_empty());
        assert_eq!(lone.markov_blanket("Q").unwrap_err().kind(), "UnknownVariable");
    }

    #[test]
    fn joint_two_factor_product() {
        let net = two_node();
        let a: Assignment = [("A".to_string(), "a1".to_string()), ("B".to_string(), "b1".to_string())].into();
        assert!((net.joint_probability(&a).unwrap() - 0.42).abs() < 1e-15);
        let partial: Assignment = [("A".to_string(), "a1".to_string())].into();
        assert_eq!(net.joint_probability(&partial).unwrap_err().kind(), "PartialAssignment");
    }

    #[test]
    fn row_index_last_parent_fastest() {
        assert_eq!(row_index(&[2, 3], &[1, 2]), 5);
        assert_eq!(row_states(&[2, 3], 4), vec![1, 1]);
    }

    #[test]
    fn suffix_resolution() {
        let net = Network::new(
            vec![binary("a.X"), binary("b.X"), binary("a.Y")],
            vec![],
            vec![
                Cpt::prior("a.X", vec![0.5, 0.5]),
                Cpt::prior("b.X", vec![0.5, 0.5]),
                Cpt::prior("a.Y", vec![0.5, 0.5]),
            ],
        )
        .unwrap();
        assert_eq!(net.resolve("Y").unwrap(), 2);
        assert!(net.resolve("X").is_err());
        assert_eq!(net.resolve("b.X").unwrap(), 1);
    }

    #[test]
    fn json_round_trip() {
        let net = collider();
        let back = Network::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
    }
}
