//! Parameter and structure learning from complete discrete data.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{row_index, Cpt, Network, Variable};
use crate::sensitivity::mutual_information_of;

/// Complete discrete records; each cell is a state index of its column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Variable>,
    rows: Vec<Vec<usize>>,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(columns: Vec<Variable>, rows: Vec<Vec<usize>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Dataset(format!("row {i} has {} cells, expected {}", row.len(), columns.len())));
            }
            for (c, &s) in row.iter().enumerate() {
                if s >= columns[c].cardinality() {
                    return Err(Error::Dataset(format!("row {i}: state index {s} invalid for `{}`", columns[c].name)));
                }
            }
        }
        Ok(Dataset { columns, rows, weights: None })
    }

    /// Rows carrying nonnegative weights instead of unit counts.
    pub fn weighted(columns: Vec<Variable>, rows: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != rows.len() || weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::Dataset("weights must be nonnegative, one per row".into()));
        }
        let mut d = Dataset::new(columns, rows)?;
        d.weights = Some(weights);
        Ok(d)
    }

    /// Builds a dataset from state labels, rejecting missing or unknown labels.
    pub fn from_labels(columns: Vec<Variable>, rows: &[Vec<String>]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Dataset(format!("row {i} has {} cells, expected {}", row.len(), columns.len())));
            }
            let mut states = Vec::with_capacity(row.len());
            for (c, label) in row.iter().enumerate() {
                let s = columns[c].state_index(label.trim()).ok_or_else(|| Error::UnparseableCell {
                    row: i,
                    column: columns[c].name.clone(),
                    value: label.clone(),
                })?;
                states.push(s);
            }
            out.push(states);
        }
        Dataset::new(columns, out)
    }

    /// Reads a CSV of state labels with a header row. `columns` declares the
    /// state list of every column used; extra CSV columns are ignored.
    pub fn from_csv(path: impl AsRef<Path>, columns: Vec<Variable>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        let header = reader.headers().map_err(|e| Error::Dataset(e.to_string()))?.clone();
        let positions: Vec<usize> = columns
            .iter()
            .map(|c| header.iter().position(|h| h == c.name).ok_or_else(|| Error::MissingColumn(c.name.clone())))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Dataset(e.to_string()))?;
            rows.push(positions.iter().map(|&p| record.get(p).unwrap_or("").to_string()).collect());
        }
        Dataset::from_labels(columns, &rows)
    }

    pub fn columns(&self) -> &[Variable] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Joint counts of two columns, row-major.
    fn pair_counts(&self, x: usize, y: usize) -> Vec<f64> {
        let cy = self.columns[y].cardinality();
        let mut counts = vec![0.0; self.columns[x].cardinality() * cy];
        for (i, row) in self.rows.iter().enumerate() {
            counts[row[x] * cy + row[y]] += self.weight(i);
        }
        counts
    }
}

/// A DAG over variables with no quantification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub variables: Vec<Variable>,
    pub edges: Vec<(String, String)>,
}

impl Skeleton {
    /// Parents of `child` in order of appearance in the edge list.
    pub fn parents(&self, child: &str) -> Vec<String> {
        self.edges.iter().filter(|(_, c)| c == child).map(|(p, _)| p.clone()).collect()
    }

    pub fn from_network(net: &Network) -> Skeleton {
        Skeleton { variables: net.variables().to_vec(), edges: net.edge_names() }
    }

    /// Edge set as unordered pairs.
    pub fn undirected(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|(a, b)| if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
            .collect()
    }
}

/// Maximum-likelihood CPT estimate for a single variable given its parents,
/// with `smoothing` pseudo-counts added to every cell.
pub fn mle_cpt(child: &str, parents: &[String], dataset: &Dataset, smoothing: f64) -> Result<Cpt> {
    if smoothing.is_nan() || smoothing < 0.0 {
        return Err(Error::Dataset(format!("smoothing must be nonnegative, got {smoothing}")));
    }
    let c = dataset.column(child)?;
    let pcols: Vec<usize> = parents.iter().map(|p| dataset.column(p)).collect::<Result<_>>()?;
    let cards: Vec<usize> = pcols.iter().map(|&p| dataset.columns[p].cardinality()).collect();
    let card = dataset.columns[c].cardinality();
    let nrows: usize = cards.iter().product();
    let mut counts = vec![vec![0.0; card]; nrows];
    let mut config = vec![0; pcols.len()];
    for (i, row) in dataset.rows.iter().enumerate() {
        for (k, &p) in pcols.iter().enumerate() {
            config[k] = row[p];
        }
        counts[row_index(&cards, &config)][row[c]] += dataset.weight(i);
    }
    let table = counts
        .into_iter()
        .enumerate()
        .map(|(r, row)| {
            let total: f64 = row.iter().sum::<f64>() + smoothing * card as f64;
            if total <= 0.0 {
                return Err(Error::EmptyRowWithoutSmoothing { variable: child.to_string(), row: r });
            }
            Ok(row.iter().map(|n| (n + smoothing) / total).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Cpt { child: child.to_string(), parents: parents.to_vec(), table })
}

/// CPTs for every variable of `structure`.
pub fn mle_cpts(structure: &Skeleton, dataset: &Dataset, smoothing: f64) -> Result<Vec<Cpt>> {
    structure
        .variables
        .iter()
        .map(|v| {
            let col = dataset.column(&v.name)?;
            if dataset.columns[col].states != v.states {
                return Err(Error::Dataset(format!("column `{}` state list differs from structure", v.name)));
            }
            mle_cpt(&v.name, &structure.parents(&v.name), dataset, smoothing)
        })
        .collect()
}

/// Builds a network from a skeleton and learned CPTs.
pub fn fit(structure: &Skeleton, dataset: &Dataset, smoothing: f64) -> Result<Network> {
    let cpts = mle_cpts(structure, dataset, smoothing)?;
    Network::new(structure.variables.clone(), structure.edges.clone(), cpts)
}

/// Mutual information (bits) of the empirical joint of two columns.
pub fn empirical_mutual_information(dataset: &Dataset, x: &str, y: &str) -> Result<f64> {
    let (xi, yi) = (dataset.column(x)?, dataset.column(y)?);
    if xi == yi {
        return Err(Error::OverlappingSets(vec![x.to_string()]));
    }
    let counts = dataset.pair_counts(xi, yi);
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let joint: Vec<f64> = counts.iter().map(|c| c / total).collect();
    Ok(mutual_information_of(&joint, dataset.columns[xi].cardinality(), dataset.columns[yi].cardinality()))
}

/// Maximum-weight spanning tree under empirical mutual information, directed
/// away from `root`. Ties are broken by the (lexicographically ordered) pair
/// of column names.
pub fn chow_liu_tree(dataset: &Dataset, root: &str) -> Result<Skeleton> {
    let n = dataset.columns.len();
    if n < 2 {
        return Err(Error::Dataset("Chow-Liu needs at least two variables".into()));
    }
    let root_id = dataset.column(root)?;
    let name = |i: usize| dataset.columns[i].name.as_str();
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let (a, b) = if name(a) <= name(b) { (a, b) } else { (b, a) };
            let mi = empirical_mutual_information(dataset, name(a), name(b))?;
            candidates.push((mi, a, b));
        }
    }
    candidates.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then_with(|| name(x.1).cmp(name(y.1)))
            .then_with(|| name(x.2).cmp(name(y.2)))
    });

    // Kruskal with union-find
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(_, a, b) in &candidates {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    for adj in &mut adjacency {
        adj.sort_by(|&x, &y| name(x).cmp(name(y)));
    }

    let mut edges = Vec::with_capacity(n - 1);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([root_id]);
    seen[root_id] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                edges.push((name(v).to_string(), name(w).to_string()));
                queue.push_back(w);
            }
        }
    }
    Ok(Skeleton { variables: dataset.columns.clone(), edges })
}

/// Draws one state from a probability row.
pub fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Forward (ancestral) sampling of complete records.
pub fn forward_sample<R: Rng + ?Sized>(net: &Network, n: usize, rng: &mut R) -> Dataset {
    let order = net.topological_ids();
    let rows = (0..n)
        .map(|_| {
            let mut states = vec![0; net.len()];
            for &v in &order {
                let row = net.row_of(v, &states);
                states[v] = sample_row(&net.cpt(v).table[row], rng);
            }
            states
        })
        .collect();
    Dataset { columns: net.variables().to_vec(), rows, weights: None }
}
