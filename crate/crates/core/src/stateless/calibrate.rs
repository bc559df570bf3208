//! Fitting elicited CPT cells to reference probabilities.
//!
//! Greedy coordinate search: each step evaluates every free cell under
//! proportional co-variation, where every target is a ratio of two functions
//! linear in the cell, and applies the single cell change that lowers the
//! weighted squared error the most.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::inference::probability_of_states;
use crate::oobn::Provenance;
use crate::sensitivity::{covary_row, linear_mass, sensitivity_function, ParameterRef};

use super::bundle::{ModelBundle, TargetQuery};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub max_steps: usize,
    /// Stop once every target is within `margin * tolerance`.
    pub margin: f64,
    pub bounds: (f64, f64),
    /// Restrict free cells to these flattened variables.
    pub free_variables: Option<BTreeSet<String>>,
    /// Restrict free cells to these parameters (flattened names).
    pub free_cells: Option<BTreeSet<ParameterRef>>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { max_steps: 200, margin: 0.5, bounds: (0.001, 0.999), free_variables: None, free_cells: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResidual {
    pub name: String,
    pub target: f64,
    pub tolerance: f64,
    pub before: f64,
    pub after: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellChange {
    pub template: String,
    pub node: String,
    pub parameter: ParameterRef,
    pub from: f64,
    pub to: f64,
}

/// A reference sensitivity function next to the one the model produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub name: String,
    pub reference: (f64, f64),
    pub model: Option<(f64, f64, f64, f64)>,
    pub model_t0: Option<f64>,
    pub reference_slope: f64,
    pub model_derivative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub steps: usize,
    pub converged: bool,
    pub loss_before: f64,
    pub loss_after: f64,
    pub targets: Vec<TargetResidual>,
    pub changes: Vec<CellChange>,
    /// Targets left outside tolerance.
    pub infeasible: Vec<String>,
    pub references: Vec<ReferenceCheck>,
}

struct Target {
    observed: Vec<Option<usize>>,
    with_h: Option<Vec<Option<usize>>>,
    relevant: Vec<bool>,
    value: f64,
    tolerance: f64,
}

impl Target {
    fn current(&self, net: &Network) -> f64 {
        let den = probability_of_states(net, &self.observed);
        match &self.with_h {
            Some(h) => probability_of_states(net, h) / den,
            None => den,
        }
    }
}

/// (a, b, c, d) with f(t) = (a t + b) / (c t + d).
type Ratio = (f64, f64, f64, f64);

fn ratio_at(r: &Ratio, t: f64) -> f64 {
    (r.0 * t + r.1) / (r.2 * t + r.3)
}

struct Cell {
    var: usize,
    row: usize,
    state: usize,
}

fn loss(values: impl Iterator<Item = (f64, f64, f64)>) -> f64 {
    values.map(|(v, target, tol)| ((v - target) / tol).powi(2)).sum()
}

/// Best parameter value for one cell, given every target's ratio (`None`
/// for targets the cell cannot affect, which contribute `constant`).
fn best_t(ratios: &[(Option<Ratio>, f64, f64, f64)], t0: f64, bounds: (f64, f64)) -> (f64, f64) {
    let eval = |t: f64| {
        loss(ratios.iter().map(|(r, current, target, tol)| {
            (r.map_or(*current, |r| ratio_at(&r, t)), *target, *tol)
        }))
    };
    let clamp = |t: f64| t.clamp(bounds.0, bounds.1);
    let mut candidates = vec![clamp(t0)];
    const GRID: usize = 64;
    candidates.extend((0..=GRID).map(|k| bounds.0 + (bounds.1 - bounds.0) * k as f64 / GRID as f64));
    for (r, _, target, _) in ratios {
        if let Some((a, b, c, d)) = r {
            // (a t + b) = target (c t + d)
            let den = a - target * c;
            if den.abs() > 1e-300 {
                let t = (target * d - b) / den;
                if t.is_finite() {
                    candidates.push(clamp(t));
                }
            }
        }
    }
    let mut best = (clamp(t0), eval(clamp(t0)));
    for &t in &candidates {
        let l = eval(t);
        if l < best.1 {
            best = (t, l);
        }
    }
    // golden-section refine around the best candidate
    let step = (bounds.1 - bounds.0) / GRID as f64;
    let (mut lo, mut hi) = (clamp(best.0 - step), clamp(best.0 + step));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if eval(x1) < eval(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let mid = (lo + hi) / 2.0;
    let l = eval(mid);
    if l < best.1 {
        best = (mid, l);
    }
    best
}

/// Calibrates the free (elicited or previously calibrated) cells of the
/// bundle against its calibration targets.
pub fn calibrate(bundle: &ModelBundle, options: &CalibrationOptions) -> Result<(ModelBundle, CalibrationReport)> {
    let mut net = bundle.network().clone();
    let mut targets = Vec::new();
    for t in bundle.targets() {
        let evidence = bundle.target_evidence(t)?;
        let observed = net.evidence_states(&evidence)?;
        let mut seeds: Vec<usize> = observed.iter().enumerate().filter(|(_, s)| s.is_some()).map(|(i, _)| i).collect();
        let with_h = match &t.query {
            TargetQuery::EvidenceProbability => None,
            TargetQuery::Posterior { variable, state } => {
                let h = net.resolve(variable)?;
                if observed[h].is_some() {
                    return Err(Error::HypothesisObserved(net.name(h).to_string()));
                }
                let mut with_h = observed.clone();
                with_h[h] = Some(net.state_id(h, state)?);
                seeds.push(h);
                Some(with_h)
            }
        };
        if probability_of_states(&net, &observed) <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        targets.push(Target {
            relevant: net.ancestors_of(seeds),
            observed,
            with_h,
            value: t.value,
            tolerance: t.tolerance,
        });
    }

    let paths = bundle.oobn().instance_paths();
    let mut cells = Vec::new();
    for v in 0..net.len() {
        let name = net.name(v);
        if let Some(free) = &options.free_variables {
            if !free.contains(name) {
                continue;
            }
        }
        let Some((template, _)) = bundle.origin_of(name) else { continue };
        if paths.get(&template).map_or(0, Vec::len) != 1 {
            continue;
        }
        if !matches!(bundle.provenance_of(name), Some(Provenance::Elicited | Provenance::Calibrated)) {
            continue;
        }
        if !targets.iter().any(|t| t.relevant[v]) {
            continue;
        }
        for (row, values) in net.cpt(v).table.iter().enumerate() {
            for state in 0..values.len() {
                let allowed = options
                    .free_cells
                    .as_ref()
                    .is_none_or(|only| only.contains(&ParameterRef::from_ids(&net, v, row, state)));
                if allowed && covary_row(values, state, 0.5).is_ok() {
                    cells.push(Cell { var: v, row, state });
                }
            }
        }
    }

    let before: Vec<f64> = targets.iter().map(|t| t.current(&net)).collect();
    let mut current = before.clone();
    let total_loss = |values: &[f64]| loss(values.iter().zip(&targets).map(|(&v, t)| (v, t.value, t.tolerance)));
    let loss_before = total_loss(&before);
    let mut changes: Vec<CellChange> = Vec::new();
    let done = |values: &[f64]| {
        values
            .iter()
            .zip(&targets)
            .all(|(v, t)| (v - t.value).abs() <= options.margin * t.tolerance)
    };

    let mut steps = 0;
    while steps < options.max_steps && !done(&current) {
        let current_loss = total_loss(&current);
        let best = cells
            .par_iter()
            .enumerate()
            .filter_map(|(k, c)| {
                let t0 = net.cpt(c.var).table[c.row][c.state];
                let ratios = targets
                    .iter()
                    .zip(&current)
                    .map(|(t, &cur)| {
                        if !t.relevant[c.var] {
                            return Ok((None, cur, t.value, t.tolerance));
                        }
                        let (c1, d1) = linear_mass(&net, c.var, c.row, c.state, &t.observed)?;
                        let r = match &t.with_h {
                            Some(h) => {
                                let (a, b) = linear_mass(&net, c.var, c.row, c.state, h)?;
                                (a, b, c1, d1)
                            }
                            None => (c1, d1, 0.0, 1.0),
                        };
                        Ok((Some(r), cur, t.value, t.tolerance))
                    })
                    .collect::<Result<Vec<_>>>()
                    .ok()?;
                let (t, l) = best_t(&ratios, t0, options.bounds);
                (l < current_loss - 1e-9 && (t - t0).abs() > 1e-9).then_some((k, t, l))
            })
            .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        let Some((k, t, _)) = best else { break };
        let c = &cells[k];
        let from = net.cpt(c.var).table[c.row][c.state];
        let row = covary_row(&net.cpt(c.var).table[c.row], c.state, t).expect("non-degenerate cell");
        net = net.with_row(c.var, c.row, row);
        current = targets.iter().map(|t| t.current(&net)).collect();
        let parameter = ParameterRef::from_ids(&net, c.var, c.row, c.state);
        let (template, node) = bundle.origin_of(net.name(c.var)).expect("free cell has an origin");
        match changes.iter_mut().find(|ch| ch.parameter == parameter) {
            Some(ch) => ch.to = t,
            None => changes.push(CellChange { template, node, parameter, from, to: t }),
        }
        steps += 1;
    }

    // write calibrated rows back into the template library
    let mut file = bundle.file().clone();
    let touched: BTreeSet<usize> = changes
        .iter()
        .filter_map(|ch| ch.parameter.locate(&net).ok().map(|(v, _, _)| v))
        .collect();
    for &v in &touched {
        let (template, node) = bundle.origin_of(net.name(v)).expect("free cell has an origin");
        let cpt = file
            .templates
            .get_mut(&template)
            .and_then(|t| t.cpts.get_mut(&node))
            .expect("origin exists");
        cpt.table = net.cpt(v).table.clone();
        cpt.provenance = Some(Provenance::Calibrated);
    }
    let calibrated = ModelBundle::from_file(file)?.with_refreshed_standins()?;

    let after: Vec<f64> = bundle
        .targets()
        .iter()
        .map(|t| calibrated.target_value(t))
        .collect::<Result<_>>()?;
    let residuals: Vec<TargetResidual> = bundle
        .targets()
        .iter()
        .zip(before.iter().zip(&after))
        .map(|(t, (&b, &a))| TargetResidual {
            name: t.name.clone(),
            target: t.value,
            tolerance: t.tolerance,
            before: b,
            after: a,
            within_tolerance: (a - t.value).abs() <= t.tolerance,
        })
        .collect();
    let infeasible = residuals.iter().filter(|r| !r.within_tolerance).map(|r| r.name.clone()).collect();
    let report = CalibrationReport {
        steps,
        converged: residuals.iter().all(|r| r.within_tolerance),
        loss_before,
        loss_after: total_loss(&after),
        targets: residuals,
        changes,
        infeasible,
        references: reference_checks(&calibrated)?,
    };
    Ok((calibrated, report))
}

/// Compares every reference sensitivity function with the model's.
pub fn reference_checks(bundle: &ModelBundle) -> Result<Vec<ReferenceCheck>> {
    bundle
        .metadata()
        .sensitivity_references
        .iter()
        .map(|r| {
            let evidence = bundle.scenario_evidence(r.scenario.as_deref(), &Default::default())?;
            let f = sensitivity_function(
                bundle.network(),
                (&r.hypothesis.0, &r.hypothesis.1),
                &evidence,
                &r.parameter,
            )
            .ok();
            Ok(ReferenceCheck {
                name: r.name.clone(),
                reference: (r.alpha, r.beta),
                model: f.as_ref().map(|f| (f.alpha, f.beta, f.gamma, f.delta)),
                model_t0: f.as_ref().map(|f| f.t0),
                reference_slope: r.alpha,
                model_derivative: f.as_ref().map(|f| f.derivative(f.t0)),
            })
        })
        .collect()
}
