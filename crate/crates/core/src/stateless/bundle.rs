//! Model bundle: an OOBN template library plus the metadata needed to
//! quantify, query and calibrate it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Evidence, Network, Variable};
use crate::inference;
use crate::learning::{mle_cpt, Dataset};
use crate::oobn::{Oobn, OobnFile, Provenance, TemplateSpec};
use crate::sensitivity::ParameterRef;

use super::discretize::{deterministic_sum_cpt, BinMeta};

/// A child defined as the sum of two parents within one template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumNode {
    pub template: String,
    pub node: String,
    pub addends: (String, String),
}

/// A reported quantity `P(variable = state | evidence)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Headline {
    pub label: String,
    pub variable: String,
    pub state: String,
}

/// A reference sensitivity function kept for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReference {
    pub name: String,
    pub scenario: Option<String>,
    pub hypothesis: (String, String),
    pub parameter: ParameterRef,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub description: String,
    /// Bin boundaries of discretized variables, keyed by node name.
    #[serde(default)]
    pub bins: BTreeMap<String, BinMeta>,
    /// Variables whose state lists are ordered low to high.
    #[serde(default)]
    pub ordinal: BTreeSet<String>,
    #[serde(default)]
    pub sum_nodes: Vec<SumNode>,
    #[serde(default)]
    pub headlines: Vec<Headline>,
    #[serde(default)]
    pub sensitivity_references: Vec<SensitivityReference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning: Option<LearningRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRecord {
    pub source: String,
    pub rows: usize,
    pub smoothing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub headline: String,
    pub direction: Direction,
    pub relative_to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub evidence: Evidence,
    /// Name of the structural switch the evidence emulates, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<String>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetQuery {
    Posterior { variable: String, state: String },
    EvidenceProbability,
}

/// `query | scenario evidence ∪ evidence = value ± tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub name: String,
    #[serde(flatten)]
    pub query: TargetQuery,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default)]
    pub evidence: Evidence,
    pub value: f64,
    pub tolerance: f64,
}

/// On-disk bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleFile {
    pub templates: BTreeMap<String, TemplateSpec>,
    pub top: String,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(default)]
    pub presets: Vec<ScenarioPreset>,
    #[serde(default)]
    pub calibration_targets: Vec<CalibrationTarget>,
}

/// A validated, immutable bundle with its flattened network.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    file: BundleFile,
    oobn: Oobn,
    network: Network,
    aliases: BTreeMap<String, String>,
}

impl ModelBundle {
    pub fn from_file(file: BundleFile) -> Result<ModelBundle> {
        let oobn = Oobn::from_file(OobnFile { templates: file.templates.clone(), top: file.top.clone() })?;
        let (network, aliases) = oobn.flatten_with_aliases()?;
        let bundle = ModelBundle { file, oobn, network, aliases };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn from_json(text: &str) -> Result<ModelBundle> {
        if text.trim().is_empty() {
            return Err(Error::SchemaError("empty bundle".into()));
        }
        let file: BundleFile = serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
        ModelBundle::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelBundle> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        ModelBundle::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.file).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let schema = |m: String| Err(Error::SchemaError(m));
        for (tname, t) in &self.file.templates {
            for (node, cpt) in &t.cpts {
                if cpt.provenance.is_none() {
                    return schema(format!("CPT `{tname}.{node}` has no provenance tag"));
                }
            }
        }
        for (name, meta) in &self.file.metadata.bins {
            meta.validate()?;
            let var = self
                .local_variable(name)
                .ok_or_else(|| Error::SchemaError(format!("bins for unknown variable `{name}`")))?;
            if var.cardinality() != meta.bin_count() {
                return schema(format!("`{name}` has {} states but {} bins", var.cardinality(), meta.bin_count()));
            }
        }
        for s in &self.file.metadata.sum_nodes {
            let t = self
                .file
                .templates
                .get(&s.template)
                .ok_or_else(|| Error::UnknownTemplateReference(s.template.clone()))?;
            let cpt = t
                .cpts
                .get(&s.node)
                .ok_or_else(|| Error::SchemaError(format!("sum node `{}` has no CPT", s.node)))?;
            if cpt.parents != [s.addends.0.clone(), s.addends.1.clone()] {
                return schema(format!("sum node `{}` parents differ from its addends", s.node));
            }
        }
        for h in &self.file.metadata.headlines {
            let v = self.network.resolve(&h.variable)?;
            self.network.state_id(v, &h.state)?;
        }
        let mut names = BTreeSet::new();
        for p in &self.file.presets {
            if !names.insert(p.name.as_str()) {
                return schema(format!("duplicate preset `{}`", p.name));
            }
            self.canonical_evidence(&p.evidence)?;
        }
        for t in &self.file.calibration_targets {
            self.target_evidence(t)?;
            if let TargetQuery::Posterior { variable, state } = &t.query {
                let v = self.network.resolve(variable)?;
                self.network.state_id(v, state)?;
            }
        }
        Ok(())
    }

    pub fn file(&self) -> &BundleFile {
        &self.file
    }

    pub fn oobn(&self) -> &Oobn {
        &self.oobn
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn metadata(&self) -> &Metadata {
        &self.file.metadata
    }

    pub fn presets(&self) -> &[ScenarioPreset] {
        &self.file.presets
    }

    pub fn targets(&self) -> &[CalibrationTarget] {
        &self.file.calibration_targets
    }

    /// Flat names of bound input placeholders, mapped to their providers.
    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn preset(&self, name: &str) -> Result<&ScenarioPreset> {
        self.file
            .presets
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    fn local_variable(&self, name: &str) -> Option<&Variable> {
        self.file.templates.values().find_map(|t| {
            t.inputs
                .iter()
                .chain(&t.outputs)
                .chain(&t.privates)
                .find(|v| v.name == name)
        })
    }

    /// Evidence keyed by flattened variable names; input aliases and unique
    /// unqualified names are accepted.
    pub fn canonical_evidence(&self, evidence: &Evidence) -> Result<Evidence> {
        let rewritten: Evidence = evidence
            .iter()
            .map(|(k, v)| (self.aliases.get(k).cloned().unwrap_or_else(|| k.clone()), v.clone()))
            .collect();
        if rewritten.len() != evidence.len() {
            return Err(Error::OverlappingSets(evidence.keys().cloned().collect()));
        }
        let canonical = self.network.canonical_evidence(&rewritten)?;
        if canonical.len() != evidence.len() {
            return Err(Error::OverlappingSets(evidence.keys().cloned().collect()));
        }
        Ok(canonical)
    }

    /// Preset evidence (if any) extended by `extra`; `extra` wins on conflicts.
    pub fn scenario_evidence(&self, preset: Option<&str>, extra: &Evidence) -> Result<Evidence> {
        let mut evidence = match preset {
            Some(name) => self.canonical_evidence(&self.preset(name)?.evidence)?,
            None => Evidence::new(),
        };
        evidence.extend(self.canonical_evidence(extra)?);
        Ok(evidence)
    }

    pub fn target_evidence(&self, target: &CalibrationTarget) -> Result<Evidence> {
        self.scenario_evidence(target.scenario.as_deref(), &target.evidence)
    }

    /// Current value of a calibration target on the bundle's network.
    pub fn target_value(&self, target: &CalibrationTarget) -> Result<f64> {
        let evidence = self.target_evidence(target)?;
        match &target.query {
            TargetQuery::EvidenceProbability => inference::probability_of_evidence(&self.network, &evidence),
            TargetQuery::Posterior { variable, state } => {
                let post = inference::marginal(&self.network, variable, &evidence)?;
                post.probability(state).ok_or_else(|| Error::UnknownState {
                    variable: variable.clone(),
                    state: state.clone(),
                })
            }
        }
    }

    /// Variables with bin metadata that are measured in the block/witness data.
    pub fn binned_variables(&self) -> Vec<(Variable, BinMeta)> {
        super::ingest::COLUMN_VARIABLES
            .iter()
            .filter_map(|(_, var)| {
                let meta = self.file.metadata.bins.get(*var)?;
                Some((self.local_variable(var)?.clone(), meta.clone()))
            })
            .collect()
    }

    /// The provenance of the CPT quantifying flat variable `flat`.
    pub fn provenance_of(&self, flat: &str) -> Option<Provenance> {
        let (template, node) = self.origin_of(flat)?;
        self.file.templates[&template].cpts[&node].provenance
    }

    /// (template, node) that defines a flattened variable.
    pub fn origin_of(&self, flat: &str) -> Option<(String, String)> {
        let (path, node) = match flat.rsplit_once('.') {
            Some((p, n)) => (Some(p), n),
            None => (None, flat),
        };
        let mut template = self.oobn.template(self.oobn.top()).ok()?;
        if let Some(path) = path {
            for seg in path.split('.') {
                let inst = template.instance(seg)?;
                template = self.oobn.template(&inst.template).ok()?;
            }
        }
        template.spec().cpts.get(node)?;
        Some((template.name().to_string(), node.to_string()))
    }

    /// Rebuilds the bundle from a modified file.
    pub fn with_file(&self, file: BundleFile) -> Result<ModelBundle> {
        ModelBundle::from_file(file)
    }

    /// Re-estimates every `learned` CPT from `dataset`, regenerates sum nodes
    /// from bin metadata and refreshes stand-in priors.
    pub fn learn(&self, dataset: &Dataset, smoothing: f64, source: &str) -> Result<ModelBundle> {
        let mut file = self.file.clone();
        for t in file.templates.values_mut() {
            for (node, cpt) in t.cpts.iter_mut() {
                if cpt.provenance != Some(Provenance::Learned) {
                    continue;
                }
                let parents: Vec<String> = cpt
                    .parents
                    .iter()
                    .map(|p| p.rsplit('.').next().unwrap_or(p).to_string())
                    .collect();
                cpt.table = mle_cpt(node, &parents, dataset, smoothing)?.table;
            }
        }
        regenerate_sum_nodes(&mut file)?;
        file.metadata.learning = Some(LearningRecord { source: source.to_string(), rows: dataset.len(), smoothing });
        ModelBundle::from_file(file)?.with_refreshed_standins()
    }

    /// Sets each template's stand-in input priors to the marginal of the
    /// input's provider in the full model.
    pub fn with_refreshed_standins(&self) -> Result<ModelBundle> {
        let mut file = self.file.clone();
        let marginals = inference::posterior_all(&self.network, &Evidence::new())?;
        let paths = self.oobn.instance_paths();
        for (tname, t) in file.templates.iter_mut() {
            if t.inputs.is_empty() {
                continue;
            }
            let Some(prefix) = paths.get(tname).and_then(|p| p.first()) else {
                continue;
            };
            for input in &t.inputs {
                let flat = format!("{prefix}{}", input.name);
                let provider = self.aliases.get(&flat).cloned().unwrap_or(flat);
                if let Some(post) = marginals.get(&provider) {
                    t.standin_priors.insert(input.name.clone(), post.distribution.clone());
                }
            }
        }
        ModelBundle::from_file(file)
    }
}

/// Recomputes every declared sum node CPT from the bins of its addends.
pub fn regenerate_sum_nodes(file: &mut BundleFile) -> Result<()> {
    for s in &file.metadata.sum_nodes {
        let bins = |name: &str| {
            file.metadata
                .bins
                .get(name)
                .ok_or_else(|| Error::SchemaError(format!("no bins for `{name}`")))
        };
        let table = deterministic_sum_cpt(&s.node, bins(&s.addends.0)?, bins(&s.addends.1)?, bins(&s.node)?)?;
        let t = file
            .templates
            .get_mut(&s.template)
            .ok_or_else(|| Error::UnknownTemplateReference(s.template.clone()))?;
        let cpt = t
            .cpts
            .get_mut(&s.node)
            .ok_or_else(|| Error::SchemaError(format!("sum node `{}` has no CPT", s.node)))?;
        cpt.table = table;
        cpt.provenance = Some(Provenance::Deterministic);
    }
    Ok(())
}
