//! Object-oriented composition of Bayesian networks.
//!
//! A template owns input placeholders, output nodes, private nodes and nested
//! instances of other templates. Inside a template, `inst.Node` refers to an
//! output of the nested instance `inst`; private nodes of an instance are not
//! addressable from outside it. Flattening expands the instance tree into a
//! plain [`Network`] whose variable names are `.`-separated instance paths,
//! unifying every bound input with the variable that provides it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Cpt, Evidence, Network, Variable};
use crate::inference::{self, Posterior};

/// Origin of a CPT's numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Elicited,
    Learned,
    Calibrated,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCpt {
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub name: String,
    pub template: String,
}

/// Binds the input `input` of nested instance `instance` to `provider`, which
/// is either a node of the enclosing template or `sibling.Output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub instance: String,
    pub input: String,
    pub provider: String,
}

/// Serialized form of a template.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TemplateSpec {
    #[serde(default)]
    pub inputs: Vec<Variable>,
    #[serde(default)]
    pub outputs: Vec<Variable>,
    #[serde(default)]
    pub privates: Vec<Variable>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub cpts: BTreeMap<String, TemplateCpt>,
    #[serde(default)]
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub bindings: Vec<Binding>,
    #[serde(default)]
    pub standin_priors: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Input,
    Output,
    Private,
}

/// A validated sub-model template.
#[derive(Debug, Clone, PartialEq)]
pub struct OobnTemplate {
    name: String,
    spec: TemplateSpec,
    roles: HashMap<String, NodeRole>,
}

impl OobnTemplate {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &TemplateSpec {
        &self.spec
    }

    pub fn role(&self, node: &str) -> Option<NodeRole> {
        self.roles.get(node).copied()
    }

    pub fn inputs(&self) -> &[Variable] {
        &self.spec.inputs
    }

    pub fn outputs(&self) -> &[Variable] {
        &self.spec.outputs
    }

    pub fn privates(&self) -> &[Variable] {
        &self.spec.privates
    }

    pub fn output(&self, name: &str) -> Option<&Variable> {
        self.spec.outputs.iter().find(|v| v.name == name)
    }

    fn local(&self, name: &str) -> Option<&Variable> {
        self.spec
            .inputs
            .iter()
            .chain(&self.spec.outputs)
            .chain(&self.spec.privates)
            .find(|v| v.name == name)
    }

    /// Nodes carrying a CPT, outputs first.
    pub fn quantified(&self) -> impl Iterator<Item = &Variable> {
        self.spec.outputs.iter().chain(&self.spec.privates)
    }

    pub fn instance(&self, name: &str) -> Option<&InstanceSpec> {
        self.spec.instances.iter().find(|i| i.name == name)
    }
}

/// Validates a template in isolation; references to other templates are
/// checked when the template joins an [`Oobn`].
pub fn define_template(name: &str, spec: TemplateSpec) -> Result<OobnTemplate> {
    let invalid = |detail: String| Error::InvalidTemplate { template: name.to_string(), detail };
    let mut roles = HashMap::new();
    let groups = [
        (&spec.inputs, NodeRole::Input),
        (&spec.outputs, NodeRole::Output),
        (&spec.privates, NodeRole::Private),
    ];
    for (vars, role) in groups {
        for v in vars {
            if v.name.contains('.') || v.name.is_empty() {
                return Err(invalid(format!("node name `{}` must be nonempty without `.`", v.name)));
            }
            if roles.insert(v.name.clone(), role).is_some() {
                return Err(Error::NameCollision(format!("{name}.{}", v.name)));
            }
        }
    }
    let mut instance_names = BTreeSet::new();
    for inst in &spec.instances {
        if inst.name.contains('.') || inst.name.is_empty() {
            return Err(invalid(format!("instance name `{}` must be nonempty without `.`", inst.name)));
        }
        if inst.template == name {
            return Err(Error::TemplateCycle(vec![name.to_string(), name.to_string()]));
        }
        if !instance_names.insert(inst.name.clone()) {
            return Err(Error::NameCollision(format!("{name}.{}", inst.name)));
        }
    }

    for v in &spec.inputs {
        if spec.cpts.contains_key(&v.name) {
            return Err(Error::InputHasCpt { template: name.to_string(), node: v.name.clone() });
        }
    }
    for v in spec.outputs.iter().chain(&spec.privates) {
        if !spec.cpts.contains_key(&v.name) {
            return Err(Error::OutputMissingCpt { template: name.to_string(), node: v.name.clone() });
        }
    }
    for key in spec.cpts.keys() {
        if !roles.contains_key(key) {
            return Err(invalid(format!("CPT for unknown node `{key}`")));
        }
    }

    let is_ref = |s: &str| match s.split_once('.') {
        Some((inst, _)) => instance_names.contains(inst),
        None => roles.contains_key(s),
    };
    for (p, c) in &spec.edges {
        if !is_ref(p) {
            return Err(Error::DanglingReference(format!("{name}: edge source `{p}`")));
        }
        match roles.get(c.as_str()) {
            Some(NodeRole::Input) => return Err(invalid(format!("input node `{c}` has an internal parent"))),
            Some(_) => {}
            None => return Err(Error::DanglingReference(format!("{name}: edge target `{c}`"))),
        }
    }
    for (child, cpt) in &spec.cpts {
        let declared: BTreeSet<&str> = spec.edges.iter().filter(|(_, c)| c == child).map(|(p, _)| p.as_str()).collect();
        let listed: BTreeSet<&str> = cpt.parents.iter().map(String::as_str).collect();
        if declared != listed || listed.len() != cpt.parents.len() {
            return Err(Error::CptShapeMismatch {
                variable: format!("{name}.{child}"),
                detail: format!("CPT parents {:?} do not match template edges", cpt.parents),
            });
        }
    }

    let mut bound = BTreeSet::new();
    for b in &spec.bindings {
        if !instance_names.contains(&b.instance) {
            return Err(Error::DanglingReference(format!("{name}: binding to unknown instance `{}`", b.instance)));
        }
        if !is_ref(&b.provider) {
            return Err(Error::DanglingReference(format!("{name}: binding provider `{}`", b.provider)));
        }
        if !bound.insert((b.instance.clone(), b.input.clone())) {
            return Err(invalid(format!("input `{}.{}` bound twice", b.instance, b.input)));
        }
    }
    for (input, prior) in &spec.standin_priors {
        let v = spec
            .inputs
            .iter()
            .find(|v| &v.name == input)
            .ok_or_else(|| invalid(format!("stand-in prior for non-input `{input}`")))?;
        if prior.len() != v.cardinality() {
            return Err(Error::CptShapeMismatch {
                variable: format!("{name}.{input}"),
                detail: "stand-in prior length differs from state count".into(),
            });
        }
    }
    Ok(OobnTemplate { name: name.to_string(), spec, roles })
}

/// Ok iff the provider's state list equals the input signature exactly (order-sensitive).
pub fn check_signature(provider: &str, provider_states: &[String], consumer: &str, consumer_states: &[String]) -> Result<()> {
    if provider_states == consumer_states {
        Ok(())
    } else {
        Err(Error::SignatureMismatch {
            provider: provider.to_string(),
            consumer: consumer.to_string(),
            provider_states: provider_states.to_vec(),
            consumer_states: consumer_states.to_vec(),
        })
    }
}

/// Serialized form of a template library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobnFile {
    pub templates: BTreeMap<String, TemplateSpec>,
    pub top: String,
}

/// A closed set of templates with a designated top-level template.
#[derive(Debug, Clone, PartialEq)]
pub struct Oobn {
    templates: BTreeMap<String, OobnTemplate>,
    top: String,
}

impl Oobn {
    pub fn new(templates: Vec<OobnTemplate>, top: &str) -> Result<Oobn> {
        let mut map = BTreeMap::new();
        for t in templates {
            let name = t.name.clone();
            if map.insert(name.clone(), t).is_some() {
                return Err(Error::NameCollision(name));
            }
        }
        if !map.contains_key(top) {
            return Err(Error::UnknownTemplateReference(top.to_string()));
        }
        let oobn = Oobn { templates: map, top: top.to_string() };
        for t in oobn.templates.values() {
            for inst in &t.spec.instances {
                if !oobn.templates.contains_key(&inst.template) {
                    return Err(Error::UnknownTemplateReference(inst.template.clone()));
                }
            }
        }
        oobn.check_template_cycles()?;
        for t in oobn.templates.values() {
            oobn.check_template_bindings(t)?;
        }
        Ok(oobn)
    }

    pub fn from_file(file: OobnFile) -> Result<Oobn> {
        let templates = file
            .templates
            .into_iter()
            .map(|(name, spec)| define_template(&name, spec))
            .collect::<Result<Vec<_>>>()?;
        Oobn::new(templates, &file.top)
    }

    pub fn to_file(&self) -> OobnFile {
        OobnFile {
            templates: self.templates.iter().map(|(k, t)| (k.clone(), t.spec.clone())).collect(),
            top: self.top.clone(),
        }
    }

    pub fn top(&self) -> &str {
        &self.top
    }

    pub fn template(&self, name: &str) -> Result<&OobnTemplate> {
        self.templates.get(name).ok_or_else(|| Error::UnknownTemplateReference(name.to_string()))
    }

    pub fn templates(&self) -> impl Iterator<Item = &OobnTemplate> {
        self.templates.values()
    }

    fn check_template_cycles(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(oobn: &Oobn, name: &str, state: &mut BTreeMap<String, u8>, stack: &mut Vec<String>) -> Result<()> {
            match state.get(name) {
                Some(2) => return Ok(()),
                Some(1) => {
                    let start = stack.iter().position(|s| s == name).unwrap_or(0);
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(name.to_string());
                    return Err(Error::TemplateCycle(cycle));
                }
                _ => {}
            }
            state.insert(name.to_string(), 1);
            stack.push(name.to_string());
            for inst in &oobn.templates[name].spec.instances {
                visit(oobn, &inst.template, state, stack)?;
            }
            stack.pop();
            state.insert(name.to_string(), 2);
            Ok(())
        }
        let mut state = BTreeMap::new();
        for name in self.templates.keys() {
            visit(self, name, &mut state, &mut Vec::new())?;
        }
        Ok(())
    }

    /// States of a provider expression in the scope of `template`.
    fn provider_states<'a>(&'a self, template: &'a OobnTemplate, provider: &str) -> Result<&'a Variable> {
        match provider.split_once('.') {
            None => template
                .local(provider)
                .ok_or_else(|| Error::DanglingReference(format!("{}: `{provider}`", template.name))),
            Some((inst, node)) => {
                let spec = template
                    .instance(inst)
                    .ok_or_else(|| Error::DanglingReference(format!("{}: instance `{inst}`", template.name)))?;
                let child = self.template(&spec.template)?;
                child.output(node).ok_or_else(|| {
                    let what = if child.role(node).is_some() { "is not an output of" } else { "does not exist in" };
                    Error::DanglingReference(format!("{}: `{node}` {what} `{}`", template.name, child.name))
                })
            }
        }
    }

    /// Checks one binding declared in `template`.
    pub fn check_binding(&self, template: &OobnTemplate, binding: &Binding) -> Result<()> {
        let inst = template
            .instance(&binding.instance)
            .ok_or_else(|| Error::DanglingReference(format!("instance `{}`", binding.instance)))?;
        let consumer_template = self.template(&inst.template)?;
        let input = consumer_template
            .inputs()
            .iter()
            .find(|v| v.name == binding.input)
            .ok_or_else(|| {
                Error::DanglingReference(format!("`{}` is not an input of `{}`", binding.input, consumer_template.name))
            })?;
        let provider = self.provider_states(template, &binding.provider)?;
        check_signature(
            &binding.provider,
            &provider.states,
            &format!("{}.{}", binding.instance, binding.input),
            &input.states,
        )
    }

    fn check_template_bindings(&self, template: &OobnTemplate) -> Result<()> {
        for b in &template.spec.bindings {
            self.check_binding(template, b)?;
        }
        // parents referring to instance nodes must name outputs
        for cpt in template.spec.cpts.values() {
            for p in &cpt.parents {
                self.provider_states(template, p)?;
            }
        }
        Ok(())
    }

    /// Number of bindings declared across all templates (all already checked).
    pub fn binding_count(&self) -> usize {
        self.templates.values().map(|t| t.spec.bindings.len()).sum()
    }

    /// Flattens the top-level template. Every input anywhere must be bound.
    pub fn flatten(&self) -> Result<Network> {
        self.flatten_template(&self.top, false)
    }

    /// Like [`Oobn::flatten`], also returning the flat provider of every bound
    /// input, keyed by the input's would-be path (`inst.Input`).
    pub fn flatten_with_aliases(&self) -> Result<(Network, BTreeMap<String, String>)> {
        let template = self.template(&self.top)?;
        if let Some(input) = template.inputs().first() {
            return Err(Error::UnboundInput(input.name.clone()));
        }
        let mut builder = Builder::default();
        self.expand(template, "", &HashMap::new(), &mut builder)?;
        let aliases = std::mem::take(&mut builder.aliases);
        Ok((Network::new(builder.variables, builder.edges, builder.cpts)?, aliases))
    }

    /// Instance path prefixes (`a.b.`) of every template reachable from the top.
    pub fn instance_paths(&self) -> BTreeMap<String, Vec<String>> {
        fn walk(oobn: &Oobn, name: &str, prefix: String, out: &mut BTreeMap<String, Vec<String>>) {
            out.entry(name.to_string()).or_default().push(prefix.clone());
            if let Ok(t) = oobn.template(name) {
                for inst in &t.spec.instances {
                    walk(oobn, &inst.template, format!("{prefix}{}.", inst.name), out);
                }
            }
        }
        let mut out = BTreeMap::new();
        walk(self, &self.top, String::new(), &mut out);
        for paths in out.values_mut() {
            paths.sort();
        }
        out
    }

    /// Flattens a single template; with `standins`, its own unbound inputs
    /// become root variables quantified by the template's stand-in priors.
    pub fn flatten_template(&self, name: &str, standins: bool) -> Result<Network> {
        let template = self.template(name)?;
        let mut builder = Builder::default();
        let mut inputs = HashMap::new();
        for input in template.inputs() {
            if !standins {
                return Err(Error::UnboundInput(input.name.clone()));
            }
            let prior = template
                .spec
                .standin_priors
                .get(&input.name)
                .ok_or_else(|| Error::MissingStandInPrior(input.name.clone()))?;
            builder.add(input.clone(), Cpt::prior(input.name.clone(), prior.clone()))?;
            inputs.insert(input.name.clone(), input.name.clone());
        }
        self.expand(template, "", &inputs, &mut builder)?;
        Network::new(builder.variables, builder.edges, builder.cpts)
    }

    fn expand(
        &self,
        template: &OobnTemplate,
        prefix: &str,
        inputs: &HashMap<String, String>,
        builder: &mut Builder,
    ) -> Result<()> {
        let resolve = |local: &str| -> Result<String> {
            match template.role(local) {
                Some(NodeRole::Input) => inputs
                    .get(local)
                    .cloned()
                    .ok_or_else(|| Error::UnboundInput(format!("{prefix}{local}"))),
                Some(_) => Ok(format!("{prefix}{local}")),
                None => {
                    self.provider_states(template, local)?;
                    Ok(format!("{prefix}{local}"))
                }
            }
        };
        for var in template.quantified() {
            let cpt = &template.spec.cpts[&var.name];
            let flat = format!("{prefix}{}", var.name);
            let parents = cpt.parents.iter().map(|p| resolve(p)).collect::<Result<Vec<_>>>()?;
            builder.add(
                Variable { name: flat.clone(), states: var.states.clone() },
                Cpt { child: flat, parents, table: cpt.table.clone() },
            )?;
        }
        for inst in &template.spec.instances {
            let child = self.template(&inst.template)?;
            let mut child_inputs = HashMap::new();
            for input in child.inputs() {
                let binding = template
                    .spec
                    .bindings
                    .iter()
                    .find(|b| b.instance == inst.name && b.input == input.name)
                    .ok_or_else(|| Error::UnboundInput(format!("{prefix}{}.{}", inst.name, input.name)))?;
                let provider = resolve(&binding.provider)?;
                builder
                    .aliases
                    .insert(format!("{prefix}{}.{}", inst.name, input.name), provider.clone());
                child_inputs.insert(input.name.clone(), provider);
            }
            self.expand(child, &format!("{prefix}{}.", inst.name), &child_inputs, builder)?;
        }
        Ok(())
    }

    /// Runs one template on its own, with stand-in priors on its inputs.
    pub fn run_submodel(&self, name: &str, evidence: &Evidence) -> Result<BTreeMap<String, Posterior>> {
        let net = self.flatten_template(name, true)?;
        inference::posterior_all(&net, evidence)
    }
}

#[derive(Default)]
struct Builder {
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: Vec<Cpt>,
    names: BTreeSet<String>,
    aliases: BTreeMap<String, String>,
}

impl Builder {
    fn add(&mut self, var: Variable, cpt: Cpt) -> Result<()> {
        if !self.names.insert(var.name.clone()) {
            return Err(Error::NameCollision(var.name));
        }
        for p in &cpt.parents {
            self.edges.push((p.clone(), var.name.clone()));
        }
        self.variables.push(var);
        self.cpts.push(cpt);
        Ok(())
    }
}
