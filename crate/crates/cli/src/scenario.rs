//! Scenario documents: a single JSON object with `buses`, `lines`, `areas`,
//! `generators`, `model`, `analysis` and `simulation`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use interarea::modal::{DEFAULT_THRESHOLD, DEFAULT_ZERO_TOL};
use interarea::netmodel::{Area, Bus, BusId, GeneratorParams, Line, NetworkError, NetworkModel, OperatingPoint};
use interarea::statespace::ModelForm;
use interarea::timesim::{DEFAULT_HORIZON, DEFAULT_PERTURBATION};
use serde::{Deserialize, Serialize};

use crate::CliError;

const BUILTINS: [(&str, &str); 4] = [
    ("paper-case1", include_str!("../scenarios/paper-case1.json")),
    ("paper-case2", include_str!("../scenarios/paper-case2.json")),
    ("paper-case3", include_str!("../scenarios/paper-case3.json")),
    ("paper-inertia2", include_str!("../scenarios/paper-inertia2.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKindDoc {
    Generator,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDoc {
    pub id: Option<u32>,
    pub kind: Option<BusKindDoc>,
    /// Scheduled load (p.u.).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub from: Option<u32>,
    pub to: Option<u32>,
    /// p.u.
    pub reactance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaDoc {
    pub id: Option<String>,
    pub buses: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub bus: Option<u32>,
    pub inertia: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub governor_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub droop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusStateDoc {
    pub bus: u32,
    #[serde(default)]
    pub angle: f64,
    #[serde(default = "one")]
    pub voltage: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormDoc {
    Full,
    Reduced,
}

impl From<FormDoc> for ModelForm {
    fn from(f: FormDoc) -> Self {
        match f {
            FormDoc::Full => ModelForm::Full,
            FormDoc::Reduced => ModelForm::Reduced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormDoc>,
    /// Buses absent here sit at flat start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operating_point: Option<Vec<BusStateDoc>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDoc {
    /// `Δω_G = 0.01` on the first generator of the first area.
    Default,
    Zero,
    Speed { bus: u32, value: f64 },
    /// Real part of the interconnection mode shape, scaled to `max_speed`.
    InterconnectionMode {
        #[serde(default = "default_speed")]
        max_speed: f64,
    },
}

fn default_speed() -> f64 {
    DEFAULT_PERTURBATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputDoc {
    Zero,
    Step {
        bus: u32,
        amplitude: f64,
        #[serde(default)]
        start: f64,
    },
    Sinusoid {
        bus: u32,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        start: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_large_step: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDoc>,
}

/// The document as written; [`Scenario`] keeps a copy with every default
/// filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub buses: Option<Vec<BusDoc>>,
    #[serde(default)]
    pub lines: Vec<LineDoc>,
    pub areas: Option<Vec<AreaDoc>>,
    #[serde(default)]
    pub generators: Vec<GeneratorDoc>,
    #[serde(default)]
    pub model: ModelDoc,
    #[serde(default)]
    pub analysis: AnalysisDoc,
    #[serde(default)]
    pub simulation: SimulationDoc,
}

/// Validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    doc: ScenarioDoc,
    network: NetworkModel,
    op: OperatingPoint,
}

impl Scenario {
    pub fn name(&self) -> &str {
        self.doc.name.as_deref().unwrap_or("scenario")
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    pub fn operating_point(&self) -> &OperatingPoint {
        &self.op
    }

    pub fn form(&self) -> ModelForm {
        self.doc.model.form.unwrap_or(FormDoc::Reduced).into()
    }

    pub fn zero_tol(&self) -> f64 {
        self.doc.analysis.zero_tol.unwrap_or(DEFAULT_ZERO_TOL)
    }

    pub fn threshold(&self) -> f64 {
        self.doc.analysis.threshold.unwrap_or(DEFAULT_THRESHOLD)
    }

    pub fn step(&self) -> Option<f64> {
        self.doc.simulation.step
    }

    pub fn horizon(&self) -> f64 {
        self.doc.simulation.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    pub fn allow_large_step(&self) -> bool {
        self.doc.simulation.allow_large_step.unwrap_or(false)
    }

    pub fn initial(&self) -> &InitialDoc {
        self.doc.simulation.initial.as_ref().unwrap_or(&InitialDoc::Default)
    }

    pub fn input(&self) -> &InputDoc {
        self.doc.simulation.input.as_ref().unwrap_or(&InputDoc::Zero)
    }

    /// Canonical JSON with every default written out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("scenario serializes")
    }

    /// Re-validates after command-line overrides.
    pub fn with_overrides(&self, f: impl FnOnce(&mut ScenarioDoc)) -> Result<Scenario, CliError> {
        let mut doc = self.doc.clone();
        f(&mut doc);
        from_doc(doc)
    }
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// A built-in name or a path to a JSON file.
pub fn load_scenario(spec: &str) -> Result<Scenario, CliError> {
    if let Some(text) = builtin_text(spec) {
        return parse_scenario(text);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let doc: ScenarioDoc = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema(vec![format!("{path}: {}", e.into_inner())])
    })?;
    from_doc(doc)
}

fn from_doc(mut doc: ScenarioDoc) -> Result<Scenario, CliError> {
    let mut errs = Vec::new();
    let network = check_network(&doc, &mut errs);
    check_options(&doc, &mut errs);
    let network = match network {
        Some(built) if errs.is_empty() => built.map_err(|e| CliError::Validation(e.to_string()))?,
        _ => return Err(CliError::Schema(errs)),
    };

    let mut op = OperatingPoint::flat();
    for s in doc.model.operating_point.iter().flatten() {
        op = op
            .with_bus(BusId(s.bus), s.angle, s.voltage)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    fill_defaults(&mut doc);
    check_references(&doc, &network)?;
    Ok(Scenario { doc, network, op })
}

fn positive(errs: &mut Vec<String>, path: String, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{path}: must be positive and finite, got {v}"));
    }
}

/// Builds the network, or returns `None` after recording schema errors.
fn check_network(doc: &ScenarioDoc, errs: &mut Vec<String>) -> Option<Result<NetworkModel, NetworkError>> {
    let mut ids = BTreeSet::new();
    let mut generator_buses = BTreeSet::new();
    match &doc.buses {
        None => errs.push("buses: missing".into()),
        Some(b) if b.is_empty() => errs.push("buses: must not be empty".into()),
        Some(buses) => {
            for (i, b) in buses.iter().enumerate() {
                match b.id {
                    None => errs.push(format!("buses[{i}].id: missing")),
                    Some(id) if !ids.insert(id) => errs.push(format!("buses[{i}].id: duplicate id {id}")),
                    Some(_) => {}
                }
                match (b.kind, b.id) {
                    (None, _) => errs.push(format!("buses[{i}].kind: missing")),
                    (Some(BusKindDoc::Generator), Some(id)) => {
                        generator_buses.insert(id);
                    }
                    _ => {}
                }
                if let Some(l) = b.load {
                    if !l.is_finite() {
                        errs.push(format!("buses[{i}].load: must be finite"));
                    }
                }
            }
        }
    }
    for (i, l) in doc.lines.iter().enumerate() {
        for (field, end) in [("from", l.from), ("to", l.to)] {
            match end {
                None => errs.push(format!("lines[{i}].{field}: missing")),
                Some(b) if !ids.contains(&b) => errs.push(format!("lines[{i}].{field}: unknown bus {b}")),
                Some(_) => {}
            }
        }
        if let Some(b) = l.from.filter(|b| Some(*b) == l.to) {
            errs.push(format!("lines[{i}]: connects bus {b} to itself"));
        }
        match l.reactance {
            None => errs.push(format!("lines[{i}].reactance: missing")),
            Some(x) => positive(errs, format!("lines[{i}].reactance"), x),
        }
    }
    let mut seen_area_ids = BTreeSet::new();
    let mut assigned: BTreeMap<u32, usize> = BTreeMap::new();
    match &doc.areas {
        None => errs.push("areas: missing".into()),
        Some(areas) => {
            for (k, a) in areas.iter().enumerate() {
                match &a.id {
                    None => errs.push(format!("areas[{k}].id: missing")),
                    Some(id) if !seen_area_ids.insert(id.clone()) => errs.push(format!("areas[{k}].id: duplicate id {id}")),
                    Some(_) => {}
                }
                match &a.buses {
                    None => errs.push(format!("areas[{k}].buses: missing")),
                    Some(list) => {
                        for (j, b) in list.iter().enumerate() {
                            if !ids.contains(b) {
                                errs.push(format!("areas[{k}].buses[{j}]: unknown bus {b}"));
                            } else if let Some(prev) = assigned.insert(*b, k) {
                                errs.push(format!("areas[{k}].buses[{j}]: bus {b} already in areas[{prev}]"));
                            }
                        }
                    }
                }
            }
            for id in &ids {
                if !assigned.contains_key(id) {
                    errs.push(format!("areas: bus {id} is not assigned to any area"));
                }
            }
        }
    }
    let mut params = BTreeMap::new();
    for (j, g) in doc.generators.iter().enumerate() {
        let Some(bus) = g.bus else {
            errs.push(format!("generators[{j}].bus: missing"));
            continue;
        };
        if !generator_buses.contains(&bus) {
            errs.push(format!("generators[{j}].bus: bus {bus} is not a generator bus"));
        }
        let inertia = match g.inertia {
            None => {
                errs.push(format!("generators[{j}].inertia: missing"));
                continue;
            }
            Some(m) => m,
        };
        let mut p = GeneratorParams::slow_governor(inertia);
        p.damping = g.damping.unwrap_or(p.damping);
        p.turbine_time = g.turbine_time.unwrap_or(p.turbine_time);
        p.governor_time = g.governor_time.unwrap_or(p.governor_time);
        p.turbine_gain = g.turbine_gain.unwrap_or(p.turbine_gain);
        p.droop = g.droop.unwrap_or(p.droop);
        if let Err(NetworkError::InvalidParameter { name, value, reason }) = p.validate() {
            errs.push(format!("generators[{j}].{name}: {reason}, got {value}"));
        }
        if params.insert(bus, p).is_some() {
            errs.push(format!("generators[{j}].bus: duplicate entry for bus {bus}"));
        }
    }
    for bus in &generator_buses {
        if !params.contains_key(bus) {
            errs.push(format!("generators: missing entry for generator bus {bus}"));
        }
    }
    if !errs.is_empty() {
        return None;
    }

    let buses = doc
        .buses
        .iter()
        .flatten()
        .map(|b| {
            let id = b.id.unwrap();
            let mut bus = match b.kind.unwrap() {
                BusKindDoc::Generator => Bus::generator(id, params[&id]),
                BusKindDoc::Load => Bus::load_only(id, 0.0),
            };
            bus.load = b.load.unwrap_or(0.0);
            bus
        })
        .collect();
    let lines = doc
        .lines
        .iter()
        .map(|l| Line::new(l.from.unwrap(), l.to.unwrap(), l.reactance.unwrap()))
        .collect();
    let areas = doc
        .areas
        .iter()
        .flatten()
        .map(|a| Area::new(a.id.clone().unwrap(), a.buses.as_deref().unwrap()))
        .collect();
    Some(NetworkModel::build(buses, lines, areas))
}

fn check_options(doc: &ScenarioDoc, errs: &mut Vec<String>) {
    if let Some(t) = doc.analysis.zero_tol {
        positive(errs, "analysis.zero_tol".into(), t);
    }
    if let Some(t) = doc.analysis.threshold {
        if !(t > 0.0 && t <= 1.0) {
            errs.push(format!("analysis.threshold: must lie in (0, 1], got {t}"));
        }
    }
    let sim = &doc.simulation;
    if let Some(h) = sim.step {
        positive(errs, "simulation.step".into(), h);
    }
    if let Some(h) = sim.horizon {
        if !(h >= 0.0 && h.is_finite()) {
            errs.push(format!("simulation.horizon: must be non-negative and finite, got {h}"));
        }
    }
    match &sim.input {
        Some(InputDoc::Sinusoid { frequency, amplitude, .. }) => {
            positive(errs, "simulation.input.frequency".into(), *frequency);
            if !amplitude.is_finite() {
                errs.push("simulation.input.amplitude: must be finite".into());
            }
        }
        Some(InputDoc::Step { amplitude, .. }) if !amplitude.is_finite() => {
            errs.push("simulation.input.amplitude: must be finite".into());
        }
        _ => {}
    }
    if let Some(InitialDoc::InterconnectionMode { max_speed }) = &sim.initial {
        positive(errs, "simulation.initial.max_speed".into(), *max_speed);
    }
    for (i, s) in doc.model.operating_point.iter().flatten().enumerate() {
        positive(errs, format!("model.operating_point[{i}].voltage"), s.voltage);
    }
}

fn check_references(doc: &ScenarioDoc, network: &NetworkModel) -> Result<(), CliError> {
    let mut errs = Vec::new();
    match &doc.simulation.input {
        Some(InputDoc::Step { bus, .. } | InputDoc::Sinusoid { bus, .. }) if network.bus(BusId(*bus)).is_none() => {
            errs.push(format!("simulation.input.bus: unknown bus {bus}"));
        }
        _ => {}
    }
    if let Some(InitialDoc::Speed { bus, .. }) = &doc.simulation.initial {
        if !network.bus(BusId(*bus)).is_some_and(|b| b.is_generator()) {
            errs.push(format!("simulation.initial.bus: bus {bus} is not a generator bus"));
        }
    }
    for (i, s) in doc.model.operating_point.iter().flatten().enumerate() {
        if network.bus(BusId(s.bus)).is_none() {
            errs.push(format!("model.operating_point[{i}].bus: unknown bus {}", s.bus));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Schema(errs))
    }
}

fn fill_defaults(doc: &mut ScenarioDoc) {
    for b in doc.buses.iter_mut().flatten() {
        b.load.get_or_insert(0.0);
    }
    for g in &mut doc.generators {
        let d = GeneratorParams::slow_governor(g.inertia.unwrap_or(1.0));
        g.damping.get_or_insert(d.damping);
        g.turbine_time.get_or_insert(d.turbine_time);
        g.governor_time.get_or_insert(d.governor_time);
        g.turbine_gain.get_or_insert(d.turbine_gain);
        g.droop.get_or_insert(d.droop);
    }
    doc.model.form.get_or_insert(FormDoc::Reduced);
    doc.model.operating_point.get_or_insert_with(Vec::new);
    doc.analysis.zero_tol.get_or_insert(DEFAULT_ZERO_TOL);
    doc.analysis.threshold.get_or_insert(DEFAULT_THRESHOLD);
    let sim = &mut doc.simulation;
    sim.horizon.get_or_insert(DEFAULT_HORIZON);
    sim.allow_large_step.get_or_insert(false);
    sim.initial.get_or_insert(InitialDoc::Default);
    sim.input.get_or_insert(InputDoc::Zero);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in builtin_names() {
            let s = load_scenario(name).unwrap();
            assert_eq!(s.name(), name);
        }
    }

    #[test]
    fn missing_pieces_reported_together() {
        let err = parse_scenario(r#"{"buses": [{"kind": "generator"}], "lines": [{"from": 1, "to": 9, "reactance": -1}]}"#).unwrap_err();
        let CliError::Schema(list) = err else { panic!("{err:?}") };
        let text = list.join("\n");
        for needle in ["buses[0].id", "lines[0].from", "lines[0].to", "lines[0].reactance", "areas: missing"] {
            assert!(text.contains(needle), "{needle} not in {text}");
        }
    }
}
