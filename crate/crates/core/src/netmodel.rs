//! Network description and linearized power-flow sensitivities.
//!
//! A [`NetworkModel`] is a validated set of buses, lossless lines and an area
//! partition. From it and an [`OperatingPoint`] we build the bus Jacobian
//! `J = ∂P/∂δ` and eliminate load-only buses to obtain the generator-side
//! sensitivity `K_P` and the load-disturbance map `D_P` ([`ReducedNetwork`]).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Bus identifier as used in scenario files and state labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Area identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AreaId(pub String);

impl AreaId {
    pub fn new(id: impl Into<String>) -> Self {
        AreaId(id.into())
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network has no buses")]
    Empty,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("line references unknown bus {0}")]
    UnknownBus(BusId),
    #[error("line {from}-{to} connects a bus to itself")]
    SelfLoop { from: BusId, to: BusId },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("bus {0} is not assigned to any area")]
    UnassignedBus(BusId),
    #[error("bus {bus} assigned to both area {first} and area {second}")]
    BusInMultipleAreas {
        bus: BusId,
        first: AreaId,
        second: AreaId,
    },
    #[error("area {0} has a disconnected internal line graph")]
    IslandedAreaInterior(AreaId),
    #[error("operating point has no entry for bus {0}")]
    MissingOperatingPoint(BusId),
    #[error("load-only block of the Jacobian is singular (is a load bus islanded?)")]
    SingularReduction,
}

/// Parameters of a linearized governor-turbine-generator set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    /// Inertia `M` (p.u.·s).
    pub inertia: f64,
    /// Damping `D` (p.u.).
    pub damping: f64,
    /// Turbine time constant `T_t` (s).
    pub turbine_time: f64,
    /// Governor time constant `T_g` (s).
    pub governor_time: f64,
    /// Turbine gain `K_t`.
    pub turbine_gain: f64,
    /// Governor droop `r`.
    pub droop: f64,
}

impl GeneratorParams {
    pub fn new(
        inertia: f64,
        damping: f64,
        turbine_time: f64,
        governor_time: f64,
        turbine_gain: f64,
        droop: f64,
    ) -> Result<Self, NetworkError> {
        let p = GeneratorParams {
            inertia,
            damping,
            turbine_time,
            governor_time,
            turbine_gain,
            droop,
        };
        p.validate()?;
        Ok(p)
    }

    /// Undamped machine with very slow turbine and governor, used by the
    /// built-in three-bus cases. `K_t = 1`, `r = 0.05`, `T_t = T_g = 1e6 s`.
    pub fn slow_governor(inertia: f64) -> Self {
        GeneratorParams {
            inertia,
            damping: 0.0,
            turbine_time: 1e6,
            governor_time: 1e6,
            turbine_gain: 1.0,
            droop: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let positive = [
            ("inertia", self.inertia),
            ("turbine_time", self.turbine_time),
            ("governor_time", self.governor_time),
            ("droop", self.droop),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NetworkError::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(NetworkError::InvalidParameter {
                name: "damping",
                value: self.damping,
                reason: "must be non-negative and finite",
            });
        }
        if !self.turbine_gain.is_finite() {
            return Err(NetworkError::InvalidParameter {
                name: "turbine_gain",
                value: self.turbine_gain,
                reason: "must be finite",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BusKind {
    /// Generator with a co-located load; the pair is one module.
    Generator(GeneratorParams),
    LoadOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Scheduled load `P_L` (p.u.).
    pub load: f64,
}

impl Bus {
    pub fn generator(id: u32, params: GeneratorParams) -> Self {
        Bus {
            id: BusId(id),
            kind: BusKind::Generator(params),
            load: 0.0,
        }
    }

    pub fn load_only(id: u32, load: f64) -> Self {
        Bus {
            id: BusId(id),
            kind: BusKind::LoadOnly,
            load,
        }
    }

    pub fn generator_params(&self) -> Option<&GeneratorParams> {
        match &self.kind {
            BusKind::Generator(p) => Some(p),
            BusKind::LoadOnly => None,
        }
    }

    pub fn is_generator(&self) -> bool {
        matches!(self.kind, BusKind::Generator(_))
    }
}

/// Lossless line with series reactance `X` (p.u.).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub reactance: f64,
}

impl Line {
    pub fn new(from: u32, to: u32, reactance: f64) -> Self {
        Line {
            from: BusId(from),
            to: BusId(to),
            reactance,
        }
    }

    fn connects(&self, a: BusId, b: BusId) -> bool {
        (self.from == a && self.to == b) || (self.from == b && self.to == a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: AreaId,
    pub buses: Vec<BusId>,
}

impl Area {
    pub fn new(id: impl Into<String>, buses: &[u32]) -> Self {
        Area {
            id: AreaId::new(id),
            buses: buses.iter().copied().map(BusId).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusState {
    /// Phase angle `δ₀` (rad).
    pub angle: f64,
    /// Voltage magnitude `V₀` (p.u.).
    pub voltage: f64,
}

impl Default for BusState {
    fn default() -> Self {
        BusState {
            angle: 0.0,
            voltage: 1.0,
        }
    }
}

/// Linearization point. Buses without an explicit entry sit at flat start
/// when the point was built with [`OperatingPoint::flat`]; otherwise a
/// missing bus is an error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatingPoint {
    states: BTreeMap<BusId, BusState>,
    flat_default: bool,
}

impl OperatingPoint {
    /// Flat start: every bus at `δ₀ = 0`, `V₀ = 1`.
    pub fn flat() -> Self {
        OperatingPoint {
            states: BTreeMap::new(),
            flat_default: true,
        }
    }

    /// Explicit per-bus states with no fallback.
    pub fn explicit() -> Self {
        OperatingPoint::default()
    }

    pub fn with_bus(mut self, bus: BusId, angle: f64, voltage: f64) -> Result<Self, NetworkError> {
        if !(voltage > 0.0 && voltage.is_finite()) {
            return Err(NetworkError::InvalidParameter {
                name: "voltage",
                value: voltage,
                reason: "must be positive and finite",
            });
        }
        if !angle.is_finite() {
            return Err(NetworkError::InvalidParameter {
                name: "angle",
                value: angle,
                reason: "must be finite",
            });
        }
        self.states.insert(bus, BusState { angle, voltage });
        Ok(self)
    }

    pub fn state(&self, bus: BusId) -> Option<BusState> {
        match self.states.get(&bus) {
            Some(s) => Some(*s),
            None if self.flat_default => Some(BusState::default()),
            None => None,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.flat_default && self.states.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (BusId, BusState)> + '_ {
        self.states.iter().map(|(b, s)| (*b, *s))
    }
}

/// Validated network: buses, lines, areas and the derived tie-line set.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    areas: Vec<Area>,
    area_of: HashMap<BusId, usize>,
    index_of: HashMap<BusId, usize>,
    ties: Vec<usize>,
}

impl NetworkModel {
    /// Validates the pieces and derives the tie-line set. Areas keep the
    /// order given here; the first area is "Area I" for inter-area series.
    pub fn build(buses: Vec<Bus>, lines: Vec<Line>, areas: Vec<Area>) -> Result<Self, NetworkError> {
        if buses.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut index_of = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index_of.insert(bus.id, i).is_some() {
                return Err(NetworkError::DuplicateId(bus.id.to_string()));
            }
            if let BusKind::Generator(p) = &bus.kind {
                p.validate()?;
            }
            if !bus.load.is_finite() {
                return Err(NetworkError::InvalidParameter {
                    name: "load",
                    value: bus.load,
                    reason: "must be finite",
                });
            }
        }
        for line in &lines {
            for end in [line.from, line.to] {
                if !index_of.contains_key(&end) {
                    return Err(NetworkError::UnknownBus(end));
                }
            }
            if line.from == line.to {
                return Err(NetworkError::SelfLoop {
                    from: line.from,
                    to: line.to,
                });
            }
            if !(line.reactance > 0.0 && line.reactance.is_finite()) {
                return Err(NetworkError::InvalidParameter {
                    name: "reactance",
                    value: line.reactance,
                    reason: "must be positive and finite",
                });
            }
        }

        let mut seen_areas = HashSet::new();
        let mut area_of = HashMap::with_capacity(buses.len());
        for (a, area) in areas.iter().enumerate() {
            if !seen_areas.insert(area.id.clone()) {
                return Err(NetworkError::DuplicateId(area.id.to_string()));
            }
            for bus in &area.buses {
                if !index_of.contains_key(bus) {
                    return Err(NetworkError::UnknownBus(*bus));
                }
                if let Some(prev) = area_of.insert(*bus, a) {
                    return Err(NetworkError::BusInMultipleAreas {
                        bus: *bus,
                        first: areas[prev].id.clone(),
                        second: area.id.clone(),
                    });
                }
            }
        }
        if let Some(bus) = buses.iter().find(|b| !area_of.contains_key(&b.id)) {
            return Err(NetworkError::UnassignedBus(bus.id));
        }

        let ties = lines
            .iter()
            .enumerate()
            .filter(|(_, l)| area_of[&l.from] != area_of[&l.to])
            .map(|(i, _)| i)
            .collect();

        let net = NetworkModel {
            buses,
            lines,
            areas,
            area_of,
            index_of,
            ties,
        };
        for (a, area) in net.areas.iter().enumerate() {
            if !net.area_interior_connected(a) {
                return Err(NetworkError::IslandedAreaInterior(area.id.clone()));
            }
        }
        Ok(net)
    }

    fn area_interior_connected(&self, area: usize) -> bool {
        let members = &self.areas[area].buses;
        if members.len() <= 1 {
            return true;
        }
        let local: HashMap<BusId, usize> = members.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut uf = UnionFind::new(members.len());
        for line in &self.lines {
            if let (Some(&i), Some(&j)) = (local.get(&line.from), local.get(&line.to)) {
                uf.union(i, j);
            }
        }
        uf.count() == 1
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.index_of.get(&id).map(|&i| &self.buses[i])
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn area_of(&self, bus: BusId) -> Option<&AreaId> {
        self.area_of.get(&bus).map(|&a| &self.areas[a].id)
    }

    pub fn area(&self, id: &AreaId) -> Option<&Area> {
        self.areas.iter().find(|a| &a.id == id)
    }

    /// Lines whose endpoints lie in different areas.
    pub fn tie_lines(&self) -> impl Iterator<Item = &Line> + '_ {
        self.ties.iter().map(move |&i| &self.lines[i])
    }

    pub fn is_tie(&self, line: &Line) -> bool {
        self.area_of.get(&line.from) != self.area_of.get(&line.to)
    }

    /// Generator buses in network order.
    pub fn generator_buses(&self) -> Vec<BusId> {
        self.buses.iter().filter(|b| b.is_generator()).map(|b| b.id).collect()
    }

    /// Load-only buses in network order.
    pub fn load_buses(&self) -> Vec<BusId> {
        self.buses.iter().filter(|b| !b.is_generator()).map(|b| b.id).collect()
    }

    /// Number of connected components of the whole line graph.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.buses.len());
        for line in &self.lines {
            uf.union(self.index_of[&line.from], self.index_of[&line.to]);
        }
        uf.count()
    }

    /// Copy with a line's reactance replaced. Every parallel line between the
    /// two buses is updated.
    pub fn with_line_reactance(&self, from: BusId, to: BusId, reactance: f64) -> Result<Self, NetworkError> {
        let mut lines = self.lines.clone();
        let mut hit = false;
        for line in lines.iter_mut().filter(|l| l.connects(from, to)) {
            line.reactance = reactance;
            hit = true;
        }
        if !hit {
            return Err(NetworkError::UnknownBus(if self.bus(from).is_none() { from } else { to }));
        }
        NetworkModel::build(self.buses.clone(), lines, self.areas.clone())
    }

    /// Copy with one generator's inertia replaced.
    pub fn with_generator_inertia(&self, bus: BusId, inertia: f64) -> Result<Self, NetworkError> {
        let mut buses = self.buses.clone();
        let target = buses
            .iter_mut()
            .find(|b| b.id == bus)
            .ok_or(NetworkError::UnknownBus(bus))?;
        match &mut target.kind {
            BusKind::Generator(p) => p.inertia = inertia,
            BusKind::LoadOnly => return Err(NetworkError::UnknownBus(bus)),
        }
        NetworkModel::build(buses, self.lines.clone(), self.areas.clone())
    }
}

/// `∂P/∂δ` over all buses, in network bus order.
///
/// Off-diagonal entries are `−V₀ᵢV₀ⱼ cos(δ₀ᵢ−δ₀ⱼ)/Xᵢⱼ` (summed over parallel
/// lines); each diagonal is minus its row's off-diagonal sum. At flat start
/// this is the susceptance-weighted graph Laplacian.
pub fn jacobian(network: &NetworkModel, op: &OperatingPoint) -> Result<DMatrix<f64>, NetworkError> {
    let n = network.buses.len();
    let states = network
        .buses
        .iter()
        .map(|b| op.state(b.id).ok_or(NetworkError::MissingOperatingPoint(b.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut j = DMatrix::zeros(n, n);
    for line in &network.lines {
        let a = network.index_of[&line.from];
        let b = network.index_of[&line.to];
        let (sa, sb) = (states[a], states[b]);
        let w = sa.voltage * sb.voltage * (sa.angle - sb.angle).cos() / line.reactance;
        j[(a, b)] -= w;
        j[(b, a)] -= w;
        j[(a, a)] += w;
        j[(b, b)] += w;
    }
    Ok(j)
}

/// Generator-side sensitivity after eliminating load-only buses.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    /// `K_P = J_GG − J_GL J_LL⁻¹ J_LG` (n×n, p.u./rad).
    pub k_p: DMatrix<f64>,
    /// `D_P = J_GL J_LL⁻¹` (n×m).
    pub d_p: DMatrix<f64>,
    pub generator_buses: Vec<BusId>,
    pub load_buses: Vec<BusId>,
    /// `J_LL⁻¹ J_LG` and `J_LL⁻¹`, kept to recover load-bus angles.
    pub(crate) load_angle_map: DMatrix<f64>,
    pub(crate) load_inverse: DMatrix<f64>,
}

impl ReducedNetwork {
    pub fn from_network(network: &NetworkModel, op: &OperatingPoint) -> Result<Self, NetworkError> {
        let j = jacobian(network, op)?;
        let gens: Vec<usize> = (0..network.buses.len()).filter(|&i| network.buses[i].is_generator()).collect();
        let loads: Vec<usize> = (0..network.buses.len()).filter(|&i| !network.buses[i].is_generator()).collect();
        let mut r = reduce(&j, &gens, &loads)?;
        r.generator_buses = gens.iter().map(|&i| network.buses[i].id).collect();
        r.load_buses = loads.iter().map(|&i| network.buses[i].id).collect();
        Ok(r)
    }

    pub fn generator_count(&self) -> usize {
        self.generator_buses.len()
    }

    pub fn load_count(&self) -> usize {
        self.load_buses.len()
    }
}

/// Schur-complement elimination of the `loads` rows/columns of `j`.
///
/// Bus ids in the result are left empty; [`ReducedNetwork::from_network`]
/// fills them in.
pub fn reduce(j: &DMatrix<f64>, gens: &[usize], loads: &[usize]) -> Result<ReducedNetwork, NetworkError> {
    let pick = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |r, c| j[(rows[r], cols[c])]);
    let j_gg = pick(gens, gens);
    let n = gens.len();
    let m = loads.len();
    if m == 0 {
        return Ok(ReducedNetwork {
            k_p: j_gg,
            d_p: DMatrix::zeros(n, 0),
            generator_buses: Vec::new(),
            load_buses: Vec::new(),
            load_angle_map: DMatrix::zeros(0, n),
            load_inverse: DMatrix::zeros(0, 0),
        });
    }
    let j_gl = pick(gens, loads);
    let j_lg = pick(loads, gens);
    let j_ll = pick(loads, loads);

    let scale = j_ll.amax().max(f64::MIN_POSITIVE);
    let lu = j_ll.clone().lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if min_pivot <= 1e-12 * scale {
        return Err(NetworkError::SingularReduction);
    }
    let j_ll_inv = lu.try_inverse().ok_or(NetworkError::SingularReduction)?;
    let d_p = &j_gl * &j_ll_inv;
    let k_p = &j_gg - &d_p * &j_lg;
    Ok(ReducedNetwork {
        k_p,
        d_p,
        generator_buses: Vec::new(),
        load_buses: Vec::new(),
        load_angle_map: &j_ll_inv * &j_lg,
        load_inverse: j_ll_inv,
    })
}

/// The disconnected-isolated variant: every tie-line removed.
pub fn disconnect_ties(network: &NetworkModel) -> NetworkModel {
    let lines: Vec<Line> = network
        .lines
        .iter()
        .enumerate()
        .filter(|(i, _)| !network.ties.contains(i))
        .map(|(_, l)| *l)
        .collect();
    // Area interiors are untouched, so the validated invariants still hold.
    NetworkModel {
        buses: network.buses.clone(),
        lines,
        areas: network.areas.clone(),
        area_of: network.area_of.clone(),
        index_of: network.index_of.clone(),
        ties: Vec::new(),
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).count()
    }
}
