use nalgebra::DVector;

use super::{SimError, Trajectory};
use crate::netmodel::{AreaId, BusId, NetworkError, NetworkModel, OperatingPoint};
use crate::statespace::{StateLabel, StateSpaceModel, StateTag};

/// Per-area interaction variables along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaSeries {
    pub times: Vec<f64>,
    /// Areas in network order; the first is "Area I".
    pub areas: Vec<AreaId>,
    /// `intVar` per area (p.u.): sum of net bus injections.
    pub int_var: Vec<Vec<f64>>,
    /// `d/dt intVar` per area (p.u./s).
    pub rate: Vec<Vec<f64>>,
    /// `rate_I − rate_II` (p.u./s); zero when there is a single area.
    pub inter_area: Vec<f64>,
    /// `intVar_I − intVar_II` (p.u.).
    pub inter_area_power: Vec<f64>,
}

impl AreaSeries {
    pub fn area_index(&self, id: &AreaId) -> Option<usize> {
        self.areas.iter().position(|a| a == id)
    }
}

struct Columns {
    omega: Vec<usize>,
    power: Vec<usize>,
}

fn generator_columns(traj: &Trajectory, buses: &[BusId]) -> Result<Columns, SimError> {
    let find = |bus: BusId, tag| traj.labels().iter().position(|l| *l == StateLabel::new(bus, tag));
    let omega = buses
        .iter()
        .map(|b| find(*b, StateTag::Omega))
        .collect::<Option<Vec<_>>>()
        .ok_or(SimError::MissingStates("omega_G"))?;
    let power = buses
        .iter()
        .map(|b| find(*b, StateTag::Power))
        .collect::<Option<Vec<_>>>()
        .ok_or(SimError::MissingStates("P_G"))?;
    Ok(Columns { omega, power })
}

/// Net injection deviation and its rate at every bus of the reduced
/// network (generator buses first, then load-only buses) at sample `k`.
fn injections(traj: &Trajectory, model: &StateSpaceModel, cols: &Columns, k: usize) -> (DVector<f64>, DVector<f64>) {
    let red = model.reduced_network();
    let (n, m) = (red.generator_count(), red.load_count());
    let t = traj.times()[k];
    let signal = traj.signal();
    let (u, p_l) = if signal.is_zero() { (0.0, 0.0) } else { (signal.rate(t), signal.integral(t)) };

    let omega = DVector::from_fn(n, |i, _| traj.states()[(k, cols.omega[i])]);
    let mut power = DVector::from_fn(n + m, |i, _| if i < n { traj.states()[(k, cols.power[i])] } else { 0.0 });
    let mut rate = DVector::zeros(n + m);
    rate.rows_mut(0, n).copy_from(&(&red.k_p * &omega));

    if let Some(g) = red.generator_buses.iter().position(|b| *b == signal.bus) {
        // co-located load: P_G absorbs it, the network injection does not
        power[g] -= p_l;
    }
    if let Some(l) = red.load_buses.iter().position(|b| *b == signal.bus) {
        power[n + l] = -p_l;
        rate[n + l] = -u;
        for i in 0..n {
            rate[i] -= red.d_p[(i, l)] * u;
        }
    }
    (power, rate)
}

/// `intVar` per area as the sum of net injections, with rates from
/// `Ṗ = K_P·ω_G − D_P·Ṗ_L` evaluated on the samples.
pub fn interaction_variables(traj: &Trajectory, model: &StateSpaceModel, network: &NetworkModel) -> Result<AreaSeries, SimError> {
    let red = model.reduced_network();
    let cols = generator_columns(traj, &red.generator_buses)?;
    let buses: Vec<BusId> = red.generator_buses.iter().chain(&red.load_buses).copied().collect();
    let areas: Vec<AreaId> = network.areas().iter().map(|a| a.id.clone()).collect();
    let area_of = buses
        .iter()
        .map(|b| {
            let id = network.area_of(*b).ok_or_else(|| SimError::UnknownArea(format!("no area for bus {b}")))?;
            Ok(areas.iter().position(|a| a == id).expect("area listed"))
        })
        .collect::<Result<Vec<usize>, SimError>>()?;

    let samples = traj.len();
    let mut int_var = vec![vec![0.0; samples]; areas.len()];
    let mut rate = vec![vec![0.0; samples]; areas.len()];
    for k in 0..samples {
        let (p, r) = injections(traj, model, &cols, k);
        for (i, &a) in area_of.iter().enumerate() {
            int_var[a][k] += p[i];
            rate[a][k] += r[i];
        }
    }
    let diff = |s: &[Vec<f64>]| -> Vec<f64> {
        if s.len() < 2 {
            vec![0.0; samples]
        } else {
            s[0].iter().zip(&s[1]).map(|(a, b)| a - b).collect()
        }
    };
    Ok(AreaSeries {
        times: traj.times().to_vec(),
        inter_area: diff(&rate),
        inter_area_power: diff(&int_var),
        areas,
        int_var,
        rate,
    })
}

/// Linearized tie-line flows reconstructed from bus angles.
#[derive(Debug, Clone, PartialEq)]
pub struct TieFlowSeries {
    pub times: Vec<f64>,
    /// `(from, to)` per tie-line, network order.
    pub lines: Vec<(BusId, BusId)>,
    /// Flow deviation from `from` to `to` (p.u.), one series per line.
    pub flows: Vec<Vec<f64>>,
    pub areas: Vec<AreaId>,
    /// Sum of tie flows leaving each area.
    pub outgoing: Vec<Vec<f64>>,
}

/// Tie flows from angles: generator angles come from the `δ_G` states of an
/// angle-augmented model, load-bus angles from the eliminated network rows.
pub fn tie_flows(traj: &Trajectory, model: &StateSpaceModel, network: &NetworkModel, op: &OperatingPoint) -> Result<TieFlowSeries, SimError> {
    let red = model.reduced_network();
    let (n, m) = (red.generator_count(), red.load_count());
    let angle_cols = red
        .generator_buses
        .iter()
        .map(|b| traj.labels().iter().position(|l| *l == StateLabel::new(*b, StateTag::Angle)))
        .collect::<Option<Vec<_>>>()
        .ok_or(SimError::MissingStates("delta_G"))?;
    let ties: Vec<_> = network.tie_lines().copied().collect();
    let areas: Vec<AreaId> = network.areas().iter().map(|a| a.id.clone()).collect();
    let signal = traj.signal();
    let load_pos = red.load_buses.iter().position(|b| *b == signal.bus);

    let mut weights = Vec::with_capacity(ties.len());
    for line in &ties {
        let s_from = op.state(line.from).ok_or(NetworkError::MissingOperatingPoint(line.from))?;
        let s_to = op.state(line.to).ok_or(NetworkError::MissingOperatingPoint(line.to))?;
        weights.push(s_from.voltage * s_to.voltage * (s_from.angle - s_to.angle).cos() / line.reactance);
    }
    let index = |b: BusId| -> usize {
        red.generator_buses
            .iter()
            .position(|g| *g == b)
            .or_else(|| red.load_buses.iter().position(|l| *l == b).map(|l| n + l))
            .expect("tie endpoint is a network bus")
    };
    let endpoints: Vec<(usize, usize)> = ties.iter().map(|l| (index(l.from), index(l.to))).collect();

    let samples = traj.len();
    let mut flows = vec![vec![0.0; samples]; ties.len()];
    let mut outgoing = vec![vec![0.0; samples]; areas.len()];
    let mut p_l = DVector::zeros(m);
    for k in 0..samples {
        let delta_g = DVector::from_fn(n, |i, _| traj.states()[(k, angle_cols[i])]);
        if let Some(l) = load_pos {
            p_l[l] = -signal.integral(traj.times()[k]);
        }
        let delta_l: DVector<f64> = if m == 0 {
            DVector::zeros(0)
        } else {
            &red.load_inverse * &p_l - &red.load_angle_map * &delta_g
        };
        let angle = |i: usize| if i < n { delta_g[i] } else { delta_l[i - n] };
        for (t, line) in ties.iter().enumerate() {
            let (a, b) = endpoints[t];
            let f = weights[t] * (angle(a) - angle(b));
            flows[t][k] = f;
            let from_area = network.area_of(line.from).and_then(|id| areas.iter().position(|x| x == id));
            let to_area = network.area_of(line.to).and_then(|id| areas.iter().position(|x| x == id));
            if let Some(a) = from_area {
                outgoing[a][k] += f;
            }
            if let Some(b) = to_area {
                outgoing[b][k] -= f;
            }
        }
    }
    Ok(TieFlowSeries {
        times: traj.times().to_vec(),
        lines: ties.iter().map(|l| (l.from, l.to)).collect(),
        flows,
        areas,
        outgoing,
    })
}
