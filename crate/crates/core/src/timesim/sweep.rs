use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::SimError;
use crate::modal::{decompose_model, identify_interconnection_mode};
use crate::netmodel::{disconnect_ties, BusId, NetworkModel, OperatingPoint};
use crate::statespace::{ModelForm, StateSpaceModel};

/// A sweepable scalar of a network.
///
/// Textual forms are `lines.<from>-<to>.reactance` and
/// `generators.<bus>.inertia`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterPath {
    LineReactance { from: BusId, to: BusId },
    GeneratorInertia { bus: BusId },
}

impl FromStr for ParameterPath {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::UnknownParameterPath(s.to_string());
        let parts: Vec<&str> = s.trim().split('.').collect();
        match parts.as_slice() {
            ["lines", ends, "reactance"] => {
                let (a, b) = ends.split_once('-').ok_or_else(bad)?;
                Ok(ParameterPath::LineReactance {
                    from: BusId(a.parse().map_err(|_| bad())?),
                    to: BusId(b.parse().map_err(|_| bad())?),
                })
            }
            ["generators", bus, "inertia"] => Ok(ParameterPath::GeneratorInertia {
                bus: BusId(bus.parse().map_err(|_| bad())?),
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ParameterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterPath::LineReactance { from, to } => write!(f, "lines.{from}-{to}.reactance"),
            ParameterPath::GeneratorInertia { bus } => write!(f, "generators.{bus}.inertia"),
        }
    }
}

impl ParameterPath {
    /// Copy of `network` with the addressed parameter set to `value`.
    pub fn apply(&self, network: &NetworkModel, value: f64) -> Result<NetworkModel, SimError> {
        let out = match *self {
            ParameterPath::LineReactance { from, to } => network.with_line_reactance(from, to, value),
            ParameterPath::GeneratorInertia { bus } => network.with_generator_inertia(bus, value),
        };
        out.map_err(|e| match e {
            crate::netmodel::NetworkError::UnknownBus(_) => SimError::UnknownParameterPath(self.to_string()),
            other => other.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Interconnection-mode frequencies (rad/s), ascending.
    pub interconnection: Vec<f64>,
    pub cis_zero_count: usize,
    pub dis_zero_count: usize,
}

impl SweepRow {
    /// Slowest interconnection mode, if any.
    pub fn frequency(&self) -> Option<f64> {
        self.interconnection.first().copied()
    }
}

/// Rebuilds the model for every value and compares it with its
/// tie-disconnected variant. Rows keep the order of `values`.
pub fn sweep(
    network: &NetworkModel,
    op: &OperatingPoint,
    form: ModelForm,
    path: ParameterPath,
    values: &[f64],
    zero_tol: f64,
) -> Result<Vec<SweepRow>, SimError> {
    // fail on a bad path even when there are no values to evaluate
    if values.is_empty() {
        path.apply(network, probe_value(network, path))?;
    }
    values
        .par_iter()
        .map(|&value| {
            let cis_net = path.apply(network, value)?;
            let dis_net = disconnect_ties(&cis_net);
            let cis = decompose_model(&StateSpaceModel::from_network(&cis_net, op, form)?)?;
            let dis = decompose_model(&StateSpaceModel::from_network(&dis_net, op, form)?)?;
            let m = identify_interconnection_mode(&cis, &dis, zero_tol)?;
            let mut interconnection: Vec<f64> = m.interconnection.iter().map(|&i| cis.eigenvalues()[i].im).collect();
            interconnection.sort_by(|a, b| a.total_cmp(b));
            Ok(SweepRow {
                value,
                interconnection,
                cis_zero_count: m.cis_zero_count,
                dis_zero_count: m.dis_zero_count,
            })
        })
        .collect()
}

fn probe_value(network: &NetworkModel, path: ParameterPath) -> f64 {
    match path {
        ParameterPath::LineReactance { from, to } => network
            .lines()
            .iter()
            .find(|l| (l.from == from && l.to == to) || (l.from == to && l.to == from))
            .map_or(1.0, |l| l.reactance),
        ParameterPath::GeneratorInertia { bus } => network
            .bus(bus)
            .and_then(|b| b.generator_params())
            .map_or(1.0, |p| p.inertia),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_round_trip() {
        for s in ["lines.2-3.reactance", "generators.3.inertia"] {
            let p: ParameterPath = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        for s in ["lines.2.reactance", "generators.x.inertia", "buses.1.load", ""] {
            assert!(matches!(s.parse::<ParameterPath>(), Err(SimError::UnknownParameterPath(_))));
        }
    }
}
