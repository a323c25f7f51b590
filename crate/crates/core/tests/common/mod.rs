#![allow(dead_code)]

use interarea::netmodel::{Area, Bus, GeneratorParams, Line, NetworkModel, OperatingPoint};
use interarea::statespace::{ModelForm, StateSpaceModel};
use proptest::prelude::*;

/// Two areas, each a random tree of generators with optional load-only
/// leaves, joined by one or two tie-lines.
#[derive(Debug, Clone)]
pub struct NetSpec {
    pub inertia: Vec<f64>,
    pub split: usize,
    pub parents: Vec<usize>,
    pub reactance: Vec<f64>,
    pub loads: Vec<(usize, f64)>,
    pub ties: Vec<(usize, usize, f64)>,
}

pub fn net_spec(max_gens: usize, with_loads: bool) -> impl Strategy<Value = NetSpec> {
    (2..=max_gens)
        .prop_flat_map(move |n| {
            let loads = if with_loads { 0..=2usize } else { 0..=0usize };
            (
                prop::collection::vec(1.0..40.0f64, n),
                1..n,
                prop::collection::vec((any::<prop::sample::Index>(), 0.05..1.0f64), n),
                loads.prop_flat_map(move |m| prop::collection::vec((0..n, 0.05..1.0f64), m)),
                prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), 0.05..1.0f64), 1..=2),
            )
        })
        .prop_map(|(inertia, split, tree, loads, ties)| {
            let n = inertia.len();
            // parent of generator i within its own area (ignored for area roots)
            let parents = (0..n)
                .map(|i| {
                    let lo = if i < split { 0 } else { split };
                    if i == lo {
                        i
                    } else {
                        lo + tree[i].0.index(i - lo)
                    }
                })
                .collect();
            let reactance = tree.iter().map(|t| t.1).collect();
            let ties = ties
                .into_iter()
                .map(|(a, b, x)| (a.index(split), split + b.index(n - split), x))
                .collect();
            NetSpec {
                inertia,
                split,
                parents,
                reactance,
                loads,
                ties,
            }
        })
}

impl NetSpec {
    pub fn generators(&self) -> usize {
        self.inertia.len()
    }

    pub fn build(&self) -> NetworkModel {
        self.build_with_order(&(0..self.generators() + self.loads.len()).collect::<Vec<_>>())
    }

    /// Same network with buses listed in `order` (indices into generators
    /// followed by loads).
    pub fn build_with_order(&self, order: &[usize]) -> NetworkModel {
        let n = self.generators();
        let id = |i: usize| i as u32 + 1;
        let mut all_buses: Vec<Bus> = self
            .inertia
            .iter()
            .enumerate()
            .map(|(i, m)| Bus::generator(id(i), GeneratorParams::slow_governor(*m)))
            .collect();
        all_buses.extend((0..self.loads.len()).map(|k| Bus::load_only(id(n + k), 0.0)));
        let buses = order.iter().map(|&i| all_buses[i].clone()).collect();

        let mut lines = Vec::new();
        for i in 0..n {
            if self.parents[i] != i {
                lines.push(Line::new(id(self.parents[i]), id(i), self.reactance[i]));
            }
        }
        for (k, (host, x)) in self.loads.iter().enumerate() {
            lines.push(Line::new(id(*host), id(n + k), *x));
        }
        for (a, b, x) in &self.ties {
            lines.push(Line::new(id(*a), id(*b), *x));
        }
        let mut a1: Vec<u32> = (0..self.split).map(id).collect();
        let mut a2: Vec<u32> = (self.split..n).map(id).collect();
        for (k, (host, _)) in self.loads.iter().enumerate() {
            if *host < self.split {
                a1.push(id(n + k));
            } else {
                a2.push(id(n + k));
            }
        }
        NetworkModel::build(buses, lines, vec![Area::new("A1", &a1), Area::new("A2", &a2)]).unwrap()
    }
}

pub fn model(net: &NetworkModel, form: ModelForm) -> StateSpaceModel {
    StateSpaceModel::from_network(net, &OperatingPoint::flat(), form).unwrap()
}
