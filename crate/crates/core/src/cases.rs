//! The three-bus, two-area network used throughout the examples.
//!
//! Buses 1 and 2 form area `A1`, bus 3 forms `A2`. Every bus carries a
//! generator with a co-located load. Line 1–2 has reactance `X₁`, the tie
//! 2–3 has `X₂`.

use crate::netmodel::{disconnect_ties, Area, Bus, GeneratorParams, Line, NetworkError, NetworkModel};

/// Base reactance `X₁` (p.u.).
pub const BASE_REACTANCE: f64 = 1.0 / 15.0;
/// Base inertia (p.u.·s).
pub const BASE_INERTIA: f64 = 3.2;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["paper-case1", "paper-case2", "paper-case3", "paper-inertia2"];

pub fn three_bus(x1: f64, x2: f64, inertia: [f64; 3]) -> Result<NetworkModel, NetworkError> {
    let buses = (0..3)
        .map(|i| Bus::generator(i as u32 + 1, GeneratorParams::slow_governor(inertia[i])))
        .collect();
    NetworkModel::build(
        buses,
        vec![Line::new(1, 2, x1), Line::new(2, 3, x2)],
        vec![Area::new("A1", &[1, 2]), Area::new("A2", &[3])],
    )
}

/// `X₂ = X₁`, equal inertias.
pub fn case1() -> NetworkModel {
    three_bus(BASE_REACTANCE, BASE_REACTANCE, [BASE_INERTIA; 3]).expect("valid built-in")
}

/// Weak tie, `X₂ = 10·X₁`.
pub fn case2() -> NetworkModel {
    three_bus(BASE_REACTANCE, 10.0 * BASE_REACTANCE, [BASE_INERTIA; 3]).expect("valid built-in")
}

/// Case 1 with the tie removed.
pub fn case3() -> NetworkModel {
    disconnect_ties(&case1())
}

/// `X₂ = X₁`, generator 3 ten times heavier.
pub fn inertia_case2() -> NetworkModel {
    three_bus(BASE_REACTANCE, BASE_REACTANCE, [BASE_INERTIA, BASE_INERTIA, 10.0 * BASE_INERTIA]).expect("valid built-in")
}

pub fn builtin(name: &str) -> Option<NetworkModel> {
    match name {
        "paper-case1" => Some(case1()),
        "paper-case2" => Some(case2()),
        "paper-case3" => Some(case3()),
        "paper-inertia2" => Some(inertia_case2()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            assert!(builtin(name).is_some(), "{name}");
        }
        assert!(builtin("paper-case9").is_none());
        assert_eq!(case1().tie_lines().count(), 1);
        assert_eq!(case3().tie_lines().count(), 0);
        assert_eq!(case3().component_count(), 2);
    }
}
