//! Transformed state-space assembly.
//!
//! Each generator contributes local states `(ω_G, P_t, a)` and its electrical
//! power `P_G`. The full model stacks all local states first and all `P_G`
//! last:
//!
//! ```text
//! ẋ = [ blockdiag(A_LC)  blockdiag(c_M) ] x + B_L Ṗ_L
//!     [ K_P · E          0              ]
//! ```
//!
//! The reduced model keeps only `(ω_G; P_G)` and is the large-time-constant
//! limit of the full one.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

use crate::netmodel::{BusId, GeneratorParams, NetworkError, NetworkModel, OperatingPoint, ReducedNetwork};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateTag {
    /// Rotor speed deviation `ω_G`.
    Omega,
    /// Turbine power `P_t`.
    TurbinePower,
    /// Valve opening `a`.
    Valve,
    /// Electrical power `P_G`.
    Power,
    /// Rotor angle `δ_G`, only present on angle-augmented models.
    Angle,
}

impl StateTag {
    pub fn name(self) -> &'static str {
        match self {
            StateTag::Omega => "omega_G",
            StateTag::TurbinePower => "P_t",
            StateTag::Valve => "a",
            StateTag::Power => "P_G",
            StateTag::Angle => "delta_G",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLabel {
    pub generator: BusId,
    pub tag: StateTag,
}

impl StateLabel {
    pub fn new(generator: BusId, tag: StateTag) -> Self {
        StateLabel { generator, tag }
    }
}

/// Renders as `omega_G_1`, `P_G_3`, ...
impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.tag.name(), self.generator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelForm {
    /// Four states per generator.
    Full,
    /// Swing form, `(ω_G; P_G)` per generator.
    Reduced,
}

impl ModelForm {
    pub fn name(self) -> &'static str {
        match self {
            ModelForm::Full => "full",
            ModelForm::Reduced => "reduced",
        }
    }
}

/// Local G-T-G matrix `A_LC` and power input column `c_M`.
pub fn gtg_block(p: &GeneratorParams) -> (Matrix3<f64>, Vector3<f64>) {
    let m = p.inertia;
    let a_lc = Matrix3::new(
        -p.damping / m,
        1.0 / m,
        0.0,
        0.0,
        -1.0 / p.turbine_time,
        p.turbine_gain / p.turbine_time,
        -1.0 / p.governor_time,
        0.0,
        -1.0 / (p.droop * p.governor_time),
    );
    (a_lc, Vector3::new(-1.0 / m, 0.0, 0.0))
}

/// Selector `E` picking each generator's `ω_G` out of the stacked local
/// states (`n × 3n`).
pub fn omega_selector(generators: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(generators, 3 * generators);
    for i in 0..generators {
        e[(i, 3 * i)] = 1.0;
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    labels: Vec<StateLabel>,
    load_input: DMatrix<f64>,
    colocated_input: DMatrix<f64>,
    flow_input: DMatrix<f64>,
    form: ModelForm,
    reduced: ReducedNetwork,
    generators: Vec<GeneratorParams>,
}

fn check_dims(generators: &[GeneratorParams], reduced: &ReducedNetwork) -> Result<(), StateSpaceError> {
    let n = generators.len();
    if reduced.k_p.shape() != (n, n) {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "{} generators but K_P is {}x{}",
            n,
            reduced.k_p.nrows(),
            reduced.k_p.ncols()
        )));
    }
    if reduced.d_p.nrows() != n {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "{} generators but D_P has {} rows",
            n,
            reduced.d_p.nrows()
        )));
    }
    if !reduced.generator_buses.is_empty() && reduced.generator_buses.len() != n {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "{} generators but {} generator buses",
            n,
            reduced.generator_buses.len()
        )));
    }
    Ok(())
}

fn generator_ids(generators: &[GeneratorParams], reduced: &ReducedNetwork) -> Vec<BusId> {
    if reduced.generator_buses.is_empty() {
        (1..=generators.len() as u32).map(BusId).collect()
    } else {
        reduced.generator_buses.clone()
    }
}

/// Input columns on the `P_G` rows starting at `offset`.
fn power_rows(states: usize, offset: usize, block: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(states, block.ncols());
    b.view_mut((offset, 0), block.shape()).copy_from(block);
    b
}

/// Full model with four states per generator.
///
/// `generators` must be ordered like the rows of `K_P`.
pub fn assemble_full(generators: &[GeneratorParams], reduced: &ReducedNetwork) -> Result<StateSpaceModel, StateSpaceError> {
    check_dims(generators, reduced)?;
    let n = generators.len();
    let dim = 4 * n;
    let mut a = DMatrix::zeros(dim, dim);
    for (i, p) in generators.iter().enumerate() {
        let (a_lc, c_m) = gtg_block(p);
        a.view_mut((3 * i, 3 * i), (3, 3)).copy_from(&a_lc);
        a.view_mut((3 * i, 3 * n + i), (3, 1)).copy_from(&c_m);
    }
    let kpe = &reduced.k_p * omega_selector(n);
    a.view_mut((3 * n, 0), (n, 3 * n)).copy_from(&kpe);

    let ids = generator_ids(generators, reduced);
    let mut labels = Vec::with_capacity(dim);
    for id in &ids {
        labels.push(StateLabel::new(*id, StateTag::Omega));
        labels.push(StateLabel::new(*id, StateTag::TurbinePower));
        labels.push(StateLabel::new(*id, StateTag::Valve));
    }
    labels.extend(ids.iter().map(|id| StateLabel::new(*id, StateTag::Power)));

    Ok(StateSpaceModel {
        load_input: power_rows(dim, 3 * n, &(-&reduced.d_p)),
        colocated_input: power_rows(dim, 3 * n, &DMatrix::identity(n, n)),
        flow_input: power_rows(dim, 3 * n, &DMatrix::identity(n, n)),
        a,
        labels,
        form: ModelForm::Full,
        reduced: reduced.clone(),
        generators: generators.to_vec(),
    })
}

/// Swing form `A = [[−M⁻¹D, −M⁻¹], [K_P, 0]]`.
pub fn assemble_reduced(generators: &[GeneratorParams], reduced: &ReducedNetwork) -> Result<StateSpaceModel, StateSpaceError> {
    check_dims(generators, reduced)?;
    let n = generators.len();
    let dim = 2 * n;
    let mut a = DMatrix::zeros(dim, dim);
    for (i, p) in generators.iter().enumerate() {
        a[(i, i)] = -p.damping / p.inertia;
        a[(i, n + i)] = -1.0 / p.inertia;
    }
    a.view_mut((n, 0), (n, n)).copy_from(&reduced.k_p);

    let ids = generator_ids(generators, reduced);
    let labels = [StateTag::Omega, StateTag::Power]
        .iter()
        .flat_map(|tag| ids.iter().map(move |id| StateLabel::new(*id, *tag)))
        .collect();

    Ok(StateSpaceModel {
        load_input: power_rows(dim, n, &(-&reduced.d_p)),
        colocated_input: power_rows(dim, n, &DMatrix::identity(n, n)),
        flow_input: power_rows(dim, n, &DMatrix::identity(n, n)),
        a,
        labels,
        form: ModelForm::Reduced,
        reduced: reduced.clone(),
        generators: generators.to_vec(),
    })
}

impl StateSpaceModel {
    /// Reduces the network at `op` and assembles the requested form.
    pub fn from_network(network: &NetworkModel, op: &OperatingPoint, form: ModelForm) -> Result<Self, StateSpaceError> {
        let reduced = ReducedNetwork::from_network(network, op)?;
        let generators: Vec<GeneratorParams> = reduced
            .generator_buses
            .iter()
            .map(|id| *network.bus(*id).and_then(|b| b.generator_params()).expect("generator bus"))
            .collect();
        match form {
            ModelForm::Full => assemble_full(&generators, &reduced),
            ModelForm::Reduced => assemble_reduced(&generators, &reduced),
        }
    }

    /// System matrix (1/s).
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    pub fn form(&self) -> ModelForm {
        self.form
    }

    pub fn reduced_network(&self) -> &ReducedNetwork {
        &self.reduced
    }

    pub fn generators(&self) -> &[GeneratorParams] {
        &self.generators
    }

    pub fn generator_buses(&self) -> &[BusId] {
        &self.reduced.generator_buses
    }

    /// `B_L`: one column per load-only bus carrying `−D_P`.
    pub fn load_input(&self) -> &DMatrix<f64> {
        &self.load_input
    }

    /// Unit columns on the `P_G` rows, one per generator bus, for loads
    /// co-located with a generator.
    pub fn colocated_input(&self) -> &DMatrix<f64> {
        &self.colocated_input
    }

    /// Input map for `Ḟ_e`.
    pub fn flow_input(&self) -> &DMatrix<f64> {
        &self.flow_input
    }

    pub fn state_index(&self, label: StateLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// Indices of all states with `tag`, in generator order.
    pub fn indices_of(&self, tag: StateTag) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.tag == tag)
            .map(|(i, _)| i)
            .collect()
    }

    /// Column driven by a load-rate disturbance `Ṗ_L` at `bus`.
    pub fn input_column(&self, bus: BusId) -> Option<DVector<f64>> {
        if let Some(k) = self.reduced.load_buses.iter().position(|b| *b == bus) {
            return Some(self.load_input.column(k).into_owned());
        }
        self.reduced
            .generator_buses
            .iter()
            .position(|b| *b == bus)
            .map(|k| self.colocated_input.column(k).into_owned())
    }

    /// Appends a rotor angle `δ_G` per generator with `δ̇_G = ω_G`.
    pub fn with_angle_states(&self) -> StateSpaceModel {
        let n = self.generators.len();
        let dim = self.dim();
        let omega = self.indices_of(StateTag::Omega);
        let mut a = DMatrix::zeros(dim + n, dim + n);
        a.view_mut((0, 0), (dim, dim)).copy_from(&self.a);
        for (k, &w) in omega.iter().enumerate() {
            a[(dim + k, w)] = 1.0;
        }
        let grow = |m: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(dim + n, m.ncols());
            out.view_mut((0, 0), m.shape()).copy_from(m);
            out
        };
        let mut labels = self.labels.clone();
        labels.extend(self.generator_buses().iter().map(|id| StateLabel::new(*id, StateTag::Angle)));
        StateSpaceModel {
            a,
            labels,
            load_input: grow(&self.load_input),
            colocated_input: grow(&self.colocated_input),
            flow_input: grow(&self.flow_input),
            form: self.form,
            reduced: self.reduced.clone(),
            generators: self.generators.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{reduce, Area, Bus, Line};
    use approx::assert_relative_eq;

    fn p(m: f64, d: f64, tt: f64, tg: f64, kt: f64, r: f64) -> GeneratorParams {
        GeneratorParams::new(m, d, tt, tg, kt, r).unwrap()
    }

    #[test]
    fn gtg_block_slow_governor() {
        let (a, c) = gtg_block(&GeneratorParams::slow_governor(3.2));
        let expected = Matrix3::new(0.0, 0.3125, 0.0, 0.0, -1e-6, 1e-6, -1e-6, 0.0, -2e-5);
        assert_relative_eq!(a, expected, epsilon = 1e-15);
        assert_relative_eq!(c, Vector3::new(-0.3125, 0.0, 0.0));
    }

    #[test]
    fn gtg_block_unit() {
        let (a, c) = gtg_block(&p(1.0, 1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(a, Matrix3::new(-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, -1.0, 0.0, -1.0));
        assert_eq!(c, Vector3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn gtg_block_damped_row() {
        let (a, _) = gtg_block(&p(2.0, 0.5, 1.0, 1.0, 1.0, 0.05));
        assert_eq!(a.row(0).iter().copied().collect::<Vec<_>>(), vec![-0.25, 0.5, 0.0]);
    }

    #[test]
    fn selector_extracts_omega() {
        let e = omega_selector(3);
        let x = DVector::from_vec(vec![1.0, 9.0, 9.0, 2.0, 9.0, 9.0, 3.0, 9.0, 9.0]);
        assert_eq!(e.row_iter().map(|r| r.sum()).collect::<Vec<_>>(), vec![1.0; 3]);
        assert_eq!(&e * x, DVector::from_vec(vec![1.0, 2.0, 3.0]));
    }

    fn single() -> ReducedNetwork {
        reduce(&DMatrix::zeros(1, 1), &[0], &[]).unwrap()
    }

    #[test]
    fn single_machine_full_model() {
        let m = assemble_full(&[GeneratorParams::slow_governor(3.2)], &single()).unwrap();
        assert_eq!(m.dim(), 4);
        assert!(m.a().row(3).iter().all(|v| *v == 0.0));
        assert_eq!(m.load_input().ncols(), 0);
        assert_eq!(
            m.labels().iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            vec!["omega_G_1", "P_t_1", "a_1", "P_G_1"]
        );
    }

    #[test]
    fn single_machine_reduced_is_nilpotent() {
        let m = assemble_reduced(&[GeneratorParams::slow_governor(2.0)], &single()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.0, 0.0]);
        assert_eq!(m.a(), &expected);
        assert_eq!(m.a() * m.a(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn dimension_mismatch() {
        let g = GeneratorParams::slow_governor(1.0);
        let err = assemble_reduced(&[g, g], &single()).unwrap_err();
        assert!(matches!(err, StateSpaceError::DimensionMismatch(_)));
        assert!(assemble_full(&[g, g], &single()).is_err());
    }

    fn load_network() -> NetworkModel {
        let g = GeneratorParams::slow_governor(3.2);
        NetworkModel::build(
            vec![Bus::generator(1, g), Bus::load_only(2, 0.4), Bus::generator(3, g)],
            vec![Line::new(1, 2, 0.1), Line::new(2, 3, 0.2)],
            vec![Area::new("A", &[1, 2]), Area::new("B", &[3])],
        )
        .unwrap()
    }

    #[test]
    fn full_model_structure() {
        let net = load_network();
        let m = StateSpaceModel::from_network(&net, &OperatingPoint::flat(), ModelForm::Full).unwrap();
        let r = m.reduced_network();
        assert_eq!(m.dim(), 8);
        // bottom-right P_G block is zero
        assert!(m.a().view((6, 6), (2, 2)).iter().all(|v| *v == 0.0));
        // K_P E places K_P on the ω columns
        assert_relative_eq!(m.a()[(6, 0)], r.k_p[(0, 0)]);
        assert_relative_eq!(m.a()[(6, 3)], r.k_p[(0, 1)]);
        assert_eq!(m.a()[(6, 1)], 0.0);
        // B_L = [0; −D_P]
        assert_eq!(m.load_input().shape(), (8, 1));
        assert_relative_eq!(m.load_input()[(6, 0)], -r.d_p[(0, 0)]);
        assert_eq!(m.load_input().rows(0, 6).amax(), 0.0);
        assert_eq!(m.input_column(BusId(2)).unwrap(), m.load_input().column(0).into_owned());
        let col = m.input_column(BusId(3)).unwrap();
        assert_eq!(col[7], 1.0);
        assert_eq!(col.sum(), 1.0);
        assert!(m.input_column(BusId(9)).is_none());
    }

    #[test]
    fn power_rows_conserve_with_load_bus() {
        let net = load_network();
        let m = StateSpaceModel::from_network(&net, &OperatingPoint::flat(), ModelForm::Reduced).unwrap();
        let p_rows = m.indices_of(StateTag::Power);
        for c in 0..m.dim() {
            let s: f64 = p_rows.iter().map(|&r| m.a()[(r, c)]).sum();
            assert!(s.abs() < 1e-12);
        }
        // Load-rate columns push total generation by exactly the load rate.
        assert_relative_eq!(m.load_input().column(0).sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_augmentation() {
        let net = load_network();
        let m = StateSpaceModel::from_network(&net, &OperatingPoint::flat(), ModelForm::Reduced).unwrap();
        let aug = m.with_angle_states();
        assert_eq!(aug.dim(), 6);
        assert_eq!(aug.labels()[4].to_string(), "delta_G_1");
        assert_eq!(aug.a()[(4, 0)], 1.0);
        assert_eq!(aug.a()[(5, 1)], 1.0);
        assert_eq!(aug.a().view((0, 0), (4, 4)), m.a().view((0, 0), (4, 4)));
    }
}
