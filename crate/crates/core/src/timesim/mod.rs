//! Fixed-step simulation of `ẋ = A·x + b·Ṗ_L(t)` and the interaction-variable
//! series derived from it.

mod interaction;
mod resonance;
mod sweep;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::modal::{self, ModalError, ModeSet};
use crate::netmodel::{BusId, NetworkError, NetworkModel};
use crate::statespace::{StateLabel, StateSpaceError, StateSpaceModel, StateTag};

pub use interaction::{interaction_variables, tie_flows, AreaSeries, TieFlowSeries};
pub use resonance::{growth_ratio, resonance_experiment, ResonanceConfig, ResonanceResult};
pub use sweep::{sweep, ParameterPath, SweepRow};

/// Default horizon (s).
pub const DEFAULT_HORIZON: f64 = 50.0;
/// Upper bound on the default step (s).
pub const MAX_DEFAULT_STEP: f64 = 0.01;
/// Default speed perturbation (p.u.).
pub const DEFAULT_PERTURBATION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("step {step} s exceeds the stability limit {limit} s (0.01/f_max); pass allow_large_step to override")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("horizon must be non-negative and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid input signal: {0}")]
    InvalidSignal(String),
    #[error("initial state has {got} entries, model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bus {0} has no input column in this model")]
    UnknownBus(BusId),
    #[error("unknown area: {0}")]
    UnknownArea(String),
    #[error("unknown parameter path `{0}`")]
    UnknownParameterPath(String),
    #[error("trajectory lacks {0} states")]
    MissingStates(&'static str),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    Zero,
    /// `Ṗ_L = A∘` from the start time on.
    Step,
    /// `Ṗ_L = A∘·sin(ω(t − t₀))` from the start time on.
    Sinusoid { frequency: f64 },
}

/// Load-rate disturbance `Ṗ_L(t)` (p.u./s) applied at one bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputSignal {
    pub kind: SignalKind,
    pub amplitude: f64,
    pub start: f64,
    pub bus: BusId,
}

impl InputSignal {
    pub fn zero() -> Self {
        InputSignal {
            kind: SignalKind::Zero,
            amplitude: 0.0,
            start: 0.0,
            bus: BusId(0),
        }
    }

    pub fn step(bus: BusId, amplitude: f64, start: f64) -> Self {
        InputSignal {
            kind: SignalKind::Step,
            amplitude,
            start,
            bus,
        }
    }

    pub fn sinusoid(bus: BusId, amplitude: f64, frequency: f64, start: f64) -> Self {
        InputSignal {
            kind: SignalKind::Sinusoid { frequency },
            amplitude,
            start,
            bus,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, SignalKind::Zero)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.is_zero() {
            return Ok(());
        }
        if !self.amplitude.is_finite() {
            return Err(SimError::InvalidSignal(format!("amplitude {} is not finite", self.amplitude)));
        }
        if !self.start.is_finite() {
            return Err(SimError::InvalidSignal(format!("start {} is not finite", self.start)));
        }
        if let SignalKind::Sinusoid { frequency } = self.kind {
            if !(frequency > 0.0 && frequency.is_finite()) {
                return Err(SimError::InvalidSignal(format!("sinusoid frequency must be positive, got {frequency}")));
            }
        }
        Ok(())
    }

    /// `Ṗ_L(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        self.rate_on(t, t >= self.start)
    }

    /// `Ṗ_L(t)` with the on/off state given, so an integrator can use the
    /// one-sided value at the switching instant.
    fn rate_on(&self, t: f64, on: bool) -> f64 {
        match self.kind {
            SignalKind::Zero => 0.0,
            _ if !on => 0.0,
            SignalKind::Step => self.amplitude,
            SignalKind::Sinusoid { frequency } => self.amplitude * (frequency * (t - self.start)).sin(),
        }
    }

    /// `P_L(t) − P_L(0)`, the closed-form integral of [`InputSignal::rate`].
    pub fn integral(&self, t: f64) -> f64 {
        let tau = t - self.start;
        let lead = (-self.start).max(0.0);
        let f = |tau: f64| match self.kind {
            SignalKind::Zero => 0.0,
            _ if tau <= 0.0 => 0.0,
            SignalKind::Step => self.amplitude * tau,
            SignalKind::Sinusoid { frequency } => self.amplitude * (1.0 - (frequency * tau).cos()) / frequency,
        };
        // a signal that started before t = 0 has already moved P_L by f(lead)
        f(tau) - f(lead)
    }
}

/// Uniformly sampled states; row `k` is the state at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: DMatrix<f64>,
    labels: Vec<StateLabel>,
    step: f64,
    signal: InputSignal,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn signal(&self) -> &InputSignal {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, label: StateLabel) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| *l == label)?;
        Some(self.states.column(j).iter().copied().collect())
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.states.row(self.states.nrows() - 1).transpose()
    }

    pub fn state_at(&self, k: usize) -> DVector<f64> {
        self.states.row(k).transpose()
    }

    /// `Σ_i P_G,i` at every sample.
    pub fn total_power(&self) -> Vec<f64> {
        let cols: Vec<usize> = (0..self.labels.len()).filter(|&j| self.labels[j].tag == StateTag::Power).collect();
        (0..self.states.nrows())
            .map(|k| cols.iter().map(|&j| self.states[(k, j)]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Step `h` (s); `None` picks [`default_step`].
    pub step: Option<f64>,
    pub horizon: f64,
    pub allow_large_step: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step: None,
            horizon: DEFAULT_HORIZON,
            allow_large_step: false,
        }
    }
}

/// Largest oscillation frequency `max |Im λ| / 2π` (Hz).
pub fn max_frequency(model: &StateSpaceModel) -> Result<f64, SimError> {
    let values = modal::eigenvalues(model.a())?;
    Ok(values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / std::f64::consts::TAU)
}

/// Step limit `0.01/f_max`; infinite for a model without oscillation.
pub fn step_limit(model: &StateSpaceModel) -> Result<f64, SimError> {
    let f = max_frequency(model)?;
    Ok(if f > 0.0 { 0.01 / f } else { f64::INFINITY })
}

/// `min(0.01/f_max, 0.01 s)`.
pub fn default_step(model: &StateSpaceModel) -> Result<f64, SimError> {
    Ok(step_limit(model)?.min(MAX_DEFAULT_STEP))
}

/// Classical RK4 on a uniform grid covering `[0, horizon]`. The last step is
/// shortened when `horizon` is not a multiple of `h`.
pub fn simulate(model: &StateSpaceModel, x0: &DVector<f64>, signal: &InputSignal, config: &SimConfig) -> Result<Trajectory, SimError> {
    let n = model.dim();
    if x0.len() != n {
        return Err(SimError::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(config.horizon >= 0.0 && config.horizon.is_finite()) {
        return Err(SimError::InvalidHorizon(config.horizon));
    }
    signal.validate()?;
    let limit = step_limit(model)?;
    let h = match config.step {
        Some(h) => h,
        None => limit.min(MAX_DEFAULT_STEP),
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(SimError::InvalidStep(h));
    }
    if h > limit * (1.0 + 1e-12) {
        if !config.allow_large_step {
            return Err(SimError::StepTooLarge { step: h, limit });
        }
        log::warn!("step {h} s exceeds the stability limit {limit} s");
    }
    let b = if signal.is_zero() {
        DVector::zeros(n)
    } else {
        model.input_column(signal.bus).ok_or(SimError::UnknownBus(signal.bus))?
    };

    let a = model.a();
    let f = |t: f64, on: bool, x: &DVector<f64>| -> DVector<f64> {
        let mut dx = a * x;
        let u = signal.rate_on(t, on);
        if u != 0.0 {
            dx.axpy(u, &b, 1.0);
        }
        dx
    };
    let rk4 = |t: f64, dt: f64, x: &DVector<f64>| -> DVector<f64> {
        // the input is smooth on every sub-step; `on` is fixed by its left end
        let on = t >= signal.start;
        let k1 = f(t, on, x);
        let k2 = f(t + 0.5 * dt, on, &(x + &k1 * (0.5 * dt)));
        let k3 = f(t + 0.5 * dt, on, &(x + &k2 * (0.5 * dt)));
        let k4 = f(t + dt, on, &(x + &k3 * dt));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    };
    let switch = (!signal.is_zero()).then_some(signal.start);

    let steps = (config.horizon / h - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = DMatrix::zeros(steps + 1, n);
    let mut x = x0.clone();
    let mut t = 0.0;
    times.push(t);
    states.set_row(0, &x.transpose());
    for k in 1..=steps {
        let t_next = (k as f64 * h).min(config.horizon);
        let snap = 1e-12 * t_next.abs().max(1.0);
        x = match switch {
            Some(s) if s > t + snap && s < t_next - snap => {
                let mid = rk4(t, s - t, &x);
                rk4(s, t_next - s, &mid)
            }
            // a switch within rounding of the left end counts as already on
            Some(s) if (s - t).abs() <= snap => rk4(s.max(t), t_next - t, &x),
            _ => rk4(t, t_next - t, &x),
        };
        t = t_next;
        times.push(t);
        states.set_row(k, &x.transpose());
    }
    Ok(Trajectory {
        times,
        states,
        labels: model.labels().to_vec(),
        step: h,
        signal: *signal,
    })
}

/// `Δω_G = 0.01` on the first generator listed in the first area.
pub fn default_perturbation(model: &StateSpaceModel, network: &NetworkModel) -> Result<DVector<f64>, SimError> {
    let area = network.areas().first().ok_or_else(|| SimError::UnknownArea("<none>".into()))?;
    let bus = area
        .buses
        .iter()
        .copied()
        .find(|b| model.generator_buses().contains(b))
        .ok_or_else(|| SimError::UnknownArea(format!("{} has no generator", area.id)))?;
    speed_perturbation(model, bus, DEFAULT_PERTURBATION)
}

/// `Δω_G = value` on the generator at `bus`, zero elsewhere.
pub fn speed_perturbation(model: &StateSpaceModel, bus: BusId, value: f64) -> Result<DVector<f64>, SimError> {
    let j = model
        .state_index(StateLabel::new(bus, StateTag::Omega))
        .ok_or(SimError::UnknownBus(bus))?;
    let mut x0 = DVector::zeros(model.dim());
    x0[j] = value;
    Ok(x0)
}

/// Real part of the right eigenvector of `mode`, scaled so the largest
/// `|Δω_G|` equals `max_speed`. Excites that mode alone.
pub fn mode_shape_state(model: &StateSpaceModel, modes: &ModeSet, mode: usize, max_speed: f64) -> Result<DVector<f64>, SimError> {
    if mode >= modes.len() {
        return Err(ModalError::UnknownMode(mode).into());
    }
    if modes.len() != model.dim() {
        return Err(SimError::DimensionMismatch {
            expected: model.dim(),
            got: modes.len(),
        });
    }
    let x: DVector<f64> = modes.right().column(mode).map(|c| c.re);
    let peak = model
        .indices_of(StateTag::Omega)
        .iter()
        .map(|&j| x[j].abs())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(x);
    }
    Ok(x * (max_speed / peak))
}

/// Angular frequency (rad/s) from sign changes of `series`, with crossing
/// times found by linear interpolation. `None` with fewer than two
/// crossings.
pub fn zero_crossing_frequency(times: &[f64], series: &[f64]) -> Option<f64> {
    let scale = series.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let eps = 1e-12 * scale;
    let mut crossings = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&t, &v) in times.iter().zip(series) {
        if v.abs() <= eps {
            continue;
        }
        if let Some((tp, vp)) = prev {
            if vp.signum() != v.signum() {
                crossings.push(tp + (t - tp) * vp / (vp - v));
            }
        }
        prev = Some((t, v));
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
}
