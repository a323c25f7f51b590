use nalgebra::DVector;

use super::{interaction_variables, simulate, AreaSeries, InputSignal, SimConfig, SimError, Trajectory};
use crate::netmodel::{BusId, NetworkModel};
use crate::statespace::StateSpaceModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceConfig {
    /// Bus carrying the renewable disturbance.
    pub bus: BusId,
    /// `A∘` (p.u./s).
    pub amplitude: f64,
    pub horizon: f64,
    pub step: Option<f64>,
    /// Starting state; zero when absent.
    pub x0: Option<DVector<f64>>,
}

impl ResonanceConfig {
    pub fn new(bus: BusId, amplitude: f64, horizon: f64) -> Self {
        ResonanceConfig {
            bus,
            amplitude,
            horizon,
            step: None,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceResult {
    pub frequency: f64,
    pub resonant: Trajectory,
    pub off_resonant: Trajectory,
    pub resonant_series: AreaSeries,
    pub off_resonant_series: AreaSeries,
    /// Peak `|inter-area|` over the last tenth of the horizon divided by the
    /// peak over the first tenth.
    pub resonant_ratio: f64,
    pub off_resonant_ratio: f64,
}

/// Peak `|s|` over the last decile over the peak over the first decile.
/// `1.0` for an all-zero series.
pub fn growth_ratio(series: &[f64]) -> f64 {
    let n = series.len();
    if n == 0 {
        return 1.0;
    }
    let d = (n / 10).max(1);
    let peak = |s: &[f64]| s.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let first = peak(&series[..d]);
    let last = peak(&series[n - d..]);
    match (first == 0.0, last == 0.0) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => last / first,
    }
}

/// Forces `Ṗ_L = A∘·sin(ω t)` at `mode_freq` and at half of it, and compares
/// how the inter-area series grows in each run.
pub fn resonance_experiment(
    model: &StateSpaceModel,
    network: &NetworkModel,
    mode_freq: f64,
    config: &ResonanceConfig,
) -> Result<ResonanceResult, SimError> {
    if !(config.amplitude >= 0.0 && config.amplitude.is_finite()) {
        return Err(SimError::InvalidSignal(format!("amplitude must be non-negative, got {}", config.amplitude)));
    }
    let x0 = config.x0.clone().unwrap_or_else(|| DVector::zeros(model.dim()));
    let sim = SimConfig {
        step: config.step,
        horizon: config.horizon,
        allow_large_step: false,
    };
    let run = |freq: f64| -> Result<(Trajectory, AreaSeries), SimError> {
        let signal = InputSignal::sinusoid(config.bus, config.amplitude, freq, 0.0);
        let traj = simulate(model, &x0, &signal, &sim)?;
        let series = interaction_variables(&traj, model, network)?;
        Ok((traj, series))
    };
    let (resonant, resonant_series) = run(mode_freq)?;
    let (off_resonant, off_resonant_series) = run(0.5 * mode_freq)?;
    Ok(ResonanceResult {
        frequency: mode_freq,
        resonant_ratio: growth_ratio(&resonant_series.inter_area),
        off_resonant_ratio: growth_ratio(&off_resonant_series.inter_area),
        resonant,
        off_resonant,
        resonant_series,
        off_resonant_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_edges() {
        assert_eq!(growth_ratio(&[]), 1.0);
        assert_eq!(growth_ratio(&[0.0; 20]), 1.0);
        let mut s = vec![0.0; 20];
        s[19] = 1.0;
        assert_eq!(growth_ratio(&s), f64::INFINITY);
        let ramp: Vec<f64> = (0..100).map(|k| k as f64 + 1.0).collect();
        assert_eq!(growth_ratio(&ramp), 10.0);
    }
}
