//! One function per subcommand. Each returns a [`ResultBundle`]; writing it
//! out is the caller's job.

use std::collections::BTreeMap;

use interarea::modal::{
    classify_modes, decompose_model, dominant_states, identify_interconnection_mode, participation_factors, ModeMatch, ModeSet,
};
use interarea::netmodel::{disconnect_ties, BusId};
use interarea::statespace::{StateSpaceModel, StateTag};
use interarea::timesim::{
    default_perturbation, interaction_variables, mode_shape_state, resonance_experiment, simulate, speed_perturbation, sweep,
    InputSignal, ParameterPath, ResonanceConfig, SimConfig,
};
use log::info;
use nalgebra::DVector;

use crate::emit::{Cell, Column, Plot, ResultBundle, Series, Table};
use crate::scenario::{builtin_names, load_scenario, InitialDoc, InputDoc, Scenario};
use crate::CliError;

/// Command-line values that replace scenario settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub zero_tol: Option<f64>,
    pub threshold: Option<f64>,
    pub allow_large_step: bool,
}

impl Overrides {
    pub fn apply(&self, s: &Scenario) -> Result<Scenario, CliError> {
        if *self == Overrides::default() {
            return Ok(s.clone());
        }
        s.with_overrides(|d| {
            if self.step.is_some() {
                d.simulation.step = self.step;
            }
            if self.horizon.is_some() {
                d.simulation.horizon = self.horizon;
            }
            if self.zero_tol.is_some() {
                d.analysis.zero_tol = self.zero_tol;
            }
            if self.threshold.is_some() {
                d.analysis.threshold = self.threshold;
            }
            if self.allow_large_step {
                d.simulation.allow_large_step = Some(true);
            }
        })
    }
}

pub fn load(spec: &str, overrides: &Overrides) -> Result<Scenario, CliError> {
    overrides.apply(&load_scenario(spec)?)
}

fn model(s: &Scenario) -> Result<StateSpaceModel, CliError> {
    Ok(StateSpaceModel::from_network(s.network(), s.operating_point(), s.form())?)
}

fn unit(tag: StateTag) -> &'static str {
    match tag {
        StateTag::Angle => "rad",
        _ => "p.u.",
    }
}

fn class_of(modes: &ModeSet, zero_tol: f64) -> Vec<&'static str> {
    let c = classify_modes(modes, zero_tol);
    let mut class = vec!["oscillatory"; modes.len()];
    for &i in &c.zero {
        class[i] = "zero";
    }
    for &i in &c.aperiodic {
        class[i] = "aperiodic";
    }
    class
}

fn dominant_text(p: &interarea::modal::ParticipationMatrix, mode: usize, threshold: f64) -> Result<String, CliError> {
    if p.column(mode).is_none() {
        return Ok(String::new());
    }
    let mut list = dominant_states(p, mode, threshold)?;
    list.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(list.into_iter().map(|(l, _)| l).collect::<Vec<_>>().join(";"))
}

fn participation_table(modes: &ModeSet) -> Table {
    let p = participation_factors(modes);
    let mut columns = vec![Column::new("state", "")];
    columns.extend((0..modes.len()).map(|i| Column::new(format!("mode_{i}"), "1")));
    let mut t = Table::new("participation", columns);
    for (r, label) in p.labels().iter().enumerate() {
        let mut row = vec![Cell::Text(label.clone())];
        row.extend((0..modes.len()).map(|i| match p.get(r, i) {
            Some(v) => Cell::Num(v),
            None => Cell::Text(String::new()),
        }));
        t.push(row);
    }
    t
}

/// Eigenvalues with their class and dominant states, plus the participation
/// matrix.
pub fn cmd_eig(s: &Scenario) -> Result<ResultBundle, CliError> {
    let modes = decompose_model(&model(s)?)?;
    let p = participation_factors(&modes);
    let class = class_of(&modes, s.zero_tol());
    // row i is mode i, matching the `mode_i` participation columns
    let mut t = Table::new(
        "modes",
        vec![
            Column::new("re_per_s", "1/s"),
            Column::new("im_per_s", "rad/s"),
            Column::new("class", ""),
            Column::new("dominant_states", ""),
        ],
    );
    for (i, v) in modes.eigenvalues().iter().enumerate() {
        t.push(vec![
            Cell::Num(v.re),
            Cell::Num(v.im),
            Cell::Text(class[i].into()),
            Cell::Text(dominant_text(&p, i, s.threshold())?),
        ]);
    }
    let c = classify_modes(&modes, s.zero_tol());
    let mut summary = vec![format!(
        "{}: {} zero, {} oscillatory pair(s), {} aperiodic",
        s.name(),
        c.zero.len(),
        c.oscillatory.len(),
        c.aperiodic.len()
    )];
    summary.extend(c.oscillatory.iter().map(|o| format!("  pair at {:.4} rad/s (re {:.3e})", o.frequency, o.real)));
    if modes.defective().iter().any(|d| *d) {
        summary.push("  defective modes present; their participation columns are blank".into());
    }
    Ok(ResultBundle {
        tables: vec![t, participation_table(&modes)],
        plots: vec![],
        summary,
    })
}

/// Participation matrix and the states above the threshold for every mode.
pub fn cmd_participation(s: &Scenario) -> Result<ResultBundle, CliError> {
    let modes = decompose_model(&model(s)?)?;
    let p = participation_factors(&modes);
    let mut t = Table::new(
        "dominant",
        vec![
            Column::new("mode", ""),
            Column::new("im_per_s", "rad/s"),
            Column::new("state", ""),
            Column::new("participation", "1"),
        ],
    );
    for (i, v) in modes.eigenvalues().iter().enumerate() {
        if p.column(i).is_none() {
            continue;
        }
        let mut list = dominant_states(&p, i, s.threshold())?;
        list.sort_by(|a, b| a.0.cmp(&b.0));
        for (label, f) in list {
            t.push(vec![Cell::Int(i as i64), Cell::Num(v.im), Cell::Text(label), Cell::Num(f)]);
        }
    }
    Ok(ResultBundle {
        tables: vec![participation_table(&modes), t],
        plots: vec![],
        summary: vec![],
    })
}

struct Comparison {
    model: StateSpaceModel,
    cis: ModeSet,
    dis: ModeSet,
    matched: ModeMatch,
}

fn compare(s: &Scenario) -> Result<Comparison, CliError> {
    let model = model(s)?;
    let dis_model = StateSpaceModel::from_network(&disconnect_ties(s.network()), s.operating_point(), s.form())?;
    let cis = decompose_model(&model)?;
    let dis = decompose_model(&dis_model)?;
    let matched = identify_interconnection_mode(&cis, &dis, s.zero_tol())?;
    Ok(Comparison { model, cis, dis, matched })
}

/// Modes of the connected system set against the tie-disconnected one.
pub fn cmd_modes_compare(s: &Scenario) -> Result<ResultBundle, CliError> {
    let Comparison { cis, dis, matched, .. } = compare(s)?;
    let p = participation_factors(&cis);
    let mut pairs = Table::new(
        "mode_match",
        vec![
            Column::new("role", ""),
            Column::new("cis_re_per_s", "1/s"),
            Column::new("cis_im_per_s", "rad/s"),
            Column::new("dis_re_per_s", "1/s"),
            Column::new("dis_im_per_s", "rad/s"),
            Column::new("distance", "1/s"),
        ],
    );
    let blank = || Cell::Text(String::new());
    for m in &matched.pairs {
        let (a, b) = (cis.eigenvalues()[m.cis], dis.eigenvalues()[m.dis]);
        pairs.push(vec![
            Cell::Text("matched".into()),
            Cell::Num(a.re),
            Cell::Num(a.im),
            Cell::Num(b.re),
            Cell::Num(b.im),
            Cell::Num(m.distance),
        ]);
    }
    for &i in &matched.interconnection {
        let a = cis.eigenvalues()[i];
        pairs.push(vec![Cell::Text("interconnection".into()), Cell::Num(a.re), Cell::Num(a.im), blank(), blank(), blank()]);
    }
    for &i in &matched.unmatched_dis {
        let b = dis.eigenvalues()[i];
        pairs.push(vec![Cell::Text("unmatched_dis".into()), blank(), blank(), Cell::Num(b.re), Cell::Num(b.im), blank()]);
    }

    let mut inter = Table::new(
        "interconnection",
        vec![
            Column::new("re_per_s", "1/s"),
            Column::new("im_per_s", "rad/s"),
            Column::new("frequency_hz", "Hz"),
            Column::new("dominant_states", ""),
        ],
    );
    let mut summary = vec![format!(
        "{}: zero modes CIS {} / DIS {}",
        s.name(),
        matched.cis_zero_count,
        matched.dis_zero_count
    )];
    for &i in &matched.interconnection {
        let v = cis.eigenvalues()[i];
        let dom = dominant_text(&p, i, s.threshold())?;
        summary.push(format!("  interconnection mode {:.4} rad/s, dominant {}", v.im, dom.replace(';', ", ")));
        inter.push(vec![
            Cell::Num(v.re),
            Cell::Num(v.im),
            Cell::Num(v.im / std::f64::consts::TAU),
            Cell::Text(dom),
        ]);
    }
    if matched.interconnection.is_empty() {
        summary.push("  no interconnection mode".into());
    }

    let mut zeros = Table::new("zero_counts", vec![Column::new("system", ""), Column::new("zero_modes", "")]);
    zeros.push(vec![Cell::Text("cis".into()), Cell::Int(matched.cis_zero_count as i64)]);
    zeros.push(vec![Cell::Text("dis".into()), Cell::Int(matched.dis_zero_count as i64)]);

    Ok(ResultBundle {
        tables: vec![pairs, inter, zeros],
        plots: vec![],
        summary,
    })
}

fn signal_of(input: &InputDoc) -> InputSignal {
    match *input {
        InputDoc::Zero => InputSignal::zero(),
        InputDoc::Step { bus, amplitude, start } => InputSignal::step(BusId(bus), amplitude, start),
        InputDoc::Sinusoid {
            bus,
            amplitude,
            frequency,
            start,
        } => InputSignal::sinusoid(BusId(bus), amplitude, frequency, start),
    }
}

fn initial_state(s: &Scenario, model: &StateSpaceModel) -> Result<DVector<f64>, CliError> {
    Ok(match *s.initial() {
        InitialDoc::Default => default_perturbation(model, s.network())?,
        InitialDoc::Zero => DVector::zeros(model.dim()),
        InitialDoc::Speed { bus, value } => speed_perturbation(model, BusId(bus), value)?,
        InitialDoc::InterconnectionMode { max_speed } => {
            let c = compare(s)?;
            let mode = *c.matched.interconnection.first().ok_or_else(|| {
                CliError::Validation(format!("{}: no interconnection mode to start from", s.name()))
            })?;
            mode_shape_state(&c.model, &c.cis, mode, max_speed)?
        }
    })
}

fn sim_config(s: &Scenario) -> SimConfig {
    SimConfig {
        step: s.step(),
        horizon: s.horizon(),
        allow_large_step: s.allow_large_step(),
    }
}

/// Unique table-name suffixes, in input order.
fn suffixes(scenarios: &[Scenario]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    scenarios
        .iter()
        .map(|s| {
            let n = seen.entry(s.name()).or_insert(0);
            *n += 1;
            if *n == 1 {
                s.name().to_string()
            } else {
                format!("{}-{}", s.name(), n)
            }
        })
        .collect()
}

/// Time-domain runs. Each scenario yields a trajectory and an area table;
/// the plot overlays the inter-area series.
pub fn cmd_simulate(scenarios: &[Scenario]) -> Result<ResultBundle, CliError> {
    if scenarios.is_empty() {
        return Err(CliError::Usage("simulate needs at least one --scenario".into()));
    }
    let mut bundle = ResultBundle::default();
    let mut plot = Plot {
        name: "inter_area".into(),
        title: "Inter-area oscillation".into(),
        x_label: "t (s)".into(),
        y_label: "d/dt intVar_I - d/dt intVar_II (p.u./s)".into(),
        series: vec![],
    };
    for (s, suffix) in scenarios.iter().zip(suffixes(scenarios)) {
        let m = model(s)?;
        let x0 = initial_state(s, &m)?;
        let traj = simulate(&m, &x0, &signal_of(s.input()), &sim_config(s))?;
        info!("{}: {} samples at h = {}", s.name(), traj.len(), traj.step());

        let mut columns = vec![Column::new("t_s", "s")];
        columns.extend(traj.labels().iter().map(|l| Column::new(l.to_string(), unit(l.tag))));
        let mut t = Table::new(format!("trajectory-{suffix}"), columns);
        for (k, time) in traj.times().iter().enumerate() {
            let mut row = vec![Cell::Num(*time)];
            row.extend(traj.states().row(k).iter().map(|v| Cell::Num(*v)));
            t.push(row);
        }

        let a = interaction_variables(&traj, &m, s.network())?;
        let mut columns = vec![Column::new("t_s", "s")];
        for id in &a.areas {
            columns.push(Column::new(format!("intvar_{id}"), "p.u."));
            columns.push(Column::new(format!("rate_{id}"), "p.u./s"));
        }
        columns.push(Column::new("inter_area", "p.u./s"));
        columns.push(Column::new("inter_area_power", "p.u."));
        let mut at = Table::new(format!("areas-{suffix}"), columns);
        for k in 0..a.times.len() {
            let mut row = vec![Cell::Num(a.times[k])];
            for j in 0..a.areas.len() {
                row.push(Cell::Num(a.int_var[j][k]));
                row.push(Cell::Num(a.rate[j][k]));
            }
            row.push(Cell::Num(a.inter_area[k]));
            row.push(Cell::Num(a.inter_area_power[k]));
            at.push(row);
        }
        plot.series.push(Series {
            label: suffix.clone(),
            points: a.times.iter().copied().zip(a.inter_area.iter().copied()).collect(),
        });
        bundle.tables.push(t);
        bundle.tables.push(at);
    }
    bundle.plots.push(plot);
    Ok(bundle)
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |what: &str| CliError::Validation(format!("--values `{text}`: {what}"));
    let num = |p: &str| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("expected finite numbers"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(bad("range form is start:stop:count"));
        };
        let (a, b) = (num(a)?, num(b)?);
        let n: usize = n.trim().parse().map_err(|_| bad("count must be a non-negative integer"))?;
        return Ok(match n {
            0 => vec![],
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        });
    }
    text.split(',').map(num).collect()
}

/// Interconnection-mode frequency against one parameter.
pub fn cmd_sweep(s: &Scenario, param: &str, values: &[f64]) -> Result<ResultBundle, CliError> {
    let path: ParameterPath = param.parse()?;
    let rows = sweep(s.network(), s.operating_point(), s.form(), path, values, s.zero_tol())?;
    let mut t = Table::new(
        "sweep",
        vec![
            Column::new("value", ""),
            Column::new("im_per_s", "rad/s"),
            Column::new("interconnection_modes", ""),
            Column::new("cis_zero_modes", ""),
            Column::new("dis_zero_modes", ""),
        ],
    );
    let mut series = Series {
        label: path.to_string(),
        points: vec![],
    };
    for r in &rows {
        let f = match r.frequency() {
            Some(f) => {
                series.points.push((r.value, f));
                Cell::Num(f)
            }
            None => Cell::Text(String::new()),
        };
        t.push(vec![
            Cell::Num(r.value),
            f,
            Cell::Int(r.interconnection.len() as i64),
            Cell::Int(r.cis_zero_count as i64),
            Cell::Int(r.dis_zero_count as i64),
        ]);
    }
    Ok(ResultBundle {
        tables: vec![t],
        plots: vec![Plot {
            name: "sweep".into(),
            title: format!("Interconnection mode vs {path}"),
            x_label: path.to_string(),
            y_label: "Im λ (rad/s)".into(),
            series: vec![series],
        }],
        summary: vec![],
    })
}

/// Sinusoidal forcing at the interconnection frequency and away from it.
pub fn cmd_resonance(s: &Scenario, bus: Option<u32>, amplitude: f64) -> Result<ResultBundle, CliError> {
    if !amplitude.is_finite() {
        return Err(CliError::Validation(format!("amplitude must be finite, got {amplitude}")));
    }
    let c = compare(s)?;
    let mode = *c
        .matched
        .interconnection
        .first()
        .ok_or_else(|| CliError::Validation(format!("{}: no interconnection mode to excite", s.name())))?;
    let freq = c.cis.eigenvalues()[mode].im;
    let bus = match bus {
        Some(b) => BusId(b),
        None => first_generator(s)?,
    };
    let cfg = ResonanceConfig {
        step: s.step(),
        ..ResonanceConfig::new(bus, amplitude, s.horizon())
    };
    let r = resonance_experiment(&c.model, s.network(), freq, &cfg)?;

    let mut summary_t = Table::new(
        "resonance",
        vec![
            Column::new("forcing", ""),
            Column::new("frequency_per_s", "rad/s"),
            Column::new("growth_ratio", "1"),
        ],
    );
    let off = r.off_resonant.signal().kind;
    let off_freq = match off {
        interarea::timesim::SignalKind::Sinusoid { frequency } => frequency,
        _ => f64::NAN,
    };
    summary_t.push(vec![Cell::Text("resonant".into()), Cell::Num(r.frequency), Cell::Num(r.resonant_ratio)]);
    summary_t.push(vec![Cell::Text("off_resonant".into()), Cell::Num(off_freq), Cell::Num(r.off_resonant_ratio)]);

    let mut series_t = Table::new(
        "resonance_series",
        vec![Column::new("t_s", "s"), Column::new("resonant", "p.u./s"), Column::new("off_resonant", "p.u./s")],
    );
    let (a, b) = (&r.resonant_series, &r.off_resonant_series);
    for k in 0..a.times.len() {
        series_t.push(vec![Cell::Num(a.times[k]), Cell::Num(a.inter_area[k]), Cell::Num(b.inter_area[k])]);
    }
    let curve = |label: String, s: &interarea::timesim::AreaSeries| Series {
        label,
        points: s.times.iter().copied().zip(s.inter_area.iter().copied()).collect(),
    };
    Ok(ResultBundle {
        tables: vec![summary_t, series_t],
        plots: vec![Plot {
            name: "resonance".into(),
            title: format!("Forcing at bus {bus}"),
            x_label: "t (s)".into(),
            y_label: "inter-area (p.u./s)".into(),
            series: vec![
                curve(format!("{:.4} rad/s", r.frequency), a),
                curve(format!("{:.4} rad/s", off_freq), b),
            ],
        }],
        summary: vec![format!(
            "{}: growth {:.2} at {:.4} rad/s, {:.2} off resonance",
            s.name(),
            r.resonant_ratio,
            r.frequency,
            r.off_resonant_ratio
        )],
    })
}

fn first_generator(s: &Scenario) -> Result<BusId, CliError> {
    let net = s.network();
    net.areas()
        .iter()
        .flat_map(|a| a.buses.iter())
        .copied()
        .find(|b| net.bus(*b).is_some_and(|b| b.is_generator()))
        .ok_or_else(|| CliError::Validation("scenario has no generator".into()))
}

pub fn cmd_list_scenarios() -> Result<ResultBundle, CliError> {
    let mut t = Table::new("scenarios", vec![Column::new("name", ""), Column::new("description", "")]);
    for name in builtin_names() {
        let s = load_scenario(name)?;
        t.push(vec![
            Cell::Text(name.into()),
            Cell::Text(s.doc().description.clone().unwrap_or_default()),
        ]);
    }
    Ok(ResultBundle {
        tables: vec![t],
        plots: vec![],
        summary: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_values("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_values("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("a").is_err());
    }
}
