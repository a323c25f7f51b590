//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use interarea::cases;
use interarea::modal::{
    classify_modes, decompose_model, dominant_states, eigen_decompose, identify_interconnection_mode, participation_factors,
    ModeSet, DEFAULT_THRESHOLD, DEFAULT_ZERO_TOL,
};
use interarea::netmodel::{disconnect_ties, jacobian, Area, Bus, BusId, GeneratorParams, Line, NetworkModel, OperatingPoint};
use interarea::statespace::{ModelForm, StateSpaceModel};
use interarea::timesim::{
    default_perturbation, interaction_variables, mode_shape_state, resonance_experiment, simulate, zero_crossing_frequency,
    InputSignal, ResonanceConfig, SimConfig,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EIG_TOL: f64 = 1e-3;
const ORACLE_TOL: f64 = 1e-8;
const CONSERVATION_TOL: f64 = 1e-9;
const FREQ_REL_TOL: f64 = 0.02;
const RESONANT_MIN: f64 = 5.0;
const OFF_RESONANT_MAX: f64 = 2.0;
const ORDER_MIN: f64 = 3.8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn reduced(net: &NetworkModel) -> StateSpaceModel {
    StateSpaceModel::from_network(net, &OperatingPoint::flat(), ModelForm::Reduced).unwrap()
}

fn frequencies(modes: &ModeSet) -> Vec<f64> {
    classify_modes(modes, DEFAULT_ZERO_TOL).frequencies()
}

fn close_sets(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}

fn golden(cases: &[(&str, NetworkModel, &[f64])]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, net, want) in cases {
        let start = Instant::now();
        let got = frequencies(&decompose_model(&reduced(net)).unwrap());
        let elapsed = start.elapsed().as_secs_f64();
        let ok = close_sets(&got, want, EIG_TOL) && elapsed < 1.0;
        pass &= ok;
        let shown: Vec<String> = got.iter().map(|f| format!("{f:.4}")).collect();
        parts.push(format!("{name}: [{}] in {:.3}s", shown.join(", "), elapsed));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_1() -> Outcome {
    golden(&[
        ("case1", cases::case1(), &[2.1650, 3.7499]),
        ("case2", cases::case2(), &[0.8274, 3.1028]),
        ("case3", cases::case3(), &[3.0618]),
    ])
}

fn criterion_2() -> Outcome {
    golden(&[("inertia2", cases::inertia_case2(), &[1.4578, 3.5221])])
}

fn criterion_3() -> Outcome {
    let net = cases::case1();
    let cis = decompose_model(&reduced(&net)).unwrap();
    let dis = decompose_model(&reduced(&disconnect_ties(&net))).unwrap();
    let m = identify_interconnection_mode(&cis, &dis, DEFAULT_ZERO_TOL).unwrap();
    let freqs: Vec<f64> = m.interconnection.iter().map(|&i| cis.eigenvalues()[i].im).collect();
    let pass = freqs.len() == 1 && (freqs[0] - 2.1650).abs() <= EIG_TOL && m.dis_zero_count == m.cis_zero_count + 2;
    outcome(
        pass,
        format!("unmatched {freqs:.4?}, zero modes CIS {} / DIS {}", m.cis_zero_count, m.dis_zero_count),
    )
}

fn criterion_4() -> Outcome {
    let listings: &[(&str, NetworkModel, f64, &[&str])] = &[
        ("case1", cases::case1(), 3.7499, &["omega_G_2", "P_G_2"]),
        ("case1", cases::case1(), 2.1650, &["omega_G_1", "P_G_1", "omega_G_3", "P_G_3"]),
        ("case2", cases::case2(), 3.1028, &["omega_G_1", "P_G_1", "omega_G_2", "P_G_2"]),
        ("case2", cases::case2(), 0.8274, &["omega_G_1", "P_G_1", "omega_G_3", "P_G_3"]),
        ("case3", cases::case3(), 3.0618, &["omega_G_1", "P_G_1", "omega_G_2", "P_G_2"]),
        ("inertia2", cases::inertia_case2(), 3.5221, &["omega_G_1", "P_G_1", "omega_G_2", "P_G_2"]),
        (
            "inertia2",
            cases::inertia_case2(),
            1.4578,
            &["omega_G_1", "P_G_1", "omega_G_2", "P_G_2", "omega_G_3", "P_G_3"],
        ),
    ];
    let mut pass = true;
    let mut misses = Vec::new();
    for (name, net, freq, want) in listings {
        let modes = decompose_model(&reduced(net)).unwrap();
        let pair = *classify_modes(&modes, DEFAULT_ZERO_TOL).pair_with_frequency(*freq, EIG_TOL).unwrap();
        let p = participation_factors(&modes);
        let got: BTreeSet<String> = dominant_states(&p, pair.upper, DEFAULT_THRESHOLD)
            .unwrap()
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        let want: BTreeSet<String> = want.iter().map(|s| s.to_string()).collect();
        if got != want {
            pass = false;
            let col = p.column(pair.upper).unwrap();
            let missing: Vec<String> = want
                .difference(&got)
                .map(|l| {
                    let k = p.labels().iter().position(|x| x == l).unwrap();
                    format!("{l}={:.3}", col[k])
                })
                .collect();
            let extra: Vec<&String> = got.difference(&want).collect();
            misses.push(format!("{name} {freq}: missing {missing:?} extra {extra:?}"));
        }
    }
    let detail = if misses.is_empty() {
        format!("{} listings reproduced", listings.len())
    } else {
        misses.join("; ")
    };
    outcome(pass, detail)
}

fn random_network(rng: &mut ChaCha8Rng) -> NetworkModel {
    let n = rng.random_range(2..=5u32);
    let buses = (1..=n)
        .map(|i| Bus::generator(i, GeneratorParams::slow_governor(rng.random_range(1.0..=40.0))))
        .collect();
    let mut lines = Vec::new();
    for i in 2..=n {
        let parent = rng.random_range(1..i);
        lines.push(Line::new(parent, i, rng.random_range(0.05..=1.0)));
    }
    for i in 1..=n {
        for j in (i + 2)..=n {
            if rng.random_bool(0.3) {
                lines.push(Line::new(i, j, rng.random_range(0.05..=1.0)));
            }
        }
    }
    let all: Vec<u32> = (1..=n).collect();
    NetworkModel::build(buses, lines, vec![Area::new("A", &all)]).unwrap()
}

/// `λ = ±j√μ` for `L v = μ M v`, through the symmetric form `M^{-1/2} L M^{-1/2}`.
fn oracle_spectrum(net: &NetworkModel) -> Vec<f64> {
    let l = jacobian(net, &OperatingPoint::flat()).unwrap();
    let m_inv_sqrt: Vec<f64> = net
        .buses()
        .iter()
        .map(|b| 1.0 / b.generator_params().unwrap().inertia.sqrt())
        .collect();
    let s = DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| m_inv_sqrt[i] * l[(i, j)] * m_inv_sqrt[j]);
    let mu = SymmetricEigen::new(s).eigenvalues;
    let top = mu.amax();
    let mut out = Vec::new();
    for mu in mu.iter() {
        // √ turns O(ε) rounding in a Laplacian null value into O(√ε)
        let w = if mu.abs() <= 1e-12 * top { 0.0 } else { mu.max(0.0).sqrt() };
        out.push(w);
        out.push(-w);
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut worst_re: f64 = 0.0;
    for _ in 0..50 {
        let net = random_network(&mut rng);
        let modes = eigen_decompose(reduced(&net).a()).unwrap();
        let mut got: Vec<f64> = modes.eigenvalues().iter().map(|v| v.im).collect();
        got.sort_by(|a, b| a.total_cmp(b));
        let want = oracle_spectrum(&net);
        let scale = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs() / scale);
        }
        for v in modes.eigenvalues() {
            worst_re = worst_re.max(v.re.abs() / scale);
        }
    }
    outcome(
        worst <= ORACLE_TOL && worst_re <= ORACLE_TOL,
        format!("50 networks, worst relative deviation {worst:.2e} (imag), {worst_re:.2e} (real)"),
    )
}

fn max_dev(s: &[f64], reference: f64) -> f64 {
    s.iter().map(|v| (v - reference).abs()).fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let mut worst_total: f64 = 0.0;
    let mut worst_dis: f64 = 0.0;
    let mut worst_cis: f64 = 0.0;
    for net in [cases::case1(), cases::case2(), cases::case3(), cases::inertia_case2()] {
        let model = reduced(&net);
        let x0 = default_perturbation(&model, &net).unwrap();
        let traj = simulate(&model, &x0, &InputSignal::zero(), &SimConfig::default()).unwrap();
        let total = traj.total_power();
        worst_total = worst_total.max(max_dev(&total, total[0]));
        let series = interaction_variables(&traj, &model, &net).unwrap();
        if net.tie_lines().count() == 0 {
            for iv in &series.int_var {
                worst_dis = worst_dis.max(max_dev(iv, iv[0]));
            }
        } else {
            let sum: Vec<f64> = series.int_var[0].iter().zip(&series.int_var[1]).map(|(a, b)| a + b).collect();
            worst_cis = worst_cis.max(max_dev(&sum, 0.0));
        }
    }
    let pass = worst_total < CONSERVATION_TOL && worst_dis < CONSERVATION_TOL && worst_cis < CONSERVATION_TOL;
    outcome(
        pass,
        format!("ΣP_G drift {worst_total:.1e}, DIS intVar drift {worst_dis:.1e}, CIS intVar sum {worst_cis:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, net) in [("case1", cases::case1()), ("case2", cases::case2())] {
        let model = reduced(&net);
        let cis = decompose_model(&model).unwrap();
        let dis = decompose_model(&reduced(&disconnect_ties(&net))).unwrap();
        let m = identify_interconnection_mode(&cis, &dis, DEFAULT_ZERO_TOL).unwrap();
        let mode = m.interconnection[0];
        let target = cis.eigenvalues()[mode].im;
        let x0 = mode_shape_state(&model, &cis, mode, 0.01).unwrap();
        let traj = simulate(&model, &x0, &InputSignal::zero(), &SimConfig::default()).unwrap();
        let series = interaction_variables(&traj, &model, &net).unwrap();
        let est = zero_crossing_frequency(&series.times, &series.inter_area);
        let ok = est.is_some_and(|w| (w - target).abs() <= FREQ_REL_TOL * target);
        pass &= ok;
        parts.push(format!("{name}: {est:.4?} vs {target:.4}"));
    }
    let net = cases::case3();
    let model = reduced(&net);
    let x0 = default_perturbation(&model, &net).unwrap();
    let traj = simulate(&model, &x0, &InputSignal::zero(), &SimConfig::default()).unwrap();
    let series = interaction_variables(&traj, &model, &net).unwrap();
    let peak = max_dev(&series.inter_area, 0.0);
    pass &= peak == 0.0;
    parts.push(format!("case3 peak |inter-area| {peak:.1e}"));
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let net = cases::case1();
    let model = reduced(&net);
    let cis = decompose_model(&model).unwrap();
    let dis = decompose_model(&reduced(&disconnect_ties(&net))).unwrap();
    let m = identify_interconnection_mode(&cis, &dis, DEFAULT_ZERO_TOL).unwrap();
    let w = cis.eigenvalues()[m.interconnection[0]].im;
    let r = resonance_experiment(&model, &net, w, &ResonanceConfig::new(BusId(1), 0.1, 50.0)).unwrap();
    outcome(
        r.resonant_ratio >= RESONANT_MIN && r.off_resonant_ratio <= OFF_RESONANT_MAX,
        format!(
            "ω = {w:.4}: ratio {:.2}; 0.5·ω: ratio {:.2}",
            r.resonant_ratio, r.off_resonant_ratio
        ),
    )
}

fn criterion_9() -> Outcome {
    let net = cases::case1();
    let full = StateSpaceModel::from_network(&net, &OperatingPoint::flat(), ModelForm::Full).unwrap();
    assert_eq!(full.dim(), 12);
    let full_modes = decompose_model(&full).unwrap();
    let red_modes = decompose_model(&reduced(&net)).unwrap();
    let red_osc: Vec<_> = classify_modes(&red_modes, DEFAULT_ZERO_TOL)
        .oscillatory
        .iter()
        .map(|p| red_modes.eigenvalues()[p.upper])
        .collect();
    let mut worst: f64 = 0.0;
    for v in &red_osc {
        let d = full_modes
            .eigenvalues()
            .iter()
            .map(|f| (f - v).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    outcome(
        worst <= EIG_TOL,
        format!("{} reduced pairs, worst distance to full spectrum {worst:.2e}", red_osc.len()),
    )
}

fn criterion_10() -> Outcome {
    let j = DMatrix::from_row_slice(1, 1, &[1.0]);
    let r = interarea::netmodel::reduce(&j, &[0], &[]).unwrap();
    let model = interarea::statespace::assemble_reduced(&[GeneratorParams::slow_governor(1.0)], &r).unwrap();
    let x0 = DVector::from_vec(vec![1.0, 0.0]);
    let horizon: f64 = 2.0;
    // ω̇ = −P, Ṗ = ω
    let exact = DVector::from_vec(vec![horizon.cos(), horizon.sin()]);
    let err = |h: f64| {
        let cfg = SimConfig {
            step: Some(h),
            horizon,
            allow_large_step: false,
        };
        (simulate(&model, &x0, &InputSignal::zero(), &cfg).unwrap().final_state() - &exact).norm()
    };
    let steps = [0.05, 0.025, 0.0125];
    let errs: Vec<f64> = steps.iter().map(|&h| err(h)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(min >= ORDER_MIN, format!("observed orders {orders:.3?}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 golden eigenvalues, three-bus cases", criterion_1),
        ("2 golden eigenvalues, inertia case", criterion_2),
        ("3 interconnection-mode identification", criterion_3),
        ("4 participation listings at threshold 0.1", criterion_4),
        ("5 brute-force oracle equivalence", criterion_5),
        ("6 conservation suite", criterion_6),
        ("7 inter-area frequency check", criterion_7),
        ("8 resonance growth", criterion_8),
        ("9 full/reduced consistency", criterion_9),
        ("10 integrator order", criterion_10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
