//! Acceptance suite: one pass/fail line per criterion, nonzero exit when
//! any criterion fails. Run with `cargo test --test acceptance` (the
//! target uses its own harness so the criteria print in order).

use std::time::{Duration, Instant};

use rayon::prelude::*;

use sigmax_sim::analysis::{
    extract_zeta, fit_components, histogram_iq, project_onto_pointer_circle, two_point_filter,
    FilterParams,
};
use sigmax_sim::hamiltonian::{
    build_dispersive_hamiltonian, build_jc_hamiltonian, build_rotating_hamiltonian,
    schrieffer_wolff_generators,
};
use sigmax_sim::lindblad::{evolve, CollapseOperator, DensityMatrix, EvolutionConfig};
use sigmax_sim::measurement::{
    integrated_signal, pointer_states, readout_hamiltonian, simulate_diffusive_trajectory,
    simulate_markov_trace, JumpRates, MarkovEmitter, ReadoutModel,
};
use sigmax_sim::params::{from_mhz, from_us, to_mhz, to_us};
use sigmax_sim::rates::{fidelity_composition, golden_rule_rates, sideband_induced_t2};
use sigmax_sim::record::StateLabel;
use sigmax_sim::{DerivedParams, HilbertSpace, Operator, StateVector, SystemParams};

type Check = fn() -> Result<String, String>;

fn paper() -> (SystemParams, DerivedParams) {
    let p = SystemParams::paper_device();
    let d = DerivedParams::from_params(&p).expect("paper point is dispersive");
    (p, d)
}

fn at_rabi(mhz: f64) -> (SystemParams, DerivedParams) {
    let mut p = SystemParams::paper_device();
    p.omega_rabi = from_mhz(mhz);
    let d = DerivedParams::from_params(&p).expect("dispersive point");
    (p, d)
}

fn in_band(value: f64, center: f64, half_width: f64) -> bool {
    (value - center).abs() <= half_width
}

/// Dispersive shift at the published operating point.
fn dispersive_shift_value() -> Result<String, String> {
    let (_, d) = paper();
    let zeta = to_mhz(d.zeta);
    if in_band(zeta, 1.91, 0.01) {
        Ok(format!("zeta/2pi = {zeta:.4} MHz, inside 1.91 +- 0.01"))
    } else {
        Err(format!("zeta/2pi = {zeta:.4} MHz, outside 1.91 +- 0.01"))
    }
}

/// Simulated-record pipeline reproduces the dispersive shift across the
/// drive sweep.
fn dispersive_shift_sweep() -> Result<String, String> {
    let grid = [40.0, 55.0, 70.0, 85.0, 100.0];
    let rows: Vec<Result<(f64, f64), String>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &mhz)| {
            let (p, d) = at_rabi(mhz);
            let r = ReadoutModel::from_params(&p).map_err(|e| e.to_string())?;
            let gr = golden_rule_rates(&p, &d).map_err(|e| e.to_string())?;
            let ps = pointer_states(&p, d.zeta, &r);
            let em = MarkovEmitter::new(
                ps,
                JumpRates {
                    plus_to_minus: gr.gamma_plus_minus,
                    minus_to_plus: gr.gamma_minus_plus,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            let (rec, _) =
                simulate_markov_trace(&em, &r, p.kappa, StateLabel::Minus, 1.0, 211 + i as u64)
                    .map_err(|e| e.to_string())?;
            let hist = histogram_iq(&rec, 100).map_err(|e| e.to_string())?;
            let (sm, sp) = integrated_signal(&ps, &r, p.kappa);
            let fit = fit_components(&hist, 2, Some(&[sm, sp])).map_err(|e| e.to_string())?;
            let circle_radius = (r.eta * p.kappa * r.t_m).sqrt() * r.epsilon_r / p.kappa;
            let (pm, pp) = project_onto_pointer_circle(
                fit.components[0].mean,
                fit.components[1].mean,
                circle_radius,
            )
            .map_err(|e| e.to_string())?;
            let zeta = extract_zeta(pm, pp, p.kappa).map_err(|e| e.to_string())?;
            Ok((mhz, (zeta - d.zeta).abs() / d.zeta.abs()))
        })
        .collect();
    let mut detail = Vec::new();
    for row in rows {
        let (mhz, gap) = row?;
        if gap > 0.05 {
            return Err(format!(
                "Omega_R/2pi = {mhz} MHz: extracted shift off by {:.1}%",
                100.0 * gap
            ));
        }
        detail.push(format!("{mhz}: {:.2}%", 100.0 * gap));
    }
    Ok(format!("extraction gaps [{}]", detail.join(", ")))
}

/// Golden-rule jump times at the jump-trace operating point.
fn jump_times() -> Result<String, String> {
    let (p, d) = at_rabi(70.5);
    let gr = golden_rule_rates(&p, &d).map_err(|e| e.to_string())?;
    let t_pm = to_us(1.0 / gr.gamma_plus_minus);
    let t_mp = to_us(1.0 / gr.gamma_minus_plus);
    if !in_band(t_pm, 4.0, 0.2) {
        return Err(format!("1/Gamma(+->-) = {t_pm:.3} us, outside 4.0 +- 0.2"));
    }
    if !in_band(t_mp, 9.5, 1.0) {
        return Err(format!("1/Gamma(-+>) = {t_mp:.3} us, outside 9.5 +- 1"));
    }
    Ok(format!("1/Gamma(+->-) = {t_pm:.3} us, 1/Gamma(->+) = {t_mp:.3} us"))
}

/// Sideband-induced dephasing time of the effective qubit.
fn sideband_dephasing() -> Result<String, String> {
    let (p, _) = paper();
    let t2 = sideband_induced_t2(&p) * 1e9;
    if in_band(t2, 150.0, 5.0) {
        Ok(format!("T2 = {t2:.2} ns, inside 150 +- 5"))
    } else {
        Err(format!("T2 = {t2:.2} ns, outside 150 +- 5"))
    }
}

/// Single-bin survival probability and the composed measurement fidelity.
fn fidelity_numbers() -> Result<String, String> {
    let survival = (-0.4f64 / 4.0).exp();
    if !in_band(survival, 0.905, 0.001) {
        return Err(format!("bin survival {survival:.5}, outside 0.905 +- 0.001"));
    }
    let fid = fidelity_composition(400e-9, from_us(4.0), 0.01).map_err(|e| e.to_string())?;
    if !in_band(fid, 0.896, 0.005) {
        return Err(format!("composed fidelity {fid:.5}, outside 0.896 +- 0.005"));
    }
    Ok(format!("bin survival {survival:.4}, composed fidelity {fid:.4}"))
}

/// Two-point filter on a one-second trace at the observed jump times.
fn filtered_jump_statistics() -> Result<String, String> {
    let (p, d) = paper();
    let mut r = ReadoutModel::from_params(&p).map_err(|e| e.to_string())?;
    let ps = pointer_states(&p, d.zeta, &r);
    let (sm0, sp0) = integrated_signal(&ps, &r, p.kappa);
    // noise calibrated to the published pointer discrimination
    r.sigma_noise = (sp0 - sm0).norm() / 5.4;
    let em = MarkovEmitter::new(
        ps,
        JumpRates {
            plus_to_minus: 1.0 / from_us(4.0),
            minus_to_plus: 1.0 / from_us(9.5),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let (rec, hidden) =
        simulate_markov_trace(&em, &r, p.kappa, StateLabel::Minus, 1.0, 29)
            .map_err(|e| e.to_string())?;
    let (sm, sp) = integrated_signal(&ps, &r, p.kappa);
    let trace = two_point_filter(
        &rec,
        &[(StateLabel::Minus, sm), (StateLabel::Plus, sp)],
        FilterParams { radius: 2.5 * r.sigma_noise, consecutive: 1 },
    )
    .map_err(|e| e.to_string())?;
    let hits = trace
        .assigned
        .iter()
        .zip(&hidden)
        .filter(|(a, b)| a == b)
        .count();
    let accuracy = hits as f64 / hidden.len() as f64;
    let stats = sigmax_sim::analysis::dwell_statistics(&trace).map_err(|e| e.to_string())?;
    let plus_dwell = to_us(stats.mean_dwell[1]);
    if accuracy < 0.95 {
        return Err(format!("filter accuracy {accuracy:.4} < 0.95"));
    }
    if !in_band(plus_dwell, 4.0, 0.6) {
        return Err(format!("mean plus dwell {plus_dwell:.3} us, outside 4 us +- 15%"));
    }
    Ok(format!(
        "filter accuracy {accuracy:.4}, mean plus dwell {plus_dwell:.3} us"
    ))
}

/// Displaced-frame evolution agrees with the rotating frame.
fn frame_equivalence() -> Result<String, String> {
    let (mut p, _) = paper();
    // moderate displacement keeps the truncated displacement operator
    // numerically exact; the frame identity itself is amplitude-free
    p.epsilon_sb /= 4.0;
    {
        let d0 = DerivedParams::from_params(&p).map_err(|e| e.to_string())?;
        p.omega_qp = p.omega_q + d0.n_bar_sb * p.chi;
    }
    let d = DerivedParams::from_params(&p).map_err(|e| e.to_string())?;
    let sp = HilbertSpace::new(2, 14).map_err(|e| e.to_string())?;
    let h_rot = build_rotating_hamiltonian(&p, sp);
    let h_jc = build_jc_hamiltonian(&p, &d, sp, false).map_err(|e| e.to_string())?;
    let a = Operator::annihilation(sp);
    let kappa = vec![CollapseOperator::new(a.clone(), p.kappa).map_err(|e| e.to_string())?];
    let disp = Operator::displacement(sp, d.a_bar).map_err(|e| e.to_string())?;
    let rho_rot0 = DensityMatrix::from_pure(&disp.apply(&StateVector::ground(sp)));
    let rho_disp0 = DensityMatrix::from_pure(&StateVector::ground(sp));
    let t_final = 5.0 / p.kappa;
    let times: Vec<f64> = (1..=5).map(|k| k as f64 * t_final / 5.0).collect();
    let mut config = EvolutionConfig::new(t_final).map_err(|e| e.to_string())?;
    config.rel_tol = 1e-10;
    let traj_rot = evolve(&h_rot, &kappa, &rho_rot0, &config, &times).map_err(|e| e.to_string())?;
    let traj_disp =
        evolve(&h_jc, &kappa, &rho_disp0, &config, &times).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (rr, rd) in traj_rot.iter().zip(&traj_disp) {
        let gap = (rr.expectation(&a) - (rd.expectation(&a) + d.a_bar)).norm();
        worst = worst.max(gap);
    }
    if worst < 1e-6 {
        Ok(format!("max |<a>| frame gap {worst:.2e} over 5/kappa"))
    } else {
        Err(format!("max |<a>| frame gap {worst:.2e} exceeds 1e-6"))
    }
}

/// Schrieffer-Wolff diagonalization reproduces the dispersive spectrum.
fn schrieffer_wolff_residual() -> Result<String, String> {
    let (p, d) = paper();
    let sp = HilbertSpace::new(2, 15).map_err(|e| e.to_string())?;
    let h_jc = build_jc_hamiltonian(&p, &d, sp, false).map_err(|e| e.to_string())?;
    let (u, u1, u2) = schrieffer_wolff_generators(&p, &d, sp).map_err(|e| e.to_string())?;
    let chain = &(&u2 * &u1) * &u;
    let transformed = &(&chain * &h_jc.static_part) * &chain.dagger();
    let (h_disp, _) = build_dispersive_hamiltonian(&p, &d, sp);
    let w_sw = transformed.eigenvalues().map_err(|e| e.to_string())?;
    let w_disp = h_disp.static_part.eigenvalues().map_err(|e| e.to_string())?;
    let tol = (d.g_eff / d.delta).powi(2);
    let mut worst = 0.0f64;
    for i in 1..8 {
        let got = w_sw[i] - w_sw[0];
        let want = w_disp[i] - w_disp[0];
        worst = worst.max((got - want).abs() / want.abs());
    }
    if worst <= tol {
        Ok(format!("max spectrum residual {worst:.2e} <= (g/Delta)^2 = {tol:.2e}"))
    } else {
        Err(format!("max spectrum residual {worst:.2e} > (g/Delta)^2 = {tol:.2e}"))
    }
}

/// Diffusive-trajectory ensemble averages converge to the master equation.
fn diffusive_ensemble() -> Result<String, String> {
    let (p, d) = at_rabi(70.0);
    let sp = HilbertSpace::new(2, 6).map_err(|e| e.to_string())?;
    let r = ReadoutModel::from_params(&p).map_err(|e| e.to_string())?;
    let model = readout_hamiltonian(&p, &d, &r, sp, false);
    let gr = golden_rule_rates(&p, &d).map_err(|e| e.to_string())?;
    let monitor =
        CollapseOperator::new(Operator::annihilation(sp), p.kappa).map_err(|e| e.to_string())?;
    let extra = vec![
        CollapseOperator::new(Operator::sigma_x_minus(sp), gr.gamma_plus_minus)
            .map_err(|e| e.to_string())?,
        CollapseOperator::new(Operator::sigma_x_plus(sp), gr.gamma_minus_plus)
            .map_err(|e| e.to_string())?,
    ];
    let rho0 = DensityMatrix::from_pure(&StateVector::plus(sp));
    let duration = from_us(20.0);
    let n_traj = 200usize;
    let sx = Operator::sigma_x(sp);
    let nd = Operator::number(sp);
    let per_traj: Vec<Result<(Vec<f64>, Vec<f64>), String>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|seed| {
            let (_, states) = simulate_diffusive_trajectory(
                &model, &monitor, &extra, &r, &rho0, duration, 100, 1000 + seed,
            )
            .map_err(|e| e.to_string())?;
            Ok((
                states.iter().map(|s| s.expectation(&sx).re).collect(),
                states.iter().map(|s| s.expectation(&nd).re).collect(),
            ))
        })
        .collect();
    let mut sx_traj = Vec::with_capacity(n_traj);
    let mut nd_traj = Vec::with_capacity(n_traj);
    for t in per_traj {
        let (a, b) = t?;
        sx_traj.push(a);
        nd_traj.push(b);
    }
    let n_bins = sx_traj[0].len();
    let mut config = EvolutionConfig::new(duration).map_err(|e| e.to_string())?;
    config.rel_tol = 1e-9;
    let times: Vec<f64> = (1..=n_bins).map(|k| k as f64 * r.t_m).collect();
    let mut collapse = vec![monitor.clone()];
    collapse.extend(extra.iter().cloned());
    let reference = evolve(&model, &collapse, &rho0, &config, &times).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..10usize {
        let idx = k * (n_bins - 1) / 9;
        for (label, traj, want) in [
            ("<sigma_x>", &sx_traj, reference[idx].expectation(&sx).re),
            ("<d^dag d>", &nd_traj, reference[idx].expectation(&nd).re),
        ] {
            let vals: Vec<f64> = traj.iter().map(|t| t[idx]).collect();
            let mean = vals.iter().sum::<f64>() / n_traj as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (n_traj as f64 - 1.0);
            let se = (var / n_traj as f64).sqrt().max(1e-4);
            let pull = (mean - want).abs() / se;
            worst = worst.max(pull);
            if pull > 3.0 {
                return Err(format!(
                    "bin {idx} {label}: ensemble {mean:.4} vs master {want:.4} ({pull:.1} se)"
                ));
            }
        }
    }
    Ok(format!(
        "{n_traj} trajectories over 20 us, worst checkpoint pull {worst:.2} se"
    ))
}

/// Known gaps between the model and the published measurements, kept out
/// of the quantitative gates above and reported with computed stand-ins.
fn documented_exclusions() -> Result<String, String> {
    let (p, d) = paper();
    let r = ReadoutModel::from_params(&p).map_err(|e| e.to_string())?;
    let ps = pointer_states(&p, d.zeta, &r);
    let (sm, sp) = integrated_signal(&ps, &r, p.kappa);
    let separation = (sp - sm).norm() / r.sigma_noise;
    let fitted_sigma = (sp - sm).norm() / 5.4;
    let notes = [
        "equilibrium <sigma_x> data irregularities are not modeled (theory curve only)".to_string(),
        "f population above 50 MHz drive is over-predicted by the 3-level model and excluded"
            .to_string(),
        format!(
            "absolute 5.4 sigma discrimination is not reproduced: computed separation is \
             {separation:.4} sigma at unit-efficiency noise; matching the published figure \
             requires the fitted noise sigma = {fitted_sigma:.4}"
        ),
    ];
    Ok(notes.join("; "))
}

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        ("dispersive shift at the operating point", Duration::from_secs(60), dispersive_shift_value),
        ("dispersive shift from simulated records", Duration::from_secs(300), dispersive_shift_sweep),
        ("golden-rule jump times", Duration::from_secs(60), jump_times),
        ("sideband-induced dephasing time", Duration::from_secs(60), sideband_dephasing),
        ("bin survival and composed fidelity", Duration::from_secs(60), fidelity_numbers),
        ("two-point filter on a one-second trace", Duration::from_secs(120), filtered_jump_statistics),
        ("displaced-frame equivalence", Duration::from_secs(60), frame_equivalence),
        ("Schrieffer-Wolff spectrum residual", Duration::from_secs(60), schrieffer_wolff_residual),
        ("diffusive ensemble vs master equation", Duration::from_secs(600), diffusive_ensemble),
        ("documented model-vs-data exclusions", Duration::from_secs(60), documented_exclusions),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let timely = elapsed <= *budget;
        match (result, timely) {
            (Ok(detail), true) => {
                println!("criterion {:2} PASS: {name}: {detail} ({:.1}s)", i + 1, elapsed.as_secs_f64());
            }
            (Ok(detail), false) => {
                failures += 1;
                println!(
                    "criterion {:2} FAIL: {name}: {detail} (over budget: {:.1}s > {:.0}s)",
                    i + 1,
                    elapsed.as_secs_f64(),
                    budget.as_secs_f64()
                );
            }
            (Err(detail), _) => {
                failures += 1;
                println!("criterion {:2} FAIL: {name}: {detail} ({:.1}s)", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
