//! Subcommand implementations on top of the scenario plumbing.

use std::io::Read as _;
use std::path::{Path, PathBuf};

use sigmax_sim::analysis::{extract_zeta, fit_components, histogram_iq, two_point_filter};
use sigmax_sim::params::{to_mhz, to_us};
use sigmax_sim::rates::{fidelity_composition, golden_rule_rates, sideband_induced_t2};
use sigmax_sim::record::{IQRecord, StateLabel};

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::plot;
use crate::scenarios::{
    self, calibrated_readout, derived, dwell_json, filter_for, fit_json, geometry, histogram_csv,
    jumps_csv, steady_quantities,
};

pub fn params_show(cfg: &ScenarioConfig) -> CliResult<()> {
    let p = &cfg.params;
    let d = derived(p)?;
    println!("device");
    println!("  omega_c/2pi        {:10.4} GHz", to_mhz(p.omega_c) / 1e3);
    println!("  omega_q/2pi        {:10.4} GHz", to_mhz(p.omega_q) / 1e3);
    println!("  chi/2pi            {:10.4} MHz", to_mhz(p.chi));
    println!("  kappa/2pi          {:10.4} MHz", to_mhz(p.kappa));
    println!("  Delta_c/2pi        {:10.4} MHz", to_mhz(p.delta_c()));
    println!("  Delta_q/2pi        {:10.4} MHz", to_mhz(p.delta_q()));
    println!("  Omega_R/2pi        {:10.4} MHz", to_mhz(p.omega_rabi));
    println!("  epsilon_sb/2pi     {:10.4} MHz", to_mhz(p.epsilon_sb));
    println!("  epsilon_r/2pi      {:10.4} MHz", to_mhz(p.epsilon_r));
    println!("  T1                 {:10.4} us", to_us(p.t1));
    println!("  T2R                {:10.4} us", to_us(p.t2r));
    println!("  T_phi              {:10.4} us", to_us(p.t_phi().map_err(CliError::from_core)?));
    println!("  p_e thermal        {:10.4}", p.p_e_thermal);
    println!("derived");
    println!("  a_bar              {:.4} + {:.4}i", d.a_bar.re, d.a_bar.im);
    println!("  n_sb               {:10.4} photons", d.n_bar_sb);
    println!("  g_eff/2pi          {:10.4} MHz", to_mhz(d.g_eff));
    println!("  Delta/2pi          {:10.4} MHz", to_mhz(d.delta));
    println!("  Sigma/2pi          {:10.4} MHz", to_mhz(d.sigma));
    println!("  zeta/2pi           {:10.4} MHz", to_mhz(d.zeta));
    println!("  zeta'/2pi          {:10.4} MHz", to_mhz(d.zeta_prime));
    let ratios = d.dispersive_ratios(p.chi);
    println!(
        "  dispersive ratios  {:.2}, {:.2}, {:.2}{}",
        ratios[0],
        ratios[1],
        ratios[2],
        if ratios.iter().any(|&x| x < 5.0) { "  (WARN: < 5)" } else { "" }
    );
    let (ps, separation) = geometry(p, &d, &cfg.readout);
    let r = calibrated_readout(&cfg.readout, separation, cfg.snr_target);
    println!("readout");
    println!("  n_minus            {:10.4} photons", ps.a_minus.norm_sqr());
    println!("  n_plus             {:10.4} photons", ps.a_plus.norm_sqr());
    println!("  separation/sigma   {:10.4}", separation / r.sigma_noise);
    Ok(())
}

pub fn rates(cfg: &ScenarioConfig) -> CliResult<()> {
    let p = &cfg.params;
    let d = derived(p)?;
    let gr = golden_rule_rates(p, &d).map_err(CliError::from_core)?;
    println!("golden-rule rates at Omega_R/2pi = {:.2} MHz", to_mhz(p.omega_rabi));
    println!("  1/Gamma(+ -> -)    {:10.4} us", to_us(1.0 / gr.gamma_plus_minus));
    println!("  1/Gamma(- -> +)    {:10.4} us", to_us(1.0 / gr.gamma_minus_plus));
    println!("  Purcell 1/Gamma+-  {:10.4} us", to_us(1.0 / gr.gamma_purcell_pm));
    println!("  Purcell 1/Gamma-+  {:10.4} us", to_us(1.0 / gr.gamma_purcell_mp));
    println!("  sideband T2        {:10.4} ns", sideband_induced_t2(p) * 1e9);
    let t_jump = 1.0 / gr.gamma_plus_minus;
    let survival = (-cfg.readout.t_m / t_jump).exp();
    let composed = fidelity_composition(cfg.readout.t_m, t_jump, 0.01)
        .map_err(CliError::from_core)?;
    println!("  bin survival       {:10.4}", survival);
    println!("  fidelity (1% ovl)  {:10.4}", composed);
    Ok(())
}

pub fn steady(cfg: &ScenarioConfig, qubit_levels: usize) -> CliResult<()> {
    if !(2..=3).contains(&qubit_levels) {
        return Err(CliError::Config(format!(
            "qubit levels must be 2 or 3, got {qubit_levels}"
        )));
    }
    let (f_pop, sx, nd) = steady_quantities(&cfg.params, qubit_levels, cfg.n_cavity)?;
    println!(
        "steady state at Omega_R/2pi = {:.2} MHz ({} qubit levels, {} Fock levels)",
        to_mhz(cfg.params.omega_rabi),
        qubit_levels,
        cfg.n_cavity
    );
    println!("  <sigma_x>          {sx:10.4}");
    println!("  f population       {f_pop:10.4}");
    println!("  <d^dag d>          {nd:10.4}");
    Ok(())
}

fn read_record(path: &Path) -> CliResult<IQRecord> {
    let mut file = std::fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    if path.extension().and_then(|e| e.to_str()) == Some("bin") {
        IQRecord::read_binary(&mut file).map_err(CliError::from_core)
    } else {
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        IQRecord::read_csv(&mut text.as_bytes()).map_err(CliError::from_core)
    }
}

pub fn histogram(
    input: &Path,
    bins: usize,
    components: usize,
    out: &Path,
    config_text: &str,
) -> CliResult<()> {
    let rec = read_record(input)?;
    let hist = histogram_iq(&rec, bins).map_err(CliError::from_core)?;
    let fit = fit_components(&hist, components, None).map_err(CliError::from_core)?;
    let mut manifest = RunManifest::new(config_text, "histogram");
    manifest.emit(out, "histogram.csv", histogram_csv(&hist).as_bytes())?;
    manifest.emit(out, "fit.json", fit_json(&fit).as_bytes())?;
    manifest.finalize(out)?;
    for c in &fit.components {
        println!(
            "component: mean ({:+.4}, {:+.4}), weight {:.4}",
            c.mean.re, c.mean.im, c.weight
        );
    }
    println!("log-likelihood {:.2}, converged {}", fit.log_likelihood, fit.converged);
    Ok(())
}

pub fn analyze(cfg: &ScenarioConfig, input: &Path, out: &Path, config_text: &str) -> CliResult<()> {
    let rec = read_record(input)?;
    let hist = histogram_iq(&rec, cfg.bins).map_err(CliError::from_core)?;
    let fit = fit_components(&hist, 2, None).map_err(CliError::from_core)?;
    // the minus pointer sits at the larger in-phase quadrature
    let mut means = [fit.components[0].mean, fit.components[1].mean];
    if means[0].re < means[1].re {
        means.swap(0, 1);
    }
    let kappa = cfg.params.kappa;
    let zeta_raw = extract_zeta(means[0], means[1], kappa).map_err(CliError::from_core)?;
    let zeta = scenarios::refined_zeta(means[0], means[1], &cfg.params, &cfg.readout)
        .map_err(CliError::from_core)?;
    let sigma_fit = {
        // pooled covariance is shared across components
        let c = fit.components[0].covariance;
        ((c[0][0] + c[1][1]) / 2.0).sqrt()
    };
    let params = filter_for(
        &{
            let mut r = cfg.readout;
            r.sigma_noise = sigma_fit;
            r
        },
        cfg.snr_target.is_some(),
    );
    let trace = two_point_filter(
        &rec,
        &[(StateLabel::Minus, means[0]), (StateLabel::Plus, means[1])],
        params,
    )
    .map_err(CliError::from_core)?;
    let mut manifest = RunManifest::new(config_text, "analyze");
    let (dwell, accuracy) = match dwell_json(&trace, rec.hidden.as_deref()) {
        Ok((json, acc)) => (Some(json), acc),
        Err(e) => {
            manifest.errors.push(format!("dwell statistics: {e}"));
            (None, None)
        }
    };
    let summary = serde_json::to_string_pretty(&serde_json::json!({
        "zeta_extracted_mhz": to_mhz(zeta),
        "zeta_raw_mhz": to_mhz(zeta_raw),
        "fitted_sigma_noise": sigma_fit,
        "component_means": [[means[0].re, means[0].im], [means[1].re, means[1].im]],
        "filter_accuracy": accuracy,
    }))
    .unwrap();
    manifest.emit(out, "analysis.json", summary.as_bytes())?;
    if let Some(json) = dwell {
        manifest.emit(out, "dwell.json", json.as_bytes())?;
    }
    manifest.emit(out, "jumps.csv", jumps_csv(&trace, rec.hidden.as_deref(), usize::MAX).as_bytes())?;
    manifest.finalize(out)?;
    println!("zeta/2pi = {:.4} MHz (fitted sigma {:.4})", to_mhz(zeta), sigma_fit);
    if let Some(acc) = accuracy {
        println!("filter accuracy vs hidden states: {acc:.4}");
    }
    Ok(())
}

fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    Ok((header, rows))
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r.get(i).copied().unwrap_or(f64::NAN)).collect()
}

fn pairs(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}

pub fn plot(input: &Path, out: &Path) -> CliResult<()> {
    let entries = std::fs::read_dir(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let mut rendered = 0usize;
    std::fs::create_dir_all(out)?;
    for name in &names {
        let path = input.join(name);
        let (header, rows) = read_table(&path)?;
        let stem = name.trim_end_matches(".csv");
        let svg = if name.starts_with("histogram") {
            let cells: Vec<(f64, f64, u64)> = rows
                .iter()
                .map(|r| (r[0], r[1], r.get(2).copied().unwrap_or(0.0) as u64))
                .collect();
            Some(plot::heatmap_svg(stem, "I (sqrt photon)", "Q (sqrt photon)", &cells))
        } else if name == "zeta_sweep.csv" {
            let x = column(&rows, 0);
            Some(plot::line_svg(
                stem,
                "Omega_R/2pi (MHz)",
                "zeta/2pi (MHz)",
                &[
                    ("extracted", &pairs(&x, &column(&rows, 1))[..]),
                    ("theory", &pairs(&x, &column(&rows, 2))[..]),
                ],
            ))
        } else if name == "f_population.csv" || name == "sigmax_equilibrium.csv" {
            let x = column(&rows, 0);
            let label = header.get(1).cloned().unwrap_or_default();
            Some(plot::line_svg(
                stem,
                "Omega_R/2pi (MHz)",
                &label,
                &[(label.as_str(), &pairs(&x, &column(&rows, 1))[..])],
            ))
        } else if name.starts_with("prep_") {
            let x = column(&rows, 0);
            Some(plot::line_svg(
                stem,
                "angle (deg)",
                "<sigma_x>",
                &[
                    ("ideal", &pairs(&x, &column(&rows, 1))[..]),
                    ("simulated", &pairs(&x, &column(&rows, 2))[..]),
                    ("scaled", &pairs(&x, &column(&rows, 3))[..]),
                ],
            ))
        } else if name == "trace_window.csv" {
            let t: Vec<f64> = column(&rows, 0).iter().map(|v| v * 1e6).collect();
            Some(plot::line_svg(
                stem,
                "t (us)",
                "quadrature (sqrt photon)",
                &[
                    ("I", &pairs(&t, &column(&rows, 1))[..]),
                    ("Q", &pairs(&t, &column(&rows, 2))[..]),
                ],
            ))
        } else if name == "psi_window.csv" {
            let t: Vec<f64> = column(&rows, 0).iter().map(|v| v * 1e6).collect();
            Some(plot::line_svg(
                stem,
                "t (us)",
                "psi (deg)",
                &[("psi", &pairs(&t, &column(&rows, 1))[..])],
            ))
        } else {
            None
        };
        if let Some(svg) = svg {
            std::fs::write(out.join(format!("{stem}.svg")), svg.as_bytes())?;
            rendered += 1;
        }
    }
    if rendered == 0 {
        return Err(CliError::Config(format!(
            "no plottable outputs found in {}",
            input.display()
        )));
    }
    println!("rendered {rendered} plot(s) into {}", out.display());
    Ok(())
}

pub fn sweep(cfg: &ScenarioConfig) -> CliResult<()> {
    let text = crate::config::save_config(cfg);
    let manifest = scenarios::run_scenario(cfg, &text)?;
    println!("scenario {} complete, manifest at {}", cfg.scenario.as_str(), manifest.display());
    Ok(())
}

pub fn trace(cfg: &ScenarioConfig) -> CliResult<PathBuf> {
    let text = crate::config::save_config(cfg);
    scenarios::run_scenario(cfg, &text)
}
