//! Subcommand implementations. Every command works inside an output
//! directory, writes CSV/JSON artifacts with deterministic bytes, and
//! returns summary numbers for the manifest.

use crate::config::*;
use crate::manifest::{write_artifact, Manifest};
use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;
use wavekit::chm_cluster;
use wavekit::field::{snapshot_from_json, snapshot_to_json, FieldState, ModelParams};
use wavekit::field::Model;
use wavekit::integrate::{CounterRng, NoiseSpec, Simulator};
use wavekit::kinetic::{
    integrate_kinetic, scan_at_reference, DomainMode, KineticForcing, KineticParams, Spectrum,
};
use wavekit::lattice::WaveVector;
use wavekit::resonance::{
    clusters, enumerate_chm_triads, enumerate_nls_quadruples, ResonantTuple,
};
use wavekit::stats::{estimate_moments, MomentKey};

/// Deterministic float formatting for CSV artifacts.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

fn fmt_mode(k: &WaveVector) -> String {
    k.comps()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn enumerate_tuples(model: &Model, cutoff: i32, budget: Option<usize>) -> Result<Vec<ResonantTuple>> {
    Ok(match model {
        Model::Nls { dim, .. } => enumerate_nls_quadruples(*dim, cutoff, budget)
            .map_err(|e| anyhow!("enumeration failed: {e}"))?,
        Model::Chm { rho, froude } => {
            let rho2 = rho * rho;
            enumerate_chm_triads(&rho2, froude, cutoff)
        }
    })
}

pub fn cmd_resonances(cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let model = cfg.model().map_err(ConfigError::wrap)?;
    let budget = cfg.resonances.as_ref().and_then(|r| r.budget);
    let tuples = enumerate_tuples(&model, cfg.cutoff, budget)?;
    let mut body = String::new();
    let mut inert = 0usize;
    for t in &tuples {
        if t.sym_coupling_zero {
            inert += 1;
        }
        body.push_str(&serde_json::to_string(t).expect("tuple serializes"));
        body.push('\n');
    }
    write_artifact(manifest, out, "tuples.jsonl", body.as_bytes())?;
    manifest.note("count", tuples.len());
    manifest.note("coupling_zero_count", inert);
    Ok(())
}

pub fn cmd_clusters(cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let model = cfg.model().map_err(ConfigError::wrap)?;
    let budget = cfg.resonances.as_ref().and_then(|r| r.budget);
    let reality = cfg
        .resonances
        .as_ref()
        .and_then(|r| r.reality)
        .unwrap_or_else(|| model.reality());
    let tuples = enumerate_tuples(&model, cfg.cutoff, budget)?;
    let part = clusters(&tuples, model.dim(), cfg.cutoff, reality);

    let dim = model.dim();
    let mut body = String::new();
    for i in 0..dim {
        let _ = write!(body, "k{i},");
    }
    body.push_str("cluster_id,subsystem_size,role\n");
    for (id, cluster) in part.clusters.iter().enumerate() {
        let size = part.subsystem_size(id);
        for &m in &cluster.members {
            let k = part.vector(m);
            for c in k.comps() {
                let _ = write!(body, "{c},");
            }
            let _ = writeln!(body, "{id},{size},member");
        }
        for &m in &cluster.catalytic {
            let k = part.vector(m);
            for c in k.comps() {
                let _ = write!(body, "{c},");
            }
            let _ = writeln!(body, "{id},{size},catalytic");
        }
    }
    write_artifact(manifest, out, "clusters.csv", body.as_bytes())?;
    manifest.note("n_elements", part.elements.len());
    manifest.note("n_clusters", part.clusters.len());
    manifest.note("non_singletons", part.non_singletons().count());
    manifest.note("max_subsystem_size", part.max_subsystem_size());
    manifest.note("reality_identified", part.reality_identified);
    Ok(())
}

fn build_initial(cfg: &SimulateConfig, params: &ModelParams) -> Result<FieldState> {
    let dim = params.model.dim();
    let reality = params.model.reality();
    Ok(match &cfg.initial {
        InitialConfig::Zero => FieldState::zero(dim, params.cutoff, reality),
        InitialConfig::Random { amplitude, seed } => {
            let mut state = FieldState::zero(dim, params.cutoff, reality);
            let rng = CounterRng::new(*seed);
            for idx in 0..state.len() {
                let (a, b) = rng.normal_pair(0, idx as u64, 0);
                state.amps_mut()[idx] = Complex64::new(a, b) * *amplitude;
            }
            if reality {
                state.enforce_reality();
            }
            state
        }
        InitialConfig::Snapshot { path } => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading snapshot {path}"))?;
            let (state, _) = snapshot_from_json(&text).map_err(|e| anyhow!("{e}"))?;
            state
        }
        InitialConfig::Modes { entries } => {
            let mut state = FieldState::zero(dim, params.cutoff, reality);
            for e in entries {
                state.set(&WaveVector::new(&e.mode), Complex64::new(e.re, e.im));
            }
            state
        }
    })
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let params = cfg.params().map_err(ConfigError::wrap)?;
    let sim_cfg = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| ConfigError::wrap(anyhow!("config block `simulate` is required")))?;
    let initial = build_initial(sim_cfg, &params)?;
    let sim = Simulator::new(params.clone(), sim_cfg.system.into(), sim_cfg.integrator())
        .map_err(|e| anyhow!("integrator setup failed: {e}"))?;
    let grid = params.grid();
    let modes: Vec<WaveVector> = grid.iter().collect();

    if sim_cfg.n_trajectories <= 1 {
        let noise = NoiseSpec::new(cfg.seed);
        let traj = sim
            .simulate(&initial, Some(&noise), 0)
            .map_err(|e| anyhow!("simulation halted: {e}"))?;
        let mut actions = String::from("tau,mode,action\n");
        for (ti, state) in traj.states.iter().enumerate() {
            let name = format!("snap_{ti:06}.json");
            let text = snapshot_to_json(state, &params.model);
            write_artifact(manifest, out, &name, text.as_bytes())?;
            for (mi, k) in modes.iter().enumerate() {
                let _ = writeln!(
                    actions,
                    "{},{},{}",
                    fmt_f64(traj.taus[ti]),
                    fmt_mode(k),
                    fmt_f64(0.5 * state.amp_at(mi).norm_sqr())
                );
            }
        }
        write_artifact(manifest, out, "actions.csv", actions.as_bytes())?;
        manifest.note("records", traj.len());
        manifest.note("final_tau", traj.taus.last().copied().unwrap_or(0.0));
    } else {
        let stats = sim
            .ensemble(&initial, sim_cfg.n_trajectories, cfg.seed, sim_cfg.window_from)
            .map_err(|e| anyhow!("ensemble failed: {e}"))?;
        let mut mean_csv = String::from("tau,mode,mean_action,var_action\n");
        for (ti, tau) in stats.taus.iter().enumerate() {
            for (mi, k) in stats.modes.iter().enumerate() {
                let _ = writeln!(
                    mean_csv,
                    "{},{},{},{}",
                    fmt_f64(*tau),
                    fmt_mode(k),
                    fmt_f64(stats.mean_action[ti][mi]),
                    fmt_f64(stats.var_action[ti][mi])
                );
            }
        }
        write_artifact(manifest, out, "actions_mean.csv", mean_csv.as_bytes())?;
        let mut window_csv = String::from("mode,window_mean_sq_amp,window_stderr\n");
        for (mi, k) in stats.modes.iter().enumerate() {
            let _ = writeln!(
                window_csv,
                "{},{},{}",
                fmt_mode(k),
                fmt_f64(stats.window_mean_sq[mi]),
                fmt_f64(stats.window_stderr_sq[mi])
            );
        }
        write_artifact(manifest, out, "window.csv", window_csv.as_bytes())?;

        // raw per-trajectory actions for independent re-aggregation
        let entries = sim_cfg.n_trajectories * sim.n_records() * modes.len();
        if entries <= 5_000_000 {
            let noise = NoiseSpec::new(cfg.seed);
            let mut raw = String::from("traj,tau,mode,action\n");
            for t in 0..sim_cfg.n_trajectories {
                let traj = sim
                    .simulate(&initial, Some(&noise), t as u64)
                    .map_err(|e| anyhow!("trajectory {t} halted: {e}"))?;
                for (ti, state) in traj.states.iter().enumerate() {
                    for (mi, k) in modes.iter().enumerate() {
                        let _ = writeln!(
                            raw,
                            "{t},{},{},{}",
                            fmt_f64(traj.taus[ti]),
                            fmt_mode(k),
                            fmt_f64(0.5 * state.amp_at(mi).norm_sqr())
                        );
                    }
                }
            }
            write_artifact(manifest, out, "actions_raw.csv", raw.as_bytes())?;
        } else {
            manifest.note("actions_raw_skipped", format!("{entries} entries exceed cap"));
        }
        manifest.note("n_trajectories", sim_cfg.n_trajectories);
        manifest.note("window_from", sim_cfg.window_from);
    }
    Ok(())
}

pub fn cmd_chm_oracle(cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let oc = cfg
        .chm_oracle
        .as_ref()
        .ok_or_else(|| ConfigError::wrap(anyhow!("config block `chm-oracle` is required")))?;
    let rho = parse_rational(&oc.rho).map_err(ConfigError::wrap)?;
    let froude = parse_rational(&oc.froude).map_err(ConfigError::wrap)?;
    let rho2 = &rho * &rho;

    let mut table = String::from("m,n,coupling,frozen\n");
    for m in -oc.table_range..=oc.table_range {
        for n in -oc.table_range..=oc.table_range {
            let c = chm_cluster::coupling(&WaveVector::d2(m, n), &rho2, &froude);
            let _ = writeln!(table, "{m},{n},{},{}", fmt_f64(c.value), c.frozen);
        }
    }
    write_artifact(manifest, out, "couplings.csv", table.as_bytes())?;

    if oc.mode.len() != 2 {
        return Err(ConfigError::wrap(anyhow!("chm-oracle.mode must have 2 components")).into());
    }
    let k = WaveVector::d2(oc.mode[0], oc.mode[1]);
    let coupling = chm_cluster::coupling(&k, &rho2, &froude);
    let init = chm_cluster::Cluster3State {
        a_k: Complex64::new(oc.initial.a_k[0], oc.initial.a_k[1]),
        a_kbar: Complex64::new(oc.initial.a_kbar[0], oc.initial.a_kbar[1]),
        a_c: Complex64::new(oc.initial.a_c[0], oc.initial.a_c[1]),
    };
    let mut traj = String::from("t,a_k_re,a_k_im,a_kbar_re,a_kbar_im,a_c_re,a_c_im\n");
    for i in 0..oc.t_points.max(1) {
        let t = oc.t_final * i as f64 / (oc.t_points.max(2) - 1) as f64;
        let s = chm_cluster::closed_form(&init, coupling.value, t);
        let _ = writeln!(
            traj,
            "{},{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(s.a_k.re),
            fmt_f64(s.a_k.im),
            fmt_f64(s.a_kbar.re),
            fmt_f64(s.a_kbar.im),
            fmt_f64(s.a_c.re),
            fmt_f64(s.a_c.im)
        );
    }
    write_artifact(manifest, out, "closed_form.csv", traj.as_bytes())?;
    manifest.note("coupling", coupling.value);
    manifest.note("frozen", coupling.frozen);
    if let Some(p) = chm_cluster::period(&init, coupling.value) {
        manifest.note("period", p);
    }
    Ok(())
}

pub fn cmd_kinetic(cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let kc = cfg
        .kinetic
        .as_ref()
        .ok_or_else(|| ConfigError::wrap(anyhow!("config block `kinetic` is required")))?;
    let mut params = KineticParams::new(kc.dim, kc.gamma_coeff, kc.gamma_exponent, kc.k_min, kc.k_max);
    params.coupling = kc.coupling;
    params.samples = kc.samples;
    params.seed = cfg.seed;
    if let Some(phi) = kc.phi {
        params.phi = phi;
    }
    if let Some(domain) = kc.domain {
        params.domain = match domain {
            DomainConfig::Inertial => DomainMode::Inertial,
            DomainConfig::ClampedTail => DomainMode::ClampedTail,
        };
    }
    params
        .validate()
        .map_err(|e| ConfigError::wrap(anyhow!("kinetic parameters: {e}")))?;

    match kc.mode {
        KineticMode::Scan => {
            let grid = kc
                .exponent_grid
                .as_ref()
                .ok_or_else(|| ConfigError::wrap(anyhow!("scan mode needs `exponent-grid`")))?
                .points()
                .map_err(ConfigError::wrap)?;
            let q = kc.reference_quantile.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&q) {
                return Err(ConfigError::wrap(anyhow!("reference-quantile must be in [0, 1]")).into());
            }
            let k_ref = params.k_min * (params.k_max / params.k_min).powf(q);
            let table =
                scan_at_reference(&params, &grid, k_ref).map_err(|e| anyhow!("scan failed: {e}"))?;
            let mut csv = String::from("exponent,estimate,stderr\n");
            for r in &table.rows {
                let _ = writeln!(csv, "{},{},{}", fmt_f64(r.exponent), fmt_f64(r.estimate), fmt_f64(r.stderr));
            }
            write_artifact(manifest, out, "scan.csv", csv.as_bytes())?;
            manifest.note("sign_changes", &table.sign_changes);
            manifest.note("refined_roots", &table.refined_roots);
            manifest.note("reference_k", k_ref);
            manifest.note("inconclusive", table.inconclusive);
            // φ is an overall 1/φ factor: root locations are invariant
            // within the admissible band, only magnitudes rescale
            manifest.note("phi", params.phi);
            manifest.note("phi_bounds", params.phi_bounds());
            if table.inconclusive {
                bail!("scan inconclusive: noise exceeds the signal at every grid point");
            }
        }
        KineticMode::Integrate => {
            let g = kc.grid_points.unwrap_or(16).max(2);
            let ks: Vec<f64> = (0..g)
                .map(|i| {
                    params.k_min
                        * ((params.k_max / params.k_min).ln() * i as f64 / (g - 1) as f64).exp()
                })
                .collect();
            let n0 = Spectrum::PowerLaw {
                amplitude: kc.initial_amplitude.unwrap_or(0.0),
                exponent: kc.initial_exponent.unwrap_or(0.0),
            };
            let forcing = match &kc.ring_forcing {
                Some(r) => KineticForcing::Ring {
                    amplitude: r.amplitude,
                    center: r.center,
                    width: r.width,
                },
                None => KineticForcing::Zero,
            };
            let dt = kc
                .dt
                .ok_or_else(|| ConfigError::wrap(anyhow!("integrate mode needs `dt`")))?;
            let t_final = kc
                .t_final
                .ok_or_else(|| ConfigError::wrap(anyhow!("integrate mode needs `t-final`")))?;
            let traj = integrate_kinetic(&n0, &ks, &forcing, &params, t_final, dt)
                .map_err(|e| anyhow!("kinetic integration halted: {e}"))?;
            let mut csv = String::from("tau,k,n\n");
            for (ti, tau) in traj.taus.iter().enumerate() {
                for (i, k) in traj.ks.iter().enumerate() {
                    let _ = writeln!(csv, "{},{},{}", fmt_f64(*tau), fmt_f64(*k), fmt_f64(traj.spectra[ti][i]));
                }
            }
            write_artifact(manifest, out, "spectrum.csv", csv.as_bytes())?;
            manifest.note("clip_events", traj.clip_events);
        }
    }
    Ok(())
}

pub fn cmd_moments(cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let params = cfg.params().map_err(ConfigError::wrap)?;
    let sim_cfg = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| ConfigError::wrap(anyhow!("moments needs the `simulate` block")))?;
    let mc = cfg
        .moments
        .as_ref()
        .ok_or_else(|| ConfigError::wrap(anyhow!("config block `moments` is required")))?;
    if sim_cfg.n_trajectories < 2 {
        return Err(ConfigError::wrap(anyhow!("moments need n-trajectories >= 2")).into());
    }
    let initial = build_initial(sim_cfg, &params)?;
    let sim = Simulator::new(params.clone(), sim_cfg.system.into(), sim_cfg.integrator())
        .map_err(|e| anyhow!("integrator setup failed: {e}"))?;
    let modes: Vec<WaveVector> = mc.modes.iter().map(|m| WaveVector::new(m)).collect();
    // the record must also hold every mode the order-4 keys reference
    let mut recorded = modes.clone();
    for quad in &mc.quadruples {
        for m in quad {
            let k = WaveVector::new(m);
            if !recorded.contains(&k) {
                recorded.push(k);
            }
        }
    }
    let record = sim
        .ensemble_record(&initial, sim_cfg.n_trajectories, cfg.seed, &recorded)
        .map_err(|e| anyhow!("ensemble failed: {e}"))?;
    let time_index = mc.time_index.unwrap_or(record.taus.len() - 1);

    let mut keys: Vec<MomentKey> = modes.iter().map(|k| MomentKey::second(*k)).collect();
    for quad in &mc.quadruples {
        keys.push(MomentKey {
            upper: vec![WaveVector::new(&quad[0]), WaveVector::new(&quad[1])],
            lower: vec![WaveVector::new(&quad[2]), WaveVector::new(&quad[3])],
        });
    }
    let table = estimate_moments(&record, time_index, &keys)
        .map_err(|e| anyhow!("moment estimation failed: {e}"))?;
    let mut csv = String::from("upper,lower,re,im,stderr,n\n");
    for (key, entry) in table.entries() {
        let upper = key
            .upper
            .iter()
            .map(fmt_mode)
            .collect::<Vec<_>>()
            .join("|");
        let lower = key
            .lower
            .iter()
            .map(fmt_mode)
            .collect::<Vec<_>>()
            .join("|");
        let _ = writeln!(
            csv,
            "{upper},{lower},{},{},{},{}",
            fmt_f64(entry.value.re),
            fmt_f64(entry.value.im),
            fmt_f64(entry.stderr),
            entry.n
        );
    }
    write_artifact(manifest, out, "moments.csv", csv.as_bytes())?;
    manifest.note("tau", table.tau);
    manifest.note("n_moments", table.entries().len());
    Ok(())
}

pub fn cmd_report(run_dir: &Path, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let mut produced = 0usize;

    let raw_path = run_dir.join("actions_raw.csv");
    if raw_path.exists() {
        // independent re-aggregation of the raw trajectories: final-time
        // per-mode mean and standard error across trajectories
        let text = std::fs::read_to_string(&raw_path)?;
        let mut final_tau = f64::NEG_INFINITY;
        let mut rows: Vec<(usize, f64, String, f64)> = Vec::new();
        for line in text.lines().skip(1) {
            let mut parts = line.split(',');
            let traj: usize = parts
                .next()
                .ok_or_else(|| anyhow!("bad raw row"))?
                .parse()?;
            let tau: f64 = parts.next().ok_or_else(|| anyhow!("bad raw row"))?.parse()?;
            let mode = parts.next().ok_or_else(|| anyhow!("bad raw row"))?.to_string();
            let action: f64 = parts.next().ok_or_else(|| anyhow!("bad raw row"))?.parse()?;
            final_tau = final_tau.max(tau);
            rows.push((traj, tau, mode, action));
        }
        let mut by_mode: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
        for (_, tau, mode, action) in &rows {
            if (*tau - final_tau).abs() <= 1e-12 * final_tau.abs().max(1.0) {
                by_mode.entry(mode.clone()).or_default().push(*action);
            }
        }
        let mut csv = String::from("mode,mean_action,stderr,n\n");
        for (mode, vals) in &by_mode {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let _ = writeln!(
                csv,
                "{mode},{},{},{}",
                fmt_f64(mean),
                fmt_f64((var / n).sqrt()),
                vals.len()
            );
        }
        write_artifact(manifest, out, "ensemble_actions.csv", csv.as_bytes())?;
        manifest.note("final_tau", final_tau);
        produced += 1;
    }

    let scan_path = run_dir.join("scan.csv");
    if scan_path.exists() {
        let text = std::fs::read_to_string(&scan_path)?;
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for line in text.lines().skip(1) {
            let mut parts = line.split(',');
            let nu: f64 = parts.next().ok_or_else(|| anyhow!("bad scan row"))?.parse()?;
            let est: f64 = parts.next().ok_or_else(|| anyhow!("bad scan row"))?.parse()?;
            let se: f64 = parts.next().ok_or_else(|| anyhow!("bad scan row"))?.parse()?;
            rows.push((nu, est, se));
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut csv = String::from("exponent,estimate,stderr,significant\n");
        let mut changes = Vec::new();
        for w in rows.windows(2) {
            if w[0].1 * w[1].1 < 0.0 {
                changes.push(0.5 * (w[0].0 + w[1].0));
            }
        }
        for (nu, est, se) in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                fmt_f64(*nu),
                fmt_f64(*est),
                fmt_f64(*se),
                est.abs() > 2.0 * se
            );
        }
        write_artifact(manifest, out, "scan_sorted.csv", csv.as_bytes())?;
        manifest.note("sign_changes", changes);
        produced += 1;
    }

    if produced == 0 {
        bail!(
            "no reportable artifacts (actions_raw.csv, scan.csv) in {}",
            run_dir.display()
        );
    }
    Ok(())
}

/// Marker for configuration-level failures (exit code 2); everything else
/// is a numeric/runtime failure (exit code 3).
#[derive(Debug)]
pub struct ConfigError(pub anyhow::Error);

impl ConfigError {
    pub fn wrap(e: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(ConfigError(e))
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}
