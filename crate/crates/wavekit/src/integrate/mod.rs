//! Time integration of the original, interaction, and effective systems.
//!
//! The exponential scheme never resolves the ν⁻¹ rotation by brute force:
//! the original system is stepped in the interaction picture (an exact
//! conjugation), and each monomial's oscillatory factor is integrated in
//! closed form against the damped propagator, with amplitudes handled by a
//! trapezoidal predictor-corrector. Step cost is therefore set by the slow
//! dynamics, not by ν.
//!
//! Noise convention: β_k = β_k⁺ + iβ_k⁻ with standard real components, so
//! E|b_k Δβ_k|² = 2 b_k² Δτ and a damped mode relaxes to E|v_k|² = b_k²/γ_k.
//! All moment targets in this crate are stated under this convention.

mod rng;

pub use rng::{CounterRng, NoiseSpec};

use crate::field::{
    effective_rhs, from_interaction, interaction_rhs, original_rhs, to_interaction, FieldError,
    FieldState, ModelParams, MonomialTable, TableKind,
};
use crate::lattice::WaveVector;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Which formulation of the dynamics is stepped and recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    /// v-variables with the iν⁻¹Ω_k rotation.
    Original,
    /// a-variables, oscillatory phase factors on the monomials.
    Interaction,
    /// Autonomous resonant-monomial system.
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exponential Euler-Maruyama with exact rotation and oscillatory
    /// monomial integrals (trapezoidal in the amplitudes).
    ExponentialEuler,
    /// Classical RK4 on the plain right-hand side; deterministic runs only.
    Rk4,
    /// Strang splitting: exact linear half-steps around an explicit
    /// midpoint nonlinear step; deterministic runs only.
    Splitting,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
}

/// Max tolerable rotation per step for schemes without exact rotation.
pub const ROTATION_RESOLUTION_BOUND: f64 = 1.5;

/// |amplitude| beyond which a run is declared blown up.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct HaltDiagnostic {
    pub step: u64,
    pub tau: f64,
    pub last_recorded: FieldState,
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid integrator config: {0}")]
    BadConfig(String),
    #[error(
        "step size dt={dt} does not resolve rotation rate {rate:.3e} (dt·rate = {product:.3e} > {bound}); use the exponential scheme"
    )]
    StepSizeViolation {
        dt: f64,
        rate: f64,
        product: f64,
        bound: f64,
    },
    #[error("stochastic runs require the exponential Euler-Maruyama scheme")]
    NoiseNeedsExponential,
    #[error("non-finite state at step {} (tau {:.6})", .0.step, .0.tau)]
    Blowup(Box<HaltDiagnostic>),
}

/// Recorded states of one run, every `record_stride` steps, initial state
/// included.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub states: Vec<FieldState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &FieldState {
        self.states.last().expect("trajectory records initial state")
    }
}

/// Per-mode action statistics over an ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub taus: Vec<f64>,
    pub modes: Vec<WaveVector>,
    pub n_traj: usize,
    /// Mean of I_k = |a_k|²/2 across trajectories, per recorded time.
    pub mean_action: Vec<Vec<f64>>,
    /// Across-trajectory variance of I_k, per recorded time.
    pub var_action: Vec<Vec<f64>>,
    /// Start of the stationary averaging window.
    pub window_from: f64,
    /// Mean over trajectories of the per-trajectory time-window average of
    /// E|a_k|² (not the action; the factor 2 is deliberate).
    pub window_mean_sq: Vec<f64>,
    /// Standard error of `window_mean_sq` across trajectories.
    pub window_stderr_sq: Vec<f64>,
}

/// Raw per-trajectory amplitudes of selected modes at recorded times.
#[derive(Debug, Clone)]
pub struct EnsembleRecord {
    pub taus: Vec<f64>,
    pub modes: Vec<WaveVector>,
    /// amplitudes[traj][time][mode]
    pub amplitudes: Vec<Vec<Vec<Complex64>>>,
}

struct OscMonomial {
    coeff: Complex64,
    lambda_idx: usize,
    /// ∫₀^dt e^{−γ_k(dt−s)} e^{iλs/ν} ds
    weight_left: Complex64,
    /// ∫₀^dt e^{−γ_k(dt−s)} e^{iλ(s−dt)/ν} ds
    weight_right: Complex64,
}

enum OscTerms {
    Cubic(Vec<(usize, usize, usize, usize, OscMonomial)>),
    Quadratic(Vec<(usize, usize, usize, OscMonomial)>),
}

/// Precomputed stepping machinery for one (params, system, config) triple.
pub struct Simulator {
    pub params: ModelParams,
    pub system: System,
    pub config: IntegratorConfig,
    table: MonomialTable,
    gammas: Vec<f64>,
    rotations: Vec<f64>,
    decay: Vec<f64>,
    noise_sigma: Vec<f64>,
    lambdas: Vec<f64>,
    osc: Option<OscTerms>,
    n_steps: u64,
}

fn phi_weight(gamma: f64, lambda_over_nu: f64, dt: f64, right: bool) -> Complex64 {
    // left:  ∫₀^dt e^{−γ(dt−s)} e^{iΛs} ds  = (e^{iΛdt} − e^{−γdt})/(iΛ + γ)
    // right: ∫₀^dt e^{−γ(dt−s)} e^{iΛ(s−dt)} ds = (1 − e^{−(γ+iΛ)dt})/(γ + iΛ)
    let z = Complex64::new(gamma, lambda_over_nu);
    if z.norm() * dt < 1e-8 {
        // series: dt·(1 − z·dt/2) up to O((z dt)²)
        let lin = if right { -0.5 } else { 0.5 };
        return Complex64::new(dt, 0.0)
            * (Complex64::new(1.0, 0.0)
                + Complex64::new(lin * dt, 0.0) * Complex64::new(-gamma, lambda_over_nu));
    }
    if right {
        (Complex64::new(1.0, 0.0) - (-z * dt).exp()) / z
    } else {
        (Complex64::from_polar(1.0, lambda_over_nu * dt)
            - Complex64::new((-gamma * dt).exp(), 0.0))
            / z
    }
}

impl Simulator {
    pub fn new(
        params: ModelParams,
        system: System,
        config: IntegratorConfig,
    ) -> Result<Self, IntegrateError> {
        params.validate()?;
        if !(config.dt > 0.0) {
            return Err(IntegrateError::BadConfig("dt must be positive".into()));
        }
        if config.t_final < 0.0 {
            return Err(IntegrateError::BadConfig("t_final must be nonnegative".into()));
        }
        if config.record_stride == 0 {
            return Err(IntegrateError::BadConfig("record_stride must be ≥ 1".into()));
        }
        if params.mu == 1 && config.scheme != Scheme::ExponentialEuler {
            return Err(IntegrateError::NoiseNeedsExponential);
        }
        let grid = params.grid();
        let gammas: Vec<f64> = grid.iter().map(|k| params.gamma_at(&k)).collect();
        let rotations: Vec<f64> = grid.iter().map(|k| params.rotation(&k)).collect();
        let forcing: Vec<f64> = grid.iter().map(|k| params.forcing_at(&k)).collect();

        if config.scheme != Scheme::ExponentialEuler && system != System::Effective {
            let rate = rotations.iter().fold(0.0f64, |m, &r| m.max(r.abs())) / params.nu;
            // Splitting rotates exactly in the linear stage but its nonlinear
            // stage still samples the fast phase, so it obeys the same bound
            // for the interaction/original systems.
            if config.dt * rate > ROTATION_RESOLUTION_BOUND {
                return Err(IntegrateError::StepSizeViolation {
                    dt: config.dt,
                    rate,
                    product: config.dt * rate,
                    bound: ROTATION_RESOLUTION_BOUND,
                });
            }
        }

        let table = match system {
            System::Effective => MonomialTable::resonant(&params, None)?,
            _ => MonomialTable::full(&params, None)?,
        };

        let dt = config.dt;
        let decay: Vec<f64> = gammas.iter().map(|g| (-g * dt).exp()).collect();
        let noise_sigma: Vec<f64> = gammas
            .iter()
            .zip(&forcing)
            .map(|(&g, &b)| {
                if params.mu == 0 || b == 0.0 {
                    0.0
                } else {
                    (b * b * (1.0 - (-2.0 * g * dt).exp()) / (2.0 * g)).sqrt()
                }
            })
            .collect();

        // Oscillatory integrals for the exponential scheme, grouped by
        // distinct mismatch so per-step phases are cheap.
        let (lambdas, osc) = if config.scheme == Scheme::ExponentialEuler {
            let mut lambdas: Vec<f64> = Vec::new();
            let mut lookup = std::collections::BTreeMap::<u64, usize>::new();
            let mut intern = |lam: f64| -> usize {
                *lookup.entry(lam.to_bits()).or_insert_with(|| {
                    lambdas.push(lam);
                    lambdas.len() - 1
                })
            };
            let inv_nu = 1.0 / params.nu;
            let osc = match &table.kind {
                TableKind::Cubic(monos) => OscTerms::Cubic(
                    monos
                        .iter()
                        .map(|m| {
                            let li = intern(m.mismatch);
                            (
                                m.k1,
                                m.k2,
                                m.k3,
                                m.k,
                                OscMonomial {
                                    coeff: m.coeff,
                                    lambda_idx: li,
                                    weight_left: phi_weight(
                                        gammas[m.k],
                                        m.mismatch * inv_nu,
                                        dt,
                                        false,
                                    ),
                                    weight_right: phi_weight(
                                        gammas[m.k],
                                        m.mismatch * inv_nu,
                                        dt,
                                        true,
                                    ),
                                },
                            )
                        })
                        .collect(),
                ),
                TableKind::Quadratic(monos) => OscTerms::Quadratic(
                    monos
                        .iter()
                        .map(|m| {
                            let li = intern(m.mismatch);
                            (
                                m.k1,
                                m.k2,
                                m.k,
                                OscMonomial {
                                    coeff: m.coeff,
                                    lambda_idx: li,
                                    weight_left: phi_weight(
                                        gammas[m.k],
                                        m.mismatch * inv_nu,
                                        dt,
                                        false,
                                    ),
                                    weight_right: phi_weight(
                                        gammas[m.k],
                                        m.mismatch * inv_nu,
                                        dt,
                                        true,
                                    ),
                                },
                            )
                        })
                        .collect(),
                ),
            };
            (lambdas, Some(osc))
        } else {
            (Vec::new(), None)
        };

        let n_steps = (config.t_final / dt).round() as u64;

        Ok(Simulator {
            params,
            system,
            config,
            table,
            gammas,
            rotations,
            decay,
            noise_sigma,
            lambdas,
            osc,
            n_steps,
        })
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    /// Expected number of recorded states.
    pub fn n_records(&self) -> usize {
        (self.n_steps / self.config.record_stride as u64) as usize + 1
    }

    fn add_noise(&self, state: &mut FieldState, rng: &CounterRng, traj: u64, step: u64) {
        if self.params.mu == 0 {
            return;
        }
        let grid = *state.grid();
        if state.reality {
            // conjugate-symmetric forcing: draw for the representative,
            // mirror the conjugate; the zero mode gets a real kick
            for idx in 0..grid.len() {
                let ni = grid.neg_index(idx);
                if ni < idx || self.noise_sigma[idx] == 0.0 {
                    continue;
                }
                let (n1, n2) = rng.normal_pair(traj, idx as u64, step);
                if ni == idx {
                    state.amps_mut()[idx] += Complex64::new(self.noise_sigma[idx] * n1, 0.0);
                } else {
                    let eta = Complex64::new(n1, n2) * self.noise_sigma[idx];
                    state.amps_mut()[idx] += eta;
                    state.amps_mut()[ni] += eta.conj();
                }
            }
        } else {
            for idx in 0..grid.len() {
                if self.noise_sigma[idx] == 0.0 {
                    continue;
                }
                let (n1, n2) = rng.normal_pair(traj, idx as u64, step);
                state.amps_mut()[idx] += Complex64::new(n1, n2) * self.noise_sigma[idx];
            }
        }
    }

    /// One exponential step in the working (interaction-picture) variables.
    fn step_exponential(
        &self,
        a: &mut FieldState,
        scratch: &mut Vec<Complex64>,
        acc1: &mut Vec<Complex64>,
        acc2: &mut Vec<Complex64>,
        tau0: f64,
        noise: Option<(&CounterRng, u64)>,
        step: u64,
    ) {
        let n = a.len();
        let inv_nu = 1.0 / self.params.nu;
        acc1.clear();
        acc1.resize(n, Complex64::default());
        acc2.clear();
        acc2.resize(n, Complex64::default());
        scratch.clear();
        scratch.resize(n, Complex64::default());

        let phases_left: Vec<Complex64> = self
            .lambdas
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, lam * inv_nu * tau0))
            .collect();
        let phases_right: Vec<Complex64> = self
            .lambdas
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, lam * inv_nu * (tau0 + self.config.dt)))
            .collect();

        let osc = self.osc.as_ref().expect("exponential scheme has tables");
        // pass 1: amplitudes frozen at τ0, exact oscillatory weights
        match osc {
            OscTerms::Cubic(monos) => {
                for (k1, k2, k3, k, m) in monos {
                    let amp = a.amps()[*k1] * a.amps()[*k2] * a.amps()[*k3].conj();
                    acc1[*k] += m.coeff * amp * phases_left[m.lambda_idx] * m.weight_left;
                }
            }
            OscTerms::Quadratic(monos) => {
                for (k1, k2, k, m) in monos {
                    let amp = a.amps()[*k1] * a.amps()[*k2];
                    acc1[*k] += m.coeff * amp * phases_left[m.lambda_idx] * m.weight_left;
                }
            }
        }
        for i in 0..n {
            scratch[i] = self.decay[i] * a.amps()[i] + acc1[i];
        }
        // pass 2: amplitudes at the predictor endpoint, right-anchored weights
        match osc {
            OscTerms::Cubic(monos) => {
                for (k1, k2, k3, k, m) in monos {
                    let amp = scratch[*k1] * scratch[*k2] * scratch[*k3].conj();
                    acc2[*k] += m.coeff * amp * phases_right[m.lambda_idx] * m.weight_right;
                }
            }
            OscTerms::Quadratic(monos) => {
                for (k1, k2, k, m) in monos {
                    let amp = scratch[*k1] * scratch[*k2];
                    acc2[*k] += m.coeff * amp * phases_right[m.lambda_idx] * m.weight_right;
                }
            }
        }
        for i in 0..n {
            let half = 0.5 * (acc1[i] + acc2[i]);
            a.amps_mut()[i] = self.decay[i] * a.amps()[i] + half;
        }
        if let Some((rng, traj)) = noise {
            self.add_noise(a, rng, traj, step);
        }
        a.tau = tau0 + self.config.dt;
    }

    fn rhs(&self, state: &FieldState, tau: f64) -> Result<FieldState, FieldError> {
        match self.system {
            System::Original => original_rhs(state, tau, &self.params, &self.table),
            System::Interaction => interaction_rhs(state, tau, &self.params, &self.table),
            System::Effective => effective_rhs(state, &self.params, &self.table),
        }
    }

    fn step_rk4(&self, state: &mut FieldState, tau0: f64) -> Result<(), FieldError> {
        let dt = self.config.dt;
        let k1 = self.rhs(state, tau0)?;
        let mut s2 = state.clone();
        axpy(&mut s2, 0.5 * dt, &k1);
        let k2 = self.rhs(&s2, tau0 + 0.5 * dt)?;
        let mut s3 = state.clone();
        axpy(&mut s3, 0.5 * dt, &k2);
        let k3 = self.rhs(&s3, tau0 + 0.5 * dt)?;
        let mut s4 = state.clone();
        axpy(&mut s4, dt, &k3);
        let k4 = self.rhs(&s4, tau0 + dt)?;
        for i in 0..state.len() {
            state.amps_mut()[i] += dt / 6.0
                * (k1.amp_at(i) + 2.0 * k2.amp_at(i) + 2.0 * k3.amp_at(i) + k4.amp_at(i));
        }
        state.tau = tau0 + dt;
        Ok(())
    }

    fn step_splitting(&self, state: &mut FieldState, tau0: f64) -> Result<(), FieldError> {
        let dt = self.config.dt;
        let inv_nu = 1.0 / self.params.nu;
        let half_lin = |s: &mut FieldState| {
            for i in 0..s.len() {
                let rot = if self.system == System::Original {
                    self.rotations[i] * inv_nu
                } else {
                    0.0
                };
                let f = Complex64::from_polar((-self.gammas[i] * 0.5 * dt).exp(), rot * 0.5 * dt);
                s.amps_mut()[i] *= f;
            }
        };
        half_lin(state);
        // explicit midpoint on the pure nonlinearity
        let tau_mid = tau0 + 0.5 * dt;
        let n1 = self.nonlinear_only(state, tau_mid)?;
        let mut mid = state.clone();
        axpy(&mut mid, 0.5 * dt, &n1);
        let n2 = self.nonlinear_only(&mid, tau_mid)?;
        axpy(state, dt, &n2);
        half_lin(state);
        state.tau = tau0 + dt;
        Ok(())
    }

    fn nonlinear_only(&self, state: &FieldState, tau: f64) -> Result<FieldState, FieldError> {
        let mut d = self.rhs(state, tau)?;
        // remove linear parts to isolate the nonlinearity
        let inv_nu = 1.0 / self.params.nu;
        for i in 0..state.len() {
            let mut lin = Complex64::new(-self.gammas[i], 0.0);
            if self.system == System::Original {
                lin += Complex64::new(0.0, self.rotations[i] * inv_nu);
            }
            let v = d.amp_at(i) - lin * state.amp_at(i);
            d.amps_mut()[i] = v;
        }
        Ok(d)
    }

    /// Integrate one trajectory. For the original system under the
    /// exponential scheme the state is advanced in the interaction picture
    /// and rotated back at recording times (an exact conjugation).
    pub fn simulate(
        &self,
        initial: &FieldState,
        noise: Option<&NoiseSpec>,
        traj: u64,
    ) -> Result<Trajectory, IntegrateError> {
        if self.params.mu == 1 && noise.is_none() {
            return Err(IntegrateError::BadConfig(
                "mu = 1 requires a noise spec".into(),
            ));
        }
        let rng = noise.map(|n| n.rng());
        let exponential = self.config.scheme == Scheme::ExponentialEuler;
        let conjugated = exponential && self.system == System::Original;
        let mut work = if conjugated {
            to_interaction(initial, &self.params)?
        } else {
            initial.clone()
        };

        let mut taus = Vec::with_capacity(self.n_records());
        let mut states = Vec::with_capacity(self.n_records());
        let record =
            |w: &FieldState, taus: &mut Vec<f64>, states: &mut Vec<FieldState>| -> Result<(), FieldError> {
                let out = if conjugated {
                    from_interaction(w, &self.params)?
                } else {
                    w.clone()
                };
                taus.push(w.tau);
                states.push(out);
                Ok(())
            };
        record(&work, &mut taus, &mut states)?;

        let mut scratch = Vec::new();
        let mut acc1 = Vec::new();
        let mut acc2 = Vec::new();
        for step in 0..self.n_steps {
            let tau0 = work.tau;
            if exponential {
                self.step_exponential(
                    &mut work,
                    &mut scratch,
                    &mut acc1,
                    &mut acc2,
                    tau0,
                    rng.as_ref().map(|r| (r, traj)),
                    step,
                );
            } else {
                match self.config.scheme {
                    Scheme::Rk4 => self.step_rk4(&mut work, tau0)?,
                    Scheme::Splitting => self.step_splitting(&mut work, tau0)?,
                    Scheme::ExponentialEuler => unreachable!(),
                }
            }
            if !work.is_finite() || work.max_abs() > BLOWUP_LIMIT {
                return Err(IntegrateError::Blowup(Box::new(HaltDiagnostic {
                    step,
                    tau: work.tau,
                    last_recorded: states.last().expect("initial recorded").clone(),
                })));
            }
            if (step + 1) % self.config.record_stride as u64 == 0 {
                record(&work, &mut taus, &mut states)?;
            }
        }
        Ok(Trajectory { taus, states })
    }

    /// Ensemble statistics with disjoint per-trajectory noise streams.
    /// Deterministic for a fixed seed: trajectories are reduced in index
    /// order regardless of thread scheduling.
    pub fn ensemble(
        &self,
        initial: &FieldState,
        n_traj: usize,
        noise_seed: u64,
        window_from: f64,
    ) -> Result<EnsembleStats, IntegrateError> {
        let noise = NoiseSpec::new(noise_seed);
        let n_rec = self.n_records();
        let n_modes = initial.len();
        let mut mean = vec![vec![0.0; n_modes]; n_rec];
        let mut m2 = vec![vec![0.0; n_modes]; n_rec];
        let mut wmean = vec![0.0; n_modes];
        let mut wm2 = vec![0.0; n_modes];

        let chunk = 64usize;
        let mut done = 0usize;
        while done < n_traj {
            let take = chunk.min(n_traj - done);
            let results: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (done..done + take)
                .into_par_iter()
                .map(|t| {
                    let traj = self
                        .simulate(initial, Some(&noise), t as u64)
                        .expect("ensemble trajectory");
                    let actions: Vec<Vec<f64>> = traj
                        .states
                        .iter()
                        .map(|s| s.amps().iter().map(|z| 0.5 * z.norm_sqr()).collect())
                        .collect();
                    let mut wsum = vec![0.0; n_modes];
                    let mut wcount = 0usize;
                    for (ti, tau) in traj.taus.iter().enumerate() {
                        if *tau >= window_from {
                            for m in 0..n_modes {
                                wsum[m] += traj.states[ti].amp_at(m).norm_sqr();
                            }
                            wcount += 1;
                        }
                    }
                    if wcount > 0 {
                        for w in &mut wsum {
                            *w /= wcount as f64;
                        }
                    }
                    (actions, wsum)
                })
                .collect();
            // Welford over trajectories, fixed order
            for (i, (actions, wsum)) in results.into_iter().enumerate() {
                let count = (done + i + 1) as f64;
                for (ti, row) in actions.iter().enumerate() {
                    for m in 0..n_modes {
                        let d = row[m] - mean[ti][m];
                        mean[ti][m] += d / count;
                        m2[ti][m] += d * (row[m] - mean[ti][m]);
                    }
                }
                for m in 0..n_modes {
                    let d = wsum[m] - wmean[m];
                    wmean[m] += d / count;
                    wm2[m] += d * (wsum[m] - wmean[m]);
                }
            }
            done += take;
        }

        let n = n_traj as f64;
        let var: Vec<Vec<f64>> = m2
            .iter()
            .map(|row| row.iter().map(|v| v / (n - 1.0).max(1.0)).collect())
            .collect();
        let wstderr: Vec<f64> = wm2
            .iter()
            .map(|v| (v / (n - 1.0).max(1.0) / n).sqrt())
            .collect();
        // recorded times are identical across trajectories; rebuild them
        let mut taus = Vec::with_capacity(n_rec);
        for r in 0..n_rec {
            taus.push(initial.tau + (r * self.config.record_stride) as f64 * self.config.dt);
        }
        Ok(EnsembleStats {
            taus,
            modes: self.params.grid().iter().collect(),
            n_traj,
            mean_action: mean,
            var_action: var,
            window_from,
            window_mean_sq: wmean,
            window_stderr_sq: wstderr,
        })
    }

    /// Raw recorded amplitudes of `modes` for every trajectory.
    pub fn ensemble_record(
        &self,
        initial: &FieldState,
        n_traj: usize,
        noise_seed: u64,
        modes: &[WaveVector],
    ) -> Result<EnsembleRecord, IntegrateError> {
        let noise = NoiseSpec::new(noise_seed);
        let grid = self.params.grid();
        let idx: Vec<usize> = modes
            .iter()
            .map(|k| grid.index(k).expect("selected mode inside the box"))
            .collect();
        let amplitudes: Vec<Vec<Vec<Complex64>>> = (0..n_traj)
            .into_par_iter()
            .map(|t| {
                let traj = self
                    .simulate(initial, Some(&noise), t as u64)
                    .expect("ensemble trajectory");
                traj.states
                    .iter()
                    .map(|s| idx.iter().map(|&i| s.amp_at(i)).collect())
                    .collect()
            })
            .collect();
        let mut taus = Vec::with_capacity(self.n_records());
        for r in 0..self.n_records() {
            taus.push(initial.tau + (r * self.config.record_stride) as f64 * self.config.dt);
        }
        Ok(EnsembleRecord {
            taus,
            modes: modes.to_vec(),
            amplitudes,
        })
    }
}

fn axpy(state: &mut FieldState, a: f64, dir: &FieldState) {
    for i in 0..state.len() {
        let v = state.amp_at(i) + a * dir.amp_at(i);
        state.amps_mut()[i] = v;
    }
}

/// Exact single-step Ornstein-Uhlenbeck update for one complex mode:
/// mean decay e^{−γΔτ}, per-real-component variance b²(1−e^{−2γΔτ})/(2γ).
pub fn ou_exact_step(
    a: Complex64,
    gamma: f64,
    b: f64,
    dt: f64,
    normals: (f64, f64),
) -> Complex64 {
    let sigma = (b * b * (1.0 - (-2.0 * gamma * dt).exp()) / (2.0 * gamma)).sqrt();
    a * (-gamma * dt).exp() + Complex64::new(normals.0, normals.1) * sigma
}
