//! Moment estimation over ensembles and the closure checks: the Itô action
//! balance, the quasi-stationary fourth-moment approximation, and the
//! quasi-Gaussian (Wick) prediction for high-order moments.
//!
//! Moments are stored sparsely against explicit index lists; full tensors
//! are never materialized.

use crate::field::{ModelParams, MonomialTable, TableKind};
use crate::integrate::EnsembleRecord;
use crate::lattice::WaveVector;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("moment estimation needs at least two trajectories, got {0}")]
    TooFewTrajectories(usize),
    #[error("empty moment index list")]
    EmptyIndexList,
    #[error("mode {0} not present in the ensemble record")]
    ModeNotRecorded(WaveVector),
    #[error("time index {index} out of range (record has {len})")]
    TimeIndexOutOfRange { index: usize, len: usize },
    #[error("centered time derivative needs interior time index with spacing > 0")]
    InsufficientTimeResolution,
}

/// Index pattern of the moment E[a_{u₁}…a_{u_p} a*_{l₁}…a*_{l_q}].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentKey {
    pub upper: Vec<WaveVector>,
    pub lower: Vec<WaveVector>,
}

impl MomentKey {
    pub fn second(k: WaveVector) -> Self {
        MomentKey {
            upper: vec![k],
            lower: vec![k],
        }
    }

    pub fn order(&self) -> usize {
        self.upper.len() + self.lower.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MomentEntry {
    pub value: Complex64,
    pub stderr: f64,
    pub n: usize,
}

/// Sparse moment estimates at one recorded time.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub tau: f64,
    entries: Vec<(MomentKey, MomentEntry)>,
}

impl MomentTable {
    pub fn get(&self, key: &MomentKey) -> Option<&MomentEntry> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, e)| e)
    }

    pub fn entries(&self) -> &[(MomentKey, MomentEntry)] {
        &self.entries
    }
}

fn mode_indices(record: &EnsembleRecord, modes: &[WaveVector]) -> Result<Vec<usize>, StatsError> {
    modes
        .iter()
        .map(|k| {
            record
                .modes
                .iter()
                .position(|m| m == k)
                .ok_or(StatsError::ModeNotRecorded(*k))
        })
        .collect()
}

fn monomial(sample: &[Complex64], upper: &[usize], lower: &[usize]) -> Complex64 {
    let mut z = Complex64::new(1.0, 0.0);
    for &i in upper {
        z *= sample[i];
    }
    for &i in lower {
        z *= sample[i].conj();
    }
    z
}

/// Unbiased sample means of the keyed monomials at one recorded time, with
/// standard errors across trajectories.
pub fn estimate_moments(
    record: &EnsembleRecord,
    time_index: usize,
    keys: &[MomentKey],
) -> Result<MomentTable, StatsError> {
    if keys.is_empty() {
        return Err(StatsError::EmptyIndexList);
    }
    let n = record.amplitudes.len();
    if n < 2 {
        return Err(StatsError::TooFewTrajectories(n));
    }
    if time_index >= record.taus.len() {
        return Err(StatsError::TimeIndexOutOfRange {
            index: time_index,
            len: record.taus.len(),
        });
    }
    let mut entries = Vec::with_capacity(keys.len());
    for key in keys {
        let upper = mode_indices(record, &key.upper)?;
        let lower = mode_indices(record, &key.lower)?;
        let mut mean = Complex64::new(0.0, 0.0);
        for traj in &record.amplitudes {
            mean += monomial(&traj[time_index], &upper, &lower);
        }
        mean /= n as f64;
        let mut var = 0.0;
        for traj in &record.amplitudes {
            var += (monomial(&traj[time_index], &upper, &lower) - mean).norm_sqr();
        }
        var /= (n - 1) as f64;
        entries.push((
            key.clone(),
            MomentEntry {
                value: mean,
                stderr: (var / n as f64).sqrt(),
                n,
            },
        ));
    }
    Ok(MomentTable {
        tau: record.taus[time_index],
        entries,
    })
}

/// Terms of the second-moment balance at one mode and time.
#[derive(Debug, Clone, Copy)]
pub struct Chain2Residual {
    pub k: WaveVector,
    pub tau: f64,
    /// Centered difference dM_k/dτ.
    pub dm_dtau: f64,
    /// −2γ_k M_k.
    pub damping: f64,
    /// +2 b_k².
    pub injection: f64,
    /// 2 Re Σ c·E[a_{k₁}a_{k₂}a*_{k₃}a*_k] over the resonant monomials of
    /// mode k (for the cubic model c = iδ·mult, so this is the
    /// −2δ·mult·Im(M⁴) exchange term).
    pub exchange: f64,
    /// dm_dtau − (damping + injection + exchange).
    pub residual: f64,
    /// Monte-Carlo scale of the ingredients (3σ-style bound helper).
    pub noise_scale: f64,
}

/// Residual of dM_k/dτ = −2γ_k M_k + 2b_k² + (resonant exchange), with the
/// time derivative from centered differences over the record stride.
///
/// The exchange sum runs over every resonant monomial of mode k, diagonal
/// patterns included: their moments are real in expectation and cancel from
/// the balance, which the estimate inherits statistically rather than by
/// pruning.
pub fn chain2_residual(
    record: &EnsembleRecord,
    table: &MonomialTable,
    params: &ModelParams,
    k: &WaveVector,
    time_index: usize,
) -> Result<Chain2Residual, StatsError> {
    let n = record.amplitudes.len();
    if n < 2 {
        return Err(StatsError::TooFewTrajectories(n));
    }
    if time_index == 0 || time_index + 1 >= record.taus.len() {
        return Err(StatsError::InsufficientTimeResolution);
    }
    let spacing = record.taus[time_index + 1] - record.taus[time_index - 1];
    if !(spacing > 0.0) {
        return Err(StatsError::InsufficientTimeResolution);
    }

    let key = MomentKey::second(*k);
    let before = estimate_moments(record, time_index - 1, std::slice::from_ref(&key))?;
    let here = estimate_moments(record, time_index, std::slice::from_ref(&key))?;
    let after = estimate_moments(record, time_index + 1, std::slice::from_ref(&key))?;
    let m_before = before.get(&key).unwrap();
    let m_here = here.get(&key).unwrap();
    let m_after = after.get(&key).unwrap();
    let dm_dtau = (m_after.value.re - m_before.value.re) / spacing;

    let grid = params.grid();
    let k_idx = grid
        .index(k)
        .ok_or(StatsError::ModeNotRecorded(*k))?;
    // the record must hold the full grid in grid order for table indices to
    // apply directly
    let full_grid = record.modes.len() == grid.len()
        && grid.iter().zip(&record.modes).all(|(a, b)| a == *b);
    if !full_grid {
        return Err(StatsError::ModeNotRecorded(*k));
    }

    let mut exchange = Complex64::new(0.0, 0.0);
    let mut exchange_var = 0.0;
    match &table.kind {
        TableKind::Cubic(monos) => {
            for m in monos.iter().filter(|m| m.k == k_idx) {
                let mut mean = Complex64::new(0.0, 0.0);
                for traj in &record.amplitudes {
                    let s = &traj[time_index];
                    mean += s[m.k1] * s[m.k2] * s[m.k3].conj() * s[k_idx].conj();
                }
                mean /= n as f64;
                let mut var = 0.0;
                for traj in &record.amplitudes {
                    let s = &traj[time_index];
                    var += (s[m.k1] * s[m.k2] * s[m.k3].conj() * s[k_idx].conj() - mean)
                        .norm_sqr();
                }
                var /= (n - 1) as f64;
                exchange += m.coeff * mean;
                exchange_var += m.coeff.norm_sqr() * var / n as f64;
            }
        }
        TableKind::Quadratic(monos) => {
            for m in monos.iter().filter(|m| m.k == k_idx) {
                let mut mean = Complex64::new(0.0, 0.0);
                for traj in &record.amplitudes {
                    let s = &traj[time_index];
                    mean += s[m.k1] * s[m.k2] * s[k_idx].conj();
                }
                mean /= n as f64;
                let mut var = 0.0;
                for traj in &record.amplitudes {
                    let s = &traj[time_index];
                    var += (s[m.k1] * s[m.k2] * s[k_idx].conj() - mean).norm_sqr();
                }
                var /= (n - 1) as f64;
                exchange += m.coeff * mean;
                exchange_var += m.coeff.norm_sqr() * var / n as f64;
            }
        }
    }
    let exchange = 2.0 * exchange.re;

    let gamma = params.gamma_at(k);
    let b = params.forcing_at(k) * f64::from(params.mu);
    let damping = -2.0 * gamma * m_here.value.re;
    let injection = 2.0 * b * b;
    let residual = dm_dtau - (damping + injection + exchange);
    let deriv_noise = (m_after.stderr.powi(2) + m_before.stderr.powi(2)).sqrt() / spacing;
    let noise_scale = deriv_noise + 2.0 * gamma * m_here.stderr + 2.0 * exchange_var.sqrt();
    Ok(Chain2Residual {
        k: *k,
        tau: record.taus[time_index],
        dm_dtau,
        damping,
        injection,
        exchange,
        residual,
        noise_scale,
    })
}

/// Quasi-Gaussian (Wick) prediction of the sixth moment
/// E[a_{u₁}a_{u₂}a_{u₃} a*_{l₁}a*_{l₂}a*_{l₃}] from diagonal second moments
/// M_k = E|a_k|²: the sum over the six upper-lower pairings of
/// δ-products times M_{u₁}M_{u₂}M_{u₃}.
pub fn quasi_gaussian_predict(
    second: &dyn Fn(&WaveVector) -> f64,
    upper: &[WaveVector; 3],
    lower: &[WaveVector; 3],
) -> f64 {
    let mut total = 0.0;
    // permutations of (0,1,2) pairing upper[i] with lower[perm[i]]
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for perm in PERMS {
        let mut term = 1.0;
        for (i, &j) in perm.iter().enumerate() {
            if upper[i] == lower[j] {
                term *= second(&upper[i]);
            } else {
                term = 0.0;
                break;
            }
        }
        total += term;
    }
    total
}

/// Quasi-stationary fourth-moment approximation: with the relaxation rate
/// Σγ = γ_k+γ_{k₁}+γ_{k₂}+γ_{k₃} and a slowly varying source f, the moment
/// sits at M ≈ f/Σγ.
pub fn quasi_stationary_solve(f: f64, gamma_sum: f64) -> f64 {
    f / gamma_sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldState, Model, Profile};
    use crate::integrate::{IntegratorConfig, Scheme, Simulator, System};
    use crate::testutil::SplitMix64;
    use approx::assert_relative_eq;
    use num_rational::BigRational;
    use num_traits::One;
    use std::collections::BTreeMap;

    fn single_mode_params(gamma: f64, b: f64, mu: u8, delta: f64) -> ModelParams {
        ModelParams {
            model: Model::Nls {
                dim: 1,
                box_size: BigRational::one(),
                delta,
            },
            cutoff: 0,
            epsilon: 1.0,
            nu: 1.0,
            mu,
            gamma: Profile::Uniform(gamma),
            forcing: Profile::Uniform(b),
        }
    }

    fn synthetic_gaussian_record(
        modes: &[WaveVector],
        sigmas: &[f64],
        n_traj: usize,
        seed: u64,
    ) -> EnsembleRecord {
        let mut rng = SplitMix64(seed);
        let amplitudes: Vec<Vec<Vec<Complex64>>> = (0..n_traj)
            .map(|_| {
                vec![modes
                    .iter()
                    .zip(sigmas)
                    .map(|(_, s)| {
                        // complex Gaussian, E|a|² = s²
                        let u1: f64 = rng.next_f64().max(1e-300);
                        let u2 = rng.next_f64();
                        let r = (-u1.ln()).sqrt() * s;
                        Complex64::from_polar(r, std::f64::consts::TAU * u2)
                    })
                    .collect()]
            })
            .collect();
        EnsembleRecord {
            taus: vec![0.0],
            modes: modes.to_vec(),
            amplitudes,
        }
    }

    #[test]
    fn deterministic_ensemble_moments_equal_single_trajectory_monomials() {
        // b = 0, common initial data: every trajectory is identical
        let params = single_mode_params(0.4, 0.0, 0, 0.0);
        let sim = Simulator::new(
            params,
            System::Effective,
            IntegratorConfig {
                scheme: Scheme::ExponentialEuler,
                dt: 0.1,
                t_final: 1.0,
                record_stride: 5,
            },
        )
        .unwrap();
        let mut init = FieldState::zero(1, 0, false);
        init.set(&WaveVector::d1(0), Complex64::new(0.6, -0.3));
        let record = sim
            .ensemble_record(&init, 4, 7, &[WaveVector::d1(0)])
            .unwrap();
        let key = MomentKey::second(WaveVector::d1(0));
        let table = estimate_moments(&record, 2, &[key.clone()]).unwrap();
        let entry = table.get(&key).unwrap();
        let direct = record.amplitudes[0][2][0].norm_sqr();
        assert_relative_eq!(entry.value.re, direct, max_relative = 1e-12);
        assert!(entry.stderr <= 1e-14);
    }

    #[test]
    fn estimation_input_validation() {
        let record = synthetic_gaussian_record(&[WaveVector::d1(0)], &[1.0], 1, 5);
        let key = MomentKey::second(WaveVector::d1(0));
        assert_eq!(
            estimate_moments(&record, 0, &[key.clone()]).unwrap_err(),
            StatsError::TooFewTrajectories(1)
        );
        let record = synthetic_gaussian_record(&[WaveVector::d1(0)], &[1.0], 8, 5);
        assert_eq!(
            estimate_moments(&record, 0, &[]).unwrap_err(),
            StatsError::EmptyIndexList
        );
        assert!(matches!(
            estimate_moments(&record, 3, &[key.clone()]),
            Err(StatsError::TimeIndexOutOfRange { .. })
        ));
        let missing = MomentKey::second(WaveVector::d1(1));
        assert_eq!(
            estimate_moments(&record, 0, &[missing]).unwrap_err(),
            StatsError::ModeNotRecorded(WaveVector::d1(1))
        );
    }

    #[test]
    fn gaussian_fourth_moments_obey_wick_within_3_sigma() {
        let modes = [
            WaveVector::d2(1, 0),
            WaveVector::d2(0, 1),
            WaveVector::d2(1, 1),
        ];
        let sigmas = [0.8, 1.1, 0.6];
        let record = synthetic_gaussian_record(&modes, &sigmas, 60_000, 12);
        // E|a_i|²|a_j|² = M_i M_j (i≠j) and 2M_i² (i=j)
        for (i, j, expect) in [
            (0usize, 1usize, (0.8f64 * 0.8) * (1.1 * 1.1)),
            (0, 0, 2.0 * (0.8f64 * 0.8) * (0.8 * 0.8)),
            (1, 2, (1.1f64 * 1.1) * (0.6 * 0.6)),
        ] {
            let key = MomentKey {
                upper: vec![modes[i], modes[j]],
                lower: vec![modes[i], modes[j]],
            };
            let table = estimate_moments(&record, 0, &[key.clone()]).unwrap();
            let e = table.get(&key).unwrap();
            assert!(
                (e.value.re - expect).abs() <= 3.0 * e.stderr,
                "({i},{j}): {} vs {expect} ± {}",
                e.value.re,
                e.stderr
            );
            assert!(e.value.im.abs() <= 3.0 * e.stderr);
        }
    }

    #[test]
    fn wick_prediction_matches_brute_force_pairing_enumeration() {
        // independent oracle: enumerate pairings as permutations explicitly
        fn brute(second: &BTreeMap<WaveVector, f64>, u: &[WaveVector; 3], l: &[WaveVector; 3]) -> f64 {
            let perms = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            let mut sum = 0.0;
            for p in perms {
                let mut term = 1.0;
                for i in 0..3 {
                    term *= if u[i] == l[p[i]] {
                        second[&u[i]]
                    } else {
                        0.0
                    };
                }
                sum += term;
            }
            sum
        }
        let mut second = BTreeMap::new();
        second.insert(WaveVector::d1(1), 0.7);
        second.insert(WaveVector::d1(2), 1.3);
        second.insert(WaveVector::d1(3), 0.4);
        let f = |k: &WaveVector| second[k];

        // all distinct with no matching partner: zero
        let zero = quasi_gaussian_predict(
            &f,
            &[WaveVector::d1(1), WaveVector::d1(2), WaveVector::d1(3)],
            &[WaveVector::d1(3), WaveVector::d1(3), WaveVector::d1(3)],
        );
        assert_eq!(zero, 0.0);

        // repeated triple: combinatorial weight 3! = 6
        let k = WaveVector::d1(2);
        let rep = quasi_gaussian_predict(&f, &[k, k, k], &[k, k, k]);
        assert_relative_eq!(rep, 6.0 * 1.3f64.powi(3), max_relative = 1e-14);

        let mut rng = SplitMix64(3);
        for _ in 0..50 {
            let pick = |rng: &mut SplitMix64| WaveVector::d1((rng.next_u64() % 3) as i32 + 1);
            let u = [pick(&mut rng), pick(&mut rng), pick(&mut rng)];
            let l = [pick(&mut rng), pick(&mut rng), pick(&mut rng)];
            assert_relative_eq!(
                quasi_gaussian_predict(&f, &u, &l),
                brute(&second, &u, &l),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn wick_prediction_symmetric_under_group_permutations() {
        let f = |k: &WaveVector| 0.5 + f64::from(k.m().abs());
        let u = [WaveVector::d1(1), WaveVector::d1(2), WaveVector::d1(1)];
        let l = [WaveVector::d1(1), WaveVector::d1(1), WaveVector::d1(2)];
        let base = quasi_gaussian_predict(&f, &u, &l);
        let perms = [[0usize, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for pu in perms {
            for pl in perms {
                let uu = [u[pu[0]], u[pu[1]], u[pu[2]]];
                let ll = [l[pl[0]], l[pl[1]], l[pl[2]]];
                assert_eq!(quasi_gaussian_predict(&f, &uu, &ll), base);
            }
        }
    }

    #[test]
    fn linear_model_chain2_residual_within_noise() {
        // δ = 0: stationary OU, the balance reduces to dM/dτ ≈ −2γM + 2b²
        let params = single_mode_params(0.5, 0.6, 1, 0.0);
        let table = MonomialTable::resonant(&params, None).unwrap();
        let sim = Simulator::new(
            params.clone(),
            System::Effective,
            IntegratorConfig {
                scheme: Scheme::ExponentialEuler,
                dt: 0.02,
                t_final: 30.0,
                record_stride: 25,
            },
        )
        .unwrap();
        let init = FieldState::zero(1, 0, false);
        let record = sim
            .ensemble_record(&init, 4000, 31, &[WaveVector::d1(0)])
            .unwrap();
        let mid = record.taus.len() - 10;
        let r = chain2_residual(&record, &table, &params, &WaveVector::d1(0), mid).unwrap();
        assert_eq!(r.exchange, 0.0);
        assert!(
            r.residual.abs() <= 4.0 * r.noise_scale,
            "residual {} vs noise scale {}",
            r.residual,
            r.noise_scale
        );
        // algebraic balance at stationarity: −2γM + 2b² ≈ 0
        assert!(
            (r.damping + r.injection).abs() <= 4.0 * r.noise_scale + 0.05 * r.injection,
            "damping {} + injection {}",
            r.damping,
            r.injection
        );
    }

    #[test]
    fn chain2_residual_invariant_under_global_phase_rotation() {
        let params = single_mode_params(0.5, 0.6, 1, 0.0);
        let table = MonomialTable::resonant(&params, None).unwrap();
        let sim = Simulator::new(
            params.clone(),
            System::Effective,
            IntegratorConfig {
                scheme: Scheme::ExponentialEuler,
                dt: 0.05,
                t_final: 10.0,
                record_stride: 20,
            },
        )
        .unwrap();
        let record = sim
            .ensemble_record(&FieldState::zero(1, 0, false), 64, 5, &[WaveVector::d1(0)])
            .unwrap();
        let mut rotated = record.clone();
        let phase = Complex64::from_polar(1.0, 1.234);
        for traj in &mut rotated.amplitudes {
            for t in traj.iter_mut() {
                for z in t.iter_mut() {
                    *z *= phase;
                }
            }
        }
        let mid = record.taus.len() / 2;
        let a = chain2_residual(&record, &table, &params, &WaveVector::d1(0), mid).unwrap();
        let b = chain2_residual(&rotated, &table, &params, &WaveVector::d1(0), mid).unwrap();
        // invariant up to the re-rounding of the rotated products
        let scale = a.injection.abs() + a.damping.abs() + a.dm_dtau.abs();
        assert!(
            (a.residual - b.residual).abs() <= 1e-12 * scale,
            "{} vs {}",
            a.residual,
            b.residual
        );
        assert!((a.exchange - b.exchange).abs() <= 1e-12 * scale);
    }

    #[test]
    fn chain2_time_resolution_validation() {
        let params = single_mode_params(0.5, 0.6, 1, 0.0);
        let table = MonomialTable::resonant(&params, None).unwrap();
        let record = synthetic_gaussian_record(&[WaveVector::d1(0)], &[1.0], 8, 5);
        assert_eq!(
            chain2_residual(&record, &table, &params, &WaveVector::d1(0), 0).unwrap_err(),
            StatsError::InsufficientTimeResolution
        );
    }

    /// Linear part of the fourth-moment chain at small cutoff: under pure
    /// damping the moment M^{k₁k₂}_{k₃k} relaxes at exactly
    /// γ_k+γ_{k₁}+γ_{k₂}+γ_{k₃}, the rate the quasi-stationary closure
    /// divides by.
    #[test]
    fn fourth_moment_chain_relaxation_rate_at_small_cutoff() {
        use crate::lattice::box_iter;
        use std::collections::BTreeMap;
        let mut gammas = BTreeMap::new();
        for (i, k) in box_iter(1, 2).enumerate() {
            gammas.insert(k, 0.3 + 0.1 * i as f64);
        }
        let params = ModelParams {
            model: Model::Nls {
                dim: 1,
                box_size: BigRational::one(),
                delta: 0.0,
            },
            cutoff: 2,
            epsilon: 1.0,
            nu: 1.0,
            mu: 0,
            gamma: Profile::PerMode(gammas.clone()),
            forcing: Profile::Uniform(0.0),
        };
        let sim = Simulator::new(
            params,
            System::Effective,
            IntegratorConfig {
                scheme: Scheme::ExponentialEuler,
                dt: 0.01,
                t_final: 1.0,
                record_stride: 50,
            },
        )
        .unwrap();
        let mut init = FieldState::zero(1, 2, false);
        for (i, k) in box_iter(1, 2).enumerate() {
            init.set(&k, Complex64::new(0.5 + 0.1 * i as f64, -0.2 + 0.1 * i as f64));
        }
        let modes: Vec<WaveVector> = box_iter(1, 2).collect();
        let record = sim.ensemble_record(&init, 2, 5, &modes).unwrap();
        // momentum-matching quadruple: k1 + k2 = k3 + k
        let (k1, k2, k3, k) = (
            WaveVector::d1(1),
            WaveVector::d1(-1),
            WaveVector::d1(2),
            WaveVector::d1(-2),
        );
        let key = MomentKey {
            upper: vec![k1, k2],
            lower: vec![k3, k],
        };
        let t0 = estimate_moments(&record, 0, std::slice::from_ref(&key)).unwrap();
        let t1 = estimate_moments(&record, record.taus.len() - 1, std::slice::from_ref(&key))
            .unwrap();
        let dt = record.taus[record.taus.len() - 1] - record.taus[0];
        let ratio = t1.get(&key).unwrap().value.norm() / t0.get(&key).unwrap().value.norm();
        let fitted = -ratio.ln() / dt;
        let expect: f64 = [k1, k2, k3, k].iter().map(|kk| gammas[kk]).sum();
        assert_relative_eq!(fitted, expect, max_relative = 1e-6);
    }

    #[test]
    fn quasi_stationary_tracks_slow_forcing_within_rate_ratio() {
        // ẏ + G y = f(τ) = f₀(1 + α sin ωτ): exact particular solution vs
        // the quasi-stationary y ≈ f/G; sup error ≤ f₀ α ω / G²
        let g = 4.0;
        let f0 = 2.0;
        let alpha = 0.5;
        let omega = 0.25;
        let exact = |tau: f64| {
            f0 / g + f0 * alpha * (g * (omega * tau).sin() - omega * (omega * tau).cos())
                / (g * g + omega * omega)
        };
        let mut sup = 0.0f64;
        for i in 0..=2000 {
            let tau = i as f64 * (std::f64::consts::TAU / omega) / 2000.0;
            let qs = quasi_stationary_solve(f0 * (1.0 + alpha * (omega * tau).sin()), g);
            sup = sup.max((qs - exact(tau)).abs());
        }
        let bound = f0 * alpha * omega / (g * g);
        assert!(sup <= bound * 1.0001, "sup {sup} vs bound {bound}");
        assert!(sup >= bound * 0.5, "bound should be near-tight, sup {sup}");
        // constant forcing is the exact fixed point
        assert_relative_eq!(quasi_stationary_solve(3.0, 1.5), 2.0);
        assert_eq!(quasi_stationary_solve(0.0, 2.0), 0.0);
    }
}
