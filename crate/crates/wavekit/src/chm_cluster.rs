//! Closed-form ground truth for the beta-plane effective cluster dynamics:
//! the three-mode invariant subsystem {ã_k, ã_k̄, ã_(0,2n)}, its explicit
//! periodic solution, catalytic Ornstein-Uhlenbeck modes, and the
//! second-moment ODEs.
//!
//! The coupling here is the normative
//!
//!   A_k = 2mn(3n²ρ² − m²) / (m² + n²ρ² + Fρ²),
//!
//! while the resonant-sum effective equation carries −A_k/ρ per monomial;
//! the exact ratio −1/ρ is exposed in [`sum_coupling_ratio`] and pinned by
//! tests rather than silently absorbed.

use crate::integrate::{ou_exact_step, CounterRng};
use crate::lattice::WaveVector;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

/// Amplitudes of one invariant subsystem: the pair (m,n), (m,−n) and the
/// catalytic zonal mode (0,2n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster3State {
    pub a_k: Complex64,
    pub a_kbar: Complex64,
    pub a_c: Complex64,
}

impl Cluster3State {
    pub fn pair_action(&self) -> f64 {
        self.a_k.norm_sqr() + self.a_kbar.norm_sqr()
    }
}

/// A_k with its frozen flag. Frozen modes (mn = 0 or 3n²ρ² = m²) carry zero
/// coupling and constant amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub value: f64,
    pub frozen: bool,
}

/// Exact A_k as a rational in ρ²; the frozen test 3n²ρ² = m² is exact.
pub fn coupling_exact(
    k: &WaveVector,
    rho2: &BigRational,
    froude: &BigRational,
) -> (BigRational, bool) {
    let m = i64::from(k.m());
    let n = i64::from(k.n());
    let m2 = BigRational::from_integer((m * m).into());
    let n2 = BigRational::from_integer((n * n).into());
    let three_n2_rho2 = BigRational::from_integer(3.into()) * &n2 * rho2;
    if m * n == 0 || three_n2_rho2 == m2 {
        return (BigRational::zero(), true);
    }
    let numer = BigRational::from_integer((2 * m * n).into()) * (&three_n2_rho2 - &m2);
    let denom = &m2 + (&n2 + froude) * rho2;
    (numer / denom, false)
}

pub fn coupling(k: &WaveVector, rho2: &BigRational, froude: &BigRational) -> Coupling {
    let (value, frozen) = coupling_exact(k, rho2, froude);
    Coupling {
        value: crate::field::rational_f64(&value),
        frozen,
    }
}

/// The exact constant relating the two coupling conventions: the
/// slot-symmetrized resonant-sum coefficient equals (−1/ρ)·A_k.
pub fn sum_coupling_ratio(rho: &BigRational) -> BigRational {
    -rho.recip()
}

/// dã_k = A_k ã_c ã_k̄, dã_k̄ = −A_k ã_c* ã_k, dã_c = 0.
pub fn cluster_rhs(state: &Cluster3State, coupling: f64) -> Cluster3State {
    Cluster3State {
        a_k: coupling * state.a_c * state.a_kbar,
        a_kbar: -coupling * state.a_c.conj() * state.a_k,
        a_c: Complex64::new(0.0, 0.0),
    }
}

fn sgn(z: Complex64) -> Complex64 {
    if z.norm_sqr() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / z.norm()
    }
}

/// Explicit solution of the subsystem at time t: ã_c constant,
///
///   ã_k(t)  = ã_k(0)  cos(|A ã_c| t) + ã_k̄(0) sgn(A ã_c)  sin(|A ã_c| t),
///   ã_k̄(t) = ã_k̄(0) cos(|A ã_c| t) + ã_k(0)  sgn(−A ã_c*) sin(|A ã_c| t),
///
/// the second line being the first under k ↔ k̄ (so A ↦ −A) with ã_c
/// conjugated. A vanishing ã_c (or a frozen coupling) freezes the whole
/// subsystem: every derivative is zero and the formula degenerates to the
/// constant state.
pub fn closed_form(initial: &Cluster3State, coupling: f64, t: f64) -> Cluster3State {
    let drive = coupling * initial.a_c;
    let theta = drive.norm();
    let (s, c) = (theta * t).sin_cos();
    Cluster3State {
        a_k: initial.a_k * c + initial.a_kbar * sgn(drive) * s,
        a_kbar: initial.a_kbar * c + initial.a_k * sgn(-coupling * initial.a_c.conj()) * s,
        a_c: initial.a_c,
    }
}

/// Period 2π/|A ã_c| of the pair rotation; None for frozen configurations.
pub fn period(initial: &Cluster3State, coupling: f64) -> Option<f64> {
    let theta = (coupling * initial.a_c).norm();
    (theta > 0.0).then(|| std::f64::consts::TAU / theta)
}

/// Damping and forcing amplitudes of the three modes.
#[derive(Debug, Clone, Copy)]
pub struct ClusterNoise {
    pub gamma_k: f64,
    pub gamma_kbar: f64,
    pub gamma_c: f64,
    pub b_k: f64,
    pub b_kbar: f64,
    pub b_c: f64,
}

/// Second moments M = E|ã|² of the subsystem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMoments {
    pub m_k: f64,
    pub m_kbar: f64,
    pub m_c: f64,
}

/// Closed moment equations under the crate's noise convention
/// (E|bΔβ|² = 2b²Δτ):
///
///   d(M_k + M_k̄)/dτ = −2γ_k M_k − 2γ_k̄ M_k̄ + 2(b_k² + b_k̄²),
///   dM_c/dτ          = −2γ_c M_c + 2b_c².
///
/// The Hamiltonian exchange cancels inside the pair sum, which is what
/// closes the system. Returns (d(M_k+M_k̄)/dτ, dM_c/dτ).
pub fn moment_ode(m: &ClusterMoments, p: &ClusterNoise) -> (f64, f64) {
    let pair = -2.0 * p.gamma_k * m.m_k - 2.0 * p.gamma_kbar * m.m_kbar
        + 2.0 * (p.b_k * p.b_k + p.b_kbar * p.b_kbar);
    let cat = -2.0 * p.gamma_c * m.m_c + 2.0 * p.b_c * p.b_c;
    (pair, cat)
}

/// Fixed point of [`moment_ode`] for equal pair damping γ_k = γ_k̄:
/// (M_k + M_k̄, M_c) at stationarity.
pub fn stationary_moments(p: &ClusterNoise) -> (f64, f64) {
    assert_eq!(p.gamma_k, p.gamma_kbar, "pair fixed point needs equal damping");
    (
        (p.b_k * p.b_k + p.b_kbar * p.b_kbar) / p.gamma_k,
        p.b_c * p.b_c / p.gamma_c,
    )
}

/// Exact Ornstein-Uhlenbeck trajectory of a catalytic mode, recorded at
/// every step.
pub fn ou_mode(
    a0: Complex64,
    gamma: f64,
    b: f64,
    dt: f64,
    steps: usize,
    rng: &CounterRng,
    stream: u64,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut a = a0;
    out.push(a);
    for step in 0..steps {
        a = ou_exact_step(a, gamma, b, dt, rng.normal_pair(stream, 0, step as u64));
        out.push(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::SplitMix64;
    use approx::assert_relative_eq;
    use num_traits::One;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn coupling_examples() {
        let one = BigRational::one();
        let zero = BigRational::zero();
        let c = coupling(&WaveVector::d2(1, 1), &one, &zero);
        assert!(!c.frozen);
        assert_relative_eq!(c.value, 2.0);

        // A_(m,−n) = −A_(m,n), exactly
        for (m, n) in [(1, 1), (2, 3), (-1, 2), (3, -2)] {
            let (a, _) = coupling_exact(&WaveVector::d2(m, n), &rat(9, 4), &rat(1, 2));
            let (abar, _) = coupling_exact(&WaveVector::d2(m, -n), &rat(9, 4), &rat(1, 2));
            assert_eq!(abar, -a);
        }

        let f = coupling(&WaveVector::d2(2, 0), &one, &zero);
        assert!(f.frozen);
        assert_eq!(f.value, 0.0);
        // 3n²ρ² = m²: ρ² = 4/3 with (m,n) = (2,1)
        let f2 = coupling(&WaveVector::d2(2, 1), &rat(4, 3), &zero);
        assert!(f2.frozen);
    }

    #[test]
    fn sum_convention_ratio_is_exact() {
        // symmetrized resonant-sum coefficient of ((0,2n),(m,−n)) → (m,n)
        // equals (−1/ρ)·A_k for every pair
        use crate::resonance::chm_symmetrized_coupling;
        let rho = rat(3, 2);
        let froude = rat(1, 3);
        let rho2 = &rho * &rho;
        for m in -4i32..=4 {
            for n in -4i32..=4 {
                if m == 0 || n == 0 {
                    continue;
                }
                let k = WaveVector::d2(m, n);
                let zonal = WaveVector::d2(0, 2 * n);
                let kbar = WaveVector::d2(m, -n);
                let sum_c = chm_symmetrized_coupling(&zonal, &kbar, &k, &rho, &froude);
                let (a_k, _) = coupling_exact(&k, &rho2, &froude);
                assert_eq!(sum_c, sum_coupling_ratio(&rho) * a_k, "k = {k}");
            }
        }
    }

    #[test]
    fn closed_form_identity_period_and_quarter_turn() {
        let init = Cluster3State {
            a_k: Complex64::new(1.0, 0.0),
            a_kbar: Complex64::new(0.0, 0.0),
            a_c: Complex64::new(0.5, 0.0),
        };
        let a = 2.0; // A_k a_c real positive
        let at0 = closed_form(&init, a, 0.0);
        assert_eq!(at0, init);

        let t_period = period(&init, a).unwrap();
        let back = closed_form(&init, a, t_period);
        assert!((back.a_k - init.a_k).norm() <= 1e-12);
        assert!((back.a_kbar - init.a_kbar).norm() <= 1e-12);

        let quarter = closed_form(&init, a, 0.25 * t_period);
        assert!(quarter.a_k.norm() <= 1e-12, "cos(π/2) kills a_k");
        assert!((quarter.a_kbar - Complex64::new(-1.0, 0.0)).norm() <= 1e-12);
        assert_relative_eq!(quarter.pair_action(), init.pair_action(), max_relative = 1e-12);
    }

    #[test]
    fn closed_form_freezes_when_catalytic_mode_vanishes() {
        let init = Cluster3State {
            a_k: Complex64::new(0.3, -0.4),
            a_kbar: Complex64::new(-0.2, 0.9),
            a_c: Complex64::new(0.0, 0.0),
        };
        let later = closed_form(&init, 5.0, 17.3);
        assert_eq!(later, init);
        let d = cluster_rhs(&init, 5.0);
        assert_eq!(d.a_k.norm(), 0.0);
        assert_eq!(d.a_kbar.norm(), 0.0);
    }

    #[test]
    fn cluster_rhs_matches_closed_form_and_conserves_invariants() {
        // RK4 on cluster_rhs vs the explicit solution, complex a_c
        let mut rng = SplitMix64(31);
        for _ in 0..5 {
            let init = Cluster3State {
                a_k: rng.next_complex(),
                a_kbar: rng.next_complex(),
                a_c: rng.next_complex(),
            };
            let a = 1.0 + rng.next_f64();
            let t_period = period(&init, a).unwrap();
            let dt = 1e-3 * t_period;
            let mut s = init;
            let mut t = 0.0;
            let steps = (3.0 * t_period / dt).round() as usize;
            for step in 0..steps {
                // classical RK4
                let k1 = cluster_rhs(&s, a);
                let s2 = add(&s, &k1, 0.5 * dt);
                let k2 = cluster_rhs(&s2, a);
                let s3 = add(&s, &k2, 0.5 * dt);
                let k3 = cluster_rhs(&s3, a);
                let s4 = add(&s, &k3, dt);
                let k4 = cluster_rhs(&s4, a);
                s = Cluster3State {
                    a_k: s.a_k + dt / 6.0 * (k1.a_k + 2.0 * k2.a_k + 2.0 * k3.a_k + k4.a_k),
                    a_kbar: s.a_kbar
                        + dt / 6.0
                            * (k1.a_kbar + 2.0 * k2.a_kbar + 2.0 * k3.a_kbar + k4.a_kbar),
                    a_c: s.a_c,
                };
                t = (step + 1) as f64 * dt;
                let exact = closed_form(&init, a, t);
                assert!(
                    (s.a_k - exact.a_k).norm() <= 1e-6
                        && (s.a_kbar - exact.a_kbar).norm() <= 1e-6,
                    "diverged at t = {t}"
                );
            }
            // invariants along the closed form, three periods
            for frac in 0..300 {
                let tt = 3.0 * t_period * frac as f64 / 300.0;
                let e = closed_form(&init, a, tt);
                assert_relative_eq!(e.pair_action(), init.pair_action(), max_relative = 1e-13);
                assert_eq!(e.a_c, init.a_c);
            }
            let _ = t;
        }

        fn add(s: &Cluster3State, d: &Cluster3State, h: f64) -> Cluster3State {
            Cluster3State {
                a_k: s.a_k + h * d.a_k,
                a_kbar: s.a_kbar + h * d.a_kbar,
                a_c: s.a_c,
            }
        }
    }

    #[test]
    fn pair_invariant_derivative_vanishes_algebraically() {
        let mut rng = SplitMix64(77);
        for _ in 0..20 {
            let s = Cluster3State {
                a_k: rng.next_complex(),
                a_kbar: rng.next_complex(),
                a_c: rng.next_complex(),
            };
            let a = 3.0 * rng.next_sym();
            let d = cluster_rhs(&s, a);
            let deriv = 2.0 * (d.a_k * s.a_k.conj()).re + 2.0 * (d.a_kbar * s.a_kbar.conj()).re;
            assert!(deriv.abs() <= 1e-14, "{deriv}");
        }
    }

    #[test]
    fn moment_ode_fixed_point_and_decay() {
        let p = ClusterNoise {
            gamma_k: 0.5,
            gamma_kbar: 0.5,
            gamma_c: 0.8,
            b_k: 0.3,
            b_kbar: 0.4,
            b_c: 0.6,
        };
        let (pair_star, mc_star) = stationary_moments(&p);
        assert_relative_eq!(pair_star, (0.09 + 0.16) / 0.5);
        assert_relative_eq!(mc_star, 0.36 / 0.8);
        let m = ClusterMoments {
            m_k: pair_star / 2.0,
            m_kbar: pair_star / 2.0,
            m_c: mc_star,
        };
        let (dp, dc) = moment_ode(&m, &p);
        assert!(dp.abs() <= 1e-14 && dc.abs() <= 1e-14);

        // b = 0: exponential decay
        let free = ClusterNoise {
            b_k: 0.0,
            b_kbar: 0.0,
            b_c: 0.0,
            ..p
        };
        let m0 = ClusterMoments {
            m_k: 1.0,
            m_kbar: 2.0,
            m_c: 3.0,
        };
        let (dp, dc) = moment_ode(&m0, &free);
        assert!(dp < 0.0 && dc < 0.0);
        assert_relative_eq!(dc, -2.0 * 0.8 * 3.0);
    }

    #[test]
    fn ou_mode_statistics() {
        let rng = CounterRng::new(99);
        let gamma = 0.6;
        let b = 0.7;
        let dt = 0.05;
        let steps = 100_000;
        let traj = ou_mode(Complex64::new(3.0, -2.0), gamma, b, dt, steps, &rng, 0);

        // b = 0 decays deterministically
        let decay = ou_mode(Complex64::new(1.0, 1.0), gamma, 0.0, 0.5, 10, &rng, 1);
        for (i, z) in decay.iter().enumerate() {
            let expect = Complex64::new(1.0, 1.0) * (-gamma * 0.5 * i as f64).exp();
            assert!((z - expect).norm() <= 1e-12);
        }

        // stationary variance b²/γ within 5% (skip the relaxation)
        let skip = 2_000;
        let samples = &traj[skip..];
        let mean_sq: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
        let target = b * b / gamma;
        assert!(
            (mean_sq - target).abs() <= 0.05 * target,
            "E|a|² = {mean_sq}, target {target}"
        );

        // autocorrelation time 1/γ within 10%: fit the lag-τ decay of
        // C(τ) = E[a(t+τ)a*(t)] ~ e^{−γτ}
        let lag_time = 1.0 / gamma;
        let lag = (lag_time / dt).round() as usize;
        let n = samples.len() - lag;
        let mut c0 = 0.0;
        let mut cl = Complex64::new(0.0, 0.0);
        for i in 0..n {
            c0 += samples[i].norm_sqr();
            cl += samples[i + lag] * samples[i].conj();
        }
        let ratio = (cl / c0).re;
        let gamma_hat = -ratio.ln() / (lag as f64 * dt);
        assert!(
            (gamma_hat - gamma).abs() <= 0.1 * gamma,
            "fitted decay rate {gamma_hat}, true {gamma}"
        );
    }
}
