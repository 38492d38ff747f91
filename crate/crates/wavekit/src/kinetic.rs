//! The wave-kinetic equation: Monte-Carlo evaluation of the collision
//! integral over the four-wave resonant manifold, equilibrium checks,
//! power-law exponent localization, and forward spectrum integration.
//!
//! The manifold k₁+k₂ = k+k₃, |k₁|²+|k₂|² = |k|²+|k₃|² is charted by
//! k₁ = k+p, k₂ = k+q, k₃ = k+p+q with p ⊥ q; resolving the frequency
//! delta leaves the chart weight 1/(2|p|) against d^dp × d^{d−1}q on the
//! orthogonal slice. Power-law spectra are evaluated on an annulus
//! [k_min, k_max] and the integration domain is the all-modes-in-annulus
//! region, so located roots are annulus-conditional.

use crate::integrate::CounterRng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KineticError {
    #[error("kinetic machinery needs d ≥ 2, got {0}")]
    DimensionTooLow(usize),
    #[error("sample budget must be positive")]
    NoSamples,
    #[error("annulus must satisfy 0 < k_min < k_max, got [{0}, {1}]")]
    BadAnnulus(f64, f64),
    #[error("phi = {phi} outside the admissible range [{lo}, {hi}]")]
    PhiOutOfRange { phi: f64, lo: f64, hi: f64 },
    #[error("spectrum blow-up at tau {tau}: max n = {max_n:.3e}")]
    BlowUp { tau: f64, max_n: f64 },
    #[error("grid spectrum needs at least two points")]
    GridTooSmall,
}

/// Volume of the unit ball in R^n (V₀ = 1, V₁ = 2, Vₙ = 2π Vₙ₋₂ / n).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI * unit_ball_volume(n - 2) / n as f64,
    }
}

/// Isotropic wave-action spectrum n(k) on the annulus.
#[derive(Debug, Clone)]
pub enum Spectrum {
    /// amplitude · k^exponent.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// Piecewise-linear radial profile; clamped at the endpoints.
    RadialGrid { ks: Vec<f64>, values: Vec<f64> },
}

impl Spectrum {
    pub fn eval(&self, k: f64) -> f64 {
        match self {
            Spectrum::PowerLaw {
                amplitude,
                exponent,
            } => amplitude * k.powf(*exponent),
            Spectrum::RadialGrid { ks, values } => {
                if k <= ks[0] {
                    return values[0];
                }
                if k >= *ks.last().unwrap() {
                    return *values.last().unwrap();
                }
                let j = ks.partition_point(|&x| x < k).max(1);
                let (x0, x1) = (ks[j - 1], ks[j]);
                let t = (k - x0) / (x1 - x0);
                values[j - 1] * (1.0 - t) + values[j] * t
            }
        }
    }
}

/// Parameters of the kinetic problem: damping law γ(k) = ε′k^m, coupling
/// ε̃, the constant φ model, the annulus, and the sampling budget.
#[derive(Debug, Clone)]
pub struct KineticParams {
    pub dim: usize,
    /// ε′ in γ(k) = ε′ k^m.
    pub gamma_coeff: f64,
    /// m in γ(k) = ε′ k^m.
    pub gamma_exponent: f64,
    /// ε̃; the collision term carries 16 ε̃⁴.
    pub coupling: f64,
    /// Constant φ within [V₁, V₁(3d)^{d−1/2}], V₁ the unit-ball volume in
    /// R^{2d−1}.
    pub phi: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
    pub seed: u64,
    /// Spectrum exponent hint for importance sampling: radial proposals are
    /// drawn with density ∝ r^{hint+dim−1}, which flattens a power-law
    /// integrand of that exponent. 0 falls back to volume-uniform radii;
    /// the estimator stays unbiased for any value.
    pub importance_exponent: f64,
    /// How the annulus truncates the integral; see [`DomainMode`].
    pub domain: DomainMode,
}

/// Treatment of the annulus boundary in the collision integral. The chart
/// always confines the sampled modes k₁, k₂ (and the reference k) to the
/// annulus; the two modes differ in the derived mode k₃ = k₁+k₂−k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    /// Hard inertial window: tuples whose k₃ leaves the annulus are dropped.
    /// The exact equilibria (n ≡ C, n ∝ 1/ω) annihilate the integrand
    /// pointwise on this domain. Near the energy-equipartition flux exponent
    /// the dropped infrared tuples carry a logarithmically divergent weight,
    /// so that root's location is strongly cutoff-biased under this mode.
    Inertial,
    /// Clamped spectral tail: out-of-annulus k₃ keeps its tuple, with n(k₃)
    /// continued by the boundary value (an infrared/ultraviolet reservoir
    /// closure). Removes the log-truncation bias of the energy-flux root;
    /// the equilibria are no longer pointwise zeros.
    ClampedTail,
}

impl KineticParams {
    pub fn new(dim: usize, gamma_coeff: f64, gamma_exponent: f64, k_min: f64, k_max: f64) -> Self {
        KineticParams {
            dim,
            gamma_coeff,
            gamma_exponent,
            coupling: 1.0,
            phi: unit_ball_volume(2 * dim - 1),
            k_min,
            k_max,
            samples: 100_000,
            seed: 0,
            importance_exponent: 0.0,
            domain: DomainMode::Inertial,
        }
    }

    pub fn phi_bounds(&self) -> (f64, f64) {
        let v1 = unit_ball_volume(2 * self.dim - 1);
        (
            v1,
            v1 * (3.0 * self.dim as f64).powf(self.dim as f64 - 0.5),
        )
    }

    pub fn validate(&self) -> Result<(), KineticError> {
        if self.dim < 2 {
            return Err(KineticError::DimensionTooLow(self.dim));
        }
        if !(self.k_min > 0.0 && self.k_max > self.k_min) {
            return Err(KineticError::BadAnnulus(self.k_min, self.k_max));
        }
        if self.samples == 0 {
            return Err(KineticError::NoSamples);
        }
        let (lo, hi) = self.phi_bounds();
        if !(self.phi >= lo && self.phi <= hi) {
            return Err(KineticError::PhiOutOfRange {
                phi: self.phi,
                lo,
                hi,
            });
        }
        Ok(())
    }

    pub fn gamma(&self, k: f64) -> f64 {
        self.gamma_coeff * k.powf(self.gamma_exponent)
    }

    /// φ⁻¹ / (γ+γ₁+γ₂+γ₃): the regularized interaction kernel.
    pub fn t_kernel(&self, k: f64, k1: f64, k2: f64, k3: f64) -> f64 {
        1.0 / (self.phi * (self.gamma(k) + self.gamma(k1) + self.gamma(k2) + self.gamma(k3)))
    }
}

/// The cubic collision combination
/// n₁n₂n₃ + n n₁n₂ − n n₂n₃ − n n₁n₃ on radial magnitudes.
pub fn bracket(n: &Spectrum, k: f64, k1: f64, k2: f64, k3: f64) -> f64 {
    let (nv, n1, n2, n3) = (n.eval(k), n.eval(k1), n.eval(k2), n.eval(k3));
    n1 * n2 * n3 + nv * n1 * n2 - nv * n2 * n3 - nv * n1 * n3
}

/// One chart point with its importance weight.
#[derive(Debug, Clone)]
pub struct ManifoldSample {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k3: Vec<f64>,
    /// Inverse proposal density × chart density 1/(2|p|): the estimator is
    /// the sample mean of weight × integrand.
    pub weight: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Surface area of the unit sphere in R^n.
fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Draw a radius on [lo, hi] with density ∝ r^{alpha−1} (inverse CDF);
/// returns (r, mass) with mass = ∫ r^{alpha−1} dr, so the proposal density
/// is r^{alpha−1}/mass. alpha → 0 degenerates to log-uniform.
fn power_radius(lo: f64, hi: f64, alpha: f64, u: f64) -> (f64, f64) {
    if alpha.abs() < 1e-9 {
        let mass = (hi / lo).ln();
        (lo * (u * mass).exp(), mass)
    } else {
        let (la, ha) = (lo.powf(alpha), hi.powf(alpha));
        let mass = (ha - la) / alpha;
        let r = (la + u * (ha - la)).powf(1.0 / alpha);
        (r.clamp(lo, hi), mass)
    }
}

/// Deterministic uniform direction on the unit sphere of R^dim.
fn unit_direction(
    dim: usize,
    rng: &CounterRng,
    stream: u64,
    step: u64,
    mode_base: u64,
) -> Vec<f64> {
    let mut g = Vec::with_capacity(dim);
    let mut i = 0;
    while g.len() < dim {
        let (a, b) = rng.normal_pair(stream, mode_base + i, step);
        g.push(a);
        if g.len() < dim {
            g.push(b);
        }
        i += 1;
    }
    let gn = norm(&g).max(1e-300);
    g.iter().map(|x| x / gn).collect()
}

/// Orthonormal basis of p^⊥ via a Householder reflection carrying e₁ to
/// ±p/|p|.
fn perp_basis(p: &[f64]) -> Vec<Vec<f64>> {
    let d = p.len();
    let pn = norm(p);
    let u: Vec<f64> = p.iter().map(|x| x / pn).collect();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += sign;
    let ww: f64 = w.iter().map(|x| x * x).sum();
    (1..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let proj = 2.0 * w[j] / ww;
            for i in 0..d {
                e[i] -= proj * w[i];
            }
            e
        })
        .collect()
}

/// Draw one chart sample around k with importance tailored to power-law
/// spectra on the annulus:
///
/// - k₁ = k + p with |k₁| log-uniform in [k_min, k_max] and uniform
///   direction (inverse density A_d·L₁·r₁^d);
/// - q ⊥ p drawn on the circles |k₂| = const of the orthogonal slice:
///   |k₂| log-uniform in [max(k_min, |k_∥|), k_max] (k_∥ the component of
///   k along p̂, the smallest reachable |k₂|), direction uniform on the
///   circle. The integrand is constant on those circles, so this angular
///   coordinate contributes no variance.
///
/// For d = 2 the slice is a line and q is drawn uniformly on it. Degenerate
/// p or q (the diagonal tuples) and empty |k₂| ranges return None.
pub fn sample_manifold(
    k: &[f64],
    params: &KineticParams,
    rng: &CounterRng,
    stream: u64,
    sample_idx: u64,
) -> Option<ManifoldSample> {
    let d = params.dim;
    debug_assert_eq!(k.len(), d);
    let alpha1 = params.importance_exponent + d as f64;

    // k1: power-law-importance radius in the annulus
    let u_r1 = rng.uniform(stream, 0, sample_idx, 2);
    let (r1, mass1) = power_radius(params.k_min, params.k_max, alpha1, u_r1);
    let dir1 = unit_direction(d, rng, stream, sample_idx, 1);
    let k1: Vec<f64> = dir1.iter().map(|x| x * r1).collect();
    let p: Vec<f64> = k1.iter().zip(k).map(|(a, b)| a - b).collect();
    let p_norm = norm(&p);
    if p_norm < 1e-12 * params.k_max {
        return None;
    }
    let w1 = unit_sphere_area(d) * mass1 * r1.powf(d as f64 - alpha1);

    let basis = perp_basis(&p);
    let (q, w2) = if d == 2 {
        // uniform on the perpendicular segment
        let half_len = norm(k) + params.k_max;
        let u = rng.uniform(stream, 8, sample_idx, 3);
        let s = (2.0 * u - 1.0) * half_len;
        if s.abs() < 1e-12 * params.k_max {
            return None;
        }
        (basis[0].iter().map(|x| x * s).collect::<Vec<f64>>(), 2.0 * half_len)
    } else {
        // decompose k against p̂ inside/outside the slice
        let k_par: f64 = k.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / p_norm;
        // in-plane component of k expressed in the slice basis
        let k_perp_coords: Vec<f64> = basis
            .iter()
            .map(|b| k.iter().zip(b).map(|(a, x)| a * x).sum::<f64>())
            .collect();
        let r2_lo = params.k_min.max(k_par.abs());
        if r2_lo >= params.k_max {
            return None;
        }
        let alpha2 = params.importance_exponent + (d - 1) as f64;
        let u_r2 = rng.uniform(stream, 8, sample_idx, 3);
        let (r2, mass2) = power_radius(r2_lo, params.k_max, alpha2, u_r2);
        let s = (r2 * r2 - k_par * k_par).max(0.0).sqrt();
        if s < 1e-12 * params.k_max {
            return None;
        }
        let circle_dir = unit_direction(d - 1, rng, stream, sample_idx, 9);
        // q = −k_perp + s·(circle direction), in slice coordinates
        let q_coords: Vec<f64> = k_perp_coords
            .iter()
            .zip(&circle_dir)
            .map(|(kc, c)| -kc + s * c)
            .collect();
        let mut q = vec![0.0; d];
        for (c, b) in q_coords.iter().zip(&basis) {
            for i in 0..d {
                q[i] += c * b[i];
            }
        }
        if norm(&q) < 1e-12 * params.k_max {
            return None;
        }
        // d^{d−1}q = s^{d−2} ds dΩ_{d−2} with s ds = r2 dr2
        let w2 =
            unit_sphere_area(d - 1) * mass2 * r2.powf(2.0 - alpha2) * s.powi(d as i32 - 3);
        (q, w2)
    };

    let k2: Vec<f64> = k.iter().zip(&q).map(|(a, b)| a + b).collect();
    let k3: Vec<f64> = k1.iter().zip(&q).map(|(a, b)| a + b).collect();
    Some(ManifoldSample {
        k1,
        k2,
        k3,
        weight: w1 * w2 / (2.0 * p_norm),
    })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct CollisionEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Samples landing inside the all-modes-in-annulus domain.
    pub hits: usize,
}

/// 16ε̃⁴ ∫ φ⁻¹/(Σγ) · bracket over the chart; the annulus boundary is
/// treated per `params.domain`.
pub fn collision_integral(
    n: &Spectrum,
    k_mag: f64,
    params: &KineticParams,
    stream: u64,
) -> Result<CollisionEstimate, KineticError> {
    params.validate()?;
    let d = params.dim;
    let mut k = vec![0.0; d];
    k[0] = k_mag;
    let rng = CounterRng::new(params.seed);
    let prefactor = 16.0 * params.coupling.powi(4);
    let inside = |x: f64| x >= params.k_min && x <= params.k_max;

    let chunk = 1 << 14;
    let n_chunks = params.samples.div_ceil(chunk);
    let partials: Vec<(f64, f64, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(params.samples);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut hits = 0usize;
            for s in lo..hi {
                let value = match sample_manifold(&k, params, &rng, stream, s as u64) {
                    Some(m) => {
                        let (m1, m2, m3) = (norm(&m.k1), norm(&m.k2), norm(&m.k3));
                        let accept = inside(k_mag)
                            && inside(m1)
                            && inside(m2)
                            && (params.domain == DomainMode::ClampedTail || inside(m3));
                        if accept {
                            hits += 1;
                            let m3_n = match params.domain {
                                DomainMode::Inertial => m3,
                                DomainMode::ClampedTail => {
                                    m3.clamp(params.k_min, params.k_max)
                                }
                            };
                            prefactor
                                * m.weight
                                * params.t_kernel(k_mag, m1, m2, m3)
                                * bracket(n, k_mag, m1, m2, m3_n)
                        } else {
                            0.0
                        }
                    }
                    None => 0.0,
                };
                sum += value;
                sum_sq += value * value;
            }
            (sum, sum_sq, hits)
        })
        .collect();
    let (sum, sum_sq, hits) = partials.iter().fold((0.0, 0.0, 0), |acc, p| {
        (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2)
    });
    let n_samp = params.samples as f64;
    let mean = sum / n_samp;
    let var = (sum_sq / n_samp - mean * mean).max(0.0);
    Ok(CollisionEstimate {
        value: mean,
        stderr: (var / n_samp).sqrt(),
        samples: params.samples,
        hits,
    })
}

/// Deterministic evaluation of the d = 3 isotropic collision integral by
/// tensor quadrature, reducing the manifold to (r₁, θ₁, r₂) with
/// r₃² = r₁² + r₂² − k² fixed by the conservation laws:
///
///   I(k) = 2π²·16ε̃⁴ ∫ r₁² dr₁ ∫ sinθ dθ (1/|p|) ∫ r₂ dr₂ · T · bracket.
///
/// An independent route to the same integral as [`collision_integral`];
/// used as its oracle and for root cross-checks. `n_grid` midpoint cells
/// per dimension (log-spaced radii).
pub fn collision_integral_quadrature(
    n: &Spectrum,
    k_mag: f64,
    params: &KineticParams,
    n_grid: usize,
) -> Result<f64, KineticError> {
    params.validate()?;
    if params.dim != 3 {
        return Err(KineticError::DimensionTooLow(params.dim));
    }
    let clamped = params.domain == DomainMode::ClampedTail;
    let (lr_min, lr_max) = (params.k_min.ln(), params.k_max.ln());
    let mut total = 0.0;
    for i in 0..n_grid {
        let r1 = (lr_min + (lr_max - lr_min) * (i as f64 + 0.5) / n_grid as f64).exp();
        let w_r1 = r1 * (lr_max - lr_min) / n_grid as f64;
        for j in 0..n_grid {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / n_grid as f64;
            let w_th = std::f64::consts::PI / n_grid as f64;
            let ct = theta.cos();
            let p2 = r1 * r1 - 2.0 * k_mag * r1 * ct + k_mag * k_mag;
            if p2 < 1e-14 {
                continue;
            }
            let p = p2.sqrt();
            let k_par = (k_mag * r1 * ct - k_mag * k_mag) / p;
            let r2_lo = params.k_min.max(k_par.abs());
            if r2_lo >= params.k_max {
                continue;
            }
            let (l2lo, l2hi) = (r2_lo.ln(), params.k_max.ln());
            let mut inner = 0.0;
            for l in 0..n_grid {
                let r2 = (l2lo + (l2hi - l2lo) * (l as f64 + 0.5) / n_grid as f64).exp();
                let w_r2 = r2 * (l2hi - l2lo) / n_grid as f64;
                let r3sq = r1 * r1 + r2 * r2 - k_mag * k_mag;
                if r3sq <= 0.0 {
                    continue;
                }
                let r3 = r3sq.sqrt();
                let r3_n = if clamped {
                    r3.clamp(params.k_min, params.k_max)
                } else if r3 < params.k_min || r3 > params.k_max {
                    continue;
                } else {
                    r3
                };
                inner += w_r2
                    * r2
                    * params.t_kernel(k_mag, r1, r2, r3)
                    * bracket(n, k_mag, r1, r2, r3_n);
            }
            total += w_r1 * r1 * r1 * w_th * theta.sin() * inner / p;
        }
    }
    Ok(2.0 * std::f64::consts::PI.powi(2) * 16.0 * params.coupling.powi(4) * total)
}

/// The distinguished stationary exponents of the inertial-range equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawExponents {
    /// −(m+3d−2)/3.
    pub flux_action: f64,
    /// −(m+3d)/3.
    pub flux_energy: f64,
    /// Equipartition of wave action.
    pub equilibrium_action: f64,
    /// Equipartition of quadratic energy, n ∝ 1/ω.
    pub equilibrium_energy: f64,
}

pub fn power_law_exponents(dim: usize, m: f64) -> PowerLawExponents {
    let d = dim as f64;
    PowerLawExponents {
        flux_action: -(m + 3.0 * d - 2.0) / 3.0,
        flux_energy: -(m + 3.0 * d) / 3.0,
        equilibrium_action: 0.0,
        equilibrium_energy: -2.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub exponent: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Midpoints of sign-change intervals.
    pub sign_changes: Vec<f64>,
    /// Root locations refined by a variance-weighted linear fit over the
    /// grid points flanking each sign change; duplicates within half a
    /// grid step are merged.
    pub refined_roots: Vec<f64>,
    /// True when noise exceeds the signal at every grid point: the scan
    /// carries no information and must not be read as a pass.
    pub inconclusive: bool,
}

/// Weighted least-squares zero crossing of estimate(exponent) over a small
/// window; None when the fitted slope is insignificant or the root falls
/// outside the window.
fn fitted_root(rows: &[ScanRow]) -> Option<f64> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let w = 1.0 / r.stderr.max(1e-300).powi(2);
        sw += w;
        sx += w * r.exponent;
        sy += w * r.estimate;
        sxx += w * r.exponent * r.exponent;
        sxy += w * r.exponent * r.estimate;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    if slope == 0.0 {
        return None;
    }
    let root = -intercept / slope;
    let (lo, hi) = (rows[0].exponent, rows[rows.len() - 1].exponent);
    (root >= lo - 1e-12 && root <= hi + 1e-12).then_some(root)
}

/// Evaluate the collision integral at the reference wavenumber
/// √(k_min·k_max) across a grid of spectrum exponents and report sign
/// changes.
pub fn stationarity_scan(
    params: &KineticParams,
    exponents: &[f64],
) -> Result<ScanTable, KineticError> {
    params.validate()?;
    let k_ref = (params.k_min * params.k_max).sqrt();
    scan_at_reference(params, exponents, k_ref)
}

/// [`stationarity_scan`] with an explicit reference wavenumber. Each grid
/// point samples with the importance exponent matched to its spectrum.
pub fn scan_at_reference(
    params: &KineticParams,
    exponents: &[f64],
    k_ref: f64,
) -> Result<ScanTable, KineticError> {
    params.validate()?;
    let mut rows = Vec::with_capacity(exponents.len());
    for (i, &nu) in exponents.iter().enumerate() {
        let spectrum = Spectrum::PowerLaw {
            amplitude: 1.0,
            exponent: nu,
        };
        let mut tuned = params.clone();
        tuned.importance_exponent = nu;
        let est = collision_integral(&spectrum, k_ref, &tuned, i as u64)?;
        rows.push(ScanRow {
            exponent: nu,
            estimate: est.value,
            stderr: est.stderr,
        });
    }
    let inconclusive = rows.iter().all(|r| r.estimate.abs() <= r.stderr);
    let mut sign_changes = Vec::new();
    let mut refined_roots: Vec<f64> = Vec::new();
    let step = if rows.len() >= 2 {
        (rows[1].exponent - rows[0].exponent).abs()
    } else {
        0.0
    };
    for i in 0..rows.len().saturating_sub(1) {
        if rows[i].estimate * rows[i + 1].estimate < 0.0 {
            sign_changes.push(0.5 * (rows[i].exponent + rows[i + 1].exponent));
            let lo = i.saturating_sub(1);
            let hi = (i + 3).min(rows.len());
            let root = fitted_root(&rows[lo..hi])
                .unwrap_or_else(|| 0.5 * (rows[i].exponent + rows[i + 1].exponent));
            if !refined_roots
                .iter()
                .any(|r| (r - root).abs() <= 0.5 * step)
            {
                refined_roots.push(root);
            }
        }
    }
    Ok(ScanTable {
        rows,
        sign_changes,
        refined_roots,
        inconclusive,
    })
}

/// Forcing profile for the forward solver.
#[derive(Debug, Clone)]
pub enum KineticForcing {
    Zero,
    /// amplitude · exp(−(k−center)²/(2 width²)).
    Ring {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl KineticForcing {
    pub fn eval(&self, k: f64) -> f64 {
        match self {
            KineticForcing::Zero => 0.0,
            KineticForcing::Ring {
                amplitude,
                center,
                width,
            } => amplitude * (-((k - center) / width).powi(2) / 2.0).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KineticTrajectory {
    pub taus: Vec<f64>,
    pub ks: Vec<f64>,
    /// spectra[t][grid point]
    pub spectra: Vec<Vec<f64>>,
    /// Negativity clippings; repeated clipping flags the run unresolved.
    pub clip_events: usize,
}

/// Explicit RK4 on dn/dτ = −2γ(k)n + 𝔟(k)² + collision(n), with
/// nonnegativity enforced by counted clipping.
pub fn integrate_kinetic(
    initial: &Spectrum,
    ks: &[f64],
    forcing: &KineticForcing,
    params: &KineticParams,
    t_final: f64,
    dt: f64,
) -> Result<KineticTrajectory, KineticError> {
    params.validate()?;
    if ks.len() < 2 {
        return Err(KineticError::GridTooSmall);
    }
    let mut values: Vec<f64> = ks.iter().map(|&k| initial.eval(k)).collect();
    let n_steps = (t_final / dt).round() as usize;
    let mut taus = vec![0.0];
    let mut spectra = vec![values.clone()];
    let mut clip_events = 0usize;

    let rhs = |vals: &[f64], stage: u64, step: usize| -> Result<Vec<f64>, KineticError> {
        let spectrum = Spectrum::RadialGrid {
            ks: ks.to_vec(),
            values: vals.to_vec(),
        };
        let mut out = Vec::with_capacity(ks.len());
        for (i, &k) in ks.iter().enumerate() {
            let stream = (step as u64) * 64 + stage * 16 + i as u64;
            let coll = collision_integral(&spectrum, k, params, stream)?;
            let b = forcing.eval(k);
            out.push(-2.0 * params.gamma(k) * vals[i] + b * b + coll.value);
        }
        Ok(out)
    };

    for step in 0..n_steps {
        let k1 = rhs(&values, 0, step)?;
        let v2: Vec<f64> = values.iter().zip(&k1).map(|(v, d)| v + 0.5 * dt * d).collect();
        let k2 = rhs(&v2, 1, step)?;
        let v3: Vec<f64> = values.iter().zip(&k2).map(|(v, d)| v + 0.5 * dt * d).collect();
        let k3 = rhs(&v3, 2, step)?;
        let v4: Vec<f64> = values.iter().zip(&k3).map(|(v, d)| v + dt * d).collect();
        let k4 = rhs(&v4, 3, step)?;
        for i in 0..values.len() {
            values[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if values[i] < 0.0 {
                values[i] = 0.0;
                clip_events += 1;
            }
        }
        let max_n = values.iter().cloned().fold(0.0, f64::max);
        if !max_n.is_finite() || max_n > 1e12 {
            return Err(KineticError::BlowUp {
                tau: (step + 1) as f64 * dt,
                max_n,
            });
        }
        taus.push((step + 1) as f64 * dt);
        spectra.push(values.clone());
    }
    Ok(KineticTrajectory {
        taus,
        ks: ks.to_vec(),
        spectra,
        clip_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0);
        assert_relative_eq!(
            unit_ball_volume(5),
            8.0 * std::f64::consts::PI * std::f64::consts::PI / 15.0
        );
    }

    #[test]
    fn bracket_equipartition_is_exactly_zero() {
        let n = Spectrum::PowerLaw {
            amplitude: 1.7,
            exponent: 0.0,
        };
        for (k, k1, k2, k3) in [(1.0, 2.0, 3.0, 4.0), (0.5, 9.3, 2.2, 7.1)] {
            assert_eq!(bracket(&n, k, k1, k2, k3), 0.0);
        }
    }

    #[test]
    fn bracket_rayleigh_jeans_vanishes_on_manifold_only() {
        let params = KineticParams::new(3, 1.0, 0.0, 0.1, 50.0);
        let n = Spectrum::PowerLaw {
            amplitude: 2.3,
            exponent: -2.0,
        };
        let rng = CounterRng::new(5);
        let k = [3.0, 0.0, 0.0];
        for s in 0..2000 {
            let Some(m) = sample_manifold(&k, &params, &rng, 0, s) else {
                continue;
            };
            let (k1, k2, k3) = (norm(&m.k1), norm(&m.k2), norm(&m.k3));
            let b = bracket(&n, 3.0, k1, k2, k3);
            let scale =
                n.eval(3.0).abs() * n.eval(k1).abs() * n.eval(k2).abs() + n.eval(k3).abs();
            assert!(b.abs() <= 1e-12 * scale.max(1.0), "sample {s}: {b}");
        }
        // off-manifold the same combination is nonzero
        let b = bracket(&n, 3.0, 1.0, 1.0, 1.0);
        assert!(b.abs() > 1e-6);
    }

    #[test]
    fn samples_satisfy_both_conservation_laws() {
        let params = KineticParams::new(3, 1.0, 0.0, 0.1, 10.0);
        let rng = CounterRng::new(11);
        let k = [2.0, -1.0, 0.5];
        let mut checked = 0;
        for s in 0..500 {
            let Some(m) = sample_manifold(&k, &params, &rng, 3, s) else {
                continue;
            };
            for i in 0..3 {
                let lhs = m.k1[i] + m.k2[i];
                let rhs = k[i] + m.k3[i];
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
            let lhs = norm(&m.k1).powi(2) + norm(&m.k2).powi(2);
            let rhs = norm(&k).powi(2) + norm(&m.k3).powi(2);
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
            checked += 1;
        }
        assert!(checked > 450);
    }

    /// Chart volume of {rp₁ ≤ |p| ≤ rp₂, q_lo ≤ |q| ≤ q_hi} (a region
    /// inside the sampler's coverage) against the closed form
    /// S_d·(rp₂^{d−1}−rp₁^{d−1})/(2(d−1)) · V_{d−1}·(q_hi^{d−1}−q_lo^{d−1}),
    /// an independent algebraic route to the same pushforward.
    #[test]
    fn chart_volume_matches_analytic_value() {
        for d in [2usize, 3] {
            let params = KineticParams::new(d, 1.0, 0.0, 0.05, 3.0);
            let rng = CounterRng::new(17);
            let (rp1, rp2) = (0.8, 2.4);
            let (q_lo, q_hi) = (0.1, 1.5);
            let n_samples = 400_000u64;
            let k = vec![0.0; d];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for s in 0..n_samples {
                let mut val = 0.0;
                if let Some(m) = sample_manifold(&k, &params, &rng, 0, s) {
                    // recover p = k1 − k, q = k2 − k
                    let p: Vec<f64> = m.k1.iter().zip(&k).map(|(a, b)| a - b).collect();
                    let q: Vec<f64> = m.k2.iter().zip(&k).map(|(a, b)| a - b).collect();
                    let pn = norm(&p);
                    let qn = norm(&q);
                    if pn >= rp1 && pn <= rp2 && qn >= q_lo && qn <= q_hi {
                        val = m.weight;
                    }
                }
                sum += val;
                sum_sq += val * val;
            }
            let mean = sum / n_samples as f64;
            let stderr =
                ((sum_sq / n_samples as f64 - mean * mean) / n_samples as f64).sqrt();
            let surface = d as f64 * unit_ball_volume(d); // S_{d−1} of unit sphere
            let expect = unit_ball_volume(d - 1)
                * (q_hi.powi(d as i32 - 1) - q_lo.powi(d as i32 - 1))
                * surface
                * (rp2.powi(d as i32 - 1) - rp1.powi(d as i32 - 1))
                / (2.0 * (d as f64 - 1.0));
            assert!(
                (mean - expect).abs() <= 3.0 * stderr,
                "d={d}: {mean} vs {expect} ± {stderr}"
            );
        }
    }

    /// Integer-lattice solution count over the same region, as an
    /// order-of-magnitude cross-check of the chart density (the discrete
    /// count carries arithmetic multiplicities the continuum chart does
    /// not, so only a bounded ratio is asserted).
    #[test]
    fn chart_volume_consistent_with_lattice_count() {
        
        let r: i32 = 5;
        let rf = f64::from(r);
        let mut count = 0usize;
        for px in -r..=r {
            for py in -r..=r {
                if (px, py) == (0, 0) || f64::from(px * px + py * py).sqrt() > rf {
                    continue;
                }
                for qx in -r..=r {
                    for qy in -r..=r {
                        if (qx, qy) == (0, 0) || px * qx + py * qy != 0 {
                            continue;
                        }
                        if f64::from(qx * qx + qy * qy).sqrt() > rf {
                            continue;
                        }
                        count += 1;
                    }
                }
            }
        }
        // continuum chart volume of {0 < |p| ≤ r, |q| ≤ r}
        let volume = 2.0 * std::f64::consts::PI * rf * rf; // ∫ 2r/(2|p|) d²p
        let ratio = count as f64 / volume;
        assert!(
            (0.5..=8.0).contains(&ratio),
            "count {count} vs volume {volume}: ratio {ratio}"
        );
    }

    #[test]
    fn collision_integral_vanishes_on_equilibria() {
        let mut params = KineticParams::new(3, 1.0, 0.0, 0.5, 20.0);
        params.samples = 50_000;
        params.seed = 23;
        let k_ref = (params.k_min * params.k_max).sqrt();

        let flat = Spectrum::PowerLaw {
            amplitude: 1.0,
            exponent: 0.0,
        };
        let est = collision_integral(&flat, k_ref, &params, 0).unwrap();
        assert_eq!(est.value, 0.0, "equipartition integrand is exactly zero");
        assert_eq!(est.stderr, 0.0);
        assert!(est.hits > 0);

        let rj = Spectrum::PowerLaw {
            amplitude: 1.0,
            exponent: -2.0,
        };
        let est = collision_integral(&rj, k_ref, &params, 0).unwrap();
        assert!(
            est.value.abs() <= 2.0 * est.stderr.max(1e-14),
            "{} ± {}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn estimates_agree_across_seeds() {
        let mut params = KineticParams::new(3, 1.0, 0.0, 0.5, 20.0);
        params.samples = 80_000;
        let spectrum = Spectrum::PowerLaw {
            amplitude: 1.0,
            exponent: -1.5,
        };
        let k_ref = (params.k_min * params.k_max).sqrt();
        params.seed = 1;
        let a = collision_integral(&spectrum, k_ref, &params, 0).unwrap();
        params.seed = 2;
        let b = collision_integral(&spectrum, k_ref, &params, 0).unwrap();
        let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!(
            (a.value - b.value).abs() <= 3.0 * combined,
            "{} vs {} ± {combined}",
            a.value,
            b.value
        );
        assert!(a.value.abs() > 3.0 * a.stderr, "signal should be resolved");
    }

    #[test]
    fn t_kernel_symmetries_and_homogeneity_exact() {
        let params = KineticParams::new(3, 0.7, 2.0, 0.1, 100.0);
        let (k, k1, k2, k3) = (1.3, 2.9, 0.4, 3.3);
        let t = params.t_kernel(k, k1, k2, k3);
        assert_eq!(t, params.t_kernel(k3, k1, k2, k));
        assert_eq!(t, params.t_kernel(k, k2, k1, k3));
        assert_eq!(t, params.t_kernel(k1, k, k3, k2));
        // degree −m under exact doubling
        let t2 = params.t_kernel(2.0 * k, 2.0 * k1, 2.0 * k2, 2.0 * k3);
        assert_relative_eq!(t2, t / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn exponent_table() {
        let e = power_law_exponents(2, 0.0);
        assert_relative_eq!(e.flux_action, -4.0 / 3.0);
        assert_relative_eq!(e.flux_energy, -2.0);
        let e = power_law_exponents(3, 0.0);
        assert_relative_eq!(e.flux_action, -7.0 / 3.0);
        assert_relative_eq!(e.flux_energy, -3.0);
        let e = power_law_exponents(2, 2.0);
        assert_relative_eq!(e.flux_action, -2.0);
        assert_relative_eq!(e.flux_energy, -8.0 / 3.0);
        assert_eq!(e.equilibrium_action, 0.0);
        assert_eq!(e.equilibrium_energy, -2.0);
    }

    /// Each flux root is localized under the boundary treatment matched to
    /// its divergence structure: the action-flux root (UV-divergent
    /// integrand) by the hard inertial window at an infrared-side
    /// reference, the energy-flux root (IR-log-divergent) by the
    /// clamped-tail closure at the central reference.
    #[test]
    fn scan_smoke_localizes_flux_roots() {
        let mut params = KineticParams::new(3, 1.0, 0.0, 0.2, 20.0);
        params.samples = 250_000;
        params.seed = 7;
        let grid: Vec<f64> = (0..=12).map(|i| -3.35 + 0.1 * i as f64).collect();

        let k_ir = params.k_min * (params.k_max / params.k_min).powf(0.35);
        let inertial = scan_at_reference(&params, &grid, k_ir).unwrap();
        assert!(!inertial.inconclusive);
        assert!(
            inertial
                .sign_changes
                .iter()
                .any(|x| (x + 7.0 / 3.0).abs() <= 0.2),
            "action-flux root not localized: {:?}",
            inertial.sign_changes
        );

        params.domain = DomainMode::ClampedTail;
        let clamped = stationarity_scan(&params, &grid).unwrap();
        assert!(!clamped.inconclusive);
        assert!(
            clamped
                .sign_changes
                .iter()
                .any(|x| (x + 3.0).abs() <= 0.2),
            "energy-flux root not localized: {:?}",
            clamped.sign_changes
        );
    }

    #[test]
    fn kinetic_relaxation_without_collision_is_exact() {
        let mut params = KineticParams::new(3, 0.4, 0.0, 0.5, 10.0);
        params.coupling = 0.0;
        params.samples = 10;
        let ks: Vec<f64> = (0..6).map(|i| 1.0 + i as f64).collect();
        let forcing = KineticForcing::Ring {
            amplitude: 0.8,
            center: 3.0,
            width: 1.0,
        };
        let n0 = Spectrum::PowerLaw {
            amplitude: 0.3,
            exponent: 0.0,
        };
        let dt = 0.01;
        let traj = integrate_kinetic(&n0, &ks, &forcing, &params, 2.0, dt).unwrap();
        assert_eq!(traj.clip_events, 0);
        let g = 2.0 * params.gamma(1.0);
        for (ti, tau) in traj.taus.iter().enumerate() {
            for (i, &k) in ks.iter().enumerate() {
                let b2 = forcing.eval(k).powi(2);
                let expect = b2 / g + (0.3 - b2 / g) * (-g * tau).exp();
                assert!(
                    (traj.spectra[ti][i] - expect).abs() <= 1e-8,
                    "tau {tau} k {k}: {} vs {expect}",
                    traj.spectra[ti][i]
                );
            }
        }
        // zero initial data, zero forcing: identically zero
        let z = integrate_kinetic(
            &Spectrum::PowerLaw {
                amplitude: 0.0,
                exponent: 0.0,
            },
            &ks,
            &KineticForcing::Zero,
            &params,
            0.5,
            dt,
        )
        .unwrap();
        assert!(z.spectra.iter().all(|row| row.iter().all(|&v| v == 0.0)));
    }

    /// Forced-damped forward run settles toward a τ-independent spectrum:
    /// the residual dn/dτ shrinks markedly from start to finish.
    #[test]
    fn forced_damped_kinetic_run_approaches_stationarity() {
        let mut params = KineticParams::new(3, 0.5, 0.0, 0.5, 8.0);
        params.coupling = 0.4;
        params.samples = 4000;
        params.seed = 3;
        let ks: Vec<f64> = (0..6)
            .map(|i| 0.5 * ((8.0f64 / 0.5).ln() * i as f64 / 5.0).exp())
            .collect();
        let forcing = KineticForcing::Ring {
            amplitude: 0.5,
            center: 2.0,
            width: 0.8,
        };
        let n0 = Spectrum::PowerLaw {
            amplitude: 0.0,
            exponent: 0.0,
        };
        let traj = integrate_kinetic(&n0, &ks, &forcing, &params, 4.0, 0.05).unwrap();
        let rate = |a: &[f64], b: &[f64], dt: f64| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| ((y - x) / dt).abs())
                .fold(0.0, f64::max)
        };
        let early = rate(&traj.spectra[0], &traj.spectra[1], 0.05);
        let late = rate(
            &traj.spectra[traj.spectra.len() - 2],
            &traj.spectra[traj.spectra.len() - 1],
            0.05,
        );
        assert!(
            late < 0.15 * early,
            "residual did not settle: early {early:.3e}, late {late:.3e}"
        );
        assert!(traj.spectra.last().unwrap().iter().any(|&v| v > 1e-3));
    }

    #[test]
    fn parameter_validation() {
        let mut p = KineticParams::new(1, 1.0, 0.0, 0.1, 10.0);
        assert_eq!(p.validate().unwrap_err(), KineticError::DimensionTooLow(1));
        p.dim = 3;
        p.k_min = -1.0;
        assert!(matches!(p.validate(), Err(KineticError::BadAnnulus(_, _))));
        p.k_min = 0.1;
        p.phi = 1e9;
        assert!(matches!(p.validate(), Err(KineticError::PhiOutOfRange { .. })));
        p.phi = unit_ball_volume(5);
        p.samples = 0;
        assert_eq!(p.validate().unwrap_err(), KineticError::NoSamples);
        p.samples = 10;
        p.validate().unwrap();
    }
}
