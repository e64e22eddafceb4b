//! Thermal sector states, per-sector and total mixed-state fidelities,
//! zero-temperature overlap limits, and parameter-plane sweeps.
//!
//! The total fidelity between the Gibbs states of two parameter points
//! factorizes over the momentum grid; every sector contributes
//! `F_k = tr sqrt(rho_k^{1/2} rhot_k rho_k^{1/2})`, evaluated through the
//! eigenvalues of `rho_k rhot_k`. Accumulation happens in the log domain
//! because the product over thousands of sectors underflows near
//! criticality.

use crate::error::{FidelityError, SectorError};
use crate::fock::DIM;
use crate::matfun::{
    expm_shifted, graded_product_eigenvalues, sum_principal_sqrt, trace_sqrt_product,
    ComplexMatrix,
};
use crate::model::{momentum_grid, CouplingParams, Parity, PolarField, IM_TOL};
use crate::scalar::{as_f64, creal, re, Real, C};
use crate::sector::{
    analytic_left_eigenstate, analytic_right_eigenstate, build_sector_hamiltonian,
    sector_eigensystem, BiorthogonalEigensystem, Method,
};
use num_complex::Complex;

/// Gibbs state of one momentum sector.
#[derive(Debug, Clone)]
pub struct ThermalSectorState<T: Real> {
    pub k: T,
    pub params: CouplingParams<T>,
    /// Inverse temperature in units of 1/J.
    pub beta: T,
    /// Trace-one 16x16 density matrix.
    pub rho: ComplexMatrix<T>,
    /// Log of the unnormalized trace that was divided out.
    pub log_norm: T,
    /// Whether any contributing quasiparticle energy had |Im eps| above tolerance.
    pub pt_broken: bool,
    /// Spectral data behind `rho` when the eigensystem route succeeded;
    /// `None` when the state came from the matrix-exponential fallback.
    spectral: Option<SpectralCache<T>>,
}

#[derive(Debug, Clone)]
struct SpectralCache<T: Real> {
    /// Normalized Gibbs weights, level order, summing to one.
    weights: Vec<C<T>>,
    sys: BiorthogonalEigensystem<T>,
}

/// Gate on `|sum of weights|` below which the spectral assembly of the
/// Gibbs state is considered cancelled (near a trace zero) and the
/// matrix-exponential fallback is used instead.
const TRACE_CANCEL_TOL: f64 = 1e-8;

/// Gate on (cluster-Gram quality) x (largest weight): beyond this the
/// spectral sum would amplify round-off, so fall back to the exponential.
const SPECTRAL_QUALITY_CAP: f64 = 1e5;

/// Build the sector Gibbs state `exp(-beta J h_k) / tr exp(-beta J h_k)`.
///
/// The weights are `exp(-2 beta J eps_n)` normalized with the largest
/// magnitude shifted to one, so no intermediate over- or underflows for any
/// `beta >= 0`. Near exceptional points (or when the analytic eigensystem is
/// unavailable) the state falls back to a Pade matrix exponential of the
/// shifted sector matrix.
pub fn thermal_sector_state<T: Real>(
    k: T,
    p: &CouplingParams<T>,
    beta: T,
) -> Result<ThermalSectorState<T>, FidelityError> {
    assert!(beta >= T::zero(), "inverse temperature must be nonnegative");
    let wrap = |e: SectorError| FidelityError::Sector { k: as_f64(k), source: e };
    if beta == T::zero() {
        // both Gibbs weights and trace are exact at infinite temperature
        let dim_inv = T::one() / re::<T>(DIM as f64);
        return Ok(ThermalSectorState {
            k,
            params: *p,
            beta,
            rho: ComplexMatrix::identity(DIM).scale(creal(dim_inv)),
            log_norm: re::<T>(DIM as f64).ln(),
            pt_broken: sector_is_broken(k, p),
            spectral: None,
        });
    }
    let sys = sector_eigensystem(k, p, Method::Auto).map_err(wrap)?;
    let pt_broken = sys
        .values
        .iter()
        .any(|v| (v.im * re::<T>(0.5)).abs() > re::<T>(IM_TOL));
    // exponents -beta J (2 eps_n), shifted so the largest real part is zero
    let scale = -beta * p.j;
    let shift = sys
        .values
        .iter()
        .map(|v| v.re * scale)
        .fold(T::neg_infinity(), T::max);
    let weights: Vec<C<T>> = sys
        .values
        .iter()
        .map(|v| (v.scale(scale) - creal(shift)).exp())
        .collect();
    let z: C<T> = weights
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &w| acc + w);
    let wmax = weights.iter().map(|w| w.norm()).fold(T::zero(), T::max);
    let quality_ok = as_f64(sys.gram_quality * wmax) < SPECTRAL_QUALITY_CAP
        && z.norm() > re::<T>(TRACE_CANCEL_TOL) * wmax;
    if quality_ok {
        let weights: Vec<C<T>> = weights.into_iter().map(|w| w / z).collect();
        let mut wl = ComplexMatrix::zeros(DIM);
        for i in 0..DIM {
            for j in 0..DIM {
                wl[(i, j)] = weights[i] * sys.left[(i, j)];
            }
        }
        let rho = sys.right.mul(&wl);
        return Ok(ThermalSectorState {
            k,
            params: *p,
            beta,
            rho,
            log_norm: shift + z.norm().ln(),
            pt_broken,
            spectral: Some(SpectralCache { weights, sys }),
        });
    }
    // fallback: shifted Pade exponential of the sector matrix
    let h = build_sector_hamiltonian(k, p);
    let m = h.matrix.scale(creal(scale));
    let (e, _) = expm_shifted(&m, creal(shift)).map_err(|e| wrap(SectorError::Mat(e)))?;
    let tau = e.trace();
    let rho = e.scale(creal(T::one()) / tau);
    Ok(ThermalSectorState {
        k,
        params: *p,
        beta,
        rho,
        log_norm: shift + tau.norm().ln(),
        pt_broken,
        spectral: None,
    })
}

fn sector_is_broken<T: Real>(k: T, p: &CouplingParams<T>) -> bool {
    crate::model::dispersion_all(k, p.polar())
        .iter()
        .any(|e| e.im.abs() > re::<T>(IM_TOL))
}

/// Per-sector complex fidelity `F_k` between two Gibbs states at the same
/// momentum and temperature. Callers take the modulus and logarithm.
pub fn sector_fidelity<T: Real>(
    s1: &ThermalSectorState<T>,
    s2: &ThermalSectorState<T>,
) -> Result<C<T>, FidelityError> {
    debug_assert!(s1.k == s2.k, "sector momenta must match");
    debug_assert!(s1.beta == s2.beta, "temperatures must match");
    if let (Some(c1), Some(c2)) = (&s1.spectral, &s2.spectral) {
        // graded similarity keeps exponentially small weights accurate
        let lam = graded_product_eigenvalues(
            &c1.weights,
            &c1.sys.right,
            &c1.sys.left,
            &c2.weights,
            &c2.sys.right,
            &c2.sys.left,
        );
        return Ok(sum_principal_sqrt(&lam).value);
    }
    let ts = trace_sqrt_product(&s1.rho, &s2.rho)
        .map_err(|e| FidelityError::Sector { k: as_f64(s1.k), source: SectorError::Mat(e) })?;
    Ok(ts.value)
}

/// One evaluated fidelity between a parameter point and its displaced partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityPoint<T: Real> {
    pub eta: T,
    pub xi: T,
    pub beta: T,
    /// Modulus of the total fidelity, `exp(log_f)`.
    pub f: T,
    /// Log-domain accumulator of `sum_k ln |F_k|`.
    pub log_f: T,
    /// Largest relative imaginary residue `|Im F_k| / |F_k|` over the grid.
    pub im_residual: T,
    /// Number of sectors with PT-broken quasiparticle energies.
    pub broken_sectors: usize,
}

/// Compensated (Kahan) accumulator for the log-fidelity sum.
#[derive(Debug, Clone, Copy)]
struct Kahan<T: Real> {
    sum: T,
    carry: T,
}

impl<T: Real> Kahan<T> {
    fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }
    fn add(&mut self, x: T) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Total mixed-state fidelity between the Gibbs states of `p1` and `p2`,
/// factorized over the even-sector momentum grid, accumulated in ascending
/// momentum order.
pub fn total_fidelity<T: Real>(
    p1: &CouplingParams<T>,
    p2: &CouplingParams<T>,
    beta: T,
    pairs: usize,
) -> Result<FidelityPoint<T>, FidelityError> {
    assert_eq!(p1.pairs, pairs, "pair counts must agree");
    assert_eq!(p2.pairs, pairs, "pair counts must agree");
    let grid = momentum_grid::<T>(pairs, Parity::Even)?;
    let mut log_f = Kahan::new();
    let mut im_residual = T::zero();
    let mut broken = 0usize;
    for &k in &grid.paired {
        let s1 = thermal_sector_state(k, p1, beta)?;
        let s2 = thermal_sector_state(k, p2, beta)?;
        if s1.pt_broken || s2.pt_broken {
            broken += 1;
        }
        let fk = sector_fidelity(&s1, &s2)?;
        let mag = fk.norm();
        log_f.add(mag.ln());
        if mag > T::zero() {
            im_residual = im_residual.max(fk.im.abs() / mag);
        }
    }
    Ok(FidelityPoint {
        eta: p1.eta,
        xi: p1.xi,
        beta,
        f: log_f.sum.exp(),
        log_f: log_f.sum,
        im_residual,
        broken_sectors: broken,
    })
}

/// Symmetrically normalized overlap of the level-1 left state at
/// `(r + dr, phi)` with the level-1 right state at `(r - dr, phi)`.
pub fn ground_overlap<T: Real>(k: T, r: T, phi: T, dr: T) -> Result<T, FidelityError> {
    if dr == T::zero() {
        return Ok(T::one());
    }
    let point = |rr: T| {
        CouplingParams::new(rr * phi.cos(), rr * phi.sin(), 2).expect("valid pair count")
    };
    let plus = point(r + dr);
    let minus = point(r - dr);
    let wrap = |e: SectorError| FidelityError::Sector { k: as_f64(k), source: e };
    let l_plus = analytic_left_eigenstate(1, k, &plus).map_err(wrap)?;
    let r_minus = analytic_right_eigenstate(1, k, &minus).map_err(wrap)?;
    let l_minus = analytic_left_eigenstate(1, k, &minus).map_err(wrap)?;
    let r_plus = analytic_right_eigenstate(1, k, &plus).map_err(wrap)?;
    let dot = |l: &[C<T>], r: &[C<T>]| {
        l.iter()
            .zip(r)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
    };
    let cross = dot(&l_plus, &r_minus).norm();
    let self_plus = dot(&l_plus, &r_plus).norm();
    let self_minus = dot(&l_minus, &r_minus).norm();
    Ok(cross / (self_plus * self_minus).sqrt())
}

/// Analytic `k -> 0` limit of [`ground_overlap`] for a radial pair
/// straddling the critical circle at `(1 + dr, phi)` and `(1 - dr, phi)`.
///
/// The limit vanishes except at the three-phase points `phi = pi/2, 3pi/2`,
/// where it takes the finite value `dr / ((1 + dr) sqrt(2 dr - dr^2))`
/// (about `sqrt(dr/2)` for small `dr`). Coincident points (`dr = 0`) give 1.
pub fn limit_overlap_k0<T: Real>(r: T, phi: T, dr: T) -> T {
    debug_assert!((r - T::one()).abs() <= dr + re::<T>(1e-9), "pair must straddle the circle");
    if dr <= T::zero() {
        return T::one();
    }
    let half_pi = T::FRAC_PI_2();
    let three_half_pi = half_pi * re::<T>(3.0);
    let tol = re::<T>(1e-9);
    if (phi - half_pi).abs() < tol || (phi - three_half_pi).abs() < tol {
        dr / ((T::one() + dr) * (re::<T>(2.0) * dr - dr * dr).sqrt())
    } else {
        T::zero()
    }
}

/// Zero-temperature fidelity: the product of [`ground_overlap`] factors over
/// the even momentum grid.
pub fn zero_t_fidelity<T: Real>(
    r: T,
    phi: T,
    dr: T,
    pairs: usize,
) -> Result<T, FidelityError> {
    if dr == T::zero() {
        return Ok(T::one());
    }
    let grid = momentum_grid::<T>(pairs, Parity::Even)?;
    let mut acc = Kahan::new();
    for &k in &grid.paired {
        let o = ground_overlap(k, r, phi, dr)?;
        if o == T::zero() {
            return Ok(T::zero());
        }
        acc.add(o.ln());
    }
    Ok(acc.sum.exp())
}

/// How the displaced partner point is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Displacement<T: Real> {
    /// Compare `(eta, xi)` against `(eta + d_eta, xi + d_xi)`.
    Cartesian { d_eta: T, d_xi: T },
    /// Compare `(r + dr, phi)` against `(r - dr, phi)` at the point's angle.
    Radial { dr: T },
}

impl<T: Real> Displacement<T> {
    /// The two parameter points compared at grid node `(eta, xi)`.
    pub fn pair(&self, eta: T, xi: T, pairs: usize) -> (CouplingParams<T>, CouplingParams<T>) {
        match *self {
            Displacement::Cartesian { d_eta, d_xi } => (
                CouplingParams::new(eta, xi, pairs).expect("valid pairs"),
                CouplingParams::new(eta + d_eta, xi + d_xi, pairs).expect("valid pairs"),
            ),
            Displacement::Radial { dr } => {
                let p = crate::model::polar_from_cartesian(eta, xi);
                let at = |rr: T| {
                    CouplingParams::new(rr * p.phi.cos(), rr * p.phi.sin(), pairs)
                        .expect("valid pairs")
                };
                (at(p.r + dr), at(p.r - dr))
            }
        }
    }
}

/// Grid sweep configuration.
#[derive(Debug, Clone)]
pub struct SweepConfig<T: Real> {
    pub eta_start: T,
    pub eta_stop: T,
    pub eta_step: T,
    pub xi_start: T,
    pub xi_stop: T,
    pub xi_step: T,
    pub betas: Vec<T>,
    pub pairs: usize,
    pub displacement: Displacement<T>,
}

impl<T: Real> SweepConfig<T> {
    pub fn eta_values(&self) -> Vec<T> {
        range_values(self.eta_start, self.eta_stop, self.eta_step)
    }

    pub fn xi_values(&self) -> Vec<T> {
        range_values(self.xi_start, self.xi_stop, self.xi_step)
    }

    /// Grid nodes for one beta, row-major: xi is the slow (row) index.
    pub fn nodes(&self) -> Vec<(T, T)> {
        let etas = self.eta_values();
        let mut out = Vec::new();
        for &xi in &self.xi_values() {
            for &eta in &etas {
                out.push((eta, xi));
            }
        }
        out
    }
}

pub(crate) fn range_values<T: Real>(start: T, stop: T, step: T) -> Vec<T> {
    assert!(step > T::zero(), "step must be positive");
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let x = start + step * re::<T>(i as f64);
        if x > stop + step * re::<T>(0.5) {
            break;
        }
        out.push(x);
        i += 1;
    }
    out
}

/// One sweep output row: the grid node plus either the fidelity point or
/// the error that occurred there.
#[derive(Debug, Clone)]
pub struct SweepRow<T: Real> {
    pub eta: T,
    pub xi: T,
    pub beta: T,
    pub result: Result<FidelityPoint<T>, FidelityError>,
}

/// Evaluate one sweep node at one temperature.
pub fn sweep_node<T: Real>(cfg: &SweepConfig<T>, eta: T, xi: T, beta: T) -> SweepRow<T> {
    let (p1, p2) = cfg.displacement.pair(eta, xi, cfg.pairs);
    let result = total_fidelity(&p1, &p2, beta, cfg.pairs).map(|mut fp| {
        fp.eta = eta;
        fp.xi = xi;
        fp
    });
    SweepRow { eta, xi, beta, result }
}

/// Full parameter-plane sweep, sequential, rows in deterministic
/// (beta, xi, eta) row-major order. Per-node failures are recorded in the
/// row and do not abort the sweep.
pub fn sweep2d<T: Real>(cfg: &SweepConfig<T>) -> Vec<SweepRow<T>> {
    let nodes = cfg.nodes();
    let mut rows = Vec::with_capacity(nodes.len() * cfg.betas.len());
    for &beta in &cfg.betas {
        for &(eta, xi) in &nodes {
            rows.push(sweep_node(cfg, eta, xi, beta));
        }
    }
    rows
}

/// Temperature scan on the critical circle at angle `phi` with radial
/// displacement `dr`, one fidelity point per beta.
pub fn temp_scan<T: Real>(
    phi: T,
    dr: T,
    betas: &[T],
    pairs: usize,
) -> Result<Vec<FidelityPoint<T>>, FidelityError> {
    for w in betas.windows(2) {
        assert!(w[0] <= w[1], "betas must be ascending");
    }
    let disp = Displacement::Radial { dr };
    let (p1, p2) = disp.pair(phi.cos(), phi.sin(), pairs);
    betas
        .iter()
        .map(|&beta| total_fidelity(&p1, &p2, beta, pairs))
        .collect()
}

/// Independent evaluation route for the Hermitian limit, comparing the
/// engine against the textbook Uhlmann formula; see [`crate::oracle`].
pub fn hermitian_reference_available<T: Real>(p: &CouplingParams<T>) -> bool {
    p.xi == T::zero()
}

/// k-grid helper shared with the oracle: the even-grid momenta.
pub fn even_momenta<T: Real>(pairs: usize) -> Result<Vec<T>, FidelityError> {
    Ok(momentum_grid::<T>(pairs, Parity::Even)?.paired)
}

/// Polar form of a parameter point (re-exported convenience).
pub fn polar_of<T: Real>(p: &CouplingParams<T>) -> PolarField<T> {
    p.polar()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::expm;

    fn params(eta: f64, xi: f64, pairs: usize) -> CouplingParams<f64> {
        CouplingParams::new(eta, xi, pairs).unwrap()
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let s = thermal_sector_state(0.9, &params(0.5, 0.3, 4), 0.0).unwrap();
        let expect = ComplexMatrix::identity(DIM).scale(num_complex::Complex64::new(1.0 / 16.0, 0.0));
        assert_eq!(s.rho.max_diff(&expect), 0.0);
        assert!((s.rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn thermal_state_has_unit_trace() {
        for &(eta, xi, beta) in &[(0.5, 0.3, 1.0), (0.1, 1.2, 2.0), (0.9, 0.43, 8.0)] {
            let s = thermal_sector_state(1.3, &params(eta, xi, 4), beta).unwrap();
            assert!((s.rho.trace() - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn thermal_state_matches_matrix_exponential() {
        // spectral assembly against a direct Pade exponential, including
        // PT-broken sectors
        for &(eta, xi, beta) in &[(0.5, 0.3, 3.7), (0.1, 1.2, 2.0), (0.9, 0.43, 6.0)] {
            let p = params(eta, xi, 20);
            for m in 0..10 {
                let k = (2 * m + 1) as f64 * std::f64::consts::PI / 20.0;
                let s = thermal_sector_state(k, &p, beta).unwrap();
                let h = build_sector_hamiltonian(k, &p);
                let e = expm(&h.matrix.scale(num_complex::Complex64::new(-beta, 0.0))).unwrap();
                let tr = e.trace();
                let direct = e.scale(num_complex::Complex64::new(1.0, 0.0) / tr);
                assert!(
                    s.rho.max_diff(&direct) < 1e-10,
                    "rho mismatch at k={k} eta={eta} xi={xi} beta={beta}: {}",
                    s.rho.max_diff(&direct)
                );
            }
        }
    }

    #[test]
    fn hermitian_thermal_state_is_hermitian_and_positive() {
        let p = params(0.8, 0.0, 4);
        let s = thermal_sector_state(1.1, &p, 1.0).unwrap();
        assert!(s.rho.max_diff(&s.rho.adjoint()) < 1e-10);
        let vals = crate::matfun::eigenvalues(&s.rho).unwrap();
        for v in vals {
            assert!(v.re > -1e-12 && v.im.abs() < 1e-10);
        }
        assert!(!s.pt_broken);
    }

    #[test]
    fn large_beta_projects_onto_min_weight_level() {
        // at large beta the state approaches the rank-1 biorthogonal
        // projector of the level with the most negative real part
        let p = params(0.5, 0.3, 4);
        let k = 0.9;
        let s = thermal_sector_state(k, &p, 1e3).unwrap();
        let sys = sector_eigensystem(k, &p, Method::Auto).unwrap();
        let (idx, _) = sys
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
            .unwrap();
        let mut proj = ComplexMatrix::zeros(DIM);
        for i in 0..DIM {
            for j in 0..DIM {
                proj[(i, j)] = sys.right[(i, idx)] * sys.left[(idx, j)];
            }
        }
        assert!(s.rho.max_diff(&proj) < 1e-8);
    }

    #[test]
    fn sector_self_fidelity_is_one() {
        let p = params(0.5, 0.3, 4);
        let s = thermal_sector_state(0.9, &p, 1.2).unwrap();
        let f = sector_fidelity(&s, &s).unwrap();
        assert!((f - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn beta_zero_fidelity_is_exactly_one() {
        let p1 = params(0.5, 0.3, 8);
        let p2 = params(0.62, 0.41, 8);
        let fp = total_fidelity(&p1, &p2, 0.0, 8).unwrap();
        assert_eq!(fp.f, 1.0);
        assert_eq!(fp.log_f, 0.0);
    }

    #[test]
    fn self_fidelity_total() {
        // below every branch flip (beta |Im eps| << pi/2) the self fidelity
        // is one; broken sectors at large beta make tr sqrt formal instead
        let p = params(0.5, 0.3, 12);
        let fp = total_fidelity(&p, &p, 0.25, 12).unwrap();
        assert!((fp.f - 1.0).abs() < 1e-10, "self fidelity {}", fp.f);
        // the Hermitian slice has no broken sectors at any temperature
        let p = params(0.8, 0.0, 12);
        let fp = total_fidelity(&p, &p, 5.0, 12).unwrap();
        assert!((fp.f - 1.0).abs() < 1e-9, "hermitian self fidelity {}", fp.f);
    }

    #[test]
    fn fidelity_is_symmetric_under_swap() {
        let p1 = params(0.5, 0.3, 8);
        let p2 = params(0.53, 0.33, 8);
        let a = total_fidelity(&p1, &p2, 0.25, 8).unwrap();
        let b = total_fidelity(&p2, &p1, 0.25, 8).unwrap();
        assert!((a.f - b.f).abs() < 1e-9);
        let h1 = params(0.8, 0.0, 8);
        let h2 = params(0.85, 0.0, 8);
        let a = total_fidelity(&h1, &h2, 5.0, 8).unwrap();
        let b = total_fidelity(&h2, &h1, 5.0, 8).unwrap();
        assert!((a.f - b.f).abs() < 1e-9);
    }

    #[test]
    fn fidelity_mirror_symmetry_in_xi() {
        let p1 = params(0.4, 0.5, 8);
        let p2 = params(0.42, 0.55, 8);
        let m1 = params(0.4, -0.5, 8);
        let m2 = params(0.42, -0.55, 8);
        let a = total_fidelity(&p1, &p2, 1.5, 8).unwrap();
        let b = total_fidelity(&m1, &m2, 1.5, 8).unwrap();
        assert!((a.f - b.f).abs() < 1e-9);
    }

    #[test]
    fn deep_phase_fidelity_is_near_unity() {
        // far from the critical circle the fidelity barely moves
        let p1 = params(0.3, 0.0, 40);
        let p2 = params(0.31, 0.01, 40);
        let fp = total_fidelity(&p1, &p2, 1.0, 40).unwrap();
        assert!(fp.f > 0.99, "F = {}", fp.f);
    }

    #[test]
    fn im_residual_small_when_unbroken() {
        let p1 = params(0.5, 0.0, 8);
        let p2 = params(0.52, 0.0, 8);
        let fp = total_fidelity(&p1, &p2, 2.0, 8).unwrap();
        assert_eq!(fp.broken_sectors, 0);
        assert!(fp.im_residual < 1e-8);
    }

    #[test]
    fn ground_overlap_coincident_points() {
        assert_eq!(ground_overlap(0.7, 0.5, 0.8, 0.0).unwrap(), 1.0);
        // near-coincident: overlap approaches one
        let o: f64 = ground_overlap(0.7, 0.5, 0.8, 1e-9).unwrap();
        assert!((o - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ground_overlap_vanishes_at_small_k_off_special_angles() {
        let o = ground_overlap(1e-3, 1.0, 0.0, 0.05).unwrap();
        assert!(o < 0.05, "overlap {o}");
        let o = ground_overlap(1e-3, 1.0, 0.3, 0.05).unwrap();
        assert!(o < 0.05, "overlap {o}");
    }

    #[test]
    fn ground_overlap_special_angle_is_finite_and_matches_thermal_limit() {
        // the three-phase point keeps a finite small-k overlap; its value is
        // pinned by the low-temperature limit of the sector fidelity itself
        let phi = std::f64::consts::FRAC_PI_2;
        let k = 1e-3;
        let o = ground_overlap(k, 1.0, phi, 0.02).unwrap();
        let disp = Displacement::Radial { dr: 0.02 };
        let (p1, p2) = disp.pair(phi.cos(), phi.sin(), 2);
        let s1 = thermal_sector_state(k, &p1, 1e4).unwrap();
        let s2 = thermal_sector_state(k, &p2, 1e4).unwrap();
        let fk = sector_fidelity(&s1, &s2).unwrap().norm();
        assert!((o - fk).abs() < 1e-3, "ground overlap {o} vs thermal limit {fk}");
        assert!((o - 0.5125223).abs() < 2e-3, "overlap {o}");
    }

    #[test]
    fn limit_overlap_cases() {
        assert_eq!(limit_overlap_k0(1.0, 0.3, 0.0), 1.0);
        assert_eq!(limit_overlap_k0(1.0, 0.3, 0.05), 0.0);
        let v = limit_overlap_k0(1.0, std::f64::consts::FRAC_PI_2, 0.02);
        assert!((v - 0.0985329).abs() < 1e-6);
        // small-dr asymptote sqrt(dr/2)
        let dr = 1e-4;
        let v = limit_overlap_k0(1.0, std::f64::consts::FRAC_PI_2, dr);
        assert!(((v / (dr / 2.0).sqrt()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn limit_matches_ground_overlap_at_small_k() {
        // off the special angles the overlap decays like k / (4 dr), so the
        // vanishing limit is resolved at k = 1e-3 for moderately large dr
        for &(phi, dr) in &[(0.25f64, 0.6), (1.0, 0.7), (2.2, 0.6), (4.0, 0.6), (5.8, 0.55)] {
            let lim = limit_overlap_k0(1.0, phi, dr);
            let num = ground_overlap(1e-3, 1.0, phi, dr).unwrap();
            assert!((lim - num).abs() < 1e-3, "phi={phi} dr={dr}: {lim} vs {num}");
        }
    }

    #[test]
    fn special_angle_formula_disagrees_with_exact_limit() {
        // the closed-form special-angle value is kept as stated, but the
        // exact solution's own k->0 overlap there is 1/2 independent of dr;
        // this pins the documented discrepancy
        let phi = std::f64::consts::FRAC_PI_2;
        assert!((limit_overlap_k0(1.0, phi, 0.02) - 0.0985329).abs() < 1e-6);
        let g = ground_overlap(1e-4, 1.0, phi, 0.02).unwrap();
        assert!((g - 0.5).abs() < 2e-2, "exact limit drifted: {g}");
    }

    #[test]
    fn zero_t_fidelity_behavior() {
        assert_eq!(zero_t_fidelity(0.5, 0.6, 0.0, 100).unwrap(), 1.0);
        // deep inside the circle the product stays near one
        let f = zero_t_fidelity(0.5, 0.6, 0.01, 100).unwrap();
        assert!(f > 0.9, "F_inf = {f}");
        // straddling the circle it collapses as N grows
        let f50 = zero_t_fidelity(1.0, 0.3, 0.01, 50).unwrap();
        let f200 = zero_t_fidelity(1.0, 0.3, 0.01, 200).unwrap();
        assert!(f200 < f50);
        let f800 = zero_t_fidelity(1.0, 0.3, 0.01, 800).unwrap();
        assert!(f800 < f200);
    }

    #[test]
    fn sweep_beta_zero_grid_is_flat_ones() {
        let cfg = SweepConfig {
            eta_start: 0.2,
            eta_stop: 0.4,
            eta_step: 0.1,
            xi_start: 0.0,
            xi_stop: 0.2,
            xi_step: 0.1,
            betas: vec![0.0],
            pairs: 4,
            displacement: Displacement::Cartesian { d_eta: 0.01, d_xi: 0.01 },
        };
        let rows = sweep2d(&cfg);
        assert_eq!(rows.len(), 9);
        for row in rows {
            assert_eq!(row.result.unwrap().f, 1.0);
        }
    }

    #[test]
    fn sweep_rows_are_row_major() {
        let cfg = SweepConfig {
            eta_start: 0.0,
            eta_stop: 0.1,
            eta_step: 0.1,
            xi_start: 0.0,
            xi_stop: 0.1,
            xi_step: 0.1,
            betas: vec![0.0],
            pairs: 4,
            displacement: Displacement::Cartesian { d_eta: 0.01, d_xi: 0.0 },
        };
        let rows = sweep2d(&cfg);
        let coords: Vec<(f64, f64)> = rows.iter().map(|r| (r.eta, r.xi)).collect();
        assert_eq!(coords, vec![(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.1, 0.1)]);
    }

    #[test]
    fn temp_scan_beta_zero_is_one() {
        let out = temp_scan(0.0, 0.01, &[0.0], 8).unwrap();
        assert_eq!(out[0].f, 1.0);
    }

    #[test]
    fn temp_scan_decays_with_beta() {
        let out = temp_scan(0.0, 0.01, &[2.0, 4.0, 6.0, 8.0], 100).unwrap();
        for w in out.windows(2) {
            assert!(w[1].log_f <= w[0].log_f + 1e-12, "log F not decreasing");
        }
        assert!(out.last().unwrap().log_f < 0.0);
    }
}
