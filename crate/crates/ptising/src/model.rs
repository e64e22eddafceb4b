//! Model parameters, polar parameterization, closed-form dispersions,
//! momentum grids, and the zero-temperature phase-boundary geometry.
//!
//! The chain has `2N` sites in a complex staggered transverse field
//! `g_j = eta + i (-1)^j xi` (all energies in units of the Ising coupling J).
//! Per momentum pair `±k` the many-body problem reduces to a 16-dimensional
//! sector whose eigenvalues are `2 eps_n(k)` for the sixteen closed-form
//! dispersion branches implemented here.

use crate::error::GridError;
use crate::scalar::{creal, re, Real, C};
use num_complex::Complex;

/// Default absolute threshold below which an imaginary part counts as zero.
pub const IM_TOL: f64 = 1e-10;

/// Model inputs: energy scale J, the two field components, and the number of
/// momentum pairs N (the chain has 2N sites).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams<T: Real> {
    pub j: T,
    pub eta: T,
    pub xi: T,
    pub pairs: usize,
}

impl<T: Real> CouplingParams<T> {
    /// J = 1 parameters. `pairs` must be even and at least 2 so that the
    /// default grid consists purely of `±k` pairs.
    pub fn new(eta: T, xi: T, pairs: usize) -> Result<Self, GridError> {
        if pairs < 2 || pairs % 2 != 0 {
            return Err(GridError::OddN(pairs));
        }
        Ok(Self { j: T::one(), eta, xi, pairs })
    }

    /// Parameters with an explicit energy scale J > 0.
    pub fn with_scale(j: T, eta: T, xi: T, pairs: usize) -> Result<Self, GridError> {
        assert!(j > T::zero(), "J must be positive");
        Ok(Self { j, ..Self::new(eta, xi, pairs)? })
    }

    pub fn polar(&self) -> PolarField<T> {
        polar_from_cartesian(self.eta, self.xi)
    }

    /// Same chain with the field components replaced.
    pub fn displaced(&self, eta: T, xi: T) -> Self {
        Self { eta, xi, ..*self }
    }
}

/// Polar form of the field plane: `eta = r cos(phi)`, `xi = r sin(phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarField<T: Real> {
    pub r: T,
    pub phi: T,
}

impl<T: Real> PolarField<T> {
    pub fn new(r: T, phi: T) -> Self {
        Self { r, phi }
    }

    pub fn eta(&self) -> T {
        self.r * self.phi.cos()
    }

    pub fn xi(&self) -> T {
        self.r * self.phi.sin()
    }
}

/// Full-quadrant polar decomposition with `phi` mapped into `[0, 2*pi)`.
/// The origin maps to `r = 0, phi = 0`.
pub fn polar_from_cartesian<T: Real>(eta: T, xi: T) -> PolarField<T> {
    let r = eta.hypot(xi);
    if r == T::zero() {
        return PolarField { r, phi: T::zero() };
    }
    let mut phi = xi.atan2(eta);
    if phi < T::zero() {
        phi = phi + T::TAU();
    }
    // atan2 can return exactly 2*pi after the wrap when xi is a tiny negative
    if phi >= T::TAU() {
        phi = T::zero();
    }
    PolarField { r, phi }
}

/// One closed-form quasiparticle energy `eps_n(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionValue<T: Real> {
    pub level: usize,
    pub k: T,
    pub value: C<T>,
    pub is_real: bool,
}

/// `eps_n(k)` for level `n` in `[1, 16]` at polar field `p`.
///
/// All complex square roots take the principal branch (nonnegative real
/// part, positive imaginary part on the negative real axis), so the value is
/// defined everywhere including PT-broken parameter regions, where it simply
/// comes out with a nonzero imaginary part.
pub fn dispersion<T: Real>(level: usize, k: T, p: PolarField<T>) -> DispersionValue<T> {
    dispersion_with_tol(level, k, p, re::<T>(IM_TOL))
}

/// As [`dispersion`] with an explicit reality threshold.
pub fn dispersion_with_tol<T: Real>(
    level: usize,
    k: T,
    p: PolarField<T>,
    im_tol: T,
) -> DispersionValue<T> {
    assert!((1..=16).contains(&level), "level must be in [1, 16]");
    let value = eps(level, k, p);
    DispersionValue { level, k, value, is_real: value.im.abs() < im_tol }
}

pub(crate) fn eps<T: Real>(level: usize, k: T, p: PolarField<T>) -> C<T> {
    let two = re::<T>(2.0);
    let one = T::one();
    let r2 = p.r * p.r;
    let r4 = r2 * r2;
    let cos2phi = (two * p.phi).cos();
    // shared radicand r^4 - 2 r^2 cos k + 1 (always >= 0 for real r)
    let b = r4 - two * r2 * k.cos() + one;
    match level {
        1..=4 => {
            let inner = creal(b).sqrt();
            let sign = if level <= 2 { one } else { -one };
            let sq = creal(two * r2 * cos2phi + two) + inner.scale(two * sign);
            let e = sq.sqrt();
            if level % 2 == 0 {
                -e
            } else {
                e
            }
        }
        5..=8 => Complex::new(T::zero(), T::zero()),
        9..=16 => {
            // The two quasiparticle branches of the odd-parity sector. Their
            // squares are the roots of x^2 - 2 a x + b with a = r^2 cos(2 phi) + 1,
            // so the inner radicand is a^2 - b.
            let a = r2 * cos2phi + one;
            let inner = creal(a * a - b).sqrt();
            let plus_branch = matches!(level, 9 | 10 | 13 | 14);
            let sq = if plus_branch { creal(a) + inner } else { creal(a) - inner };
            let e = sq.sqrt();
            if level % 2 == 0 {
                -e
            } else {
                e
            }
        }
        _ => unreachable!(),
    }
}

/// All sixteen dispersion values at one momentum.
pub fn dispersion_all<T: Real>(k: T, p: PolarField<T>) -> [C<T>; 16] {
    let mut out = [Complex::new(T::zero(), T::zero()); 16];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = eps(i + 1, k, p);
    }
    out
}

/// Fermion-number parity sector of the Jordan-Wigner decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// sigma = +1 (even fermion number, antiperiodic momenta)
    Even,
    /// sigma = -1 (odd fermion number, periodic momenta)
    Odd,
}

/// Momenta for one parity sector of a chain with N pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid<T: Real> {
    /// Representatives in (0, pi); each stands for the `±k` pair.
    pub paired: Vec<T>,
    /// Self-paired points (k = 0 and k = pi) present only on the odd grid.
    pub unpaired: Vec<T>,
}

/// Momentum grid for `pairs` momentum pairs in the given parity sector.
///
/// Even sector: `k = (2m+1) pi / N` for `m = 0..N/2-1`, ascending, no
/// unpaired points. Odd sector: `k = 2m pi / N`; `k = 0` and `k = pi` are
/// reported separately as unpaired.
pub fn momentum_grid<T: Real>(pairs: usize, sector: Parity) -> Result<MomentumGrid<T>, GridError> {
    if pairs < 2 || pairs % 2 != 0 {
        return Err(GridError::OddN(pairs));
    }
    let n = re::<T>(pairs as f64);
    match sector {
        Parity::Even => {
            let paired = (0..pairs / 2)
                .map(|m| re::<T>((2 * m + 1) as f64) * T::PI() / n)
                .collect();
            Ok(MomentumGrid { paired, unpaired: Vec::new() })
        }
        Parity::Odd => {
            let paired = (1..pairs / 2)
                .map(|m| re::<T>((2 * m) as f64) * T::PI() / n)
                .collect();
            Ok(MomentumGrid { paired, unpaired: vec![T::zero(), T::PI()] })
        }
    }
}

/// Ground-state phase regions of the field plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRegion {
    /// Paramagnet outside the unit circle, eta > 0.
    I,
    /// Ferromagnet inside the unit circle.
    II,
    /// Paramagnet outside the unit circle, eta < 0.
    III,
    Boundary,
}

/// Phase label plus the distance to the nearest critical set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseLabel<T: Real> {
    pub label: PhaseRegion,
    pub distance: T,
}

/// Classify a point of the field plane against the critical sets
/// `r = 1` and `{eta = 0, r > 1}`.
///
/// Region assignment: II is the interior of the unit circle (ferromagnet);
/// I and III are the exterior half-planes with eta > 0 and eta < 0
/// (paramagnets), split by the critical ray on the xi axis.
pub fn classify_phase<T: Real>(eta: T, xi: T) -> PhaseLabel<T> {
    classify_phase_with_tol(eta, xi, re::<T>(1e-9))
}

/// As [`classify_phase`] with an explicit boundary tolerance.
pub fn classify_phase_with_tol<T: Real>(eta: T, xi: T, tol: T) -> PhaseLabel<T> {
    let r = eta.hypot(xi);
    let circle_dist = (r - T::one()).abs();
    // distance to the ray {eta = 0, |xi| >= 1}
    let ray_dist = eta.hypot((T::one() - xi.abs()).max(T::zero()));
    let distance = circle_dist.min(ray_dist);
    let on_ray = eta.abs() < tol && r > T::one();
    let label = if circle_dist < tol || on_ray {
        PhaseRegion::Boundary
    } else if r < T::one() {
        PhaseRegion::II
    } else if eta > T::zero() {
        PhaseRegion::I
    } else {
        PhaseRegion::III
    };
    PhaseLabel { label, distance }
}
