//! Brute-force ground truth at tiny sizes: the dense spin-space chain via
//! Jordan-Wigner bookkeeping, parity projectors, the dense Kronecker-sum
//! fermionic Hamiltonian, direct dense fidelities, and an independently
//! coded Hermitian Uhlmann reference (Jacobi eigensolver + one-sided Jacobi
//! singular values). Test and `validate` machinery only.

use crate::error::OracleError;
use crate::matfun::{
    eig_general, graded_product_eigenvalues, sum_principal_sqrt, ComplexMatrix,
};
use crate::model::{momentum_grid, CouplingParams, Parity};
use crate::scalar::{creal, re, Real, C};
use crate::sector::build_sector_hamiltonian;
use num_complex::Complex;

/// Largest chain (site count) the dense spin oracle accepts.
pub const MAX_SITES: usize = 8;

/// Dense realization of the spin chain on `2^sites` states.
#[derive(Debug, Clone)]
pub struct SpinChainDense<T: Real> {
    pub sites: usize,
    pub matrix: ComplexMatrix<T>,
}

/// Staggered complex field at 1-based site `j`.
fn field_at<T: Real>(p: &CouplingParams<T>, j: usize) -> C<T> {
    let sign = if j % 2 == 0 { T::one() } else { -T::one() };
    Complex::new(p.eta, sign * p.xi)
}

/// `-J sum_j (sigma^z_j sigma^z_{j+1} + g_j sigma^x_j)` with periodic closure,
/// `g_j = eta + i (-1)^j xi`, on `sites` spins (sites <= 8).
pub fn spin_hamiltonian_dense<T: Real>(
    p: &CouplingParams<T>,
    sites: usize,
) -> Result<SpinChainDense<T>, OracleError> {
    if sites > MAX_SITES {
        return Err(OracleError::SizeCap { cap: MAX_SITES, got: sites });
    }
    let dim = 1usize << sites;
    let mut m = ComplexMatrix::zeros(dim);
    let j_scale = p.j;
    for b in 0..dim {
        // zz bonds: diagonal in the z basis (bit set = spin down)
        let mut zz = T::zero();
        for site in 0..sites {
            let next = (site + 1) % sites;
            let same = ((b >> site) & 1) == ((b >> next) & 1);
            zz = zz + if same { T::one() } else { -T::one() };
        }
        m[(b, b)] = m[(b, b)] - creal(j_scale * zz);
        // transverse field: flips one spin
        for site in 0..sites {
            let flipped = b ^ (1 << site);
            let g = field_at(p, site + 1);
            m[(flipped, b)] = m[(flipped, b)] - g.scale(j_scale);
        }
    }
    Ok(SpinChainDense { sites, matrix: m })
}

/// The fermion-parity operator `prod_j sigma^x_j` on the spin basis.
pub fn parity_operator<T: Real>(sites: usize) -> ComplexMatrix<T> {
    let dim = 1usize << sites;
    let mut m = ComplexMatrix::zeros(dim);
    let full = dim - 1;
    for b in 0..dim {
        m[(b ^ full, b)] = creal(T::one());
    }
    m
}

// fermionic creation/annihilation on the 2^sites occupation basis, with the
// Jordan-Wigner sign (-1)^(occupied modes below)
fn jw_sign<T: Real>(state: usize, mode: usize) -> T {
    if (state & ((1 << mode) - 1)).count_ones() % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

fn add_quadratic<T: Real>(
    m: &mut ComplexMatrix<T>,
    coeff: C<T>,
    create_first: Option<usize>,
    ops: &[(usize, bool)], // (mode, is_creation), applied right-to-left
) {
    let _ = create_first;
    let dim = m.dim();
    'state: for b in 0..dim {
        let mut state = b;
        let mut sign = T::one();
        for &(mode, create) in ops.iter().rev() {
            let occupied = (state >> mode) & 1 == 1;
            if create == occupied {
                continue 'state;
            }
            sign = sign * jw_sign::<T>(state, mode);
            state ^= 1 << mode;
        }
        m[(state, b)] = m[(state, b)] + coeff.scale(sign);
    }
}

/// Dense fermionic chain Hamiltonian for one parity sector (before
/// projection): hopping and pairing on the open bonds, the sigma-dependent
/// closure bond, and the full staggered field term.
pub fn jw_sector_hamiltonian<T: Real>(
    p: &CouplingParams<T>,
    sites: usize,
    sector: Parity,
) -> Result<ComplexMatrix<T>, OracleError> {
    if sites > MAX_SITES {
        return Err(OracleError::SizeCap { cap: MAX_SITES, got: sites });
    }
    let dim = 1usize << sites;
    let mut m = ComplexMatrix::zeros(dim);
    let mj = -p.j;
    let cre = true;
    let ann = false;
    for j in 0..sites - 1 {
        for (a, b) in [(j, j + 1), (j + 1, j)] {
            add_quadratic(&mut m, creal(mj), None, &[(a, cre), (b, ann)]);
        }
        add_quadratic(&mut m, creal(mj), None, &[(j, cre), (j + 1, cre)]);
        add_quadratic(&mut m, creal(mj), None, &[(j + 1, ann), (j, ann)]);
    }
    // closure bond carries the parity sign
    let s = match sector {
        Parity::Even => p.j,
        Parity::Odd => -p.j,
    };
    let last = sites - 1;
    add_quadratic(&mut m, creal(s), None, &[(last, cre), (0, ann)]);
    add_quadratic(&mut m, creal(s), None, &[(0, cre), (last, ann)]);
    add_quadratic(&mut m, creal(s), None, &[(last, cre), (0, cre)]);
    add_quadratic(&mut m, creal(s), None, &[(0, ann), (last, ann)]);
    // field: -J sum_j g_j (1 - 2 n_j), diagonal
    for b in 0..dim {
        let mut acc = Complex::new(T::zero(), T::zero());
        for site in 0..sites {
            let g = field_at(p, site + 1);
            let occ = (b >> site) & 1 == 1;
            let f = if occ { -T::one() } else { T::one() };
            acc = acc + g.scale(f);
        }
        m[(b, b)] = m[(b, b)] + acc.scale(mj);
    }
    Ok(m)
}

/// Eigenvalues of the parity-projected fermionic chain: the block of
/// `H_sigma` on the basis states whose occupation parity matches `sector`.
pub fn jw_sector_spectrum<T: Real>(
    p: &CouplingParams<T>,
    sites: usize,
    sector: Parity,
) -> Result<Vec<C<T>>, OracleError> {
    let h = jw_sector_hamiltonian(p, sites, sector)?;
    let want = match sector {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let idx: Vec<usize> =
        (0..h.dim()).filter(|b| (b.count_ones() as usize) % 2 == want).collect();
    let sub = h.submatrix(&idx);
    Ok(crate::matfun::eigenvalues(&sub)?)
}

/// Dense Kronecker-sum realization of the two-sector chain at N = 4:
/// `h_{k1} (x) I + I (x) h_{k2}` on 256 states.
pub fn fermion_sum_hamiltonian<T: Real>(p: &CouplingParams<T>) -> ComplexMatrix<T> {
    assert_eq!(p.pairs, 4, "the dense Kronecker-sum oracle supports N = 4");
    let grid = momentum_grid::<T>(4, Parity::Even).expect("even N");
    let h1 = build_sector_hamiltonian(grid.paired[0], p).matrix;
    let h2 = build_sector_hamiltonian(grid.paired[1], p).matrix;
    let id = ComplexMatrix::identity(16);
    h1.kron(&id).add(&id.kron(&h2))
}

/// Dense 256-dimensional mixed-state fidelity at N = 4: Gibbs states built
/// from the dense Kronecker-sum Hamiltonian's eigensystem, fidelity via the
/// graded product kernel. No momentum-sector factorization is used.
pub fn fermion_sum_fidelity<T: Real>(
    p1: &CouplingParams<T>,
    p2: &CouplingParams<T>,
    beta: T,
) -> Result<T, OracleError> {
    let spec1 = dense_gibbs_spectral(p1, beta)?;
    let spec2 = dense_gibbs_spectral(p2, beta)?;
    let lam = graded_product_eigenvalues(
        &spec1.0, &spec1.1, &spec1.2, &spec2.0, &spec2.1, &spec2.2,
    );
    Ok(sum_principal_sqrt(&lam).value.norm())
}

type DenseSpectral<T> = (Vec<C<T>>, ComplexMatrix<T>, ComplexMatrix<T>);

fn dense_gibbs_spectral<T: Real>(
    p: &CouplingParams<T>,
    beta: T,
) -> Result<DenseSpectral<T>, OracleError> {
    let h = fermion_sum_hamiltonian(p);
    let dec = eig_general(&h)?;
    let scale = -beta * p.j;
    let shift = dec.values.iter().map(|v| v.re * scale).fold(T::neg_infinity(), T::max);
    let weights: Vec<C<T>> =
        dec.values.iter().map(|v| (v.scale(scale) - creal(shift)).exp()).collect();
    let z = weights.iter().fold(Complex::new(T::zero(), T::zero()), |a, &w| a + w);
    let weights = weights.into_iter().map(|w| w / z).collect();
    Ok((weights, dec.right, dec.left))
}

/// The dense Gibbs state itself (trace one), for direct inspection.
pub fn fermion_sum_gibbs<T: Real>(
    p: &CouplingParams<T>,
    beta: T,
) -> Result<ComplexMatrix<T>, OracleError> {
    let (w, r, l) = dense_gibbs_spectral(p, beta)?;
    let n = r.dim();
    let mut wl = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            wl[(i, j)] = w[i] * l[(i, j)];
        }
    }
    Ok(r.mul(&wl))
}

// ---------------------------------------------------------------------------
// Independent Hermitian route: cyclic Jacobi eigensolver and one-sided
// Jacobi singular values. Shares no code with the QR solver.
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns ascending eigenvalues and orthonormal columns.
pub fn jacobi_hermitian_eig<T: Real>(m: &ComplexMatrix<T>) -> (Vec<T>, ComplexMatrix<T>) {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        let scale = a.one_norm().max(T::min_positive_value());
        if off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() <= eps * scale * re::<T>(0.01) {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let mag = apq.norm();
                let phase = apq / creal(mag);
                // rotation angle for the 2x2 Hermitian block
                let theta = (re::<T>(2.0) * mag).atan2(app - aqq) * re::<T>(0.5);
                let (c, s) = (theta.cos(), theta.sin());
                let s_c = phase.conj().scale(s);
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip.scale(c) + aiq * s_c;
                    a[(i, q)] = aiq.scale(c) - aip * s_c.conj();
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip.scale(c) + viq * s_c;
                    v[(i, q)] = viq.scale(c) - vip * s_c.conj();
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj.scale(c) + aqj * s_c.conj();
                    a[(q, j)] = aqj.scale(c) - apj * s_c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<T> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = ComplexMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, new)] = v[(i, old)];
        }
    }
    (vals, vecs)
}

/// Singular values by one-sided Jacobi (column orthogonalization);
/// relatively accurate for graded products.
pub fn jacobi_singular_values<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    let n = m.dim();
    let mut a = m.clone();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = Complex::new(T::zero(), T::zero());
                for i in 0..n {
                    app = app + a[(i, p)].norm_sqr();
                    aqq = aqq + a[(i, q)].norm_sqr();
                    apq = apq + a[(i, p)].conj() * a[(i, q)];
                }
                if apq.norm() <= eps * (app * aqq).sqrt() || apq.norm() == T::zero() {
                    continue;
                }
                rotated = true;
                let mag = apq.norm();
                let phase = apq / creal(mag);
                let theta = (re::<T>(2.0) * mag).atan2(app - aqq) * re::<T>(0.5);
                let (c, s) = (theta.cos(), theta.sin());
                let s_c = phase.conj().scale(s);
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip.scale(c) + aiq * s_c;
                    a[(i, q)] = aiq.scale(c) - aip * s_c.conj();
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..n)
        .map(|j| (0..n).fold(T::zero(), |acc, i| acc + a[(i, j)].norm_sqr()).sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Textbook Uhlmann fidelity of one Hermitian sector at `xi = 0`:
/// `sum of singular values of sqrt(rho1) sqrt(rho2)`, with both square
/// roots built spectrally from the Jacobi eigensystem of `h_k`.
pub fn hermitian_uhlmann_sector<T: Real>(k: T, eta1: T, eta2: T, beta: T) -> T {
    let sq = |eta: T| {
        let p = CouplingParams::new(eta, T::zero(), 2).expect("valid params");
        let h = build_sector_hamiltonian(k, &p).matrix;
        let (vals, vecs) = jacobi_hermitian_eig(&h);
        let emin = vals[0];
        let z = vals.iter().fold(T::zero(), |acc, &e| acc + (-beta * (e - emin)).exp());
        // sqrt(rho) = V diag(exp(-beta (E - Emin) / 2) / sqrt(Z)) V^+
        let n = h.dim();
        let mut dv = ComplexMatrix::zeros(n);
        for j in 0..n {
            let w = (-beta * (vals[j] - emin) * re::<T>(0.5)).exp() / z.sqrt();
            for i in 0..n {
                dv[(i, j)] = vecs[(i, j)].scale(w);
            }
        }
        dv.mul(&vecs.adjoint())
    };
    let m = sq(eta1).mul(&sq(eta2));
    jacobi_singular_values(&m).iter().fold(T::zero(), |a, &s| a + s)
}

/// Product of [`hermitian_uhlmann_sector`] over the even momentum grid.
pub fn hermitian_uhlmann_total<T: Real>(eta1: T, eta2: T, beta: T, pairs: usize) -> T {
    let grid = momentum_grid::<T>(pairs, Parity::Even).expect("even N");
    let mut log_f = T::zero();
    for &k in &grid.paired {
        log_f = log_f + hermitian_uhlmann_sector(k, eta1, eta2, beta).ln();
    }
    log_f.exp()
}
