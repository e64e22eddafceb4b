//! Post-processing: exponential-decay fits of F(beta), harmonic fits of
//! the decay constant over the circle angle, and critical-line extraction
//! from scan tables.
//!
//! Fits consume log-fidelities directly (never exponentiated values) because
//! near criticality F underflows double precision at large pair counts.

use crate::error::FitError;
use crate::scalar::{re, Real};

/// Leading log-fidelity magnitude below which points belong to the
/// pre-asymptotic plateau and are trimmed before fitting.
pub const PLATEAU_TOL: f64 = 1e-8;

/// Result of the ordinary least-squares line `ln F = gamma beta + ln A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult<T: Real> {
    /// Decay constant (slope, units of J).
    pub gamma: T,
    /// Log prefactor (intercept).
    pub ln_a: T,
    /// Coefficient of determination on the fitted window.
    pub r_squared: T,
    /// Inclusive index range of the input actually used.
    pub window: (usize, usize),
    pub n_points: usize,
}

/// Least-squares exponential-decay fit of `ln F` against `beta`.
///
/// The fit runs over the largest contiguous window of finite log values,
/// after trimming leading points still on the `|ln F| < PLATEAU_TOL`
/// plateau. Callers pass log-fidelities directly.
pub fn fit_exponential<T: Real>(betas: &[T], log_f: &[T]) -> Result<FitResult<T>, FitError> {
    fit_exponential_with_floor(betas, log_f, re::<T>(PLATEAU_TOL))
}

/// As [`fit_exponential`] with an explicit plateau-trim threshold.
pub fn fit_exponential_with_floor<T: Real>(
    betas: &[T],
    log_f: &[T],
    plateau: T,
) -> Result<FitResult<T>, FitError> {
    assert_eq!(betas.len(), log_f.len(), "betas and values must pair up");
    if betas.len() < 3 {
        return Err(FitError::InsufficientData { need: 3, got: betas.len() });
    }
    // largest contiguous window of finite values
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, v) in log_f.iter().enumerate() {
        if v.is_finite() {
            if start.is_none() {
                start = Some(i);
            }
            let s = start.unwrap();
            if best.map_or(true, |(a, b)| i - s > b - a) {
                best = Some((s, i));
            }
        } else {
            start = None;
        }
    }
    let (mut lo, hi) = best.ok_or(FitError::DegenerateWindow)?;
    // trim the leading plateau but keep at least three points
    while lo < hi && log_f[lo].abs() < plateau && hi - lo >= 3 {
        lo += 1;
    }
    if hi - lo + 1 < 3 {
        // fall back to the untrimmed window when everything is plateau
        lo = best.unwrap().0;
    }
    if hi - lo + 1 < 3 {
        return Err(FitError::InsufficientData { need: 3, got: hi - lo + 1 });
    }
    let xs = &betas[lo..=hi];
    let ys = &log_f[lo..=hi];
    let n = re::<T>(xs.len() as f64);
    let sum = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |a, b| a + b);
    let sx = sum(&mut xs.iter().copied());
    let sy = sum(&mut ys.iter().copied());
    let mx = sx / n;
    let my = sy / n;
    let sxx = sum(&mut xs.iter().map(|&x| (x - mx) * (x - mx)));
    let sxy = sum(&mut xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)));
    if sxx == T::zero() {
        return Err(FitError::RankDeficient);
    }
    let gamma = sxy / sxx;
    let ln_a = my - gamma * mx;
    let ss_tot = sum(&mut ys.iter().map(|&y| (y - my) * (y - my)));
    let ss_res = sum(&mut xs.iter().zip(ys).map(|(&x, &y)| {
        let e = y - (gamma * x + ln_a);
        e * e
    }));
    let r_squared = if ss_tot > T::zero() {
        T::one() - ss_res / ss_tot
    } else if ss_res == T::zero() {
        T::one()
    } else {
        T::zero()
    };
    Ok(FitResult { gamma, ln_a, r_squared, window: (lo, hi), n_points: hi - lo + 1 })
}

/// Harmonic orders available for the angular fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicOrder {
    /// `a0 + a2 cos(2 phi)`
    Two,
    /// `a0 + a2 cos(2 phi) + a4 cos(4 phi)`
    TwoFour,
}

/// Least-squares harmonic fit over circle angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicFit<T: Real> {
    pub a0: T,
    pub a2: T,
    /// Present only for [`HarmonicOrder::TwoFour`].
    pub a4: Option<T>,
    /// Relative residual: ||values - fit|| / ||values||.
    pub residual: T,
}

/// Fit `values(phi)` onto `{1, cos 2 phi}` or `{1, cos 2 phi, cos 4 phi}`.
pub fn fit_harmonic<T: Real>(
    phis: &[T],
    values: &[T],
    order: HarmonicOrder,
) -> Result<HarmonicFit<T>, FitError> {
    assert_eq!(phis.len(), values.len());
    let ncoef = match order {
        HarmonicOrder::Two => 2,
        HarmonicOrder::TwoFour => 3,
    };
    if phis.len() < ncoef {
        return Err(FitError::InsufficientData { need: ncoef, got: phis.len() });
    }
    let two = re::<T>(2.0);
    let four = re::<T>(4.0);
    let basis = |phi: T, j: usize| match j {
        0 => T::one(),
        1 => (two * phi).cos(),
        _ => (four * phi).cos(),
    };
    // normal equations (tiny: 2x2 or 3x3)
    let mut ata = [[T::zero(); 3]; 3];
    let mut atb = [T::zero(); 3];
    for (&phi, &v) in phis.iter().zip(values) {
        for a in 0..ncoef {
            let ba = basis(phi, a);
            atb[a] = atb[a] + ba * v;
            for b in 0..ncoef {
                ata[a][b] = ata[a][b] + ba * basis(phi, b);
            }
        }
    }
    let coef = solve_small(&mut ata, &mut atb, ncoef)?;
    let mut ss_res = T::zero();
    let mut ss_val = T::zero();
    for (&phi, &v) in phis.iter().zip(values) {
        let mut fit = T::zero();
        for (a, c) in coef.iter().enumerate().take(ncoef) {
            fit = fit + *c * basis(phi, a);
        }
        ss_res = ss_res + (v - fit) * (v - fit);
        ss_val = ss_val + v * v;
    }
    let residual = if ss_val > T::zero() { (ss_res / ss_val).sqrt() } else { ss_res.sqrt() };
    Ok(HarmonicFit {
        a0: coef[0],
        a2: coef[1],
        a4: if ncoef == 3 { Some(coef[2]) } else { None },
        residual,
    })
}

fn solve_small<T: Real>(
    a: &mut [[T; 3]; 3],
    b: &mut [T; 3],
    n: usize,
) -> Result<[T; 3], FitError> {
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < re::<T>(1e-12) {
            return Err(FitError::RankDeficient);
        }
        if piv != col {
            a.swap(piv, col);
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] = a[row][j] - f * a[col][j];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc = acc - a[row][j] * x[j];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Minimum spread of F below which a scan is reported flat.
pub const FLAT_TOL: f64 = 1e-6;

/// Estimate the critical field from a fixed-xi scan: the minimum sample,
/// refined by a parabola through it and its neighbors.
pub fn locate_minima<T: Real>(etas: &[T], fs: &[T]) -> Result<T, FitError> {
    assert_eq!(etas.len(), fs.len());
    if etas.len() < 5 {
        return Err(FitError::InsufficientData { need: 5, got: etas.len() });
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    let mut imin = 0;
    for (i, &f) in fs.iter().enumerate() {
        if f < lo {
            lo = f;
            imin = i;
        }
        hi = hi.max(f);
    }
    let spread = hi - lo;
    if spread < re::<T>(FLAT_TOL) {
        return Err(FitError::FlatScan { spread: crate::scalar::as_f64(spread) });
    }
    if imin == 0 || imin == fs.len() - 1 {
        return Ok(etas[imin]);
    }
    // parabolic refinement; invariant under constant shifts of F
    let (y0, y1, y2) = (fs[imin - 1], fs[imin], fs[imin + 1]);
    let denom = y0 - y1 - y1 + y2;
    if denom <= T::zero() {
        return Ok(etas[imin]);
    }
    let step = (etas[imin + 1] - etas[imin - 1]) * re::<T>(0.5);
    Ok(etas[imin] + step * re::<T>(0.5) * (y0 - y2) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_data_fits_exactly() {
        let betas: Vec<f64> = (0..10).map(|i| i as f64 * 0.5 + 0.5).collect();
        let log_f: Vec<f64> = betas.iter().map(|b| -2.0 * b + 0.5f64.ln()).collect();
        let fit = fit_exponential(&betas, &log_f).unwrap();
        assert!((fit.gamma + 2.0).abs() < 1e-12);
        assert!((fit.ln_a - 0.5f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_unity_gives_zero_slope() {
        let betas: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let log_f = vec![0.0f64; 8];
        let fit = fit_exponential(&betas, &log_f).unwrap();
        assert_eq!(fit.gamma, 0.0);
        assert_eq!(fit.ln_a, 0.0);
    }

    #[test]
    fn plateau_points_are_trimmed() {
        let betas: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut log_f = vec![1e-12f64; 4];
        log_f.extend((4..10).map(|i| -0.3 * i as f64 + 0.1));
        let fit = fit_exponential(&betas, &log_f).unwrap();
        assert_eq!(fit.window.0, 4);
        assert!((fit.gamma + 0.3).abs() < 1e-12);
    }

    #[test]
    fn non_finite_values_shrink_the_window() {
        let betas: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let mut log_f: Vec<f64> = betas.iter().map(|b| -b).collect();
        log_f[0] = f64::NEG_INFINITY;
        let fit = fit_exponential(&betas, &log_f).unwrap();
        assert_eq!(fit.window, (1, 7));
    }

    #[test]
    fn too_few_points_error() {
        assert!(matches!(
            fit_exponential(&[1.0f64, 2.0], &[0.1, 0.2]),
            Err(FitError::InsufficientData { .. })
        ));
    }

    #[test]
    fn all_non_finite_is_degenerate() {
        let nan = f64::NAN;
        assert!(matches!(
            fit_exponential(&[1.0f64, 2.0, 3.0], &[nan, nan, nan]),
            Err(FitError::DegenerateWindow)
        ));
    }

    #[test]
    fn harmonic_recovers_planted_coefficients() {
        let phis: Vec<f64> = (0..8).map(|i| i as f64 * std::f64::consts::PI / 4.0).collect();
        let values: Vec<f64> = phis.iter().map(|p| 3.0 + 2.0 * (2.0 * p).cos()).collect();
        let fit = fit_harmonic(&phis, &values, HarmonicOrder::Two).unwrap();
        assert!((fit.a0 - 3.0).abs() < 1e-10);
        assert!((fit.a2 - 2.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn harmonic_two_four_recovers_all_three() {
        let phis: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let values: Vec<f64> = phis
            .iter()
            .map(|p| -7.1 + 9.5 * (2.0 * p).cos() - 2.4 * (4.0 * p).cos())
            .collect();
        let fit = fit_harmonic(&phis, &values, HarmonicOrder::TwoFour).unwrap();
        assert!((fit.a0 + 7.1).abs() < 1e-9);
        assert!((fit.a2 - 9.5).abs() < 1e-9);
        assert!((fit.a4.unwrap() + 2.4).abs() < 1e-9);
    }

    #[test]
    fn model_misfit_surfaces_in_residual() {
        let phis: Vec<f64> = (0..16).map(|i| i as f64 * std::f64::consts::PI / 8.0).collect();
        let values: Vec<f64> = phis.iter().map(|p| (4.0 * p).cos()).collect();
        let fit = fit_harmonic(&phis, &values, HarmonicOrder::Two).unwrap();
        assert!(fit.residual > 0.5, "misfit hidden: residual {}", fit.residual);
    }

    #[test]
    fn harmonic_rank_deficiency_detected() {
        // all angles identical: the design matrix loses rank
        let phis = vec![0.3f64; 5];
        let values = vec![1.0f64; 5];
        assert!(matches!(
            fit_harmonic(&phis, &values, HarmonicOrder::Two),
            Err(FitError::RankDeficient)
        ));
    }

    #[test]
    fn locate_minima_on_synthetic_dip() {
        let etas: Vec<f64> = (0..81).map(|i| 0.4 + i as f64 * 0.005).collect();
        let fs: Vec<f64> =
            etas.iter().map(|e| 1.0 - (-(e - 0.6f64).powi(2) / 1e-4).exp()).collect();
        let est = locate_minima(&etas, &fs).unwrap();
        assert!((est - 0.6).abs() < 0.003, "estimate {est}");
    }

    #[test]
    fn locate_minima_shift_invariant() {
        let etas: Vec<f64> = (0..41).map(|i| i as f64 * 0.01).collect();
        let fs: Vec<f64> = etas.iter().map(|e| (e - 0.17f64).powi(2)).collect();
        let a = locate_minima(&etas, &fs).unwrap();
        let shifted: Vec<f64> = fs.iter().map(|f| f + 5.0).collect();
        let b = locate_minima(&etas, &shifted).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn flat_scan_detected() {
        let etas: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let fs = vec![1.0f64; 10];
        assert!(matches!(locate_minima(&etas, &fs), Err(FitError::FlatScan { .. })));
    }
}
