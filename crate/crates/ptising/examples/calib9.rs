// criterion-9 calibration: angle set and beta window for clean linear fits
use ptising::analysis::{fit_exponential, fit_harmonic, HarmonicOrder};
use ptising::fidelity::temp_scan;

fn main() {
    let pi = std::f64::consts::PI;
    let angles = [0.0, pi / 12.0, pi / 6.0, pi / 4.0, 3.0 * pi / 4.0, 5.0 * pi / 6.0, 11.0 * pi / 12.0, pi];
    for (lo, hi, n) in [(10.0f64, 30.0, 11usize), (14.0, 40.0, 14)] {
        let betas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        println!("--- beta window [{lo}, {hi}]");
        let mut gammas = Vec::new();
        for &phi in &angles {
            let pts = temp_scan(phi, 0.01, &betas, 1000).unwrap();
            let logf: Vec<f64> = pts.iter().map(|p| p.log_f).collect();
            let fit = fit_exponential(&betas, &logf).unwrap();
            println!("  phi={phi:.4}: gamma={:+.6} lnA={:+.5} R2={:.8}", fit.gamma, fit.ln_a, fit.r_squared);
            gammas.push(fit.gamma);
        }
        let hf = fit_harmonic(&angles, &gammas, HarmonicOrder::Two).unwrap();
        println!("  harmonic: a0={:+.6} a2={:+.6} rel residual {:.4}", hf.a0, hf.a2, hf.residual);
    }
}
