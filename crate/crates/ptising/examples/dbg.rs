use ptising::fidelity::ground_overlap;
fn main() {
    for &(phi, dr) in &[(0.25f64, 0.45), (0.25, 0.6), (1.0, 0.5), (1.0, 0.7), (2.0, 0.5), (2.2, 0.6), (4.0, 0.6), (4.5, 0.5), (5.5, 0.45), (5.8, 0.55), (3.0, 0.5), (0.7, 0.65)] {
        let g = ground_overlap(1e-3, 1.0, phi, dr).unwrap();
        println!("phi={phi} dr={dr}: ground={g:.2e}");
    }
}
