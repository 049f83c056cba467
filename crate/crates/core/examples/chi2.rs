use qftbench::matrixmodels::moduli_euler_char;

fn main() {
    let t0 = std::time::Instant::now();
    let chi1 = moduli_euler_char(1).unwrap();
    println!("chi(Gamma_1^1) = {}  ({:?})", chi1, t0.elapsed());
    let t1 = std::time::Instant::now();
    let chi2 = moduli_euler_char(2).unwrap();
    println!("chi(Gamma_2^1) = {}  ({:?})", chi2, t1.elapsed());
}
