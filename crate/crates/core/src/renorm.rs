//! Superficial degree of divergence, renormalizability classification, the
//! Feynman parameter lemma, and the phi^3 one-loop bubble in d = 2, 3 and
//! its renormalized d = 4 limit.

use crate::asymptotics::{quad_finite, quadrature, AsymError, Domain};

/// A differential monomial in a scalar boson: phi^boson_power with
/// `derivatives` total derivatives (fermion fields enter through
/// `fermion_power` with kinetic dimension (d-1)/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub boson_power: u32,
    pub fermion_power: u32,
    pub derivatives: u32,
}

impl Monomial {
    pub fn boson(n: u32) -> Self {
        Monomial { boson_power: n, fermion_power: 0, derivatives: 0 }
    }

    pub fn with_derivatives(n: u32, nd: u32) -> Self {
        Monomial { boson_power: n, fermion_power: 0, derivatives: nd }
    }

    pub fn fermion(n: u32) -> Self {
        Monomial { boson_power: 0, fermion_power: n, derivatives: 0 }
    }

    pub fn yukawa() -> Self {
        Monomial { boson_power: 1, fermion_power: 2, derivatives: 0 }
    }

    /// D(Phi) = ((d-2)/2) e_b(Phi) + ((d-1)/2) e_f(Phi) - d + N_Phi,
    /// in halves to stay integral.
    pub fn divergence_degree_x2(&self, d: i64) -> i64 {
        (d - 2) * self.boson_power as i64 + (d - 1) * self.fermion_power as i64 - 2 * d
            + 2 * self.derivatives as i64
    }

    /// Classical scaling dimension [Phi] = D(Phi) + d (doubled).
    pub fn scaling_dimension_x2(&self, d: i64) -> i64 {
        self.divergence_degree_x2(d) + 2 * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    SuperRenormalizable,
    Critical,
    NonRenormalizable,
}

/// Classify a single interaction monomial at spacetime dimension d.
pub fn classify_term(term: Monomial, d: i64) -> Class {
    let deg = term.divergence_degree_x2(d);
    if deg < 0 {
        Class::SuperRenormalizable
    } else if deg == 0 {
        Class::Critical
    } else {
        Class::NonRenormalizable
    }
}

/// Whole-Lagrangian classification: super-renormalizable when every
/// interaction is; critical when all are at worst critical with at least
/// one critical interaction; non-renormalizable otherwise.
pub fn classify_lagrangian(terms: &[Monomial], d: i64) -> Class {
    let classes: Vec<Class> = terms.iter().map(|&t| classify_term(t, d)).collect();
    if classes.iter().any(|&c| c == Class::NonRenormalizable) {
        Class::NonRenormalizable
    } else if classes.iter().any(|&c| c == Class::Critical) {
        Class::Critical
    } else {
        Class::SuperRenormalizable
    }
}

/// D(Gamma) = d - k(d-2)/2 + sum_Phi D(Phi) for a diagram with k external
/// legs and the given internal vertex monomials (doubled).
pub fn diagram_divergence_degree_x2(k: u32, vertices: &[Monomial], d: i64) -> i64 {
    let mut acc = 2 * d - (k as i64) * (d - 2);
    for v in vertices {
        acc += v.divergence_degree_x2(d);
    }
    acc
}

/// Two-route check helper: D(Gamma) computed from raw graph data
/// (internal edges e, internal vertices v, derivatives per vertex assumed
/// zero): D = (d-2) e - d v + d.
pub fn diagram_divergence_from_counts_x2(e: u32, v: u32, d: i64) -> i64 {
    2 * ((d - 2) * e as i64 - d * v as i64 + d)
}

/// |simplex quadrature of int dy/(sum a_i y_i)^n - 1/prod a_i|: the Feynman
/// famous formula residual. Supports n = 2, 3.
pub fn feynman_parameter_residual(a: &[f64], tol: f64) -> Result<f64, AsymError> {
    let n = a.len();
    let target: f64 = 1.0 / a.iter().product::<f64>();
    let value = match n {
        1 => 1.0 / a[0],
        2 => {
            let (a0, a1) = (a[0], a[1]);
            let f = move |y: f64| 1.0 / (a0 * y + a1 * (1.0 - y)).powi(2);
            quad_finite(&f, 0.0, 1.0, tol)?
        }
        3 => {
            // int over y0 + y1 + y2 = 1 with the normalized (area 1) measure:
            // 2 * int_0^1 dy0 int_0^{1-y0} dy1 f(y0, y1, 1-y0-y1) ... the
            // simplex {y0,y1>=0, y0+y1<=1} has area 1/2, so weight by 2.
            let (a0, a1, a2) = (a[0], a[1], a[2]);
            let outer = move |y0: f64| {
                let inner = move |y1: f64| {
                    let y2 = 1.0 - y0 - y1;
                    1.0 / (a0 * y0 + a1 * y1 + a2 * y2).powi(3)
                };
                quad_finite(&inner, 0.0, 1.0 - y0, tol * 0.1).unwrap_or(f64::NAN)
            };
            2.0 * quad_finite(&outer, 0.0, 1.0, tol)?
        }
        _ => return Err(AsymError::NoConvergence(f64::NAN)),
    };
    Ok((value - target).abs())
}

/// acoth(x) = (1/2) log((x+1)/(x-1)) for x > 1.
pub fn arccotanh(x: f64) -> f64 {
    0.5 * ((x + 1.0) / (x - 1.0)).ln()
}

/// The d = 2 bubble integral int d^2 q / ((q^2+m^2)((p-q)^2+m^2)) in closed
/// form: (4 pi / (p^2 u)) acoth(u) with u = sqrt(4 m^2/p^2 + 1).
pub fn bubble_d2(p: f64, m: f64) -> f64 {
    if p.abs() < 1e-12 {
        // analytic limit p -> 0: pi/m^2
        return std::f64::consts::PI / (m * m);
    }
    let u = (4.0 * m * m / (p * p) + 1.0).sqrt();
    4.0 * std::f64::consts::PI * arccotanh(u) / (p * p * u)
}

/// The d = 3 bubble in closed form: (2 pi^2 / p) asin(p / sqrt(p^2 + 4 m^2)).
pub fn bubble_d3(p: f64, m: f64) -> f64 {
    if p.abs() < 1e-12 {
        return std::f64::consts::PI.powi(2) / m;
    }
    2.0 * std::f64::consts::PI.powi(2) / p * (p / (p * p + 4.0 * m * m).sqrt()).asin()
}

/// Renormalized d = 4 bubble: the limit of int_{|q| <= Lambda} minus the
/// counterterm 2 pi^2 log(Lambda/m). Closed form
/// I(p) = pi^2 (1 - 2 u acoth(u)), u = sqrt(4 m^2/p^2 + 1).
pub fn renormalized_bubble_d4(p: f64, m: f64) -> f64 {
    if p.abs() < 1e-12 {
        return -std::f64::consts::PI.powi(2);
    }
    let u = (4.0 * m * m / (p * p) + 1.0).sqrt();
    std::f64::consts::PI.powi(2) * (1.0 - 2.0 * u * arccotanh(u))
}

/// Cutoff evaluation of the d = 4 bubble minus the log counterterm, via the
/// Feynman parameter and the exact radial integral at finite Lambda:
/// int_{|q|<=L} d^4 q/(q^2+D)^2 = pi^2 (log(1 + L^2/D) - L^2/(L^2+D)).
pub fn subtracted_bubble_d4_cutoff(p: f64, m: f64, lambda: f64, tol: f64) -> Result<f64, AsymError> {
    let f = move |y: f64| {
        let delta = y * (1.0 - y) * p * p + m * m;
        let l2 = lambda * lambda;
        std::f64::consts::PI.powi(2) * ((1.0 + l2 / delta).ln() - l2 / (l2 + delta))
    };
    let v = quad_finite(&f, 0.0, 1.0, tol)?;
    Ok(v - 2.0 * std::f64::consts::PI.powi(2) * (lambda / m).ln())
}

/// Direct 2d quadrature oracle for the d = 2 bubble (radial + Feynman
/// parameter route).
pub fn bubble_d2_quadrature(p: f64, m: f64, tol: f64) -> Result<f64, AsymError> {
    // with the Feynman parameter: int_0^1 dy pi/(y(1-y)p^2 + m^2)
    let f = move |y: f64| std::f64::consts::PI / (y * (1.0 - y) * p * p + m * m);
    quad_finite(&f, 0.0, 1.0, tol)
}

/// Fully independent oracle: direct polar quadrature of the d = 2 bubble.
pub fn bubble_d2_polar_quadrature(p: f64, m: f64, tol: f64) -> Result<f64, AsymError> {
    let inner = move |r: f64| {
        let angular = move |th: f64| {
            let qx = r * th.cos();
            let qy = r * th.sin();
            let d1 = r * r + m * m;
            let d2 = (p - qx) * (p - qx) + qy * qy + m * m;
            1.0 / (d1 * d2)
        };
        r * quad_finite(&angular, 0.0, 2.0 * std::f64::consts::PI, tol * 0.1)
            .unwrap_or(f64::NAN)
    };
    quadrature(&inner, Domain::HalfLine(0.0), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_degrees() {
        // mass term: D = -2 in any dimension
        for d in 2..=8 {
            assert_eq!(Monomial::boson(2).divergence_degree_x2(d), -4);
        }
        // phi^3: super for d < 6, critical at 6, non above
        assert_eq!(classify_term(Monomial::boson(3), 5), Class::SuperRenormalizable);
        assert_eq!(classify_term(Monomial::boson(3), 6), Class::Critical);
        assert_eq!(classify_term(Monomial::boson(3), 7), Class::NonRenormalizable);
        // kinetic term is critical by construction
        assert_eq!(classify_term(Monomial::with_derivatives(2, 2), 4), Class::Critical);
        // scaling dimension [phi] = (d-2)/2 (doubled: d-2)
        assert_eq!(Monomial::boson(1).scaling_dimension_x2(4), 2);
    }

    #[test]
    fn scalar_table() {
        // phi^4 at d=4 critical, phi^4 only for d <= 4
        assert_eq!(classify_term(Monomial::boson(4), 4), Class::Critical);
        assert_eq!(classify_term(Monomial::boson(4), 5), Class::NonRenormalizable);
        // P6 at d=3
        assert_eq!(classify_term(Monomial::boson(6), 3), Class::Critical);
        assert_eq!(classify_term(Monomial::boson(6), 4), Class::NonRenormalizable);
        // (d phi)^2 phi: non-renormalizable unless d = 2 (critical there)
        assert_eq!(classify_term(Monomial::with_derivatives(3, 2), 2), Class::Critical);
        for d in 3..=6 {
            assert_eq!(
                classify_term(Monomial::with_derivatives(3, 2), d),
                Class::NonRenormalizable,
                "d={}",
                d
            );
        }
        // arbitrary polynomial at d=2: every phi^n is super-renormalizable
        for n in 3..=9 {
            assert_eq!(classify_term(Monomial::boson(n), 2), Class::SuperRenormalizable);
        }
    }

    #[test]
    fn fermion_table() {
        // [psi] = (d-1)/2
        assert_eq!(Monomial::fermion(1).scaling_dimension_x2(4), 3);
        // psi^4 critical only at d = 2 (Gross-Neveu)
        assert_eq!(classify_term(Monomial::fermion(4), 2), Class::Critical);
        assert_eq!(classify_term(Monomial::fermion(4), 3), Class::NonRenormalizable);
        // Yukawa phi psi^2 for d <= 4
        assert_eq!(classify_term(Monomial::yukawa(), 4), Class::Critical);
        assert_eq!(classify_term(Monomial::yukawa(), 3), Class::SuperRenormalizable);
        assert_eq!(classify_term(Monomial::yukawa(), 5), Class::NonRenormalizable);
    }

    #[test]
    fn lagrangian_classification() {
        let phi4_d4 = [Monomial::boson(2), Monomial::boson(3), Monomial::boson(4)];
        assert_eq!(classify_lagrangian(&phi4_d4, 4), Class::Critical);
        assert_eq!(classify_lagrangian(&phi4_d4, 3), Class::SuperRenormalizable);
        assert_eq!(classify_lagrangian(&phi4_d4, 5), Class::NonRenormalizable);
    }

    #[test]
    fn one_loop_cycle_degree() {
        // 1-loop k-leg phi^3 cycle: D = d - 2k, via the vertex-sum formula
        for d in 2..=6i64 {
            for k in 1..=4u32 {
                let vertices = vec![Monomial::boson(3); k as usize];
                assert_eq!(
                    diagram_divergence_degree_x2(k, &vertices, d),
                    2 * (d - 2 * k as i64),
                    "d={} k={}",
                    d,
                    k
                );
                // two-route: the cycle has e = k internal edges, v = k vertices
                assert_eq!(
                    diagram_divergence_from_counts_x2(k, k, d),
                    2 * (d - 2 * k as i64)
                );
            }
        }
    }

    #[test]
    fn additive_dimensions_on_products() {
        // [Phi1 Phi2] = [Phi1] + [Phi2] in additive units
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let d = rng.gen_range(2..=7i64);
            let a = Monomial {
                boson_power: rng.gen_range(0..4),
                fermion_power: rng.gen_range(0..3),
                derivatives: rng.gen_range(0..3),
            };
            let b = Monomial {
                boson_power: rng.gen_range(0..4),
                fermion_power: rng.gen_range(0..3),
                derivatives: rng.gen_range(0..3),
            };
            let prod = Monomial {
                boson_power: a.boson_power + b.boson_power,
                fermion_power: a.fermion_power + b.fermion_power,
                derivatives: a.derivatives + b.derivatives,
            };
            assert_eq!(
                prod.scaling_dimension_x2(d),
                a.scaling_dimension_x2(d) + b.scaling_dimension_x2(d)
            );
        }
    }

    #[test]
    fn super_renormalizable_has_finitely_many_divergent_shapes() {
        // phi^3 at d = 4: D(Gamma) = 2*(4) - 2k - 2v (doubled): only
        // finitely many (k, v) give D >= 0; enumerate v <= 6 and check the
        // bound closes
        let d = 4i64;
        let mut divergent = Vec::new();
        for v in 1..=6u32 {
            for k in 0..=(3 * v) {
                let vertices = vec![Monomial::boson(3); v as usize];
                if diagram_divergence_degree_x2(k, &vertices, d) >= 0 {
                    divergent.push((k, v));
                }
            }
        }
        // D/2 = 4 - k - v: divergent iff k + v <= 4: a fixed finite list
        for &(k, v) in &divergent {
            assert!(k as i64 + v as i64 <= 4);
        }
        assert!(!divergent.is_empty());
    }

    #[test]
    fn feynman_parameter_small_cases() {
        assert!(feynman_parameter_residual(&[1.0, 1.0], 1e-12).unwrap() < 1e-12);
        assert!(feynman_parameter_residual(&[1.0, 2.0, 3.0], 1e-11).unwrap() < 1e-10);
        // permutation symmetry
        let p1 = feynman_parameter_residual(&[2.0, 5.0, 0.5], 1e-11).unwrap();
        let p2 = feynman_parameter_residual(&[0.5, 2.0, 5.0], 1e-11).unwrap();
        assert!(p1 < 1e-10 && p2 < 1e-10);
    }

    #[test]
    fn bubble_d2_closed_form_vs_quadrature() {
        for &(p, m) in &[(1.0, 1.0), (2.0, 0.7), (0.4, 1.3)] {
            let cf = bubble_d2(p, m);
            let q = bubble_d2_quadrature(p, m, 1e-12).unwrap();
            assert!((cf - q).abs() < 1e-10, "p={} m={}: {} vs {}", p, m, cf, q);
            let polar = bubble_d2_polar_quadrature(p, m, 1e-9).unwrap();
            assert!((cf - polar).abs() < 1e-6, "polar p={} m={}: {} vs {}", p, m, cf, polar);
        }
        // p -> 0 analytic limit
        assert!((bubble_d2(1e-13, 1.0) - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn bubble_d3_closed_form_vs_quadrature() {
        // radial+parameter oracle: int_0^1 dy pi^2/sqrt(Delta(y))
        for &(p, m) in &[(1.0, 1.0), (2.0, 0.5)] {
            let f = move |y: f64| {
                std::f64::consts::PI.powi(2) / (y * (1.0 - y) * p * p + m * m).sqrt()
            };
            let q = quad_finite(&f, 0.0, 1.0, 1e-12).unwrap();
            assert!((bubble_d3(p, m) - q).abs() < 1e-9, "p={} m={}", p, m);
        }
    }

    #[test]
    fn renormalized_d4_cutoff_sequence() {
        let (p, m) = (1.0, 1.0);
        let target = renormalized_bubble_d4(p, m);
        let mut errs = Vec::new();
        for &lambda in &[10.0, 20.0, 40.0, 80.0] {
            let v = subtracted_bubble_d4_cutoff(p, m, lambda * m, 1e-11).unwrap();
            errs.push((v - target).abs());
        }
        // monotone decrease at least as fast as 1/Lambda per doubling
        for w in errs.windows(2) {
            assert!(w[1] < w[0] / 1.8, "errs {:?}", errs);
        }
        assert!(errs.last().unwrap() < &5e-3, "errs {:?}", errs);
        // large-p behavior: I(p) increases toward pi^2 * (1 - 0) ... the
        // subtracted integral grows negatively like -2 pi^2 log(p/m):
        // monotonicity check of the closed form
        let mut prev = renormalized_bubble_d4(0.5, m);
        for &p in &[1.0, 2.0, 4.0, 8.0] {
            let v = renormalized_bubble_d4(p, m);
            assert!(v < prev, "p={}", p);
            prev = v;
        }
    }
}
