//! Steepest-descent and stationary-phase coefficient extraction, the
//! Stirling series by two independent routes, Borel summation with Pade
//! continuation, and the adaptive quadrature oracle shared by the rest of
//! the crate.

use crate::scalar::{double_factorial, factorial, Rat};
use crate::series::{bernoulli, Series, SeriesError};
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AsymError {
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
    #[error("steepest descent requires f'(c)=0 and f''(c)>0")]
    BadCriticalPoint,
    #[error("f''(c) must have a rational square root for the exact route")]
    IrrationalCurvature,
    #[error("series known to insufficient order (need {0})")]
    InsufficientOrder(isize),
    #[error("quadrature did not reach the tolerance (best error {0:.3e})")]
    NoConvergence(f64),
    #[error("Borel continuation has a pole on the positive axis near u={0}")]
    PoleOnAxis(f64),
    #[error("Pade system is singular; raise or lower the order")]
    PadeSingular,
}

// ---------------------------------------------------------------------------
// adaptive Gauss-Kronrod quadrature
// ---------------------------------------------------------------------------

// 15-point Kronrod nodes/weights with embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        kronrod += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let result = kronrod * h;
    let err = ((kronrod - gauss) * h).abs();
    (result, err)
}

/// Adaptive quadrature on a finite interval to the requested tolerance.
pub fn quad_finite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, AsymError> {
    // worst-first interval refinement
    #[derive(Debug)]
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = gk15(f, a, b);
    let mut panels = vec![Panel { a, b, value, err }];
    let mut total_err: f64 = err;
    let mut total: f64 = value;
    let budget = 4000;
    for _ in 0..budget {
        if total_err <= tol.max(1e-15 * total.abs()) {
            return Ok(total);
        }
        // split the worst panel
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        total -= p.value;
        total_err -= p.err;
        let mid = 0.5 * (p.a + p.b);
        for (lo, hi) in [(p.a, mid), (mid, p.b)] {
            let (v, e) = gk15(f, lo, hi);
            total += v;
            total_err += e;
            panels.push(Panel { a: lo, b: hi, value: v, err: e });
        }
    }
    if total_err <= tol * 10.0 {
        Ok(total)
    } else {
        Err(AsymError::NoConvergence(total_err))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    HalfLine(f64),
    RealLine,
}

/// Adaptive quadrature with a tan substitution on infinite pieces.
pub fn quadrature(f: &dyn Fn(f64) -> f64, domain: Domain, tol: f64) -> Result<f64, AsymError> {
    match domain {
        Domain::Finite(a, b) => quad_finite(f, a, b, tol),
        Domain::HalfLine(a) => {
            // x = a + tan t, t in (0, pi/2)
            let g = move |t: f64| {
                let c = t.cos();
                f(a + t.tan()) / (c * c)
            };
            quad_finite(&g, 0.0, std::f64::consts::FRAC_PI_2 - 1e-12, tol)
        }
        Domain::RealLine => {
            let g = move |t: f64| {
                let c = t.cos();
                f(t.tan()) / (c * c)
            };
            quad_finite(
                &g,
                -std::f64::consts::FRAC_PI_2 + 1e-12,
                std::f64::consts::FRAC_PI_2 - 1e-12,
                tol,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// steepest descent / stationary phase coefficients
// ---------------------------------------------------------------------------

/// Exact Taylor data of (f, g) at the critical point c, with f(c) already
/// subtracted: `f_shifted` has zero constant and linear terms.
#[derive(Debug, Clone)]
pub struct LocalFunction {
    pub f_shifted: Series<Rat>,
    pub g: Series<Rat>,
}

impl LocalFunction {
    pub fn new(f_shifted: Series<Rat>, g: Series<Rat>) -> Result<Self, AsymError> {
        if !f_shifted.coeff(0).is_zero() || !f_shifted.coeff(1).is_zero() {
            return Err(AsymError::BadCriticalPoint);
        }
        Ok(LocalFunction { f_shifted, g })
    }
}

/// Coefficients r_n with I(hbar) ~ sqrt(2 pi) sum_n r_n hbar^n for the
/// Laplace integral int g e^{-f/hbar} dx around the minimum:
/// r_n = b_{2n} (2n-1)!! where b are the Taylor coefficients of
/// g(p^{-1})(p^{-1})' and p = sqrt(2(f - f(c))), p'(c) = +sqrt(f''(c)).
pub fn steepest_descent_coeffs(lf: &LocalFunction, n_terms: usize) -> Result<Series<Rat>, AsymError> {
    let needed = (2 * n_terms + 2) as isize;
    if lf.f_shifted.order() < needed {
        return Err(AsymError::InsufficientOrder(needed));
    }
    let fpp = lf.f_shifted.coeff(2) * crate::scalar::int(2); // f''(c)
    if fpp <= Rat::zero() {
        return Err(AsymError::BadCriticalPoint);
    }
    let root = rational_sqrt(&fpp).ok_or(AsymError::IrrationalCurvature)?;
    // u = 2 f_shifted / x^2 has constant term f''(c); p = x sqrt(u)
    let u = lf.f_shifted.scale(&crate::scalar::int(2)).shift(-2);
    let u_normalized = u.scale(&fpp.recip());
    let sqrt_u = u_normalized.sqrt()?;
    let p = Series::x("x", sqrt_u.order() + 1).mul(&sqrt_u).scale(&root);
    let p_inv = p.reversion()?;
    let g_tilde = lf.g.compose(&p_inv)?.mul(&p_inv.derivative());
    let mut out = Series::zero("hbar", n_terms as isize + 1);
    for n in 0..=n_terms {
        let b2n = g_tilde.coeff(2 * n as isize);
        let r = b2n * Rat::from_integer(double_factorial(2 * n as i64 - 1));
        out.set_coeff(n as isize, r);
    }
    Ok(out)
}

/// Stationary phase: the same algebra with hbar -> i hbar; returns
/// (real, imaginary) parts of r_n i^n, with the overall phase
/// e^{+- i pi/4} (sign of f''(c)) reported separately by the caller.
pub fn stationary_phase_coeffs(
    lf: &LocalFunction,
    n_terms: usize,
) -> Result<Vec<(Rat, Rat)>, AsymError> {
    let r = steepest_descent_coeffs(lf, n_terms)?;
    let mut out = Vec::with_capacity(n_terms + 1);
    for n in 0..=n_terms {
        let c = r.coeff(n as isize);
        let pair = match n % 4 {
            0 => (c, Rat::zero()),
            1 => (Rat::zero(), c),
            2 => (-c, Rat::zero()),
            _ => (Rat::zero(), -c),
        };
        out.push(pair);
    }
    Ok(out)
}

fn rational_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let num = r.numer().sqrt();
    let den = r.denom().sqrt();
    if &(&num * &num) == r.numer() && &(&den * &den) == r.denom() {
        Some(Rat::new(num, den))
    } else {
        None
    }
}

/// log Gamma(z+1) - (z log z + z ... ) correction series: exact Laurent
/// series sum_{n>=2} B_n z^{1-n}/(n(n-1)) reported in the variable u = 1/z.
pub fn stirling_log_gamma(n_max: usize) -> Series<Rat> {
    let b = bernoulli(n_max);
    let mut s = Series::zero("1/z", n_max as isize);
    for n in 2..=n_max {
        let coeff = b.get(n) / crate::scalar::int((n * (n - 1)) as i64);
        if !coeff.is_zero() {
            s.set_coeff(n as isize - 1, coeff);
        }
    }
    s
}

/// The Stirling correction factor 1 + a_1/z + a_2/z^2 + ... as the exp of
/// the log-Gamma correction series (the Bernoulli route).
pub fn stirling_factor(n_max: usize) -> Series<Rat> {
    stirling_log_gamma(n_max).exp().expect("zero constant term")
}

/// Numeric evaluation of the Stirling approximation to log Gamma(z+1).
pub fn stirling_log_gamma_eval(z: f64, n_max: usize) -> f64 {
    let s = stirling_log_gamma(n_max);
    z * z.ln() + 0.5 * z.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() - z + s.eval_f64(1.0 / z)
}

// ---------------------------------------------------------------------------
// Borel summation
// ---------------------------------------------------------------------------

/// How to continue the Borel transform g(u) = sum a_n u^n / n! along the
/// positive axis.
pub enum Continuation<'a> {
    /// A closed form for g, valid on [0, infinity).
    ClosedForm(&'a dyn Fn(f64) -> f64),
    /// Diagonal Pade approximant of the given order built exactly from the
    /// truncated Borel series.
    Pade { order: usize },
}

/// Exact diagonal Pade approximant [m/m] of a rational Taylor series.
/// Returns (numerator, denominator) coefficient vectors.
pub fn pade(coeffs: &[Rat], m: usize) -> Result<(Vec<Rat>, Vec<Rat>), AsymError> {
    // The Pade table has square blocks: when the underlying function is a
    // rational function of lower degree the diagonal system degenerates.
    // Walk the order down until a solvable system appears.
    let mut order = m;
    loop {
        match pade_exact(coeffs, order) {
            Ok(pq) => return Ok(pq),
            Err(AsymError::PadeSingular) if order > 0 => order -= 1,
            Err(e) => return Err(e),
        }
    }
}

fn pade_exact(coeffs: &[Rat], m: usize) -> Result<(Vec<Rat>, Vec<Rat>), AsymError> {
    if coeffs.len() < 2 * m + 1 {
        return Err(AsymError::InsufficientOrder((2 * m + 1) as isize));
    }
    if m == 0 {
        return Ok((vec![coeffs[0].clone()], vec![Rat::from_integer(1.into())]));
    }
    // Solve sum_{j=1..m} q_j c_{k-j} = -c_k for k = m+1 .. 2m, q_0 = 1.
    use crate::la::Mat;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for k in m + 1..=2 * m {
        let mut row = Vec::with_capacity(m);
        for j in 1..=m {
            row.push(if k >= j { coeffs[k - j].clone() } else { Rat::zero() });
        }
        rows.push(row);
        rhs.push(-coeffs[k].clone());
    }
    let a = Mat::from_rows(rows);
    let inv = a.inverse().ok_or(AsymError::PadeSingular)?;
    let mut q = vec![Rat::zero(); m + 1];
    q[0] = Rat::from_integer(1.into());
    for i in 0..m {
        let mut acc = Rat::zero();
        for j in 0..m {
            acc += inv.at(i, j) * &rhs[j];
        }
        q[i + 1] = acc;
    }
    // numerator = (C * Q) truncated to degree m
    let mut p = vec![Rat::zero(); m + 1];
    for i in 0..=m {
        let mut acc = Rat::zero();
        for j in 0..=i.min(m) {
            if i - j < coeffs.len() {
                acc += &q[j] * &coeffs[i - j];
            }
        }
        p[i] = acc;
    }
    Ok((p, q))
}

fn horner(poly_f64: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for c in poly_f64.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Borel sum of sum a_n hbar^n at the given hbar: int_0^infty g(hbar u)
/// e^{-u} du with g the (continued) Borel transform.
pub fn borel_sum(
    coeffs: &Series<Rat>,
    hbar: f64,
    continuation: Continuation<'_>,
    tol: f64,
) -> Result<f64, AsymError> {
    match continuation {
        Continuation::ClosedForm(g) => {
            // integrate over the e^{-u}-weighted support; beyond the cut the
            // weight is below tol * 1e-12 for any polynomially bounded g
            let cut = -(tol.max(1e-15)).ln() + 30.0;
            let integrand = move |u: f64| g(hbar * u) * (-u).exp();
            quadrature(&integrand, Domain::Finite(0.0, cut), tol)
        }
        Continuation::Pade { order } => {
            // Borel transform coefficients a_n / n!
            let n_avail = coeffs.order().max(0) as usize;
            let borel: Vec<Rat> = (0..n_avail)
                .map(|n| coeffs.coeff(n as isize) / Rat::from_integer(factorial(n)))
                .collect();
            let (p, q) = pade(&borel, order)?;
            let pf: Vec<f64> = p.iter().map(crate::scalar::rat_to_f64).collect();
            let qf: Vec<f64> = q.iter().map(crate::scalar::rat_to_f64).collect();
            // reject poles on the part of the positive axis that the
            // weighted integral actually sees (e^{-u} support down to tol)
            let u_max = (-(tol.max(1e-15)).ln() + 12.0) * hbar;
            let mut prev = horner(&qf, 0.0);
            let steps = 4000;
            for i in 1..=steps {
                let u = u_max * (i as f64 / steps as f64).powi(2);
                let cur = horner(&qf, u);
                if prev * cur < 0.0 {
                    return Err(AsymError::PoleOnAxis(u));
                }
                prev = cur;
            }
            let g = move |v: f64| horner(&pf, v) / horner(&qf, v);
            let cut = -(tol.max(1e-15)).ln() + 30.0;
            let integrand = move |u: f64| g(hbar * u) * (-u).exp();
            quadrature(&integrand, Domain::Finite(0.0, cut), tol)
        }
    }
}

/// Exponential integral E_1(x) for x > 0, to near machine precision.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        // series: E1 = -gamma - ln x + sum (-1)^{k+1} x^k / (k k!)
        const EULER_GAMMA: f64 = 0.5772156649015328606;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=40 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // continued fraction (modified Lentz)
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=200 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

// ---------------------------------------------------------------------------
// worked local models
// ---------------------------------------------------------------------------

/// f = x - log x at c = 1 (shifted): x - log(1+x) expanded exactly.
pub fn stirling_local(order: isize) -> LocalFunction {
    let mut f = Series::zero("x", order);
    // x - log(1+x) = sum_{k>=2} (-1)^k x^k / k
    for k in 2..order {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        f.set_coeff(k, crate::scalar::rat(sign, k as i64));
    }
    let g = Series::constant("x", Rat::from_integer(1.into()), order);
    LocalFunction::new(f, g).expect("valid critical point")
}

/// f = (x^2 + x^4)/2 at c = 0, g = 1.
pub fn quartic_local(order: isize) -> LocalFunction {
    let mut f = Series::zero("x", order);
    f.set_coeff(2, crate::scalar::rat(1, 2));
    f.set_coeff(4, crate::scalar::rat(1, 2));
    let g = Series::constant("x", Rat::from_integer(1.into()), order);
    LocalFunction::new(f, g).expect("valid critical point")
}
