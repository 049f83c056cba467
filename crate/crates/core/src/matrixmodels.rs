//! Fat (ribbon) graphs and matrix-integral combinatorics: polygon gluing
//! censuses by genus, the Harer-Zagier polynomial and the moduli-space
//! Euler characteristic, genus expansions of matrix integrals, Hermite
//! polynomial identities, planar (BIPZ) counts and Wigner moments.

use crate::feynman::{ExpKey, Expansion};
use crate::scalar::{binomial, catalan, double_factorial, factorial, rat, Rat};
use crate::series::Series;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MmError {
    #[error("census budget exceeded ({0} half-edges)")]
    Budget(usize),
    #[error("Euler characteristic supported for genus 1 and 2 only")]
    GenusRange,
}

// ---------------------------------------------------------------------------
// fat graphs
// ---------------------------------------------------------------------------

/// A fat-graph gluing: flowers with fixed cyclic half-edge order, a matching
/// on the half-edges, and an optional twist bit per glued pair.
#[derive(Debug, Clone)]
pub struct FatGluing<'a> {
    /// valency of each flower (half-edges are numbered flower by flower)
    pub valencies: &'a [usize],
    pub matching: &'a [usize],
    /// twist flag per half-edge pair, indexed by the smaller half-edge
    pub twisted: Option<&'a [bool]>,
}

/// Boundary components and genus of the fattened surface. For twisted
/// gluings the genus is reported doubled (it may be a half-integer).
pub fn boundary_and_genus(g: &FatGluing<'_>) -> (usize, i64) {
    let total: usize = g.valencies.iter().sum();
    let e = total / 2;
    let v = g.valencies.len();
    // Boundary points: each half-edge h carries (P_h, Q_h) = (2h, 2h+1) in
    // cyclic order P_0 Q_0 P_1 Q_1 ... around its flower. Boundary arcs
    // join Q_{h_k} to P_{h_{k+1}}; an untwisted gluing of h, h' identifies
    // P_h ~ Q_{h'} and Q_h ~ P_{h'}; a twisted one P_h ~ P_{h'}, Q_h ~ Q_{h'}.
    let mut parent: Vec<usize> = (0..2 * total).collect();
    let mut merges = 0usize;
    fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut union = |p: &mut Vec<usize>, merges: &mut usize, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra] = rb;
            *merges += 1;
        }
    };
    // vertex arcs
    let mut base = 0;
    for &val in g.valencies {
        for k in 0..val {
            let h = base + k;
            let h_next = base + (k + 1) % val;
            union(&mut parent, &mut merges, 2 * h + 1, 2 * h_next);
        }
        base += val;
    }
    // gluings
    for (h, &hp) in g.matching.iter().enumerate() {
        if h < hp {
            let tw = g.twisted.map_or(false, |t| t[h]);
            if tw {
                union(&mut parent, &mut merges, 2 * h, 2 * hp);
                union(&mut parent, &mut merges, 2 * h + 1, 2 * hp + 1);
            } else {
                union(&mut parent, &mut merges, 2 * h, 2 * hp + 1);
                union(&mut parent, &mut merges, 2 * h + 1, 2 * hp);
            }
        }
    }
    // every point has degree two, so components = points - merges
    let nu = 2 * total - merges;
    // closed-surface Euler characteristic after capping the boundaries:
    // chi = V - E + nu; genus = 1 - chi/2 (doubled here to stay integral)
    let chi = v as i64 - e as i64 + nu as i64;
    (nu, 2 - chi)
}

fn fat_connected(valencies: &[usize], matching: &[usize]) -> bool {
    let n = valencies.len();
    if n == 0 {
        return false;
    }
    let mut owner = Vec::new();
    for (v, &val) in valencies.iter().enumerate() {
        for _ in 0..val {
            owner.push(v);
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (h, &hp) in matching.iter().enumerate() {
        if h < hp {
            let (ra, rb) = (find(&mut parent, owner[h]), find(&mut parent, owner[hp]));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let r0 = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == r0)
}

// ---------------------------------------------------------------------------
// polygon gluings
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GluingMode {
    Oriented,
    Twisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GluingConditions {
    /// all gluings: epsilon_g(m)
    None,
    /// no side glued to a neighboring side: mu_g(m)
    A,
    /// additionally no two consecutive sides glued to another consecutive
    /// pair in the opposite order: lambda_g(m)
    AB,
}

/// Count gluings of a 2m-gon by genus. Oriented mode counts matchings of
/// the sides; twisted mode additionally sums over per-pair twist flags
/// (genus keys are doubled so half-integer genera stay integral:
/// key = 2*genus).
pub fn polygon_gluing_census(
    m: usize,
    mode: GluingMode,
    conditions: GluingConditions,
) -> Result<BTreeMap<i64, BigInt>, MmError> {
    if m == 0 {
        let mut out = BTreeMap::new();
        out.insert(0, BigInt::one());
        return Ok(out);
    }
    let sides = 2 * m;
    if m > 9 || (mode == GluingMode::Twisted && m > 6) {
        return Err(MmError::Budget(sides));
    }
    let mut counts: BTreeMap<i64, BigInt> = BTreeMap::new();
    let valencies = [sides];
    crate::graphs::for_each_matching(sides, |mt| {
        if !satisfies_conditions(mt, sides, conditions) {
            return;
        }
        match mode {
            GluingMode::Oriented => {
                let g = FatGluing { valencies: &valencies, matching: mt, twisted: None };
                let (_nu, g2) = boundary_and_genus(&g);
                debug_assert!(g2 % 2 == 0);
                *counts.entry(g2 / 2).or_insert_with(BigInt::zero) += 1u8;
            }
            GluingMode::Twisted => {
                // iterate twist flags over the m pairs
                let pairs: Vec<usize> =
                    (0..sides).filter(|&h| mt[h] > h).collect();
                let mut flags = vec![false; sides];
                for mask in 0u32..(1 << pairs.len()) {
                    for (bit, &h) in pairs.iter().enumerate() {
                        flags[h] = mask & (1 << bit) != 0;
                    }
                    let g = FatGluing {
                        valencies: &valencies,
                        matching: mt,
                        twisted: Some(&flags),
                    };
                    let (_nu, g2) = boundary_and_genus(&g);
                    *counts.entry(g2).or_insert_with(BigInt::zero) += 1u8;
                }
            }
        }
    });
    Ok(counts)
}

fn satisfies_conditions(mt: &[usize], sides: usize, conditions: GluingConditions) -> bool {
    match conditions {
        GluingConditions::None => true,
        GluingConditions::A => condition_a(mt, sides),
        GluingConditions::AB => condition_a(mt, sides) && condition_b(mt, sides),
    }
}

/// No side glued to a cyclically neighboring side.
fn condition_a(mt: &[usize], sides: usize) -> bool {
    (0..sides).all(|i| {
        let j = mt[i];
        j != (i + 1) % sides && (j + 1) % sides != i
    })
}

/// No consecutive pair glued to another consecutive pair in opposite order.
fn condition_b(mt: &[usize], sides: usize) -> bool {
    (0..sides).all(|i| {
        let i1 = (i + 1) % sides;
        (mt[i1] + 1) % sides != mt[i]
    })
}

/// Sum of the nu-weighted census: <Tr A^{2m}> for the hermitian ensemble
/// equals sum over oriented gluings of N^nu; the real symmetric ensemble
/// sums N^nu over twisted gluings.
pub fn polygon_nu_weighted_sum(m: usize, n: usize, mode: GluingMode) -> Result<BigInt, MmError> {
    let sides = 2 * m;
    if m > 9 || (mode == GluingMode::Twisted && m > 6) {
        return Err(MmError::Budget(sides));
    }
    if m == 0 {
        return Ok(BigInt::one());
    }
    let mut total = BigInt::zero();
    let valencies = [sides];
    crate::graphs::for_each_matching(sides, |mt| {
        match mode {
            GluingMode::Oriented => {
                let g = FatGluing { valencies: &valencies, matching: mt, twisted: None };
                let (nu, _g2) = boundary_and_genus(&g);
                total += BigInt::from(n as u64).pow(nu as u32);
            }
            GluingMode::Twisted => {
                let pairs: Vec<usize> = (0..sides).filter(|&h| mt[h] > h).collect();
                let mut flags = vec![false; sides];
                for mask in 0u32..(1 << pairs.len()) {
                    for (bit, &h) in pairs.iter().enumerate() {
                        flags[h] = mask & (1 << bit) != 0;
                    }
                    let g = FatGluing {
                        valencies: &valencies,
                        matching: mt,
                        twisted: Some(&flags),
                    };
                    let (nu, _g2) = boundary_and_genus(&g);
                    total += BigInt::from(n as u64).pow(nu as u32);
                }
            }
        }
    });
    Ok(total)
}

// ---------------------------------------------------------------------------
// Harer-Zagier
// ---------------------------------------------------------------------------

/// P_m(x) = (2m)!/(2^m m!) sum_p C(m,p) 2^p x(x-1)...(x-p)/(p+1)!,
/// as exact polynomial coefficients (index = power of x).
pub fn harer_zagier_poly(m: usize) -> Vec<Rat> {
    let mut coeffs = vec![Rat::zero(); m + 2];
    let prefactor = Rat::from_integer(double_factorial(2 * m as i64 - 1));
    for p in 0..=m {
        // x(x-1)...(x-p): falling factorial with p+1 factors
        let mut poly = vec![Rat::zero(), Rat::one()]; // x
        for k in 1..=p {
            // multiply by (x - k)
            let mut next = vec![Rat::zero(); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * Rat::from_integer(BigInt::from(k as u64));
            }
            poly = next;
        }
        let scale = Rat::from_integer(binomial(m, p) * BigInt::from(2u8).pow(p as u32))
            / Rat::from_integer(factorial(p + 1));
        for (i, c) in poly.iter().enumerate() {
            coeffs[i] += c * &scale * &prefactor;
        }
    }
    coeffs
}

pub fn poly_eval(coeffs: &[Rat], x: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// The gluing census regrouped as a polynomial: sum_g eps_g(m) x^{m+1-2g}.
pub fn census_poly(m: usize) -> Result<Vec<Rat>, MmError> {
    let census = polygon_gluing_census(m, GluingMode::Oriented, GluingConditions::None)?;
    let mut coeffs = vec![Rat::zero(); m + 2];
    for (&g, count) in &census {
        let power = m as i64 + 1 - 2 * g;
        assert!(power >= 0);
        coeffs[power as usize] += Rat::from_integer(count.clone());
    }
    Ok(coeffs)
}

/// Orbifold Euler characteristic of the genus-g mapping class group with
/// one marked point: census through the (6g-3)-gon, triangular inversion of
/// the two binomial recursions, then the alternating sum.
pub fn moduli_euler_char(genus: usize) -> Result<Rat, MmError> {
    if genus == 0 || genus > 2 {
        return Err(MmError::GenusRange);
    }
    let n_max = 6 * genus - 3;
    // epsilon_g(n) for n = 0..n_max
    let mut eps = vec![BigInt::zero(); n_max + 1];
    for n in 1..=n_max {
        let census = polygon_gluing_census(n, GluingMode::Oriented, GluingConditions::None)?;
        eps[n] = census.get(&(genus as i64)).cloned().unwrap_or_else(BigInt::zero);
    }
    // invert eps(n) = sum_i C(2n, i) mu(n-i)
    let mut mu = vec![BigInt::zero(); n_max + 1];
    for n in 1..=n_max {
        let mut acc = eps[n].clone();
        for i in 1..=n {
            acc -= binomial(2 * n, i) * &mu[n - i];
        }
        mu[n] = acc;
    }
    // invert mu(n) = sum_i C(n, i) lambda(n-i)
    let mut lambda = vec![BigInt::zero(); n_max + 1];
    for n in 1..=n_max {
        let mut acc = mu[n].clone();
        for i in 1..=n {
            acc -= binomial(n, i) * &lambda[n - i];
        }
        lambda[n] = acc;
    }
    let mut chi = Rat::zero();
    for (n, l) in lambda.iter().enumerate().skip(1) {
        let sign = if n % 2 == 1 { Rat::one() } else { -Rat::one() };
        chi += sign * Rat::new(l.clone(), BigInt::from(2 * n as u64));
    }
    Ok(chi)
}

// ---------------------------------------------------------------------------
// matrix Wick oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    Hermitian,
    RealSymmetric,
}

/// Exact <Tr A^{2m}> under the Gaussian measure, by brute-force index sums
/// over Wick pairings of matrix entries (independent of every surface
/// picture). Covariances: hermitian <a_ij a_kl> = d_il d_jk; real symmetric
/// <a_ij a_kl> = d_ik d_jl + d_il d_jk.
pub fn matrix_wick_oracle(n: usize, m: usize, ensemble: Ensemble) -> Result<BigInt, MmError> {
    if n > 4 || m > 4 {
        return Err(MmError::Budget(n.pow(2 * m as u32)));
    }
    if m == 0 {
        return Ok(BigInt::from(n as u64)); // Tr(1) = N
    }
    let len = 2 * m;
    let mut total = BigInt::zero();
    let mut idx = vec![0usize; len];
    // collect all pairings of the 2m factors once
    let mut pairings: Vec<Vec<usize>> = Vec::new();
    crate::graphs::for_each_matching(len, |mt| pairings.push(mt.to_vec()));
    loop {
        // factor t = a_{i_t, i_{t+1}}
        let row = |t: usize| idx[t];
        let col = |t: usize| idx[(t + 1) % len];
        let mut here = 0u64;
        for mt in &pairings {
            let mut prod = 1u64;
            for t in 0..len {
                let u = mt[t];
                if t > u {
                    continue;
                }
                let c = match ensemble {
                    Ensemble::Hermitian => {
                        u64::from(row(t) == col(u) && col(t) == row(u))
                    }
                    Ensemble::RealSymmetric => {
                        u64::from(row(t) == row(u) && col(t) == col(u))
                            + u64::from(row(t) == col(u) && col(t) == row(u))
                    }
                };
                prod *= c;
                if prod == 0 {
                    break;
                }
            }
            here += prod;
        }
        total += here;
        // odometer
        let mut pos = len;
        let mut done = false;
        loop {
            if pos == 0 {
                done = true;
                break;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
        }
        if done {
            break;
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// genus expansion of log Z_N
// ---------------------------------------------------------------------------

/// Coefficients of log Z_hat_N grouped by genus: for each profile over the
/// supplied couplings (valency, symbol), sum over connected fat gluings of
/// 1/|G_cyc| with |G_cyc| = prod i^{n_i} n_i!, bucketed by genus.
pub fn genus_expansion(
    couplings: &[(usize, &str)],
    max_total_degree: u32,
) -> Result<BTreeMap<i64, Expansion>, MmError> {
    let mut out: BTreeMap<i64, Expansion> = BTreeMap::new();
    // enumerate multi-degrees over couplings
    fn profiles(
        couplings: &[(usize, &str)],
        pos: usize,
        remaining: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if pos == couplings.len() {
            if current.iter().any(|&c| c > 0) {
                out.push(current.clone());
            }
            return;
        }
        for n in 0..=remaining {
            current.push(n);
            profiles(couplings, pos + 1, remaining - n, current, out);
            current.pop();
        }
    }
    let mut all = Vec::new();
    profiles(couplings, 0, max_total_degree, &mut Vec::new(), &mut all);
    for counts in all {
        let mut valencies = Vec::new();
        let mut key = ExpKey::unit();
        let mut group = BigInt::one();
        for ((&(v, sym), &n)) in couplings.iter().zip(&counts) {
            for _ in 0..n {
                valencies.push(v);
            }
            if n > 0 {
                key = key.merge(&ExpKey::single(sym, n, n as i64 * (v as i64 - 2)));
                group *= BigInt::from(v as u64).pow(n) * factorial(n as usize);
            }
        }
        let total: usize = valencies.iter().sum();
        if total % 2 != 0 {
            continue;
        }
        if total > 18 {
            return Err(MmError::Budget(total));
        }
        let mut buckets: BTreeMap<i64, BigInt> = BTreeMap::new();
        crate::graphs::for_each_matching(total, |mt| {
            if !fat_connected(&valencies, mt) {
                return;
            }
            let g = FatGluing { valencies: &valencies, matching: mt, twisted: None };
            let (_nu, g2) = boundary_and_genus(&g);
            debug_assert!(g2 % 2 == 0);
            *buckets.entry(g2 / 2).or_insert_with(BigInt::zero) += 1u8;
        });
        for (g, count) in buckets {
            let coeff = Rat::new(count, group.clone());
            out.entry(g).or_default().add_term(key.clone(), coeff);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// BIPZ planar counts
// ---------------------------------------------------------------------------

/// Closed form c_n = 12^n (2n-1)!/(n+2)! for connected planar gluings of n
/// labeled 4-valent fat flowers.
pub fn bipz(n: usize) -> Rat {
    Rat::from_integer(BigInt::from(12u8).pow(n as u32) * factorial(2 * n - 1))
        / Rat::from_integer(factorial(n + 2))
}

/// Census: the number of connected genus-zero gluings of n labeled
/// 4-valent fat flowers.
pub fn planar_quartic_census(n: usize) -> Result<BigInt, MmError> {
    let total = 4 * n;
    if total > 16 {
        return Err(MmError::Budget(total));
    }
    let valencies = vec![4usize; n];
    let mut count = BigInt::zero();
    crate::graphs::for_each_matching(total, |mt| {
        if !fat_connected(&valencies, mt) {
            return;
        }
        let g = FatGluing { valencies: &valencies, matching: mt, twisted: None };
        let (_nu, g2) = boundary_and_genus(&g);
        if g2 == 0 {
            count += 1u8;
        }
    });
    Ok(count)
}

// ---------------------------------------------------------------------------
// Hermite polynomials
// ---------------------------------------------------------------------------

/// H_n with exact coefficients, by the recursion H_{n+1} = 2x H_n - 2n H_{n-1}.
pub fn hermite(n: usize) -> Vec<Rat> {
    let mut h0 = vec![Rat::one()];
    if n == 0 {
        return h0;
    }
    let mut h1 = vec![Rat::zero(), rat(2, 1)];
    for k in 1..n {
        let mut next = vec![Rat::zero(); k + 2];
        for (i, c) in h1.iter().enumerate() {
            next[i + 1] += c * rat(2, 1);
        }
        for (i, c) in h0.iter().enumerate() {
            next[i] -= c * Rat::from_integer(BigInt::from(2 * k as u64));
        }
        h0 = std::mem::replace(&mut h1, next);
    }
    h1
}

/// (1/sqrt(pi)) int x^k e^{-x^2} dx, exactly: (k-1)!!/2^{k/2} for even k.
pub fn gaussian_moment_unit(k: usize) -> Rat {
    if k % 2 == 1 {
        return Rat::zero();
    }
    Rat::from_integer(double_factorial(k as i64 - 1))
        / Rat::from_integer(BigInt::from(2u8).pow(k as u32 / 2))
}

/// (1/sqrt(pi)) int e^{-x^2} p(x) q(x) dx for exact polynomials.
pub fn hermite_pairing(p: &[Rat], q: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (i, a) in p.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in q.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            acc += a * b * gaussian_moment_unit(i + j);
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Wigner moments
// ---------------------------------------------------------------------------

/// (1/2pi) int_{-2}^{2} x^{2m} sqrt(4-x^2) dx = C_m, via the beta-integral
/// reduction 2^{2m+1} (2m-1)!!/((2m)!! (2m+2)).
pub fn wigner_moment(m: usize) -> Rat {
    Rat::from_integer(BigInt::from(2u8).pow(2 * m as u32 + 1) * double_factorial(2 * m as i64 - 1))
        / Rat::from_integer(double_factorial(2 * m as i64) * BigInt::from(2 * m as u64 + 2))
}

/// Seeded GUE sample estimate of (1/N) E Tr (A/sqrt N)^{2m}.
pub fn gue_moment_estimate(n: usize, m: usize, samples: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut acc = 0.0;
    for _ in 0..samples {
        // hermitian A: diagonal N(0,1); off-diagonal (x+iy)/sqrt(2)
        let mut re = vec![0.0f64; n * n];
        let mut im = vec![0.0f64; n * n];
        for i in 0..n {
            re[i * n + i] = normal(&mut rng);
            for j in i + 1..n {
                let x = normal(&mut rng) / 2f64.sqrt();
                let y = normal(&mut rng) / 2f64.sqrt();
                re[i * n + j] = x;
                re[j * n + i] = x;
                im[i * n + j] = y;
                im[j * n + i] = -y;
            }
        }
        // B = A/sqrt(N); compute Tr(B^{2m}) by repeated squaring of powers
        let scale = 1.0 / (n as f64).sqrt();
        for v in re.iter_mut().chain(im.iter_mut()) {
            *v *= scale;
        }
        // complex matmul power
        let mut pr = re.clone();
        let mut pi = im.clone();
        for _ in 1..2 * m {
            let mut nr = vec![0.0; n * n];
            let mut ni = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    let (ar, ai) = (pr[i * n + k], pi[i * n + k]);
                    if ar == 0.0 && ai == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        let (br, bi) = (re[k * n + j], im[k * n + j]);
                        nr[i * n + j] += ar * br - ai * bi;
                        ni[i * n + j] += ar * bi + ai * br;
                    }
                }
            }
            pr = nr;
            pi = ni;
        }
        let trace: f64 = (0..n).map(|i| pr[i * n + i]).sum();
        acc += trace / n as f64;
    }
    acc / samples as f64
}

/// The Catalan generating function h with h - 1 = x h^2 (planar gluing
/// counts), as an exact series.
pub fn catalan_series(order: isize) -> Series<Rat> {
    let mut s = Series::zero("x", order);
    for n in 0..order.max(0) as usize {
        s.set_coeff(n as isize, Rat::from_integer(catalan(n)));
    }
    s
}
