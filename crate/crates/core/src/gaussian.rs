//! Closed-form Gaussian calculus: bosonic Wick moments over matchings,
//! Pfaffians, the fermionic Wick formula with signs, and supertrace /
//! Berezinian for block supermatrices.
//!
//! Exact and floating inputs share one matching-sum kernel; the Gaussian
//! normalization (2 pi)^{d/2} (det B)^{-1/2} is carried symbolically and
//! only floated on demand.

use crate::la::Mat;
use crate::scalar::{rat_to_f64, Rat};
use crate::series::Coeff;
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussError {
    #[error("quadratic form must be symmetric")]
    NotSymmetric,
    #[error("form must be antisymmetric")]
    NotAntisymmetric,
    #[error("form is singular")]
    Singular,
    #[error("skew form needs even dimension")]
    OddDimension,
    #[error("Berezinian undefined: odd-odd block is singular")]
    BerezinianUndefined,
}

/// Symmetric bilinear form with cached inverse and determinant.
#[derive(Debug, Clone)]
pub struct QuadraticForm<C: Coeff> {
    pub mat: Mat<C>,
    pub inv: Mat<C>,
    pub det: C,
}

impl<C: Coeff> QuadraticForm<C> {
    pub fn new(mat: Mat<C>) -> Result<Self, GaussError> {
        if !mat.is_symmetric() {
            return Err(GaussError::NotSymmetric);
        }
        let det = mat.det();
        if det.cis_zero() {
            return Err(GaussError::Singular);
        }
        let inv = mat.inverse().ok_or(GaussError::Singular)?;
        Ok(QuadraticForm { mat, inv, det })
    }

    pub fn dim(&self) -> usize {
        self.mat.n
    }

    /// B^{-1}(l1, l2) for covectors given in coordinates.
    pub fn pair_inv(&self, l1: &[C], l2: &[C]) -> C {
        let mut acc = C::czero();
        for i in 0..self.dim() {
            if l1[i].cis_zero() {
                continue;
            }
            for j in 0..self.dim() {
                acc = acc.cadd(&l1[i].cmul(self.inv.at(i, j)).cmul(&l2[j]));
            }
        }
        acc
    }
}

/// The prefactor (2 pi)^{d/2} (det B)^{-1/2}, kept symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrefactor {
    /// power of (2 pi), in half-integer units: value is (2 pi)^(half_two_pi/2)
    pub half_two_pi: i64,
    /// (det B)^{-1/2} is kept as det B itself
    pub det_b: f64,
}

impl GaussianPrefactor {
    pub fn value(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powf(self.half_two_pi as f64 / 2.0) / self.det_b.sqrt()
    }
}

/// Normalized Gaussian moment: sum over matchings of products of
/// B^{-1}(l_i, l_sigma(i)). Zero for an odd number of insertions. The
/// (2 pi)^{d/2}/sqrt(det B) prefactor is reported separately.
pub fn wick_moment<C: Coeff>(b: &QuadraticForm<C>, covectors: &[Vec<C>]) -> C {
    let n = covectors.len();
    if n % 2 != 0 {
        return C::czero();
    }
    // pairwise propagator table
    let mut table = vec![C::czero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = b.pair_inv(&covectors[i], &covectors[j]);
            table[i * n + j] = v.clone();
            table[j * n + i] = v;
        }
    }
    let mut total = C::czero();
    let mut used = vec![false; n];
    fn rec<C: Coeff>(
        used: &mut [bool],
        table: &[C],
        n: usize,
        partial: &C,
        total: &mut C,
    ) {
        let i = match used.iter().position(|u| !u) {
            None => {
                *total = total.cadd(partial);
                return;
            }
            Some(i) => i,
        };
        used[i] = true;
        for j in i + 1..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            let next = partial.cmul(&table[i * n + j]);
            if !next.cis_zero() {
                rec(used, table, n, &next, total);
            }
            used[j] = false;
        }
        used[i] = false;
    }
    rec(&mut used, &table, n, &C::cone(), &mut total);
    total
}

/// Pfaffian of an antisymmetric matrix: matching sum with signs for
/// dim <= 10, skew elimination above (exact in both cases).
pub fn pfaffian<C: Coeff>(a: &Mat<C>) -> Result<C, GaussError> {
    if !a.is_antisymmetric() {
        return Err(GaussError::NotAntisymmetric);
    }
    let n = a.n;
    if n % 2 != 0 {
        return Err(GaussError::OddDimension);
    }
    if n == 0 {
        return Ok(C::cone());
    }
    if n <= 10 {
        Ok(pfaffian_matching_sum(a))
    } else {
        Ok(pfaffian_skew_elimination(a))
    }
}

/// Combinatorial definition: sum over matchings sigma of
/// eps_sigma * prod a_{i sigma(i)} over pairs with i < sigma(i).
pub fn pfaffian_matching_sum<C: Coeff>(a: &Mat<C>) -> C {
    let n = a.n;
    let mut total = C::czero();
    crate::graphs::for_each_matching(n, |m| {
        // sequence i1, sigma(i1), i2, sigma(i2), ... in increasing i order
        let mut seq = Vec::with_capacity(n);
        let mut term = C::cone();
        for i in 0..n {
            let j = m[i];
            if i < j {
                seq.push(i);
                seq.push(j);
                term = term.cmul(a.at(i, j));
            }
        }
        if term.cis_zero() {
            return;
        }
        if permutation_sign(&seq) < 0 {
            term = term.cneg();
        }
        total = total.cadd(&term);
    });
    total
}

fn pfaffian_skew_elimination<C: Coeff>(a: &Mat<C>) -> C {
    // Reduce to tridiagonal-ish form with congruence transformations that
    // track the Pfaffian multiplicatively. Standard skew elimination:
    // Pf picks up det of the congruence.
    let n = a.n;
    let mut m = a.clone();
    let mut pf = C::cone();
    let mut k = 0;
    while k + 1 < n {
        // find pivot in column k below row k
        let pivot = (k + 1..n).find(|&r| !m.at(r, k).cis_zero());
        let pivot = match pivot {
            None => return C::czero(),
            Some(p) => p,
        };
        if pivot != k + 1 {
            // swap rows/cols pivot <-> k+1; each swap flips sign of Pf
            for j in 0..n {
                let (x, y) = (m.at(pivot, j).clone(), m.at(k + 1, j).clone());
                m.set(pivot, j, y);
                m.set(k + 1, j, x);
            }
            for i in 0..n {
                let (x, y) = (m.at(i, pivot).clone(), m.at(i, k + 1).clone());
                m.set(i, pivot, y);
                m.set(i, k + 1, x);
            }
            pf = pf.cneg();
        }
        let p = m.at(k + 1, k).clone(); // = -a_{k,k+1}
        let p_inv = p.cinv().expect("nonzero pivot");
        // eliminate entries in column k (and row k) below k+1
        for r in k + 2..n {
            let factor = m.at(r, k).cmul(&p_inv);
            if factor.cis_zero() {
                continue;
            }
            for j in 0..n {
                let v = m.at(r, j).csub(&factor.cmul(m.at(k + 1, j)));
                m.set(r, j, v);
            }
            for i in 0..n {
                let v = m.at(i, r).csub(&factor.cmul(m.at(i, k + 1)));
                m.set(i, r, v);
            }
        }
        pf = pf.cmul(&m.at(k, k + 1).clone());
        k += 2;
    }
    pf
}

pub fn permutation_sign(seq: &[usize]) -> i32 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Fermionic Wick formula: Pf(-B) * Pf(B^{-1}(lambda_i, lambda_j)).
/// Zero for an odd number of insertions.
pub fn fermionic_wick<C: Coeff>(
    b: &Mat<C>,
    covectors: &[Vec<C>],
) -> Result<C, GaussError> {
    if !b.is_antisymmetric() {
        return Err(GaussError::NotAntisymmetric);
    }
    if b.n % 2 != 0 {
        return Err(GaussError::OddDimension);
    }
    let n = covectors.len();
    if n % 2 != 0 {
        return Ok(C::czero());
    }
    let b_inv = b.inverse().ok_or(GaussError::Singular)?;
    let minus_b = b.scale(&C::cone().cneg());
    let pf_minus_b = pfaffian(&minus_b)?;
    // matrix of B^{-1}(lambda_i, lambda_j); antisymmetric since B^{-1} is
    let mut m = Mat::<C>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut acc = C::czero();
            for r in 0..b.n {
                if covectors[i][r].cis_zero() {
                    continue;
                }
                for s in 0..b.n {
                    acc = acc.cadd(&covectors[i][r].cmul(b_inv.at(r, s)).cmul(&covectors[j][s]));
                }
            }
            m.set(i, j, acc);
        }
    }
    Ok(pf_minus_b.cmul(&pfaffian(&m)?))
}

/// Block supermatrix with even blocks a00 (n x n), a11 (m x m) and odd
/// off-blocks a01 (n x m), a10 (m x n).
#[derive(Debug, Clone)]
pub struct SuperMatrix<C: Coeff> {
    pub a00: Mat<C>,
    pub a01: Mat<C>,
    pub a10: Mat<C>,
    pub a11: Mat<C>,
}

impl<C: Coeff> SuperMatrix<C> {
    pub fn new(a00: Mat<C>, a01: Mat<C>, a10: Mat<C>, a11: Mat<C>) -> Self {
        assert_eq!(a00.n, a00.m);
        assert_eq!(a11.n, a11.m);
        assert_eq!((a01.n, a01.m), (a00.n, a11.n));
        assert_eq!((a10.n, a10.m), (a11.n, a00.n));
        SuperMatrix { a00, a01, a10, a11 }
    }

    pub fn supertrace(&self) -> C {
        let mut acc = C::czero();
        for i in 0..self.a00.n {
            acc = acc.cadd(self.a00.at(i, i));
        }
        for i in 0..self.a11.n {
            acc = acc.csub(self.a11.at(i, i));
        }
        acc
    }

    /// Ber(A) = det(a00 - a01 a11^{-1} a10) / det(a11).
    pub fn berezinian(&self) -> Result<C, GaussError> {
        if self.a11.n == 0 {
            return Ok(self.a00.det());
        }
        let a11_inv = self.a11.inverse().ok_or(GaussError::BerezinianUndefined)?;
        let schur = {
            let corr = self.a01.matmul(&a11_inv).matmul(&self.a10);
            let mut s = self.a00.clone();
            for i in 0..s.n {
                for j in 0..s.m {
                    let v = s.at(i, j).csub(corr.at(i, j));
                    s.set(i, j, v);
                }
            }
            s
        };
        let num = if schur.n == 0 { C::cone() } else { schur.det() };
        let den = self.a11.det();
        let den_inv = den.cinv().ok_or(GaussError::BerezinianUndefined)?;
        Ok(num.cmul(&den_inv))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        SuperMatrix {
            a00: self.a00.matmul(&other.a00).add(&self.a01.matmul(&other.a10)),
            a01: self.a00.matmul(&other.a01).add(&self.a01.matmul(&other.a11)),
            a10: self.a10.matmul(&other.a00).add(&self.a11.matmul(&other.a10)),
            a11: self.a10.matmul(&other.a01).add(&self.a11.matmul(&other.a11)),
        }
    }
}

/// Exact rational Wick moment of x^{2k} in one dimension with B = b:
/// convenience entry point used by the CLI.
pub fn scalar_moment(b: Rat, power: usize) -> Result<Rat, GaussError> {
    if b.is_zero() {
        return Err(GaussError::Singular);
    }
    let form = QuadraticForm::new(Mat::from_rows(vec![vec![b]]))?;
    let ell = vec![vec![Rat::one()]; power];
    Ok(wick_moment(&form, &ell))
}
