//! Dense square matrices over any `Coeff` ring with exact elimination,
//! plus the few f64-only helpers (matrix exponential) used by numeric checks.

use crate::series::Coeff;

impl Coeff for f64 {
    fn czero() -> Self {
        0.0
    }
    fn cone() -> Self {
        1.0
    }
    fn cis_zero(&self) -> bool {
        *self == 0.0
    }
    fn cadd(&self, other: &Self) -> Self {
        self + other
    }
    fn csub(&self, other: &Self) -> Self {
        self - other
    }
    fn cneg(&self) -> Self {
        -self
    }
    fn cmul(&self, other: &Self) -> Self {
        self * other
    }
    fn cinv(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }
    fn cfrom_i64(n: i64) -> Self {
        n as f64
    }
    fn cdiv_int(&self, n: i64) -> Self {
        self / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<C: Coeff> {
    pub n: usize,
    pub m: usize,
    pub a: Vec<C>,
}

impl<C: Coeff> Mat<C> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Mat { n, m, a: vec![C::czero(); n * m] }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            out.a[i * n + i] = C::cone();
        }
        out
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut a = Vec::with_capacity(n * m);
        for r in rows {
            assert_eq!(r.len(), m);
            a.extend(r);
        }
        Mat { n, m, a }
    }

    pub fn at(&self, i: usize, j: usize) -> &C {
        &self.a[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.a[i * self.m + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Mat::zeros(self.m, self.n);
        for i in 0..self.n {
            for j in 0..self.m {
                out.set(j, i, self.at(i, j).clone());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.n);
        let mut out: Mat<C> = Mat::zeros(self.n, other.m);
        for i in 0..self.n {
            for k in 0..self.m {
                let aik = self.at(i, k).clone();
                if aik.cis_zero() {
                    continue;
                }
                for j in 0..other.m {
                    let v = out.at(i, j).cadd(&aik.cmul(other.at(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m));
        Mat {
            n: self.n,
            m: self.m,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x.cadd(y)).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        Mat { n: self.n, m: self.m, a: self.a.iter().map(|x| x.cmul(c)).collect() }
    }

    pub fn is_symmetric(&self) -> bool {
        self.n == self.m
            && (0..self.n).all(|i| (0..i).all(|j| self.at(i, j) == self.at(j, i)))
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.n == self.m
            && (0..self.n).all(|i| {
                (0..=i).all(|j| {
                    if i == j {
                        self.at(i, j).cis_zero()
                    } else {
                        *self.at(i, j) == self.at(j, i).cneg()
                    }
                })
            })
    }

    /// Determinant by Gaussian elimination with exact pivoting (the ring
    /// must actually be a field for the intermediate divisions).
    pub fn det(&self) -> C {
        assert_eq!(self.n, self.m);
        let n = self.n;
        let mut a = self.a.clone();
        let mut det = C::cone();
        for col in 0..n {
            let pivot_row = match (col..n).find(|&r| !a[r * n + col].cis_zero()) {
                None => return C::czero(),
                Some(r) => r,
            };
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                det = det.cneg();
            }
            let pivot = a[col * n + col].clone();
            det = det.cmul(&pivot);
            let pivot_inv = pivot.cinv().expect("nonzero pivot");
            for r in col + 1..n {
                let factor = a[r * n + col].cmul(&pivot_inv);
                if factor.cis_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[r * n + j].csub(&factor.cmul(&a[col * n + j]));
                    a[r * n + j] = v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan; None when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.n, self.m);
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = Mat::<C>::identity(n).a;
        for col in 0..n {
            let pivot_row = (col..n).find(|&r| !a[r * n + col].cis_zero())?;
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                    inv.swap(col * n + j, pivot_row * n + j);
                }
            }
            let pivot_inv = a[col * n + col].cinv()?;
            for j in 0..n {
                a[col * n + j] = a[col * n + j].cmul(&pivot_inv);
                inv[col * n + j] = inv[col * n + j].cmul(&pivot_inv);
            }
            for r in 0..n {
                if r == col || a[r * n + col].cis_zero() {
                    continue;
                }
                let factor = a[r * n + col].clone();
                for j in 0..n {
                    a[r * n + j] = a[r * n + j].csub(&factor.cmul(&a[col * n + j]));
                    inv[r * n + j] = inv[r * n + j].csub(&factor.cmul(&inv[col * n + j]));
                }
            }
        }
        Some(Mat { n, m: n, a: inv })
    }
}

impl Mat<f64> {
    /// Matrix exponential by scaling and squaring with a Taylor core;
    /// fine for the small well-conditioned matrices used in tests.
    pub fn expm(&self) -> Mat<f64> {
        assert_eq!(self.n, self.m);
        let norm: f64 = self.a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let s = norm.log2().ceil().max(0.0) as u32 + 1;
        let scaled = self.scale(&(1.0 / 2f64.powi(s as i32)));
        let mut term = Mat::<f64>::identity(self.n);
        let mut acc = Mat::<f64>::identity(self.n);
        for k in 1..=16 {
            term = term.matmul(&scaled).scale(&(1.0 / k as f64));
            acc = acc.add(&term);
        }
        let mut out = acc;
        for _ in 0..s {
            out = out.matmul(&out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rat};

    #[test]
    fn exact_det_and_inverse() {
        let m = Mat::from_rows(vec![
            vec![int(2), int(1), int(0)],
            vec![int(1), int(3), int(1)],
            vec![int(0), int(1), int(4)],
        ]);
        assert_eq!(m.det(), int(18));
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv);
        assert_eq!(prod, Mat::<Rat>::identity(3));
        let _ = rat(1, 2);
    }

    #[test]
    fn expm_matches_known() {
        // exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let m = Mat::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        let e = m.expm();
        assert!((e.at(0, 0) - 1.0).abs() < 1e-12);
        assert!((e.at(0, 1) - 1.0).abs() < 1e-12);
        assert!((e.at(1, 0)).abs() < 1e-12);
    }
}
