//! Two small polynomial rings:
//!
//! * `PolyRat` — dense univariate polynomials over the rationals. These
//!   implement the series `Coeff` trait, so series identities can be checked
//!   exactly with a symbolic parameter in the coefficients (e.g. a series in
//!   x whose coefficients are polynomials in an exponent s).
//! * `MPoly` — sparse multivariate polynomials over the rationals with named
//!   variables, enough for Kirchhoff polynomials and colored tree
//!   generating functions.

use crate::scalar::{format_rat, int, Rat};
use crate::series::Coeff;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Dense univariate polynomial over Q in an unnamed variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyRat {
    /// coeffs[k] multiplies s^k; no trailing zeros.
    pub coeffs: Vec<Rat>,
}

impl PolyRat {
    pub fn new(coeffs: Vec<Rat>) -> Self {
        let mut p = PolyRat { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: Rat) -> Self {
        PolyRat::new(vec![c])
    }

    /// The variable s itself.
    pub fn s() -> Self {
        PolyRat::new(vec![int(0), int(1)])
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

impl Coeff for PolyRat {
    fn czero() -> Self {
        PolyRat { coeffs: vec![] }
    }
    fn cone() -> Self {
        PolyRat::constant(int(1))
    }
    fn cis_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn cadd(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Rat::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        PolyRat::new(out)
    }
    fn csub(&self, other: &Self) -> Self {
        self.cadd(&other.cneg())
    }
    fn cneg(&self) -> Self {
        PolyRat { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
    fn cmul(&self, other: &Self) -> Self {
        if self.cis_zero() || other.cis_zero() {
            return <PolyRat as Coeff>::czero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyRat::new(out)
    }
    fn cinv(&self) -> Option<Self> {
        if self.coeffs.len() == 1 && !self.coeffs[0].is_zero() {
            Some(PolyRat::constant(self.coeffs[0].recip()))
        } else {
            None
        }
    }
    fn cfrom_i64(n: i64) -> Self {
        PolyRat::constant(int(n))
    }
    fn cdiv_int(&self, n: i64) -> Self {
        PolyRat { coeffs: self.coeffs.iter().map(|c| c / int(n)).collect() }
    }
}

/// Monomial: variable name -> exponent (absent = 0).
pub type Monomial = BTreeMap<String, u32>;

/// Sparse multivariate polynomial over Q.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = MPoly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    pub fn var(name: &str) -> Self {
        let mut m = Monomial::new();
        m.insert(name.to_string(), 1);
        let mut p = MPoly::zero();
        p.terms.insert(m, Rat::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        // drop cancelled terms lazily
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        MPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = MPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = MPoly::constant(Rat::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Substitute rational values for all variables.
    pub fn eval(&self, assignment: &BTreeMap<String, Rat>) -> Rat {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m {
                let x = assignment.get(v).cloned().unwrap_or_else(Rat::zero);
                for _ in 0..*e {
                    t *= &x;
                }
            }
            acc += t;
        }
        acc
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let mut factors: Vec<String> = Vec::new();
            let cs = format_rat(c);
            if cs != "1" || m.is_empty() {
                factors.push(cs.clone());
            }
            for (v, e) in m {
                if *e == 1 {
                    factors.push(v.clone());
                } else {
                    factors.push(format!("{}^{}", v, e));
                }
            }
            let term = factors.join("*");
            if first {
                write!(f, "{}", term)?;
                first = false;
            } else if term.starts_with('-') {
                write!(f, " - {}", &term[1..])?;
            } else {
                write!(f, " + {}", term)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Series;

    #[test]
    fn symbolic_binomial_series_matches_exp_route() {
        // (1-x)^s as a series in x with coefficients in Q[s], two ways:
        // binomial coefficients C(s,k)(-1)^k versus exp(s*log(1-x)).
        let order = 9isize;
        // route 1: exp(s * log(1-x))
        let mut one_minus_x = Series::<Rat>::constant("x", int(1), order);
        one_minus_x.set_coeff(1, int(-1));
        let log_part = one_minus_x.log().unwrap();
        let mut s_log: Series<PolyRat> = Series::zero("x", order);
        for e in 1..order {
            let c = log_part.coeff(e);
            if !c.is_zero() {
                s_log.set_coeff(e, PolyRat::new(vec![Rat::zero(), c]));
            }
        }
        let route1 = s_log.exp().unwrap();
        // route 2: sum_k s(s-1)...(s-k+1)/k! (-x)^k
        for k in 0..order as usize {
            let mut num = PolyRat::cone();
            for j in 0..k {
                num = num.cmul(&PolyRat::new(vec![int(-(j as i64)), int(1)]));
            }
            let coeff = num.cdiv_int(crate::scalar::factorial(k).try_into().unwrap_or(i64::MAX));
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let expect = coeff.cmul(&PolyRat::cfrom_i64(sign));
            assert_eq!(route1.coeff(k as isize), expect, "x^{}", k);
        }
    }

    #[test]
    fn mpoly_display_and_eval() {
        let x = MPoly::var("u12");
        let y = MPoly::var("u13");
        let p = x.mul(&y).add(&x);
        let mut env = BTreeMap::new();
        env.insert("u12".to_string(), int(3));
        env.insert("u13".to_string(), int(5));
        assert_eq!(p.eval(&env), int(18));
    }
}
