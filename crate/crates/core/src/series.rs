//! Truncated formal (Laurent) power series with exact coefficients.
//!
//! Every series carries an explicit truncation order: a value represents
//! its coefficients on `[min_exp, order)` and is understood modulo
//! `O(x^order)`. Arithmetic truncates to the minimum order of the operands
//! rather than silently extending precision.

use crate::scalar::{factorial, int, rat, Rat, RatJson};
use num_traits::{One, Zero};
use std::fmt;

/// Coefficient ring for series. Implemented by `Rat` and by `PolyRat`
/// (univariate polynomials over the rationals, used where an exponent is
/// kept symbolic).
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn czero() -> Self;
    fn cone() -> Self;
    fn cis_zero(&self) -> bool;
    fn cadd(&self, other: &Self) -> Self;
    fn csub(&self, other: &Self) -> Self;
    fn cneg(&self) -> Self;
    fn cmul(&self, other: &Self) -> Self;
    /// Multiplicative inverse, when the element is a unit.
    fn cinv(&self) -> Option<Self>
    where
        Self: Sized;
    fn cfrom_i64(n: i64) -> Self;
    /// Exact division by a nonzero integer.
    fn cdiv_int(&self, n: i64) -> Self;
}

impl Coeff for Rat {
    fn czero() -> Self {
        <Rat as Zero>::zero()
    }
    fn cone() -> Self {
        <Rat as One>::one()
    }
    fn cis_zero(&self) -> bool {
        <Rat as Zero>::is_zero(self)
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
        if <Rat as Zero>::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn cfrom_i64(n: i64) -> Self {
        int(n)
    }
    fn cdiv_int(&self, n: i64) -> Self {
        self / int(n)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("division by a series whose leading coefficient is not invertible")]
    NonInvertible,
    #[error("composition requires the inner series to have zero constant term")]
    NonzeroConstant,
    #[error("reversion requires f(0)=0 and f'(0) invertible")]
    BadReversion,
    #[error("operation requires {0}")]
    Requires(&'static str),
}

/// A truncated Laurent series: coefficients of x^(min_exp..order).
#[derive(Debug, Clone, PartialEq)]
pub struct Series<C: Coeff = Rat> {
    pub var: String,
    pub min_exp: isize,
    /// coeffs[i] is the coefficient of x^(min_exp + i); order = min_exp + len.
    pub coeffs: Vec<C>,
}

impl<C: Coeff> Series<C> {
    pub fn new(var: &str, min_exp: isize, coeffs: Vec<C>) -> Self {
        Series { var: var.into(), min_exp, coeffs }
    }

    /// The zero series truncated at x^order.
    pub fn zero(var: &str, order: isize) -> Self {
        Series { var: var.into(), min_exp: order, coeffs: vec![] }
    }

    pub fn constant(var: &str, c: C, order: isize) -> Self {
        let mut s = Series::zero(var, order);
        s.set_coeff(0, c);
        s
    }

    /// The identity series x + O(x^order).
    pub fn x(var: &str, order: isize) -> Self {
        let mut s = Series::zero(var, order);
        s.set_coeff(1, C::cone());
        s
    }

    /// Truncation order: the series is known modulo O(x^order).
    pub fn order(&self) -> isize {
        self.min_exp + self.coeffs.len() as isize
    }

    pub fn coeff(&self, exp: isize) -> C {
        if exp < self.min_exp || exp >= self.order() {
            C::czero()
        } else {
            self.coeffs[(exp - self.min_exp) as usize].clone()
        }
    }

    pub fn set_coeff(&mut self, exp: isize, c: C) {
        if exp >= self.order() {
            let pad = (exp + 1 - self.order()) as usize;
            self.coeffs.extend(std::iter::repeat(C::czero()).take(pad));
        }
        if exp < self.min_exp {
            let pad = (self.min_exp - exp) as usize;
            let mut fresh = vec![C::czero(); pad];
            fresh.append(&mut self.coeffs);
            self.coeffs = fresh;
            self.min_exp = exp;
        }
        self.coeffs[(exp - self.min_exp) as usize] = c;
    }

    /// Exponent of the lowest nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<isize> {
        self.coeffs.iter().position(|c| !c.cis_zero()).map(|i| self.min_exp + i as isize)
    }

    pub fn cis_zero(&self) -> bool {
        self.valuation().is_none()
    }

    pub fn truncate(&self, order: isize) -> Self {
        let mut out = self.clone();
        if order < out.order() {
            let keep = (order - out.min_exp).max(0) as usize;
            out.coeffs.truncate(keep);
            if order < out.min_exp {
                out.min_exp = order;
            }
        }
        out
    }

    fn drop_leading_zeros(mut self) -> Self {
        // Normalizes the representation without changing the value: leading
        // (lowest-exponent) zero coefficients are just padding.
        let lead = self.coeffs.iter().take_while(|c| c.cis_zero()).count();
        if lead > 0 && lead < self.coeffs.len() {
            self.coeffs.drain(..lead);
            self.min_exp += lead as isize;
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let min_exp = self.min_exp.min(other.min_exp);
        let mut out = Series { var: self.var.clone(), min_exp, coeffs: vec![C::czero(); (order - min_exp).max(0) as usize] };
        for e in min_exp..order {
            out.coeffs[(e - min_exp) as usize] = self.coeff(e).cadd(&other.coeff(e));
        }
        out.drop_leading_zeros()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Series {
            var: self.var.clone(),
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|c| c.cneg()).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        Series {
            var: self.var.clone(),
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|a| a.cmul(c)).collect(),
        }
    }

    /// Multiply by x^k (exact, shifts the truncation window too).
    pub fn shift(&self, k: isize) -> Self {
        Series { var: self.var.clone(), min_exp: self.min_exp + k, coeffs: self.coeffs.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let a = self.clone().drop_leading_zeros();
        let b = other.clone().drop_leading_zeros();
        // x^m1 * O(x^o2) terms limit the reliable window.
        let order = (a.order() + b.min_exp).min(b.order() + a.min_exp);
        let min_exp = a.min_exp + b.min_exp;
        let mut out =
            Series { var: a.var.clone(), min_exp, coeffs: vec![C::czero(); (order - min_exp).max(0) as usize] };
        for (i, ca) in a.coeffs.iter().enumerate() {
            if ca.cis_zero() {
                continue;
            }
            for (j, cb) in b.coeffs.iter().enumerate() {
                let e = a.min_exp + i as isize + b.min_exp + j as isize;
                if e >= order {
                    break;
                }
                let idx = (e - min_exp) as usize;
                out.coeffs[idx] = out.coeffs[idx].cadd(&ca.cmul(cb));
            }
        }
        out.drop_leading_zeros()
    }

    pub fn div(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Multiplicative inverse of a series with invertible leading coefficient.
    pub fn inv(&self) -> Result<Self, SeriesError> {
        let val = self.valuation().ok_or(SeriesError::NonInvertible)?;
        let lead = self.coeff(val);
        let lead_inv = lead.cinv().ok_or(SeriesError::NonInvertible)?;
        // Normalize to u = 1 + positive-order tail, invert, then shift back.
        let n = (self.order() - val) as usize;
        let mut tail = vec![C::czero(); n];
        for i in 0..n {
            tail[i] = self.coeff(val + i as isize).cmul(&lead_inv);
        }
        // Newton-free direct recursion: b_0 = 1, b_k = -sum_{j=1..k} a_j b_{k-j}.
        let mut inv = vec![C::czero(); n];
        inv[0] = C::cone();
        for k in 1..n {
            let mut acc = C::czero();
            for j in 1..=k {
                acc = acc.cadd(&tail[j].cmul(&inv[k - j]));
            }
            inv[k] = acc.cneg();
        }
        let coeffs: Vec<C> = inv.into_iter().map(|c| c.cmul(&lead_inv)).collect();
        Ok(Series { var: self.var.clone(), min_exp: -val, coeffs })
    }

    pub fn derivative(&self) -> Self {
        let mut out = Series::zero(&self.var, self.order() - 1);
        for e in self.min_exp..self.order() {
            if e != 0 {
                let c = self.coeff(e).cmul(&C::cfrom_i64(e as i64));
                if !c.cis_zero() {
                    out.set_coeff(e - 1, c);
                }
            }
        }
        out
    }

    /// Termwise antiderivative with zero constant term.
    /// Errors if an x^{-1} term is present.
    pub fn integrate(&self) -> Result<Self, SeriesError> {
        if !self.coeff(-1).cis_zero() {
            return Err(SeriesError::Requires("no x^-1 term for integration"));
        }
        let mut out = Series::zero(&self.var, self.order() + 1);
        for e in self.min_exp..self.order() {
            if e == -1 {
                continue;
            }
            let c = self.coeff(e).cdiv_int((e + 1) as i64);
            if !c.cis_zero() {
                out.set_coeff(e + 1, c);
            }
        }
        Ok(out)
    }

    /// f(g) for g with zero constant term; f must have min_exp >= 0.
    pub fn compose(&self, g: &Self) -> Result<Self, SeriesError> {
        if !g.coeff(0).cis_zero() {
            return Err(SeriesError::NonzeroConstant);
        }
        if self.min_exp < 0 && self.valuation().map_or(false, |v| v < 0) {
            return Err(SeriesError::Requires("non-Laurent outer series in composition"));
        }
        let gval = g.valuation().unwrap_or(g.order()).max(1);
        // f = sum f_k x^k known mod x^order(f); substituting g (valuation >= 1)
        // the result is reliable mod x^min(order(g), gval*order(f)).
        let order = g.order().min(gval.saturating_mul(self.order().max(0)));
        let gt = g.truncate(order);
        let mut acc = Series::zero(&self.var, order);
        // Horner from the top exponent all the way down to x^0.
        for e in (0..self.order().max(0)).rev() {
            acc = acc.mul(&gt);
            let c = self.coeff(e);
            if !c.cis_zero() {
                acc = acc.add(&Series::constant(&self.var, c, order));
            }
            acc = acc.truncate(order);
        }
        Ok(acc)
    }

    /// Compositional inverse of f with f(0)=0 and f'(0) invertible,
    /// by Newton iteration (order-doubling, exact).
    pub fn reversion(&self) -> Result<Self, SeriesError> {
        if !self.coeff(0).cis_zero() {
            return Err(SeriesError::BadReversion);
        }
        let c1 = self.coeff(1);
        let c1_inv = c1.cinv().ok_or(SeriesError::BadReversion)?;
        let target = self.order();
        if target <= 1 {
            return Ok(Series::zero(&self.var, target));
        }
        let mut g = Series::x(&self.var, 2).scale(&c1_inv);
        let mut prec: isize = 2;
        let fprime = self.derivative();
        while prec < target {
            prec = (2 * prec).min(target);
            // pad g's known window so intermediate ops keep enough terms
            let mut gp = g.truncate(prec);
            gp.set_coeff(prec - 1, gp.coeff(prec - 1));
            let f_of_g = self.truncate(prec).compose(&gp)?;
            let err = f_of_g.sub(&Series::x(&self.var, prec));
            let fp_of_g = fprime.truncate(prec - 1).compose(&gp.truncate(prec - 1))?;
            let correction = err.mul(&fp_of_g.inv()?).truncate(prec);
            g = gp.sub(&correction).truncate(prec);
        }
        Ok(g.truncate(target))
    }

    /// exp of a series with zero constant term.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeff(0).cis_zero() || self.valuation().map_or(false, |v| v < 0) {
            return Err(SeriesError::Requires("zero constant term (and no poles) for exp"));
        }
        let order = self.order();
        let n = order.max(1) as usize;
        // h' = f' h  =>  n h_n = sum_{k=1..n} k f_k h_{n-k}
        let mut h = vec![C::czero(); n];
        h[0] = C::cone();
        for m in 1..n {
            let mut acc = C::czero();
            for k in 1..=m {
                let fk = self.coeff(k as isize);
                if fk.cis_zero() {
                    continue;
                }
                acc = acc.cadd(&fk.cmul(&C::cfrom_i64(k as i64)).cmul(&h[m - k]));
            }
            h[m] = acc.cdiv_int(m as i64);
        }
        Ok(Series { var: self.var.clone(), min_exp: 0, coeffs: h })
    }

    /// log of a series with constant term 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if self.coeff(0) != C::cone() {
            return Err(SeriesError::Requires("constant term 1 for log"));
        }
        let lp = self.derivative().mul(&self.inv()?);
        lp.integrate()
    }

    /// Square root of a series with constant term 1.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let l = self.log()?;
        l.scale(&C::cone().cdiv_int(2)).exp()
    }

    pub fn pow(&self, mut n: u32) -> Self {
        let order = self.order();
        let mut acc = Series::constant(&self.var, C::cone(), order);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

impl Series<Rat> {
    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for e in self.min_exp..self.order() {
            acc += crate::scalar::rat_to_f64(&self.coeff(e)) * x.powi(e as i32);
        }
        acc
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "var": self.var,
            "min_exp": self.min_exp,
            "coeffs": self.coeffs.iter().map(RatJson::from).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Self> {
        let var = v.get("var")?.as_str()?.to_string();
        let min_exp = v.get("min_exp")?.as_i64()? as isize;
        let coeffs: Option<Vec<Rat>> = v
            .get("coeffs")?
            .as_array()?
            .iter()
            .map(|c| {
                serde_json::from_value::<RatJson>(c.clone()).ok().and_then(|r| r.to_rat())
            })
            .collect();
        Some(Series { var, min_exp, coeffs: coeffs? })
    }
}

impl fmt::Display for Series<Rat> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in self.min_exp..self.order() {
            let c = self.coeff(e);
            if c.cis_zero() {
                continue;
            }
            let cs = crate::scalar::format_rat(&c);
            let term = match e {
                0 => cs,
                1 if cs == "1" => self.var.clone(),
                1 => format!("{}*{}", cs, self.var),
                _ if cs == "1" => format!("{}^{}", self.var, e),
                _ => format!("{}*{}^{}", cs, self.var, e),
            };
            if first {
                write!(f, "{}", term)?;
                first = false;
            } else if term.starts_with('-') {
                write!(f, " - {}", &term[1..])?;
            } else {
                write!(f, " + {}", term)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O({}^{})", self.var, self.order())
    }
}

/// Bernoulli numbers in the convention sum B_n t^n/n! = t/(1 - e^{-t}),
/// so B_0 = 1, B_1 = 1/2, B_{2n+1} = 0 for n >= 1.
#[derive(Debug, Clone)]
pub struct BernoulliTable {
    pub values: Vec<Rat>,
}

pub fn bernoulli(n_max: usize) -> BernoulliTable {
    let order = (n_max + 1) as isize;
    // (1 - e^{-t})/t = sum_{n>=0} (-1)^n t^n/(n+1)!
    let mut s = Series::<Rat>::zero("t", order);
    for n in 0..=n_max {
        let sign = if n % 2 == 0 { 1 } else { -1 };
        s.set_coeff(n as isize, rat(sign, 1) / Rat::from_integer(factorial(n + 1)));
    }
    let inv = s.inv().expect("unit constant term");
    let values = (0..=n_max)
        .map(|n| inv.coeff(n as isize) * Rat::from_integer(factorial(n)))
        .collect();
    BernoulliTable { values }
}

impl BernoulliTable {
    pub fn get(&self, n: usize) -> &Rat {
        &self.values[n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use proptest::prelude::*;

    fn geom(order: isize) -> Series<Rat> {
        // 1/(1-x)
        let mut one_minus_x = Series::constant("x", int(1), order);
        one_minus_x.set_coeff(1, int(-1));
        one_minus_x.inv().unwrap()
    }

    #[test]
    fn mul_simple() {
        // (1+x)(1-x) = 1 - x^2
        let mut a = Series::constant("x", int(1), 8);
        a.set_coeff(1, int(1));
        let mut b = Series::constant("x", int(1), 8);
        b.set_coeff(1, int(-1));
        let p = a.mul(&b);
        assert_eq!(p.coeff(0), int(1));
        assert_eq!(p.coeff(1), int(0));
        assert_eq!(p.coeff(2), int(-1));
        assert_eq!(p.coeff(3), int(0));
    }

    #[test]
    fn geometric_inverse() {
        let g = geom(10);
        for e in 0..10 {
            assert_eq!(g.coeff(e), int(1));
        }
    }

    #[test]
    fn laurent_inverse() {
        // 1/(x + x^2) = x^{-1} - 1 + x - x^2 + ...
        let mut s = Series::zero("x", 6);
        s.set_coeff(1, int(1));
        s.set_coeff(2, int(1));
        let inv = s.inv().unwrap();
        assert_eq!(inv.coeff(-1), int(1));
        assert_eq!(inv.coeff(0), int(-1));
        assert_eq!(inv.coeff(1), int(1));
    }

    #[test]
    fn exp_log_inverse_pair() {
        // log(1+x), then exp, should give back 1+x
        let mut one_plus_x = Series::constant("x", int(1), 12);
        one_plus_x.set_coeff(1, int(1));
        let l = one_plus_x.log().unwrap();
        assert_eq!(l.coeff(1), int(1));
        assert_eq!(l.coeff(2), rat(-1, 2));
        let e = l.exp().unwrap();
        for k in 2..12 {
            assert_eq!(e.coeff(k), int(0), "coeff {}", k);
        }
        assert_eq!(e.coeff(0), int(1));
        assert_eq!(e.coeff(1), int(1));
    }

    #[test]
    fn compose_square_with_shift() {
        // f = x^2, g = x + x^2  =>  f(g) = x^2 + 2x^3 + x^4
        let mut f = Series::zero("x", 6);
        f.set_coeff(2, int(1));
        let mut g = Series::zero("x", 6);
        g.set_coeff(1, int(1));
        g.set_coeff(2, int(1));
        let h = f.compose(&g).unwrap();
        assert_eq!(h.coeff(2), int(1));
        assert_eq!(h.coeff(3), int(2));
        assert_eq!(h.coeff(4), int(1));
        assert_eq!(h.coeff(5), int(0));
    }

    #[test]
    fn binomial_central_coefficients() {
        // (1-4x)^{-1/2} = sum C(2n,n) x^n
        let mut s = Series::constant("x", int(1), 9);
        s.set_coeff(1, int(-4));
        let r = s.sqrt().unwrap().inv().unwrap();
        for n in 0..9usize {
            assert_eq!(r.coeff(n as isize), Rat::from_integer(crate::scalar::binomial(2 * n, n)));
        }
    }

    #[test]
    fn reversion_tree_function() {
        // Inverse of y = x e^{-x} is sum n^{n-2}/(n-1)! * n y^n / n = sum n^{n-1}/n! y^n;
        // the classical expansion has coefficient n^{n-1}/n!.
        let order = 9;
        let mut minus_x = Series::zero("x", order);
        minus_x.set_coeff(1, int(-1));
        let f = Series::x("x", order).mul(&minus_x.exp().unwrap());
        let g = f.reversion().unwrap();
        for n in 1..order as usize {
            let expect = Rat::from_integer(num_bigint::BigInt::from(n).pow(n as u32 - 1))
                / Rat::from_integer(factorial(n));
            assert_eq!(g.coeff(n as isize), expect, "n={}", n);
        }
    }

    #[test]
    fn reversion_catalan() {
        // Inverse of y = x - x^2 is the Catalan generating function shifted:
        // x = y + y^2 + 2y^3 + 5y^4 + 14 y^5 + ...
        let mut f = Series::zero("x", 8);
        f.set_coeff(1, int(1));
        f.set_coeff(2, int(-1));
        let g = f.reversion().unwrap();
        let expected = [0i64, 1, 1, 2, 5, 14, 42, 132];
        for (n, &c) in expected.iter().enumerate() {
            assert_eq!(g.coeff(n as isize), int(c), "n={}", n);
        }
    }

    #[test]
    fn bernoulli_convention() {
        let b = bernoulli(12);
        assert_eq!(b.values[0], int(1));
        assert_eq!(b.values[1], rat(1, 2));
        assert_eq!(b.values[2], rat(1, 6));
        assert_eq!(b.values[3], int(0));
        assert_eq!(b.values[4], rat(-1, 30));
        assert_eq!(b.values[12], rat(-691, 2730));
    }

    #[test]
    fn bernoulli_generating_identity() {
        // sum B_n t^n/n! * (1 - e^{-t}) = t + O(t^{N+1}), exactly.
        let n_max = 14usize;
        let b = bernoulli(n_max);
        let order = (n_max + 1) as isize;
        let mut gen = Series::<Rat>::zero("t", order);
        for n in 0..=n_max {
            gen.set_coeff(n as isize, b.values[n].clone() / Rat::from_integer(factorial(n)));
        }
        let mut one_minus_exp = Series::<Rat>::zero("t", order);
        for n in 1..=n_max {
            let sign = if n % 2 == 0 { -1 } else { 1 };
            one_minus_exp.set_coeff(n as isize, rat(sign, 1) / Rat::from_integer(factorial(n)));
        }
        let prod = gen.mul(&one_minus_exp);
        assert_eq!(prod.coeff(1), int(1));
        for k in 2..prod.order() {
            assert_eq!(prod.coeff(k), int(0), "t^{}", k);
        }
    }

    proptest! {
        #[test]
        fn prop_reversion_involutive(coeffs in proptest::collection::vec(-6i64..=6, 6)) {
            // f = x + c2 x^2 + ... reverted twice is f again.
            let order = 8;
            let mut f = Series::x("x", order);
            for (i, c) in coeffs.iter().enumerate() {
                f.set_coeff(i as isize + 2, int(*c));
            }
            let g = f.reversion().unwrap();
            let back = g.reversion().unwrap();
            for e in 0..order {
                prop_assert_eq!(back.coeff(e), f.coeff(e));
            }
        }

        #[test]
        fn prop_exp_log_round_trip(coeffs in proptest::collection::vec((-5i64..=5, 1i64..=4), 6)) {
            let order = 8;
            let mut f = Series::constant("x", int(1), order);
            for (i, (n, d)) in coeffs.iter().enumerate() {
                f.set_coeff(i as isize + 1, rat(*n, *d));
            }
            let round = f.log().unwrap().exp().unwrap();
            for e in 0..order {
                prop_assert_eq!(round.coeff(e), f.coeff(e));
            }
        }

        #[test]
        fn prop_mul_truncation_respects_min(a_order in 3isize..10, b_order in 3isize..10) {
            let a = geom(a_order);
            let b = geom(b_order);
            let p = a.mul(&b);
            prop_assert_eq!(p.order(), a_order.min(b_order));
            // 1/(1-x)^2 = sum (n+1) x^n
            for e in 0..p.order() {
                prop_assert_eq!(p.coeff(e), int(e as i64 + 1));
            }
        }
    }
}
