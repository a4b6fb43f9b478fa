//! Truncated multivariate Taylor arithmetic and vector-valued jets.
//!
//! A [`Taylor`] holds the coefficients of a polynomial in up to three
//! variables, truncated at total degree three. Partial derivatives are read
//! off the coefficients, so mixed partials are symmetric by construction.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

pub const MAX_VARS: usize = 3;
pub const MAX_ORDER: u8 = 3;
pub const N_MONO: usize = 20;

/// Exponent triples of the monomial slots, graded by total degree.
pub const MONOMIALS: [[u8; 3]; N_MONO] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

fn degree(m: [u8; 3]) -> u8 {
    m[0] + m[1] + m[2]
}

fn factorial(n: u8) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Slot of the monomial with the given exponents, if it has degree ≤ 3.
pub fn index_of(exp: [u8; 3]) -> Option<usize> {
    MONOMIALS.iter().position(|m| *m == exp)
}

/// Exponent triple of `∂^k/∂x_{vars[0]}…∂x_{vars[k-1]}`.
pub fn exponents(vars: &[usize]) -> [u8; 3] {
    let mut e = [0u8; 3];
    for &v in vars {
        e[v] += 1;
    }
    e
}

/// The set of live monomials for a number of variables and a truncation
/// order, together with the product table.
#[derive(Debug)]
pub struct Space {
    nvars: usize,
    order: u8,
    active: Vec<usize>,
    mul: Vec<(u8, u8, u8)>,
}

impl Space {
    pub fn get(nvars: usize, order: u8) -> &'static Space {
        static SPACES: OnceLock<Vec<Space>> = OnceLock::new();
        assert!((1..=MAX_VARS).contains(&nvars), "jet spaces have 1 to 3 variables");
        assert!(order <= MAX_ORDER, "jet order is at most 3");
        let all = SPACES.get_or_init(|| {
            let mut v = Vec::new();
            for n in 1..=MAX_VARS {
                for o in 0..=MAX_ORDER {
                    v.push(Space::build(n, o));
                }
            }
            v
        });
        &all[(nvars - 1) * (MAX_ORDER as usize + 1) + order as usize]
    }

    fn build(nvars: usize, order: u8) -> Space {
        let active: Vec<usize> = (0..N_MONO)
            .filter(|&i| {
                let m = MONOMIALS[i];
                degree(m) <= order && m[nvars..].iter().all(|&e| e == 0)
            })
            .collect();
        let mut mul = Vec::new();
        for &i in &active {
            for &j in &active {
                let (a, b) = (MONOMIALS[i], MONOMIALS[j]);
                let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                if degree(s) <= order {
                    let k = index_of(s).expect("degree bounded");
                    mul.push((i as u8, j as u8, k as u8));
                }
            }
        }
        Space { nvars, order, active, mul }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn constant(&self, x: f64) -> Taylor {
        Taylor::constant(x)
    }

    /// The variable `x_i` expanded around `x0`.
    pub fn variable(&self, i: usize, x0: f64) -> Taylor {
        let mut t = Taylor::constant(x0);
        if self.order >= 1 {
            t.c[1 + i] = 1.0;
        }
        t
    }

    pub fn mul(&self, a: &Taylor, b: &Taylor) -> Taylor {
        let mut out = [0.0; N_MONO];
        for &(i, j, k) in &self.mul {
            out[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
        Taylor { c: out }
    }

    /// `g(a)` for a scalar function with derivatives `g^(k)(a0)` in `derivs`.
    pub fn compose(&self, a: &Taylor, derivs: [f64; 4]) -> Taylor {
        let mut h = *a;
        h.c[0] = 0.0;
        let ord = self.order as usize;
        let mut r = Taylor::constant(derivs[ord] / factorial(ord as u8));
        for k in (0..ord).rev() {
            r = self.mul(&r, &h);
            r.c[0] += derivs[k] / factorial(k as u8);
        }
        r
    }

    pub fn recip(&self, a: &Taylor) -> Taylor {
        let x = a.value();
        let r = 1.0 / x;
        self.compose(a, [r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn div(&self, a: &Taylor, b: &Taylor) -> Taylor {
        self.mul(a, &self.recip(b))
    }

    pub fn sqrt(&self, a: &Taylor) -> Taylor {
        let x = a.value();
        let r = x.sqrt();
        self.compose(
            a,
            [r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x)],
        )
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, a: &Taylor, n: i64) -> Taylor {
        let mut base = if n < 0 { self.recip(a) } else { *a };
        let mut e = n.unsigned_abs();
        let mut acc = Taylor::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn dot(&self, a: &[Taylor], b: &[Taylor]) -> Taylor {
        let mut s = Taylor::zero();
        for (x, y) in a.iter().zip(b) {
            s += self.mul(x, y);
        }
        s
    }

    /// 3×3 determinant of columns.
    pub fn det3(&self, a: &[Taylor; 3], b: &[Taylor; 3], c: &[Taylor; 3]) -> Taylor {
        let m = |x: &Taylor, y: &Taylor| self.mul(x, y);
        let c0 = m(&b[1], &c[2]) - m(&b[2], &c[1]);
        let c1 = m(&b[2], &c[0]) - m(&b[0], &c[2]);
        let c2 = m(&b[0], &c[1]) - m(&b[1], &c[0]);
        m(&a[0], &c0) + m(&a[1], &c1) + m(&a[2], &c2)
    }
}

/// A truncated Taylor polynomial. Inactive slots are kept at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor {
    c: [f64; N_MONO],
}

impl Taylor {
    pub fn zero() -> Self {
        Taylor { c: [0.0; N_MONO] }
    }

    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; N_MONO];
        c[0] = x;
        Taylor { c }
    }

    pub fn from_coeffs(c: [f64; N_MONO]) -> Self {
        Taylor { c }
    }

    pub fn coeffs(&self) -> &[f64; N_MONO] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeff(&self, exp: [u8; 3]) -> f64 {
        index_of(exp).map_or(0.0, |i| self.c[i])
    }

    /// Partial derivative with respect to the listed variables.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let e = exponents(vars);
        self.coeff(e) * e.iter().map(|&k| factorial(k)).product::<f64>()
    }

    /// Derivative in one variable; the result is exact one order lower.
    pub fn deriv(&self, var: usize) -> Taylor {
        let mut out = [0.0; N_MONO];
        for (k, m) in MONOMIALS.iter().enumerate() {
            let mut up = *m;
            up[var] += 1;
            if let Some(j) = index_of(up) {
                out[k] = self.c[j] * f64::from(up[var]);
            }
        }
        Taylor { c: out }
    }

    pub fn scale(&self, s: f64) -> Taylor {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Taylor { c }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// Reorders variables: slot for variable `i` of the result reads
    /// variable `perm[i]` of `self`.
    pub fn permute_vars(&self, perm: [usize; 3]) -> Taylor {
        let mut out = [0.0; N_MONO];
        for (k, m) in MONOMIALS.iter().enumerate() {
            let mut e = [0u8; 3];
            for i in 0..3 {
                e[perm[i]] = m[i];
            }
            if let Some(j) = index_of(e) {
                out[k] = self.c[j];
            }
        }
        Taylor { c: out }
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(mut self, o: Taylor) -> Taylor {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a += b;
        }
        self
    }
}

impl AddAssign for Taylor {
    fn add_assign(&mut self, o: Taylor) {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a += b;
        }
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(mut self, o: Taylor) -> Taylor {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a -= b;
        }
        self
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(self, s: f64) -> Taylor {
        self.scale(s)
    }
}

/// Value and partial derivatives of a vector-valued map at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    space: &'static Space,
    comps: Vec<Taylor>,
    abs_kink: bool,
}

impl Jet {
    pub fn new(space: &'static Space, comps: Vec<Taylor>) -> Self {
        Jet { space, comps, abs_kink: false }
    }

    pub(crate) fn with_abs_kink(mut self, flag: bool) -> Self {
        self.abs_kink = flag;
        self
    }

    pub fn space(&self) -> &'static Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> u8 {
        self.space.order
    }

    /// Set when `abs` was differentiated at exactly zero (right derivative used).
    pub fn abs_kink(&self) -> bool {
        self.abs_kink
    }

    pub fn components(&self) -> &[Taylor] {
        &self.comps
    }

    pub fn value(&self) -> Vec<f64> {
        self.comps.iter().map(Taylor::value).collect()
    }

    /// Partial derivative, e.g. `&[0, 1]` for `f_uv`.
    pub fn partial(&self, vars: &[usize]) -> Vec<f64> {
        assert!(vars.len() <= self.order() as usize, "partial above jet order");
        self.comps.iter().map(|t| t.partial(vars)).collect()
    }
}

/// Default step for central differences of the given derivative order.
fn default_step(order: u8, point: &[f64]) -> f64 {
    let scale = point.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let root = match order {
        0 | 1 => 3.0,
        2 => 4.0,
        _ => 5.0,
    };
    f64::EPSILON.powf(1.0 / root) * scale
}

fn stencil(e: u8) -> &'static [(i32, f64)] {
    match e {
        0 => &[(0, 1.0)],
        1 => &[(1, 0.5), (-1, -0.5)],
        2 => &[(1, 1.0), (0, -2.0), (-1, 1.0)],
        _ => &[(2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)],
    }
}

/// Jet of a black-box map from product central-difference stencils.
///
/// With `h = None` the step is `cbrt(eps)·max(1,|x|)` for first
/// derivatives and grows with the derivative order to balance rounding.
pub fn finite_difference_jet<F>(f: F, point: &[f64], order: u8, h: Option<f64>) -> Jet
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let nvars = point.len();
    let space = Space::get(nvars, order);
    let f0 = f(point);
    let dim = f0.len();
    let mut comps = vec![Taylor::zero(); dim];
    for (i, t) in comps.iter_mut().enumerate() {
        t.c[0] = f0[i];
    }
    for &slot in space.active().iter().skip(1) {
        let m = MONOMIALS[slot];
        let step = h.unwrap_or_else(|| default_step(degree(m), point));
        let mut acc = vec![0.0; dim];
        let s0 = stencil(m[0]);
        let s1 = stencil(m[1]);
        let s2 = stencil(m[2]);
        for &(o0, w0) in s0 {
            for &(o1, w1) in s1 {
                for &(o2, w2) in s2 {
                    let offs = [o0, o1, o2];
                    let x: Vec<f64> = (0..nvars)
                        .map(|i| point[i] + f64::from(offs[i]) * step)
                        .collect();
                    let y = if offs.iter().all(|&o| o == 0) { f0.clone() } else { f(&x) };
                    let w = w0 * w1 * w2;
                    for (a, b) in acc.iter_mut().zip(y) {
                        *a += w * b;
                    }
                }
            }
        }
        let denom = step.powi(i32::from(degree(m)));
        let fact: f64 = m.iter().map(|&k| factorial(k)).product();
        for (t, a) in comps.iter_mut().zip(acc) {
            t.c[slot] = a / denom / fact;
        }
    }
    Jet::new(space, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_table_sizes() {
        assert_eq!(Space::get(2, 3).active().len(), 10);
        assert_eq!(Space::get(3, 3).active().len(), 20);
        assert_eq!(Space::get(1, 3).active().len(), 4);
        assert_eq!(Space::get(2, 1).active().len(), 3);
    }

    #[test]
    fn polynomial_partials() {
        let sp = Space::get(2, 3);
        let u = sp.variable(0, 0.5);
        let v = sp.variable(1, -2.0);
        // p = u^2 v + v^3
        let p = sp.mul(&sp.mul(&u, &u), &v) + sp.powi(&v, 3);
        assert_eq!(p.value(), 0.25 * -2.0 - 8.0);
        assert_eq!(p.partial(&[0]), 2.0 * 0.5 * -2.0);
        assert_eq!(p.partial(&[0, 1]), 1.0);
        assert_eq!(p.partial(&[1, 0]), 1.0);
        assert_eq!(p.partial(&[1, 1, 1]), 6.0);
        assert_eq!(p.partial(&[0, 0, 1]), 2.0);
    }

    #[test]
    fn compose_matches_exp_series() {
        let sp = Space::get(1, 3);
        let x = sp.variable(0, 0.3);
        let e = 0.3_f64.exp();
        let y = sp.compose(&x, [e; 4]);
        for k in 0..4 {
            let vars = vec![0; k];
            assert!((y.partial(&vars) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn deriv_lowers_order() {
        let sp = Space::get(2, 3);
        let u = sp.variable(0, 1.0);
        let v = sp.variable(1, 2.0);
        let p = sp.mul(&sp.mul(&u, &u), &v);
        let pu = p.deriv(0);
        assert_eq!(pu.value(), 4.0);
        assert_eq!(pu.partial(&[1]), 2.0);
        assert_eq!(pu.partial(&[0]), 4.0);
    }

    #[test]
    fn permute_swaps_variables() {
        let sp = Space::get(2, 3);
        let u = sp.variable(0, 1.0);
        let v = sp.variable(1, 2.0);
        let p = sp.mul(&sp.mul(&u, &u), &v);
        let q = p.permute_vars([1, 0, 2]);
        assert_eq!(q.partial(&[1, 1, 0]), p.partial(&[0, 0, 1]));
        assert_eq!(q.partial(&[0]), p.partial(&[1]));
    }

    #[test]
    fn fd_of_constant_map_is_exactly_zero() {
        let j = finite_difference_jet(|_| vec![2.5, -1.0, 0.0], &[0.3, 0.4], 3, None);
        for vars in [&[0][..], &[1], &[0, 1], &[1, 1, 0]] {
            assert!(j.partial(vars).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn fd_of_linear_map() {
        let j = finite_difference_jet(|p| vec![p[0], p[1], p[0] + p[1]], &[0.3, -0.7], 2, None);
        assert!((j.partial(&[0])[2] - 1.0).abs() < 1e-10);
        assert!(j.partial(&[0, 1]).iter().all(|x| x.abs() < 1e-9));
        assert!(j.partial(&[1, 1]).iter().all(|x| x.abs() < 1e-9));
    }
}
