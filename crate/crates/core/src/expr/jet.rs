//! Truncated Taylor arithmetic in one variable.
//!
//! A `Taylor<N>` stores the normalized coefficients `c[k] = f^(k)(t) / k!`,
//! so sums, products and the elementary functions below propagate exact
//! derivatives up to order `N - 1`.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taylor<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Taylor<N> {
    pub fn constant(value: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = value;
        Self { c }
    }

    /// The independent variable evaluated at `t`.
    pub fn variable(t: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = t;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative (k < N).
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    pub fn is_constant(&self) -> bool {
        self.c[1..].iter().all(|&x| x == 0.0)
    }

    pub fn scale(mut self, s: f64) -> Self {
        for x in self.c.iter_mut() {
            *x *= s;
        }
        self
    }

    /// Caller guarantees `self.c[0] != 0`.
    pub fn recip(&self) -> Self {
        Self::constant(1.0) / *self
    }

    pub fn exp(&self) -> Self {
        let mut e = [0.0; N];
        e[0] = self.c[0].exp();
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Self { c: e }
    }

    /// Caller guarantees `self.c[0] > 0`.
    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut l = [0.0; N];
        l[0] = a0.ln();
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..k {
                acc += (k - j) as f64 * self.c[j] * l[k - j];
            }
            l[k] = (self.c[k] - acc / k as f64) / a0;
        }
        Self { c: l }
    }

    /// Returns `(sin, cos)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = [0.0; N];
        let mut co = [0.0; N];
        s[0] = self.c[0].sin();
        co[0] = self.c[0].cos();
        for k in 1..N {
            let (mut as_, mut ac) = (0.0, 0.0);
            for j in 1..=k {
                let ja = j as f64 * self.c[j];
                as_ += ja * co[k - j];
                ac += ja * s[k - j];
            }
            s[k] = as_ / k as f64;
            co[k] = -ac / k as f64;
        }
        (Self { c: s }, Self { c: co })
    }

    /// Returns `(sinh, cosh)`.
    pub fn sinh_cosh(&self) -> (Self, Self) {
        let mut s = [0.0; N];
        let mut co = [0.0; N];
        s[0] = self.c[0].sinh();
        co[0] = self.c[0].cosh();
        for k in 1..N {
            let (mut as_, mut ac) = (0.0, 0.0);
            for j in 1..=k {
                let ja = j as f64 * self.c[j];
                as_ += ja * co[k - j];
                ac += ja * s[k - j];
            }
            s[k] = as_ / k as f64;
            co[k] = ac / k as f64;
        }
        (Self { c: s }, Self { c: co })
    }

    pub fn tanh(&self) -> Self {
        // tau' = u' (1 - tau^2); q tracks 1 - tau^2
        let mut tau = [0.0; N];
        let mut q = [0.0; N];
        tau[0] = self.c[0].tanh();
        q[0] = 1.0 - tau[0] * tau[0];
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * q[k - j];
            }
            tau[k] = acc / k as f64;
            let mut sq = 0.0;
            for i in 0..=k {
                sq += tau[i] * tau[k - i];
            }
            q[k] = -sq;
        }
        Self { c: tau }
    }

    /// Caller guarantees `self.c[0] > 0`.
    pub fn sqrt(&self) -> Self {
        let mut r = [0.0; N];
        r[0] = self.c[0].sqrt();
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..k {
                acc += r[j] * r[k - j];
            }
            r[k] = (self.c[k] - acc) / (2.0 * r[0]);
        }
        Self { c: r }
    }

    /// `self^p` for a constant exponent; caller guarantees `self.c[0] != 0`
    /// and, for a negative base, an integral `p`.
    pub fn powf(&self, p: f64) -> Self {
        let a0 = self.c[0];
        let mut out = [0.0; N];
        out[0] = if a0 < 0.0 {
            a0.powi(p as i32)
        } else {
            a0.powf(p)
        };
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (p * j as f64 - (k - j) as f64) * self.c[j] * out[k - j];
            }
            out[k] = acc / (k as f64 * a0);
        }
        Self { c: out }
    }

    /// Non-negative integer power by repeated squaring; valid at a zero base.
    pub fn powi(&self, mut e: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl<const N: usize> Add for Taylor<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Taylor<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for Taylor<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Taylor<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = [0.0; N];
        for k in 0..N {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += self.c[j] * rhs.c[k - j];
            }
            out[k] = acc;
        }
        Self { c: out }
    }
}

impl<const N: usize> Div for Taylor<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let b0 = rhs.c[0];
        let mut q = [0.0; N];
        for k in 0..N {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= rhs.c[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Self { c: q }
    }
}

/// Value with first and second derivative in t.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    pub fn variable(t: f64) -> Self {
        Self::new(t, 1.0, 0.0)
    }

    fn taylor(self) -> Taylor<3> {
        Taylor {
            c: [self.value, self.d1, 0.5 * self.d2],
        }
    }

    pub fn exp(self) -> Self {
        self.taylor().exp().into()
    }

    pub fn ln(self) -> Self {
        self.taylor().ln().into()
    }

    pub fn sin(self) -> Self {
        self.taylor().sin_cos().0.into()
    }

    pub fn cos(self) -> Self {
        self.taylor().sin_cos().1.into()
    }

    pub fn sqrt(self) -> Self {
        self.taylor().sqrt().into()
    }
}

impl From<Taylor<3>> for Jet2 {
    fn from(t: Taylor<3>) -> Self {
        Self {
            value: t.c[0],
            d1: t.c[1],
            d2: 2.0 * t.c[2],
        }
    }
}

macro_rules! jet2_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                self.taylor().$method(rhs.taylor()).into()
            }
        }
    };
}

jet2_binop!(Add, add);
jet2_binop!(Sub, sub);
jet2_binop!(Mul, mul);
jet2_binop!(Div, div);

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2::new(-self.value, -self.d1, -self.d2)
    }
}
