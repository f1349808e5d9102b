use std::ops::{Add, Div, Mul, Neg, Sub};

/// Truncated Taylor jet in `(x, u)`: `c[i][j]` is the coefficient of
/// `dx^i du^j`, kept for `i ≤ 2`, `j ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [[f64; 2]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { c: [[v, 0.0], [0.0, 0.0], [0.0, 0.0]] }
    }

    pub fn x(x0: f64) -> Self {
        Self { c: [[x0, 0.0], [1.0, 0.0], [0.0, 0.0]] }
    }

    pub fn u(u0: f64) -> Self {
        Self { c: [[u0, 1.0], [0.0, 0.0], [0.0, 0.0]] }
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    pub fn dx(&self) -> f64 {
        self.c[1][0]
    }

    pub fn dxx(&self) -> f64 {
        2.0 * self.c[2][0]
    }

    pub fn du(&self) -> f64 {
        self.c[0][1]
    }

    /// `∂_u` as a jet in `x` alone; the `u`-slot is lost.
    pub fn partial_u(&self) -> Self {
        Self { c: [[self.c[0][1], 0.0], [self.c[1][1], 0.0], [self.c[2][1], 0.0]] }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().flatten().all(|v| v.is_finite())
    }

    /// `g(a)` from `g(a₀), g'(a₀), g''(a₀), g'''(a₀)`.
    fn compose(self, d: [f64; 4]) -> Self {
        let mut delta = self;
        delta.c[0][0] = 0.0;
        let mut out = Self::constant(d[0]);
        let mut power = Self::constant(1.0);
        let mut factorial = 1.0;
        for (k, &dk) in d.iter().enumerate().skip(1) {
            power = power * delta;
            factorial *= k as f64;
            out = out + power.scale(dk / factorial);
        }
        out
    }

    fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().flatten().for_each(|v| *v *= s);
        Self { c }
    }

    pub fn recip(self) -> Self {
        let a = self.value();
        self.compose([1.0 / a, -1.0 / (a * a), 2.0 / a.powi(3), -6.0 / a.powi(4)])
    }

    pub fn powf(self, p: f64) -> Self {
        let a = self.value();
        self.compose([a.powf(p), p * a.powf(p - 1.0), p * (p - 1.0) * a.powf(p - 2.0), p * (p - 1.0) * (p - 2.0) * a.powf(p - 3.0)])
    }

    pub fn powi(self, n: i32) -> Self {
        if n >= 0 {
            (0..n).fold(Self::constant(1.0), |acc, _| acc * self)
        } else {
            self.powi(-n).recip()
        }
    }

    pub fn exp(self) -> Self {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn ln(self) -> Self {
        let a = self.value();
        self.compose([a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / a.powi(3)])
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([s, c, s, c])
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([c, s, c, s])
    }

    pub fn tanh(self) -> Self {
        let t = self.value().tanh();
        let s = 1.0 - t * t;
        self.compose([t, s, -2.0 * t * s, -2.0 * s * (1.0 - 3.0 * t * t)])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for i in 0..3 {
            for j in 0..2 {
                c[i][j] += o.c[i][j];
            }
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [[0.0; 2]; 3];
        for i in 0..3 {
            for j in 0..2 {
                for a in 0..=i {
                    for b in 0..=j {
                        c[i][j] += self.c[a][b] * o.c[i - a][j - b];
                    }
                }
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}
