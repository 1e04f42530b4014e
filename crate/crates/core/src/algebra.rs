//! 2x2 complex matrices: su(2), trace-free sl(2,C), and the pointwise
//! identities satisfied by trace-free matrices.
//!
//! Inner product everywhere is `<X, Y> = Re Tr(X Y^dagger)`, so
//! `|X|^2 = Tr(X X^dagger)` is the squared Frobenius norm.

use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Row-major 2x2 complex matrix `[[m0, m1], [m2, m3]]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mat2(pub [C64; 4]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([C64::new(0.0, 0.0); 4]);
    pub const IDENTITY: Mat2 =
        Mat2([C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([a, b, c, d])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0)])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), d])
    }

    /// `i * sigma_k` for the Pauli matrices, the standard basis of su(2).
    pub fn su2_basis(k: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match k {
            0 => Mat2([z, I, I, z]),
            1 => Mat2([z, one, -one, z]),
            2 => Mat2([I, z, z, -I]),
            _ => panic!("su(2) basis index {k} out of range"),
        }
    }

    /// `sum_k c_k i sigma_k`.
    pub fn from_su2_coords(c: [f64; 3]) -> Self {
        Mat2([
            C64::new(0.0, c[2]),
            C64::new(c[1], c[0]),
            C64::new(-c[1], c[0]),
            C64::new(0.0, -c[2]),
        ])
    }

    #[inline]
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()])
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    /// `Tr(X X^dagger)`.
    #[inline]
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `Re Tr(X Y^dagger)`.
    #[inline]
    pub fn inner(&self, other: &Mat2) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
    }

    #[inline]
    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2(self.0.map(|z| z * s))
    }

    #[inline]
    pub fn scale_c(&self, s: C64) -> Mat2 {
        Mat2(self.0.map(|z| z * s))
    }

    /// Anti-hermitian trace-free part, the orthogonal projection onto su(2).
    pub fn su2_part(&self) -> Mat2 {
        let m = &self.0;
        let off = (m[1] - m[2].conj()) * 0.5;
        let d0 = m[0].im;
        let d3 = m[3].im;
        let mean = 0.5 * (d0 + d3);
        Mat2([C64::new(0.0, d0 - mean), off, -off.conj(), C64::new(0.0, d3 - mean)])
    }

    /// Trace-free part, the orthogonal projection onto sl(2, C).
    pub fn traceless_part(&self) -> Mat2 {
        let t = self.trace() * 0.5;
        Mat2([self.0[0] - t, self.0[1], self.0[2], self.0[3] - t])
    }

    /// Coordinates `c` with `self = sum_k c_k i sigma_k` (valid for su(2) input).
    pub fn su2_coords(&self) -> [f64; 3] {
        let m = &self.0;
        [0.5 * (m[1].im + m[2].im), 0.5 * (m[1].re - m[2].re), 0.5 * (m[0].im - m[3].im)]
    }

    pub fn is_su2(&self, tol: f64) -> bool {
        (*self + self.adjoint()).norm() <= tol * (1.0 + self.norm()) && self.trace().norm() <= tol * (1.0 + self.norm())
    }

    /// `||U^dagger U - I|| + |det U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Mat2::IDENTITY).norm() + (self.det() - C64::new(1.0, 0.0)).norm()
    }

    /// Nearest element of the form `[[a, b], [-b*, a*]]`, normalised to SU(2).
    pub fn reunitarize(&self) -> Mat2 {
        let m = &self.0;
        let a = (m[0] + m[3].conj()) * 0.5;
        let b = (m[1] - m[2].conj()) * 0.5;
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / r, b / r);
        Mat2([a, b, -b.conj(), a.conj()])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        Mat2([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2], self.0[3] - o.0[3]])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        Mat2(self.0.map(|z| -z))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: f64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: C64) -> Mat2 {
        self.scale_c(s)
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Mat2) {
        for k in 0..4 {
            self.0[k] += o.0[k];
        }
    }
}

impl SubAssign for Mat2 {
    #[inline]
    fn sub_assign(&mut self, o: Mat2) {
        for k in 0..4 {
            self.0[k] -= o.0[k];
        }
    }
}

impl MulAssign<f64> for Mat2 {
    #[inline]
    fn mul_assign(&mut self, s: f64) {
        for k in 0..4 {
            self.0[k] *= s;
        }
    }
}

/// `exp(X)` for `X` in su(2): `cos(t) I + sin(t)/t X` with `t^2 = |X|^2 / 2`.
pub fn exp_su2(x: &Mat2) -> Mat2 {
    let t = (0.5 * x.norm_sqr()).sqrt();
    let (c, s) = if t < 1e-8 { (1.0 - 0.5 * t * t, 1.0 - t * t / 6.0) } else { (t.cos(), t.sin() / t) };
    Mat2::IDENTITY.scale(c) + x.scale(s)
}

/// `[phi, phi^dagger]`, hermitian and trace-free.
#[inline]
pub fn commutator_bracket(phi: &Mat2) -> Mat2 {
    let pd = phi.adjoint();
    *phi * pd - pd * *phi
}

fn require_trace_free(m: &Mat2) -> Result<()> {
    let t = m.trace().norm();
    if t > 1e-12 * (1.0 + m.norm()) {
        return Err(Error::NotTraceFree(t));
    }
    Ok(())
}

/// Both sides of `Tr(M M^dagger - M^dagger M)^2 = 2 Tr(M M^dagger)^2 - 4 |det M|^2`.
pub fn trace_free_identity_check(m: &Mat2) -> Result<(f64, f64)> {
    require_trace_free(m)?;
    let c = commutator_bracket(m);
    let mm = *m * m.adjoint();
    let lhs = (c * c).trace().re;
    let rhs = 2.0 * (mm * mm).trace().re - 4.0 * m.det().norm_sqr();
    Ok((lhs, rhs))
}

/// `(|M|^4, |[M, M^dagger]|^2 + 4 |det M|^2)`; the first never exceeds the second.
pub fn quartic_inequality_check(m: &Mat2) -> Result<(f64, f64)> {
    require_trace_free(m)?;
    let n2 = m.norm_sqr();
    let rhs = commutator_bracket(m).norm_sqr() + 4.0 * m.det().norm_sqr();
    Ok((n2 * n2, rhs))
}

/// Entries uniform in the complex square `[-1,1]^2`, projected trace-free.
pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut z = || C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
    Mat2([z(), z(), z(), z()]).traceless_part()
}

/// Coordinates uniform in `[-1, 1]` along `i sigma_k`.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    Mat2::from_su2_coords([rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
}

/// Haar-ish random element of SU(2) from a normalised 4-vector.
pub fn random_su2_group<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        let r2: f64 = q.iter().map(|x| x * x).sum();
        if r2 > 1e-6 && r2 <= 1.0 {
            let r = r2.sqrt();
            let a = C64::new(q[0] / r, q[1] / r);
            let b = C64::new(q[2] / r, q[3] / r);
            return Mat2([a, b, -b.conj(), a.conj()]);
        }
    }
}

/// Outcome of a randomized sweep over trace-free matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySweep {
    pub samples: usize,
    pub seed: u64,
    /// Largest `|lhs - rhs| / (1 + |lhs|)` of the trace identity.
    pub max_identity_error: f64,
    pub identity_failures: usize,
    /// Samples where `|M|^4 > rhs + 1e-10`.
    pub quartic_violations: usize,
    /// Smallest slack `rhs - lhs` of the quartic inequality.
    pub min_quartic_slack: f64,
}

impl IdentitySweep {
    pub fn passed(&self) -> bool {
        self.identity_failures == 0 && self.quartic_violations == 0
    }
}

/// Runs both matrix checks on `samples` random trace-free matrices.
pub fn identity_sweep(samples: usize, seed: u64) -> IdentitySweep {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = IdentitySweep {
        samples,
        seed,
        max_identity_error: 0.0,
        identity_failures: 0,
        quartic_violations: 0,
        min_quartic_slack: f64::INFINITY,
    };
    for _ in 0..samples {
        let m = random_sl2(&mut rng);
        let (lhs, rhs) = trace_free_identity_check(&m).expect("projected input is trace-free");
        let err = (lhs - rhs).abs() / (1.0 + lhs.abs());
        out.max_identity_error = out.max_identity_error.max(err);
        if err > 1e-10 {
            out.identity_failures += 1;
        }
        let (q_lhs, q_rhs) = quartic_inequality_check(&m).expect("projected input is trace-free");
        if q_lhs > q_rhs + 1e-10 {
            out.quartic_violations += 1;
        }
        out.min_quartic_slack = out.min_quartic_slack.min(q_rhs - q_lhs);
    }
    out
}
