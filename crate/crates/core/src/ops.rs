//! Discrete covariant exterior calculus on the torus.
//!
//! All derivatives are second-order central differences,
//! `D_mu f(x) = (f(x + e_mu) - f(x - e_mu)) / 2h`, and the covariant
//! derivative of an End(E)-valued field is `nabla_mu X = D_mu X + [A_mu(x), X(x)]`.
//! Adjoints are the exact summation-by-parts adjoints of these stencils under
//! `<X, Y> = h^6 sum_x sum_I Re Tr(X_I Y_I^dagger)` with each increasing
//! multi-index `I` counted once; in particular `nabla_mu^* = -nabla_mu`.
//!
//! Complex directions: `d/dz̄^a = (D_{2a} + i D_{2a+1}) / 2`,
//! `A_{z̄^a} = (A_{2a} + i A_{2a+1}) / 2`, and likewise for `z^a` with `-i`.

use num_complex::Complex64;

use crate::algebra::{commutator_bracket, Mat2};
use crate::error::{Error, Result};
use crate::field::{ConnectionField, FieldState, HiggsField};
use crate::lattice::{pair_index, Lattice, DIM, PAIRS};
use crate::par;

/// Real 2-form coefficients `F_{mu nu}`, `mu < nu`, indexed as [`PAIRS`].
pub type TwoForm = [Mat2; 15];

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pairs of complex directions `(a, b)`, `a < b`.
pub const COMPLEX_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Increasing multi-indices of each degree as bitmasks over `{0, 1, 2}`.
const MULTI: [&[u8]; 4] = [&[0b000], &[0b001, 0b010, 0b100], &[0b011, 0b101, 0b110], &[0b111]];

fn multi_position(q: usize, mask: u8) -> usize {
    MULTI[q].iter().position(|&m| m == mask).expect("mask of matching degree")
}

/// Number of components of a (0,q)-form.
pub fn zero_q_dim(q: usize) -> usize {
    MULTI[q].len()
}

/// The eight real index triples `(s0, 2 + s1, 4 + s2)` carrying `v = u + ū`.
pub const MIXED_TRIPLES: [[usize; 3]; 8] = [
    [0, 2, 4],
    [1, 2, 4],
    [0, 3, 4],
    [1, 3, 4],
    [0, 2, 5],
    [1, 2, 5],
    [0, 3, 5],
    [1, 3, 5],
];

/// All twenty increasing real index triples.
pub const ALL_TRIPLES: [[usize; 3]; 20] = {
    let mut out = [[0usize; 3]; 20];
    let mut k = 0;
    let mut a = 0;
    while a < DIM {
        let mut b = a + 1;
        while b < DIM {
            let mut c = b + 1;
            while c < DIM {
                out[k] = [a, b, c];
                k += 1;
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

/// `dz̄^1 ∧ dz̄^2 ∧ dz̄^3` evaluated on the mixed triple `s`: `(-i)^(s0+s1+s2)`.
pub fn mixed_coefficient(s: usize) -> Complex64 {
    match s.count_ones() {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

#[inline]
fn two_form_get(w: &TwoForm, mu: usize, nu: usize) -> Mat2 {
    use std::cmp::Ordering::*;
    match mu.cmp(&nu) {
        Less => w[pair_index(mu, nu)],
        Greater => -w[pair_index(nu, mu)],
        Equal => Mat2::ZERO,
    }
}

/// Covariant central difference of a site field along `mu`, evaluated at `x`.
#[inline]
fn nabla<F: Fn(usize) -> Mat2>(lat: &Lattice, a: &[[Mat2; DIM]], x: usize, mu: usize, inv2h: f64, f: F) -> Mat2 {
    (f(lat.up(x, mu)) - f(lat.down(x, mu))).scale(inv2h) + a[x][mu].commutator(&f(x))
}

/// `nabla_{z̄^c}` (`conj = false`) or `nabla_{z^c}` (`conj = true`).
#[inline]
fn nabla_complex<F: Fn(usize) -> Mat2>(
    lat: &Lattice,
    a: &[[Mat2; DIM]],
    x: usize,
    c: usize,
    conj: bool,
    inv2h: f64,
    f: F,
) -> Mat2 {
    let re = nabla(lat, a, x, 2 * c, inv2h, &f);
    let im = nabla(lat, a, x, 2 * c + 1, inv2h, &f);
    let s = if conj { -I } else { I };
    (re + im.scale_c(s)).scale(0.5)
}

/// Curvature `F_{mu nu} = D_mu A_nu - D_nu A_mu + [A_mu, A_nu]` at one site.
pub fn curvature_at(lat: &Lattice, a: &[[Mat2; DIM]], x: usize) -> TwoForm {
    let inv2h = 0.5 / lat.spacing();
    let mut d = [[Mat2::ZERO; DIM]; DIM];
    for mu in 0..DIM {
        let up = &a[lat.up(x, mu)];
        let dn = &a[lat.down(x, mu)];
        for nu in 0..DIM {
            if nu != mu {
                d[mu][nu] = (up[nu] - dn[nu]).scale(inv2h);
            }
        }
    }
    let ax = &a[x];
    std::array::from_fn(|p| {
        let (mu, nu) = PAIRS[p];
        d[mu][nu] - d[nu][mu] + ax[mu].commutator(&ax[nu])
    })
}

/// Curvature field of a connection.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField(pub Vec<TwoForm>);

pub fn curvature(lat: &Lattice, a: &ConnectionField) -> CurvatureField {
    CurvatureField(par::map_indexed(lat.num_sites(), |x| curvature_at(lat, &a.0, x)))
}

/// Complex type components of a 2-form at one site.
///
/// `f02[k] = F(d/dz̄^a, d/dz̄^b)` and `f20[k] = F(d/dz^a, d/dz^b)` for
/// `(a, b) = COMPLEX_PAIRS[k]`; `f11[a][b] = F(d/dz^a, d/dz̄^b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypedTwoForm {
    pub f02: [Mat2; 3],
    pub f11: [[Mat2; 3]; 3],
    pub f20: [Mat2; 3],
}

/// Splits a real 2-form into its (0,2), (1,1) and (2,0) parts.
pub fn type_decompose(f: &TwoForm) -> TypedTwoForm {
    let g = |mu: usize, nu: usize| two_form_get(f, mu, nu);
    let quarter = |m: Mat2| m.scale(0.25);
    let f02 = COMPLEX_PAIRS.map(|(a, b)| {
        let (x, y) = (2 * a, 2 * b);
        quarter(g(x, y) + (g(x, y + 1) + g(x + 1, y)).scale_c(I) - g(x + 1, y + 1))
    });
    let f20 = COMPLEX_PAIRS.map(|(a, b)| {
        let (x, y) = (2 * a, 2 * b);
        quarter(g(x, y) - (g(x, y + 1) + g(x + 1, y)).scale_c(I) - g(x + 1, y + 1))
    });
    let f11 = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let (x, y) = (2 * a, 2 * b);
            quarter(g(x, y) + (g(x, y + 1) - g(x + 1, y)).scale_c(I) + g(x + 1, y + 1))
        })
    });
    TypedTwoForm { f02, f11, f20 }
}

/// Inverse of [`type_decompose`].
pub fn reassemble(t: &TypedTwoForm) -> TwoForm {
    // value of F on (d/dz^a or d/dz̄^a, d/dz^b or d/dz̄^b); `bar` selects z̄
    let cplx = |a: usize, abar: bool, b: usize, bbar: bool| -> Mat2 {
        match (abar, bbar) {
            (false, true) => t.f11[a][b],
            (true, false) => -t.f11[b][a],
            (false, false) | (true, true) => {
                if a == b {
                    return Mat2::ZERO;
                }
                let src = if abar { &t.f02 } else { &t.f20 };
                let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
                let k = COMPLEX_PAIRS.iter().position(|&p| p == (lo, hi)).expect("pair");
                src[k].scale(sign)
            }
        }
    };
    std::array::from_fn(|p| {
        let (mu, nu) = PAIRS[p];
        let (a, sa) = (mu / 2, mu % 2);
        let (b, sb) = (nu / 2, nu % 2);
        // d/dx^{2a} = d/dz + d/dz̄, d/dx^{2a+1} = i (d/dz - d/dz̄)
        let weights = |s: usize| -> [(bool, Complex64); 2] {
            if s == 0 {
                [(false, Complex64::new(1.0, 0.0)), (true, Complex64::new(1.0, 0.0))]
            } else {
                [(false, I), (true, -I)]
            }
        };
        let mut acc = Mat2::ZERO;
        for (abar, wa) in weights(sa) {
            for (bbar, wb) in weights(sb) {
                acc += cplx(a, abar, b, bbar).scale_c(wa * wb);
            }
        }
        acc
    })
}

/// End(E)-valued (0,q)-form: `C(3,q)` components per site, site-major, in
/// increasing multi-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroQForm {
    pub degree: usize,
    pub comps: Vec<Mat2>,
}

impl ZeroQForm {
    pub fn zeros(degree: usize, num_sites: usize) -> Self {
        Self { degree, comps: vec![Mat2::ZERO; num_sites * zero_q_dim(degree)] }
    }

    /// `u = phi dz̄^1 ∧ dz̄^2 ∧ dz̄^3` as a (0,3)-form.
    pub fn from_higgs(phi: &HiggsField) -> Self {
        Self { degree: 3, comps: phi.0.clone() }
    }

    /// `h^6 sum Re Tr(X Y^dagger)` over sites and components.
    pub fn inner(&self, other: &ZeroQForm, lat: &Lattice) -> f64 {
        assert_eq!(self.degree, other.degree);
        let (a, b) = (&self.comps, &other.comps);
        lat.spec().volume_element() * par::sum_indexed(a.len(), |i| a[i].inner(&b[i]))
    }
}

/// `∂̄_A`: (0,q)-forms to (0,q+1)-forms, `q < 3`.
pub fn dbar_a(alpha: &ZeroQForm, a: &ConnectionField, lat: &Lattice) -> Result<ZeroQForm> {
    let q = alpha.degree;
    if q >= 3 {
        return Err(Error::Degree(q));
    }
    let inv2h = 0.5 / lat.spacing();
    let (din, dout) = (zero_q_dim(q), zero_q_dim(q + 1));
    let comps: Vec<[Mat2; 3]> = par::map_indexed(lat.num_sites(), |x| {
        let mut out = [Mat2::ZERO; 3];
        for (k, &j) in MULTI[q + 1].iter().enumerate() {
            for c in 0..3 {
                if j & (1 << c) == 0 {
                    continue;
                }
                let sign = if (j & ((1 << c) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                let src = multi_position(q, j & !(1 << c));
                let term = nabla_complex(lat, &a.0, x, c, false, inv2h, |y| alpha.comps[y * din + src]);
                out[k] += term.scale(sign);
            }
        }
        out
    });
    Ok(ZeroQForm { degree: q + 1, comps: comps.iter().flat_map(|c| c[..dout].iter().copied()).collect() })
}

/// Exact adjoint of [`dbar_a`]: (0,q+1)-forms to (0,q)-forms.
pub fn dbar_a_adjoint_form(beta: &ZeroQForm, a: &ConnectionField, lat: &Lattice) -> Result<ZeroQForm> {
    let q1 = beta.degree;
    if q1 == 0 || q1 > 3 {
        return Err(Error::Degree(q1));
    }
    let q = q1 - 1;
    let inv2h = 0.5 / lat.spacing();
    let (din, dout) = (zero_q_dim(q1), zero_q_dim(q));
    let comps: Vec<[Mat2; 3]> = par::map_indexed(lat.num_sites(), |x| {
        let mut out = [Mat2::ZERO; 3];
        for (k, &i) in MULTI[q].iter().enumerate() {
            for c in 0..3 {
                if i & (1 << c) != 0 {
                    continue;
                }
                let j = i | (1 << c);
                let sign = if (j & ((1 << c) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                let src = multi_position(q1, j);
                let term = nabla_complex(lat, &a.0, x, c, true, inv2h, |y| beta.comps[y * din + src]);
                out[k] -= term.scale(sign);
            }
        }
        out
    });
    Ok(ZeroQForm { degree: q, comps: comps.iter().flat_map(|c| c[..dout].iter().copied()).collect() })
}

/// `∂̄_A^* u` for the Higgs (0,3)-form; a (0,2)-form.
pub fn dbar_a_adjoint(u: &HiggsField, a: &ConnectionField, lat: &Lattice) -> ZeroQForm {
    dbar_a_adjoint_form(&ZeroQForm::from_higgs(u), a, lat).expect("degree 3 is valid")
}

/// `v = u + ū` on the mixed triples, with `ū = -phi^dagger dz^1 ∧ dz^2 ∧ dz^3`
/// so that `v` is a real su(2)-valued 3-form.
#[inline]
pub fn higgs_three_form_at(phi: &Mat2) -> [Mat2; 8] {
    std::array::from_fn(|s| {
        let w = phi.scale_c(mixed_coefficient(s));
        w - w.adjoint()
    })
}

pub fn higgs_three_form(phi: &HiggsField) -> Vec<[Mat2; 8]> {
    par::map_indexed(phi.0.len(), |x| higgs_three_form_at(&phi.0[x]))
}

/// `(D_A^* v)_{mu nu} = -sum_l nabla_l v_{l mu nu}` at one site, for a 3-form
/// supported on the listed triples.
pub fn covariant_dstar_at<const K: usize>(
    lat: &Lattice,
    a: &[[Mat2; DIM]],
    v: &[[Mat2; K]],
    triples: &[[usize; 3]; K],
    x: usize,
) -> TwoForm {
    let inv2h = 0.5 / lat.spacing();
    let mut w = [Mat2::ZERO; 15];
    for (t, &[l, m, n]) in triples.iter().enumerate() {
        let at = |y: usize| v[y][t];
        w[pair_index(m, n)] -= nabla(lat, a, x, l, inv2h, at);
        w[pair_index(l, n)] += nabla(lat, a, x, m, inv2h, at);
        w[pair_index(l, m)] -= nabla(lat, a, x, n, inv2h, at);
    }
    w
}

/// `(D_A w)_{l m n} = nabla_l w_{mn} - nabla_m w_{ln} + nabla_n w_{lm}` at one
/// site, on the listed triples.
pub fn covariant_d2_at<const K: usize>(
    lat: &Lattice,
    a: &[[Mat2; DIM]],
    w: &[TwoForm],
    triples: &[[usize; 3]; K],
    x: usize,
) -> [Mat2; K] {
    let inv2h = 0.5 / lat.spacing();
    std::array::from_fn(|t| {
        let [l, m, n] = triples[t];
        nabla(lat, a, x, l, inv2h, |y| w[y][pair_index(m, n)]) - nabla(lat, a, x, m, inv2h, |y| w[y][pair_index(l, n)])
            + nabla(lat, a, x, n, inv2h, |y| w[y][pair_index(l, m)])
    })
}

/// Covariant exterior derivative of a 2-form field onto all 20 triples.
pub fn covariant_d2(w: &[TwoForm], a: &ConnectionField, lat: &Lattice) -> Vec<[Mat2; 20]> {
    par::map_indexed(lat.num_sites(), |x| covariant_d2_at(lat, &a.0, w, &ALL_TRIPLES, x))
}

/// Exact adjoint of [`covariant_d2`].
pub fn covariant_dstar3(v: &[[Mat2; 20]], a: &ConnectionField, lat: &Lattice) -> Vec<TwoForm> {
    par::map_indexed(lat.num_sites(), |x| covariant_dstar_at(lat, &a.0, v, &ALL_TRIPLES, x))
}

/// `D_A^* v` with `v = u + ū` built from the Higgs field.
pub fn da_star_v(state: &FieldState) -> Vec<TwoForm> {
    let v = higgs_three_form(&state.higgs);
    par::map_indexed(state.num_sites(), |x| {
        covariant_dstar_at(&state.lattice, &state.connection.0, &v, &MIXED_TRIPLES, x)
    })
}

/// `h^6 sum Re Tr` pairing of two fields of `K` matrices per site.
pub fn pairing<const K: usize>(a: &[[Mat2; K]], b: &[[Mat2; K]], lat: &Lattice) -> f64 {
    lat.spec().volume_element()
        * par::sum_indexed(a.len(), |x| (0..K).map(|k| a[x][k].inner(&b[x][k])).sum())
}

/// `lambda(E) = 3 (c_1(E) . [omega]^2) / (r [omega]^3)`.
pub fn dt_constant(c1_dot_omega2: f64, rank: usize, omega_cubed: f64) -> f64 {
    3.0 * c1_dot_omega2 / (rank as f64 * omega_cubed)
}

/// `lambda(E)` for SU(2): `c_1 = 0`, so the constant vanishes.
pub fn su2_dt_constant() -> f64 {
    0.0
}

/// Residuals of the two Donaldson-Thomas equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPair {
    /// `F^{0,2} + ∂̄_A^* u`, components ordered as [`COMPLEX_PAIRS`].
    pub r1: Vec<[Mat2; 3]>,
    /// `i Λ F^{1,1} + kappa [phi, phi^dagger]` (hermitian, trace-free).
    pub r2: Vec<Mat2>,
    pub r1_norm: f64,
    pub r2_norm: f64,
}

/// Pointwise residuals from precomputed curvature at `x`.
pub(crate) fn residuals_at(
    lat: &Lattice,
    a: &[[Mat2; DIM]],
    phi: &[Mat2],
    f: &TwoForm,
    kappa: f64,
    x: usize,
) -> ([Mat2; 3], Mat2) {
    let inv2h = 0.5 / lat.spacing();
    let t = type_decompose(f);
    let mut r1 = t.f02;
    // (∂̄^* u)_{bc} = -(-1)^{pos(a)} nabla_{z^a} phi with {a} = complement
    for (k, &(b, c)) in COMPLEX_PAIRS.iter().enumerate() {
        let missing = 3 - b - c;
        let sign = if missing == 1 { -1.0 } else { 1.0 };
        r1[k] -= nabla_complex(lat, a, x, missing, true, inv2h, |y| phi[y]).scale(sign);
    }
    // i Λ F = i sum_a F_{2a,2a+1} = 2 sum_a F(d/dz^a, d/dz̄^a)
    let lambda_f = (t.f11[0][0] + t.f11[1][1] + t.f11[2][2]).scale(2.0);
    let r2 = lambda_f + commutator_bracket(&phi[x]).scale(kappa);
    (r1, r2)
}

pub fn dt_residuals(state: &FieldState, kappa: f64) -> ResidualPair {
    let lat = &state.lattice;
    let a = &state.connection.0;
    let phi = &state.higgs.0;
    let per_site: Vec<([Mat2; 3], Mat2)> = par::map_indexed(lat.num_sites(), |x| {
        let f = curvature_at(lat, a, x);
        residuals_at(lat, a, phi, &f, kappa, x)
    });
    let dv = lat.spec().volume_element();
    let [s1, s2] = par::sum_indexed_array(per_site.len(), |x| {
        let (r1, r2) = &per_site[x];
        [r1.iter().map(|m| m.norm_sqr()).sum(), r2.norm_sqr()]
    });
    let (r1, r2) = per_site.into_iter().unzip();
    ResidualPair { r1, r2, r1_norm: (dv * s1).sqrt(), r2_norm: (dv * s2).sqrt() }
}
