//! The functional `L(A, u)`, its density, and its exact discrete gradient.

use crate::algebra::{commutator_bracket, Mat2};
use crate::error::Result;
use crate::field::{ConnectionField, FieldState, HiggsField};
use crate::lattice::{pair_index, Ball, Lattice, DIM};
use crate::ops::{self, TwoForm, MIXED_TRIPLES};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `½ ∫ |F_A|²`
    pub curvature_term: f64,
    /// `½ ∫ |D_A^* v|²`
    pub dstar_term: f64,
    /// `½ ∫ |[u, ū]|²`
    pub bracket_term: f64,
    /// `∫ |det u|²`
    pub det_u_l2: f64,
}

/// Pointwise density `|F_A|² + |D_A^* v|² + |[u, ū]|²`, without the ½.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn pow32(&self) -> Vec<f64> {
        par::map_indexed(self.values.len(), |i| self.values[i].powf(1.5))
    }

    pub fn powered(&self, power: Power) -> Vec<f64> {
        match power {
            Power::One => self.values.clone(),
            Power::ThreeHalves => self.pow32(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Exponent applied to the density before integrating over a ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    One,
    ThreeHalves,
}

/// Site-wise `(|F|², |W|², |B|²)` with `W = D_A^* v`, `B = [phi, phi^dagger]`.
fn term_densities(state: &FieldState) -> Vec<[f64; 3]> {
    let lat = &state.lattice;
    let a = &state.connection.0;
    let phi = &state.higgs.0;
    let v = ops::higgs_three_form(&state.higgs);
    par::map_indexed(lat.num_sites(), |x| {
        let f = ops::curvature_at(lat, a, x);
        let w = ops::covariant_dstar_at(lat, a, &v, &MIXED_TRIPLES, x);
        [
            f.iter().map(Mat2::norm_sqr).sum(),
            w.iter().map(Mat2::norm_sqr).sum(),
            commutator_bracket(&phi[x]).norm_sqr(),
        ]
    })
}

pub fn energy(state: &FieldState) -> EnergyBreakdown {
    let terms = term_densities(state);
    let phi = &state.higgs.0;
    let dv = state.lattice.spec().volume_element();
    let [f, w, b, d] = par::sum_indexed_array(terms.len(), |x| {
        let t = terms[x];
        [t[0], t[1], t[2], phi[x].det().norm_sqr()]
    });
    let (curvature_term, dstar_term, bracket_term) = (0.5 * dv * f, 0.5 * dv * w, 0.5 * dv * b);
    EnergyBreakdown {
        total: curvature_term + dstar_term + bracket_term,
        curvature_term,
        dstar_term,
        bracket_term,
        det_u_l2: dv * d,
    }
}

pub fn density(state: &FieldState) -> DensityField {
    let terms = term_densities(state);
    DensityField { values: terms.iter().map(|t| t[0] + t[1] + t[2]).collect() }
}

/// `∫_B 𝓛^power dV` with the lattice ball rule.
pub fn local_energy(state: &FieldState, ball: &Ball, power: Power) -> Result<f64> {
    local_energy_of(&state.lattice, &density(state), ball, power)
}

pub fn local_energy_of(lat: &Lattice, density: &DensityField, ball: &Ball, power: Power) -> Result<f64> {
    match power {
        Power::One => lat.ball_integral(&density.values, ball),
        Power::ThreeHalves => lat.ball_integral(&density.pow32(), ball),
    }
}

/// Energy, gradient and the fields needed to build both.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: EnergyBreakdown,
    /// Gradient under `h^6 sum Re Tr(X Y^dagger)`, shaped like the state.
    pub gradient: FieldState,
}

/// Gradient of `energy(state).total`.
pub fn energy_gradient(state: &FieldState) -> FieldState {
    evaluate(state).gradient
}

pub fn evaluate(state: &FieldState) -> Evaluation {
    let lat = &state.lattice;
    let a = &state.connection.0;
    let phi = &state.higgs.0;
    let n = lat.num_sites();
    let inv2h = 0.5 / lat.spacing();

    let v = ops::higgs_three_form(&state.higgs);
    let fw: Vec<(TwoForm, TwoForm)> = par::map_indexed(n, |x| {
        (ops::curvature_at(lat, a, x), ops::covariant_dstar_at(lat, a, &v, &MIXED_TRIPLES, x))
    });
    let f: Vec<TwoForm> = fw.iter().map(|p| p.0).collect();
    let w: Vec<TwoForm> = fw.into_iter().map(|p| p.1).collect();

    let dv = lat.spec().volume_element();
    let [sf, sw, sb, sd] = par::sum_indexed_array(n, |x| {
        [
            f[x].iter().map(Mat2::norm_sqr).sum(),
            w[x].iter().map(Mat2::norm_sqr).sum(),
            commutator_bracket(&phi[x]).norm_sqr(),
            phi[x].det().norm_sqr(),
        ]
    });
    let (curvature_term, dstar_term, bracket_term) = (0.5 * dv * sf, 0.5 * dv * sw, 0.5 * dv * sb);
    let energy = EnergyBreakdown {
        total: curvature_term + dstar_term + bracket_term,
        curvature_term,
        dstar_term,
        bracket_term,
        det_u_l2: dv * sd,
    };

    let fget = |y: usize, mu: usize, nu: usize| -> Mat2 {
        if mu < nu {
            f[y][pair_index(mu, nu)]
        } else {
            -f[y][pair_index(nu, mu)]
        }
    };
    let grad_a: Vec<[Mat2; DIM]> = par::map_indexed(n, |x| {
        let mut g = [Mat2::ZERO; DIM];
        for (nu, g_nu) in g.iter_mut().enumerate() {
            for mu in (0..DIM).filter(|&mu| mu != nu) {
                let d = (fget(lat.up(x, mu), mu, nu) - fget(lat.down(x, mu), mu, nu)).scale(inv2h);
                *g_nu -= d + a[x][mu].commutator(&fget(x, mu, nu));
            }
        }
        for (t, &[l, m, k]) in MIXED_TRIPLES.iter().enumerate() {
            let vt = v[x][t];
            g[l] -= vt.commutator(&w[x][pair_index(m, k)]);
            g[m] += vt.commutator(&w[x][pair_index(l, k)]);
            g[k] -= vt.commutator(&w[x][pair_index(l, m)]);
        }
        g
    });
    let grad_phi: Vec<Mat2> = par::map_indexed(n, |x| {
        let dw = ops::covariant_d2_at(lat, a, &w, &MIXED_TRIPLES, x);
        let mut g = Mat2::ZERO;
        for (s, d) in dw.iter().enumerate() {
            g += d.scale_c(ops::mixed_coefficient(s).conj());
        }
        let b = commutator_bracket(&phi[x]);
        (g + b.commutator(&phi[x])).scale(2.0)
    });
    Evaluation {
        energy,
        gradient: FieldState {
            lattice: lat.clone(),
            connection: ConnectionField(grad_a),
            higgs: HiggsField(grad_phi),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_sl2, random_su2, random_su2_group};
    use crate::field::{apply_gauge, GaugeTransform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(lat: &Lattice, seed: u64, amp: f64) -> FieldState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = lat.num_sites();
        let a = (0..n).map(|_| std::array::from_fn(|_| random_su2(&mut rng).scale(amp))).collect();
        let p = (0..n).map(|_| random_sl2(&mut rng).scale(amp)).collect();
        FieldState::new(lat, ConnectionField(a), HiggsField(p)).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy_and_gradient() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let s = FieldState::zero(&lat);
        assert_eq!(energy(&s), EnergyBreakdown::default());
        let g = energy_gradient(&s);
        assert_eq!(g.norm(), 0.0);
        assert!(density(&s).values.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn constant_normal_higgs() {
        let lat = Lattice::with_size(4, 0.5).unwrap();
        let c = 0.7;
        let mut s = FieldState::zero(&lat);
        let phi = Mat2::from_real(c, 0.0, 0.0, -c);
        s.higgs.0.iter_mut().for_each(|p| *p = phi);
        let e = energy(&s);
        assert_eq!((e.curvature_term, e.dstar_term, e.bracket_term), (0.0, 0.0, 0.0));
        let vol = lat.spec().volume();
        assert!((e.det_u_l2 - vol * c.powi(4)).abs() < 1e-12 * vol);
        assert_eq!(energy_gradient(&s).norm(), 0.0);
    }

    #[test]
    fn constant_nilpotent_higgs_bracket_term() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let c = 0.3;
        let mut s = FieldState::zero(&lat);
        s.higgs.0.iter_mut().for_each(|p| *p = Mat2::from_real(0.0, c, 0.0, 0.0));
        let e = energy(&s);
        let expect = 0.5 * lat.spec().volume() * 2.0 * c.powi(4);
        assert!((e.bracket_term - expect).abs() < 1e-12 * expect);
        assert_eq!(e.det_u_l2, 0.0);
    }

    #[test]
    fn density_sums_to_twice_energy() {
        let lat = Lattice::with_size(4, 0.8).unwrap();
        let s = random_state(&lat, 3, 0.5);
        let e = energy(&s);
        let d = density(&s);
        assert!(d.values.iter().all(|&x| x >= 0.0));
        let sum = lat.integral(&d.values);
        assert!((sum - 2.0 * e.total).abs() <= 1e-12 * sum);
        assert!((e.total - (e.curvature_term + e.dstar_term + e.bracket_term)).abs() <= 1e-12 * e.total);
        assert_eq!(evaluate(&s).energy, e);
    }

    #[test]
    fn translation_invariant_state_has_constant_density() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: [Mat2; DIM] = std::array::from_fn(|_| random_su2(&mut rng).scale(0.3));
        let p = random_sl2(&mut rng);
        let s = FieldState::new(
            &lat,
            ConnectionField(vec![a; lat.num_sites()]),
            HiggsField(vec![p; lat.num_sites()]),
        )
        .unwrap();
        let d = density(&s);
        assert!(d.values.iter().all(|&x| (x - d.values[0]).abs() <= 1e-12 * d.values[0]));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lat = Lattice::with_size(4, 0.9).unwrap();
        let s = random_state(&lat, 7, 0.6);
        let g = energy_gradient(&s);
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for k in 0..20 {
            let d = random_state(&lat, 100 + k, 1.0);
            let fd = (energy(&s.axpy(eps, &d)).total - energy(&s.axpy(-eps, &d)).total) / (2.0 * eps);
            let an = g.inner(&d);
            worst = worst.max((fd - an).abs() / an.abs().max(1e-300));
        }
        assert!(worst <= 1e-6, "relative error {worst}");
    }

    #[test]
    fn gradient_is_in_the_algebra() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let g = energy_gradient(&random_state(&lat, 1, 0.5));
        assert!(g.algebra_defect() < 1e-12);
    }

    #[test]
    fn constant_gauge_invariance_and_equivariance() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let s = random_state(&lat, 12, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sigma = random_su2_group(&mut rng);
        let g = GaugeTransform::constant(lat.num_sites(), sigma);
        let rotated = apply_gauge(&g, &s).unwrap();
        let (e0, e1) = (energy(&s).total, energy(&rotated).total);
        assert!((e0 - e1).abs() <= 1e-12 * e0);
        let g0 = energy_gradient(&s);
        let g1 = energy_gradient(&rotated);
        let g0_rot = apply_gauge(&g, &g0).unwrap();
        let diff = g1.axpy(-1.0, &g0_rot).norm();
        assert!(diff <= 1e-12 * g0.norm(), "{diff}");
        assert!((g0.norm() - g1.norm()).abs() <= 1e-12 * g0.norm());
    }

    #[test]
    fn local_energy_of_constant_density() {
        let lat = Lattice::with_size(6, 1.0).unwrap();
        let mut s = FieldState::zero(&lat);
        s.higgs.0.iter_mut().for_each(|p| *p = Mat2::from_real(0.0, 1.0, 0.0, 0.0));
        // |[phi, phi^dagger]|² = 2
        let ball = Ball::new([0.0; DIM], 1.0);
        let one = local_energy(&s, &ball, Power::One).unwrap();
        let three_halves = local_energy(&s, &ball, Power::ThreeHalves).unwrap();
        assert!((one - 13.0 * 2.0).abs() < 1e-12);
        assert!((three_halves - 13.0 * 2f64.powf(1.5)).abs() < 1e-12);
    }
}
