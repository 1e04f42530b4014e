//! Field containers and the gauge-group action.

use crate::algebra::Mat2;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, DIM};
use crate::par;

/// su(2)-valued 1-form: six real-coordinate components per site.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField(pub Vec<[Mat2; DIM]>);

/// Trace-free coefficient `phi` of `u = phi dz̄^1 ∧ dz̄^2 ∧ dz̄^3`, one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsField(pub Vec<Mat2>);

impl ConnectionField {
    pub fn zeros(num_sites: usize) -> Self {
        Self(vec![[Mat2::ZERO; DIM]; num_sites])
    }
}

impl HiggsField {
    pub fn zeros(num_sites: usize) -> Self {
        Self(vec![Mat2::ZERO; num_sites])
    }
}

/// A connection and a Higgs field on a common lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub lattice: Lattice,
    pub connection: ConnectionField,
    pub higgs: HiggsField,
}

impl FieldState {
    pub fn zero(lattice: &Lattice) -> Self {
        let n = lattice.num_sites();
        Self { lattice: lattice.clone(), connection: ConnectionField::zeros(n), higgs: HiggsField::zeros(n) }
    }

    pub fn new(lattice: &Lattice, connection: ConnectionField, higgs: HiggsField) -> Result<Self> {
        let n = lattice.num_sites();
        if connection.0.len() != n || higgs.0.len() != n {
            return Err(Error::InvalidArgument(format!(
                "field lengths ({}, {}) do not match {} sites",
                connection.0.len(),
                higgs.0.len(),
                n
            )));
        }
        Ok(Self { lattice: lattice.clone(), connection, higgs })
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    /// Largest deviation of any component from its algebra (su(2) for the
    /// connection, trace-free for the Higgs field).
    pub fn algebra_defect(&self) -> f64 {
        let a = self
            .connection
            .0
            .iter()
            .flat_map(|s| s.iter())
            .map(|m| (*m - m.su2_part()).norm())
            .fold(0.0, f64::max);
        let p = self.higgs.0.iter().map(|m| m.trace().norm()).fold(0.0, f64::max);
        a.max(p)
    }

    /// `self + t * dir`, component-wise.
    pub fn axpy(&self, t: f64, dir: &FieldState) -> FieldState {
        let mut out = self.clone();
        out.add_scaled(t, dir);
        out
    }

    pub fn add_scaled(&mut self, t: f64, dir: &FieldState) {
        let da = &dir.connection.0;
        par::for_each_mut(&mut self.connection.0, |i, comps| {
            for mu in 0..DIM {
                comps[mu] += da[i][mu].scale(t);
            }
        });
        let dp = &dir.higgs.0;
        par::for_each_mut(&mut self.higgs.0, |i, p| *p += dp[i].scale(t));
    }

    /// `h^6 sum Re Tr(X Y^dagger)` over all components.
    pub fn inner(&self, other: &FieldState) -> f64 {
        let a = &self.connection.0;
        let b = &other.connection.0;
        let p = &self.higgs.0;
        let q = &other.higgs.0;
        let s = par::sum_indexed(self.num_sites(), |i| {
            let mut acc = p[i].inner(&q[i]);
            for mu in 0..DIM {
                acc += a[i][mu].inner(&b[i][mu]);
            }
            acc
        });
        self.lattice.spec().volume_element() * s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> FieldState {
        let mut out = self.clone();
        par::for_each_mut(&mut out.connection.0, |_, comps| comps.iter_mut().for_each(|m| *m *= s));
        par::for_each_mut(&mut out.higgs.0, |_, p| *p *= s);
        out
    }
}

/// Site-wise SU(2) gauge transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform(pub Vec<Mat2>);

impl GaugeTransform {
    pub fn identity(num_sites: usize) -> Self {
        Self(vec![Mat2::IDENTITY; num_sites])
    }

    pub fn constant(num_sites: usize, sigma: Mat2) -> Self {
        Self(vec![sigma; num_sites])
    }

    /// Rejects any site where `sigma^dagger sigma = I, det sigma = 1` fails
    /// beyond `1e-12`.
    pub fn validate(&self) -> Result<()> {
        for (site, s) in self.0.iter().enumerate() {
            let deviation = s.unitarity_defect();
            if !(deviation <= 1e-12) {
                return Err(Error::NotUnitary { site, deviation });
            }
        }
        Ok(())
    }

    /// Site-wise product `self * rhs`, re-projected onto SU(2).
    pub fn compose(&self, rhs: &GaugeTransform) -> GaugeTransform {
        GaugeTransform(par::map_indexed(self.0.len(), |i| (self.0[i] * rhs.0[i]).reunitarize()))
    }
}

/// `A -> sigma A sigma^-1 - (d sigma) sigma^-1`, `phi -> sigma phi sigma^-1`.
///
/// `d sigma` is the central difference; `(d sigma) sigma^-1` is projected onto
/// su(2). For constant `sigma` the action is an exact conjugation.
pub fn apply_gauge(sigma: &GaugeTransform, state: &FieldState) -> Result<FieldState> {
    let lat = &state.lattice;
    if sigma.0.len() != lat.num_sites() {
        return Err(Error::LatticeMismatch);
    }
    sigma.validate()?;
    let inv2h = 0.5 / lat.spacing();
    let s = &sigma.0;
    let a = &state.connection.0;
    let connection = par::map_indexed(lat.num_sites(), |x| {
        let sx = s[x];
        let sd = sx.adjoint();
        std::array::from_fn(|mu| {
            let ds = (s[lat.up(x, mu)] - s[lat.down(x, mu)]).scale(inv2h);
            let pure = (ds * sd).su2_part();
            sx * a[x][mu] * sd - pure
        })
    });
    let higgs = par::map_indexed(lat.num_sites(), |x| s[x] * state.higgs.0[x] * s[x].adjoint());
    Ok(FieldState { lattice: lat.clone(), connection: ConnectionField(connection), higgs: HiggsField(higgs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_sl2, random_su2, random_su2_group};
    use rand::SeedableRng;

    fn random_state(lat: &Lattice, seed: u64) -> FieldState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = lat.num_sites();
        let a = (0..n).map(|_| std::array::from_fn(|_| random_su2(&mut rng).scale(0.3))).collect();
        let p = (0..n).map(|_| random_sl2(&mut rng).scale(0.3)).collect();
        FieldState::new(lat, ConnectionField(a), HiggsField(p)).unwrap()
    }

    #[test]
    fn identity_gauge_is_exact() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let s = random_state(&lat, 1);
        let out = apply_gauge(&GaugeTransform::identity(lat.num_sites()), &s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn constant_gauge_rotates_constant_fields() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let sigma = random_su2_group(&mut rng);
        let phi = random_sl2(&mut rng);
        let mut s = FieldState::zero(&lat);
        s.higgs.0.iter_mut().for_each(|p| *p = phi);
        let out = apply_gauge(&GaugeTransform::constant(lat.num_sites(), sigma), &s).unwrap();
        let expect = sigma * phi * sigma.adjoint();
        assert!(out.connection.0.iter().all(|c| c.iter().all(|m| *m == Mat2::ZERO)));
        assert!(out.higgs.0.iter().all(|p| (*p - expect).norm() < 1e-15));
    }

    #[test]
    fn non_unitary_is_rejected() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let mut g = GaugeTransform::identity(lat.num_sites());
        g.0[7] = Mat2::IDENTITY.scale(1.01);
        assert!(matches!(
            apply_gauge(&g, &FieldState::zero(&lat)),
            Err(Error::NotUnitary { site: 7, .. })
        ));
    }

    #[test]
    fn gauge_output_stays_in_algebra() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let g = GaugeTransform((0..lat.num_sites()).map(|_| random_su2_group(&mut rng)).collect());
        let out = apply_gauge(&g, &random_state(&lat, 2)).unwrap();
        assert!(out.algebra_defect() < 1e-12);
    }
}
