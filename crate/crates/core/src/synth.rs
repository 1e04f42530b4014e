//! Seeded initial data and synthetic ground-truth configurations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Mat2;
use crate::energy::DensityField;
use crate::field::{ConnectionField, FieldState, HiggsField};
use crate::lattice::{Lattice, DIM};
use crate::par;

/// Wavevectors `m` in `{-1, 0, 1}^6` with first nonzero entry positive.
fn half_band() -> Vec<[i64; DIM]> {
    let mut out = Vec::new();
    for k in 0..3usize.pow(DIM as u32) {
        let mut rem = k;
        let m: [i64; DIM] = std::array::from_fn(|_| {
            let d = (rem % 3) as i64 - 1;
            rem /= 3;
            d
        });
        if m.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(m);
        }
    }
    out
}

/// Random band-limited field with no mean mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimited {
    /// Pointwise RMS of each real scalar component.
    pub amplitude: f64,
    pub seed: u64,
    pub connection: bool,
    pub higgs: bool,
    /// Remove the longitudinal part of `A`, so `d^*A = 0` exactly.
    pub transverse: bool,
}

impl BandLimited {
    pub fn new(amplitude: f64, seed: u64) -> Self {
        Self { amplitude, seed, connection: true, higgs: true, transverse: true }
    }
}

/// Sum of `a cos(2 pi m.x / L) + b sin(2 pi m.x / L)` over the band.
///
/// Coefficients depend only on the seed, so the same physical field is
/// sampled on every resolution of a torus of fixed size.
pub fn band_limited_state(lat: &Lattice, cfg: &BandLimited) -> FieldState {
    let modes = half_band();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // per mode: [axis][su2][cos/sin] for A, then [pauli][re/im][cos/sin] for phi
    let mut a_coef = vec![[[[0.0f64; 2]; 3]; DIM]; modes.len()];
    let mut p_coef = vec![[[[0.0f64; 2]; 2]; 3]; modes.len()];
    for k in 0..modes.len() {
        for axis in a_coef[k].iter_mut() {
            for c in axis.iter_mut() {
                *c = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            }
        }
        for pauli in p_coef[k].iter_mut() {
            for c in pauli.iter_mut() {
                *c = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            }
        }
    }
    if cfg.transverse {
        for (k, m) in modes.iter().enumerate() {
            let m2: f64 = m.iter().map(|&c| (c * c) as f64).sum();
            for su in 0..3 {
                for cs in 0..2 {
                    let dot: f64 = (0..DIM).map(|mu| a_coef[k][mu][su][cs] * m[mu] as f64).sum();
                    for mu in 0..DIM {
                        a_coef[k][mu][su][cs] -= dot / m2 * m[mu] as f64;
                    }
                }
            }
        }
    }
    let norm = cfg.amplitude / (modes.len() as f64 / 3.0).sqrt();
    let spec = *lat.spec();
    let n = spec.n() as i64;
    let table: Vec<(f64, f64)> =
        (0..n).map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).collect();
    let pauli: [Mat2; 3] = std::array::from_fn(|k| Mat2::su2_basis(k).scale_c(Complex64::new(0.0, -1.0)));

    let fields: Vec<([Mat2; DIM], Mat2)> = par::map_indexed(lat.num_sites(), |x| {
        let c = spec.coords(x).0;
        let mut a = [[0.0f64; 3]; DIM];
        let mut p = [[0.0f64; 2]; 3];
        for (k, m) in modes.iter().enumerate() {
            let phase = (0..DIM).map(|i| m[i] * c[i] as i64).sum::<i64>().rem_euclid(n);
            let (cs, sn) = table[phase as usize];
            if cfg.connection {
                for mu in 0..DIM {
                    for su in 0..3 {
                        let q = a_coef[k][mu][su];
                        a[mu][su] += q[0] * cs + q[1] * sn;
                    }
                }
            }
            if cfg.higgs {
                for pk in 0..3 {
                    for ri in 0..2 {
                        let q = p_coef[k][pk][ri];
                        p[pk][ri] += q[0] * cs + q[1] * sn;
                    }
                }
            }
        }
        let conn = std::array::from_fn(|mu| Mat2::from_su2_coords(a[mu]).scale(norm));
        let mut phi = Mat2::ZERO;
        for pk in 0..3 {
            phi += pauli[pk].scale_c(Complex64::new(p[pk][0], p[pk][1]));
        }
        (conn, phi.scale(norm))
    });
    let (conn, higgs): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
    FieldState { lattice: lat.clone(), connection: ConnectionField(conn), higgs: HiggsField(higgs) }
}

/// Gaussian profile `exp(-|x - center|^2 / 2 width^2)` on the torus.
pub fn gaussian_profile(lat: &Lattice, center: &[f64; DIM], width: f64) -> Vec<f64> {
    let spec = *lat.spec();
    par::map_indexed(lat.num_sites(), |x| {
        let d = spec.distance(&spec.position(x), center);
        (-0.5 * d * d / (width * width)).exp()
    })
}

/// Concentrated bump of prescribed `∫ 𝓛^{3/2} dV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBump {
    pub center: [f64; DIM],
    pub width: f64,
    pub mass: f64,
}

/// Superposition of bumps in `𝓛^{3/2}` on top of a constant background.
///
/// Each bump is normalised on the lattice, so its discrete `𝓛^{3/2}`-mass is
/// exactly `mass` whatever its width.
pub fn bump_density32(lat: &Lattice, bumps: &[DensityBump], background: &[f64]) -> Vec<f64> {
    let dv = lat.spec().volume_element();
    let mut q = if background.is_empty() { vec![0.0; lat.num_sites()] } else { background.to_vec() };
    for b in bumps {
        let g = gaussian_profile(lat, &b.center, b.width);
        let z = dv * par::sum_slice(&g);
        let s = b.mass / z;
        q.iter_mut().zip(&g).for_each(|(qi, gi)| *qi += s * gi);
    }
    q
}

/// Density whose `3/2` power is [`bump_density32`].
pub fn bump_density(lat: &Lattice, bumps: &[DensityBump], background: &[f64]) -> DensityField {
    DensityField { values: bump_density32(lat, bumps, background).iter().map(|q| q.powf(2.0 / 3.0)).collect() }
}

/// Smooth `𝓛^{3/2}` background `level (1 + cos(2 pi x_0 / L) / 2)`.
pub fn smooth_background32(lat: &Lattice, level: f64) -> Vec<f64> {
    let spec = *lat.spec();
    let l = spec.period();
    par::map_indexed(lat.num_sites(), |x| {
        level * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * spec.position(x)[0] / l).cos())
    })
}

/// Bumps with fixed masses and centres whose widths shrink by the given
/// factors, over a fixed background.
pub fn shrinking_sequence(
    lat: &Lattice,
    bumps: &[DensityBump],
    width_factors: &[f64],
    background: &[f64],
) -> Vec<DensityField> {
    width_factors
        .iter()
        .map(|&f| {
            let scaled: Vec<DensityBump> = bumps.iter().map(|b| DensityBump { width: b.width * f, ..*b }).collect();
            bump_density(lat, &scaled, background)
        })
        .collect()
}

/// Smooth field bump `A_mu = amp g T_mu`, `phi = amp g P` with Gaussian `g`.
pub fn field_bump(lat: &Lattice, center: &[f64; DIM], width: f64, amplitude: f64, seed: u64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: [Mat2; DIM] = std::array::from_fn(|_| crate::algebra::random_su2(&mut rng));
    let p = crate::algebra::random_sl2(&mut rng);
    let g = gaussian_profile(lat, center, width);
    FieldState {
        lattice: lat.clone(),
        connection: ConnectionField(g.iter().map(|&gi| t.map(|m| m.scale(amplitude * gi))).collect()),
        higgs: HiggsField(g.iter().map(|&gi| p.scale(amplitude * gi)).collect()),
    }
}

/// Affine field `A_mu = C_mu + sum_j y_j D_{mu j}`, `phi = P + sum_j y_j Q_j`
/// in minimal-image coordinates `y` about `origin`. Exact for central
/// differences and multilinear interpolation away from the seam.
pub fn affine_state(lat: &Lattice, origin: &[f64; DIM], constant: f64, slope: f64, seed: u64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [Mat2; DIM] = std::array::from_fn(|_| crate::algebra::random_su2(&mut rng).scale(constant));
    let d: [[Mat2; DIM]; DIM] =
        std::array::from_fn(|_| std::array::from_fn(|_| crate::algebra::random_su2(&mut rng).scale(slope)));
    let p = crate::algebra::random_sl2(&mut rng).scale(constant);
    let q: [Mat2; DIM] = std::array::from_fn(|_| crate::algebra::random_sl2(&mut rng).scale(slope));
    let spec = *lat.spec();
    let fields: Vec<([Mat2; DIM], Mat2)> = par::map_indexed(lat.num_sites(), |x| {
        let y = spec.displacement(origin, &spec.position(x));
        let a = std::array::from_fn(|mu| (0..DIM).fold(c[mu], |acc, j| acc + d[mu][j].scale(y[j])));
        let phi = (0..DIM).fold(p, |acc, j| acc + q[j].scale(y[j]));
        (a, phi)
    });
    let (conn, higgs): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
    FieldState { lattice: lat.clone(), connection: ConnectionField(conn), higgs: HiggsField(higgs) }
}
