//! Discrete flat Kähler 3-torus.
//!
//! Six real axes, `n` sites per axis, isotropic spacing `h`. The complex
//! structure pairs axes as `z^a = x^{2a} + i x^{2a+1}` (0-based). Sites are
//! numbered lexicographically with axis 0 most significant, so the linear
//! index order coincides with lexicographic coordinate order.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of real dimensions.
pub const DIM: usize = 6;

/// Unordered axis pairs `(mu, nu)` with `mu < nu`, in lexicographic order.
pub const PAIRS: [(usize, usize); 15] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (0, 5),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 3),
    (2, 4),
    (2, 5),
    (3, 4),
    (3, 5),
    (4, 5),
];

/// Position of the pair `(mu, nu)`, `mu < nu`, inside [`PAIRS`].
#[inline]
pub const fn pair_index(mu: usize, nu: usize) -> usize {
    // rows: mu = 0 -> 0..5, mu = 1 -> 5..9, mu = 2 -> 9..12, mu = 3 -> 12..14, mu = 4 -> 14
    const ROW: [usize; 5] = [0, 5, 9, 12, 14];
    ROW[mu] + nu - mu - 1
}

/// Volume of the unit ball in six real dimensions, `pi^3 / 6`.
pub const UNIT_BALL_VOLUME: f64 = std::f64::consts::PI
    * std::f64::consts::PI
    * std::f64::consts::PI
    / 6.0;

/// Geometry of the torus: sites per axis and spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    n: usize,
    spacing: f64,
}

impl LatticeSpec {
    pub fn new(n_per_axis: usize, spacing: f64) -> Result<Self> {
        if n_per_axis < 4 {
            return Err(Error::Lattice(format!(
                "need at least 4 sites per axis, got {n_per_axis}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Lattice(format!("spacing must be positive, got {spacing}")));
        }
        if n_per_axis.checked_pow(DIM as u32).is_none_or(|s| s > u32::MAX as usize) {
            return Err(Error::Lattice(format!("{n_per_axis}^6 sites do not fit in u32")));
        }
        Ok(Self { n: n_per_axis, spacing })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.n.pow(DIM as u32)
    }

    /// Physical length of one period.
    #[inline]
    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    #[inline]
    pub fn half_period(&self) -> f64 {
        0.5 * self.period()
    }

    /// `dV = h^6` carried by each site.
    #[inline]
    pub fn volume_element(&self) -> f64 {
        self.spacing.powi(DIM as i32)
    }

    /// Total volume of the torus.
    pub fn volume(&self) -> f64 {
        self.period().powi(DIM as i32)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((DIM - 1 - axis) as u32)
    }

    pub fn coords(&self, site: usize) -> SiteIndex {
        let mut c = [0usize; DIM];
        let mut rem = site;
        for axis in (0..DIM).rev() {
            c[axis] = rem % self.n;
            rem /= self.n;
        }
        SiteIndex(c)
    }

    pub fn index(&self, site: &SiteIndex) -> usize {
        site.0.iter().fold(0, |acc, &c| acc * self.n + (c % self.n))
    }

    /// Physical position of a site.
    pub fn position(&self, site: usize) -> [f64; DIM] {
        let c = self.coords(site).0;
        std::array::from_fn(|a| c[a] as f64 * self.spacing)
    }

    /// Minimal-image displacement `to - from` for continuous positions.
    pub fn displacement(&self, from: &[f64; DIM], to: &[f64; DIM]) -> [f64; DIM] {
        let p = self.period();
        std::array::from_fn(|a| {
            let mut d = (to[a] - from[a]) % p;
            if d > 0.5 * p {
                d -= p;
            } else if d <= -0.5 * p {
                d += p;
            }
            d
        })
    }

    pub fn distance(&self, from: &[f64; DIM], to: &[f64; DIM]) -> f64 {
        self.displacement(from, to).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Wraps a continuous position into `[0, period)` per axis.
    pub fn wrap_position(&self, x: &[f64; DIM]) -> [f64; DIM] {
        let p = self.period();
        std::array::from_fn(|a| x[a].rem_euclid(p))
    }

    /// Nearest site to a continuous position.
    pub fn nearest_site(&self, x: &[f64; DIM]) -> usize {
        let n = self.n as i64;
        let c: [usize; DIM] = std::array::from_fn(|a| {
            ((x[a] / self.spacing).round() as i64).rem_euclid(n) as usize
        });
        self.index(&SiteIndex(c))
    }

    pub fn validate_radius(&self, radius: f64) -> Result<()> {
        let hp = self.half_period();
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if radius > hp * (1.0 + 1e-12) && radius < whole_torus_radius(hp) {
            return Err(Error::RadiusTooLarge { radius, half_period: hp });
        }
        Ok(())
    }
}

/// Radius at or beyond which a ball is clamped to the whole torus: every
/// minimal-image distance is at most `sqrt(6)` half-periods.
fn whole_torus_radius(half_period: f64) -> f64 {
    half_period * (DIM as f64).sqrt()
}

/// Coordinates of a site, each taken modulo `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteIndex(pub [usize; DIM]);

/// Geodesic ball `B_radius(center)` on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: [f64; DIM],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; DIM], radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn at_site(spec: &LatticeSpec, site: usize, radius: f64) -> Self {
        Self { center: spec.position(site), radius }
    }

    /// A radius large enough to be clamped to the whole torus.
    pub fn whole(spec: &LatticeSpec) -> Self {
        Self { center: [0.0; DIM], radius: whole_torus_radius(spec.half_period()) }
    }
}

/// Lattice plus a precomputed neighbour table shared between fields.
#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    // [2*axis] = +1 step, [2*axis + 1] = -1 step
    neighbors: Arc<[[u32; 2 * DIM]]>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Self {
        let n = spec.n();
        let neighbors = (0..spec.num_sites())
            .map(|site| {
                let c = spec.coords(site).0;
                let mut out = [0u32; 2 * DIM];
                for axis in 0..DIM {
                    let stride = spec.stride(axis);
                    let up = if c[axis] + 1 == n { site - (n - 1) * stride } else { site + stride };
                    let down = if c[axis] == 0 { site + (n - 1) * stride } else { site - stride };
                    out[2 * axis] = up as u32;
                    out[2 * axis + 1] = down as u32;
                }
                out
            })
            .collect();
        Self { spec, neighbors }
    }

    pub fn with_size(n_per_axis: usize, spacing: f64) -> Result<Self> {
        Ok(Self::new(LatticeSpec::new(n_per_axis, spacing)?))
    }

    #[inline]
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.spec.num_sites()
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spec.spacing()
    }

    #[inline]
    pub fn up(&self, site: usize, axis: usize) -> usize {
        self.neighbors[site][2 * axis] as usize
    }

    #[inline]
    pub fn down(&self, site: usize, axis: usize) -> usize {
        self.neighbors[site][2 * axis + 1] as usize
    }

    /// Sites within the ball, sorted lexicographically.
    pub fn sites_in_ball(&self, ball: &Ball) -> Result<Vec<usize>> {
        let stencil = BallStencil::new(&self.spec, ball)?;
        let mut sites: Vec<usize> = stencil.sites().collect();
        sites.sort_unstable();
        Ok(sites)
    }

    /// `h^6 * sum` of `density` over the ball.
    pub fn ball_integral(&self, density: &[f64], ball: &Ball) -> Result<f64> {
        assert_eq!(density.len(), self.num_sites(), "density length");
        let stencil = BallStencil::new(&self.spec, ball)?;
        Ok(self.spec.volume_element() * stencil.sites().map(|s| density[s]).sum::<f64>())
    }

    /// `h^6 * sum` over the whole torus.
    pub fn integral(&self, density: &[f64]) -> f64 {
        self.spec.volume_element() * crate::par::sum_slice(density)
    }

    /// Ball integral with partial-cell weights, continuous and non-decreasing
    /// in `radius` and zero at `radius = 0`.
    ///
    /// A site at distance `d` gets weight `clamp((radius - d)/h + 1/2, 0, 1)`,
    /// scaled by `min(1, 2 radius / h)` so small balls vanish continuously.
    pub fn smooth_ball_integral(&self, density: &[f64], center: &[f64; DIM], radius: f64) -> Result<f64> {
        if radius <= 0.0 {
            return Ok(0.0);
        }
        let h = self.spacing();
        let outer = Ball::new(*center, radius + 0.5 * h);
        if outer.radius > self.spec.half_period() * (1.0 + 1e-12) {
            return Err(Error::RadiusTooLarge { radius: outer.radius, half_period: self.spec.half_period() });
        }
        let stencil = BallStencil::new(&self.spec, &outer)?;
        let damp = (2.0 * radius / h).min(1.0);
        let sum: f64 = stencil
            .entries()
            .map(|(site, d2)| {
                let w = ((radius - d2.sqrt()) / h + 0.5).clamp(0.0, 1.0);
                w * density[site]
            })
            .sum();
        Ok(damp * self.spec.volume_element() * sum)
    }

    /// Trapezoid-rule integral over the axis-aligned cube whose lowest corner is
    /// `corner` and which spans `cells` lattice cells along every axis.
    pub fn cube_integral(&self, density: &[f64], corner: usize, cells: usize) -> Result<f64> {
        let n = self.spec.n();
        if cells == 0 || cells >= n {
            return Err(Error::InvalidArgument(format!("cube must span 1..{n} cells, got {cells}")));
        }
        let base = self.spec.coords(corner).0;
        let pts = cells + 1;
        let total = pts.pow(DIM as u32);
        let mut sum = 0.0;
        for k in 0..total {
            let mut rem = k;
            let mut site = 0;
            let mut w = 1.0;
            for axis in 0..DIM {
                let o = rem % pts;
                rem /= pts;
                if o == 0 || o == cells {
                    w *= 0.5;
                }
                site += ((base[axis] + o) % n) * self.spec.stride(axis);
            }
            sum += w * density[site];
        }
        Ok(self.spec.volume_element() * sum)
    }
}

/// Integer offsets, relative to a base site, covering a ball. Enumerated
/// lexicographically in offset space, which makes every ball sum exactly
/// translation covariant.
#[derive(Debug, Clone)]
pub struct BallStencil {
    base: [usize; DIM],
    n: usize,
    strides: [usize; DIM],
    offsets: Vec<([i64; DIM], f64)>,
}

impl BallStencil {
    pub fn new(spec: &LatticeSpec, ball: &Ball) -> Result<Self> {
        spec.validate_radius(ball.radius)?;
        let h = spec.spacing();
        let n = spec.n() as i64;
        let whole = ball.radius >= whole_torus_radius(spec.half_period());
        let r = ball.radius / h;
        let r2 = r * r * (1.0 + 1e-12) + 1e-12;
        let mut base = [0usize; DIM];
        let mut ranges: [Vec<(i64, f64)>; DIM] = Default::default();
        for a in 0..DIM {
            let t = (ball.center[a] / h).rem_euclid(n as f64);
            let mut fl = t.floor();
            let mut frac = t - fl;
            if frac >= 1.0 {
                fl += 1.0;
                frac = 0.0;
            }
            base[a] = (fl as i64).rem_euclid(n) as usize;
            // offsets o with o - frac in (-n/2, n/2]
            let lo = (frac - n as f64 / 2.0).floor() as i64 + 1;
            let hi = (frac + n as f64 / 2.0).floor() as i64;
            for o in lo..=hi {
                let d = o as f64 - frac;
                let d2 = d * d;
                if whole || d2 <= r2 {
                    ranges[a].push((o, d2));
                }
            }
        }
        let mut offsets = Vec::new();
        let mut cur = [0i64; DIM];
        Self::enumerate(&ranges, 0, 0.0, r2, whole, &mut cur, &mut offsets);
        let strides = std::array::from_fn(|a| spec.stride(a));
        Ok(Self { base, n: spec.n(), strides, offsets: offsets.into_iter().map(|(o, d2)| (o, d2 * h * h)).collect() })
    }

    fn enumerate(
        ranges: &[Vec<(i64, f64)>; DIM],
        axis: usize,
        acc: f64,
        r2: f64,
        whole: bool,
        cur: &mut [i64; DIM],
        out: &mut Vec<([i64; DIM], f64)>,
    ) {
        for &(o, d2) in &ranges[axis] {
            let s = acc + d2;
            if !whole && s > r2 {
                continue;
            }
            cur[axis] = o;
            if axis + 1 == DIM {
                out.push((*cur, s));
            } else {
                Self::enumerate(ranges, axis + 1, s, r2, whole, cur, out);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> impl Iterator<Item = &([i64; DIM], f64)> {
        self.offsets.iter()
    }

    #[inline]
    fn site_of(&self, o: &[i64; DIM]) -> usize {
        let n = self.n as i64;
        (0..DIM).map(|a| ((self.base[a] as i64 + o[a]).rem_euclid(n) as usize) * self.strides[a]).sum()
    }

    /// Sites in stencil order.
    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.iter().map(move |(o, _)| self.site_of(o))
    }

    /// `(site, squared physical distance)` in stencil order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.offsets.iter().map(move |(o, d2)| (self.site_of(o), *d2))
    }
}

/// Fast evaluation of ball sums centred at every site for one radius.
///
/// Offsets are stored sorted by distance (ties in offset order) so that
/// prefix sums give nested smaller balls exactly.
#[derive(Debug, Clone)]
pub struct SiteBallScanner {
    n: usize,
    strides: [usize; DIM],
    offsets: Vec<[i64; DIM]>,
    dist2: Vec<f64>,
}

impl SiteBallScanner {
    pub fn new(spec: &LatticeSpec, radius: f64) -> Result<Self> {
        let stencil = BallStencil::new(spec, &Ball::new([0.0; DIM], radius))?;
        let mut entries: Vec<([i64; DIM], f64)> = stencil.offsets().cloned().collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(Self {
            n: spec.n(),
            strides: std::array::from_fn(|a| spec.stride(a)),
            offsets: entries.iter().map(|e| e.0).collect(),
            dist2: entries.iter().map(|e| e.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Number of leading offsets with squared distance at most `radius^2`.
    pub fn count_within(&self, radius: f64) -> usize {
        let r2 = radius * radius * (1.0 + 1e-12);
        self.dist2.partition_point(|&d2| d2 <= r2)
    }

    /// Ball sums (without the `h^6` factor) at every site, evaluated at each
    /// of the prefix lengths `cuts` (ascending). Result is `[site][cut]`.
    pub fn prefix_sums(&self, values: &[f64], cuts: &[usize]) -> Vec<Vec<f64>> {
        let n = self.n;
        let num = values.len();
        crate::par::map_indexed(num, |site| {
            let mut c = [0usize; DIM];
            let mut rem = site;
            for axis in (0..DIM).rev() {
                c[axis] = rem % n;
                rem /= n;
            }
            let mut out = Vec::with_capacity(cuts.len());
            let mut acc = 0.0;
            let mut k = 0;
            for &cut in cuts {
                while k < cut {
                    let o = &self.offsets[k];
                    let mut idx = 0;
                    for a in 0..DIM {
                        let v = c[a] as i64 + o[a];
                        let w = if v < 0 { v + n as i64 } else if v >= n as i64 { v - n as i64 } else { v };
                        idx += w as usize * self.strides[a];
                    }
                    acc += values[idx];
                    k += 1;
                }
                out.push(acc);
            }
            out
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(spec: &LatticeSpec, ball: &Ball) -> Vec<usize> {
        (0..spec.num_sites())
            .filter(|&s| spec.distance(&ball.center, &spec.position(s)) <= ball.radius * (1.0 + 1e-12))
            .collect()
    }

    #[test]
    fn pair_index_matches_table() {
        for (k, &(mu, nu)) in PAIRS.iter().enumerate() {
            assert_eq!(pair_index(mu, nu), k);
        }
    }

    #[test]
    fn neighbours_wrap() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let spec = *lat.spec();
        for site in [0usize, 17, 4095, 2222] {
            let c = spec.coords(site).0;
            for axis in 0..DIM {
                let mut up = c;
                up[axis] = (c[axis] + 1) % 4;
                let mut dn = c;
                dn[axis] = (c[axis] + 3) % 4;
                assert_eq!(lat.up(site, axis), spec.index(&SiteIndex(up)));
                assert_eq!(lat.down(site, axis), spec.index(&SiteIndex(dn)));
            }
        }
    }

    #[test]
    fn small_balls() {
        let lat = Lattice::with_size(8, 1.0).unwrap();
        assert_eq!(lat.sites_in_ball(&Ball::new([0.0; DIM], 0.5)).unwrap(), vec![0]);
        assert_eq!(lat.sites_in_ball(&Ball::new([0.0; DIM], 1.0)).unwrap().len(), 13);
    }

    #[test]
    fn ball_matches_brute_force() {
        let lat = Lattice::with_size(8, 1.0).unwrap();
        let spec = *lat.spec();
        for ball in [
            Ball::new([0.0; DIM], 1.5),
            Ball::new([0.3, 7.9, 2.5, 4.0, 1.1, 0.0], 2.2),
            Ball::new([0.0; DIM], 4.0),
        ] {
            assert_eq!(lat.sites_in_ball(&ball).unwrap(), brute_force(&spec, &ball));
        }
    }

    #[test]
    fn radius_beyond_half_period_is_rejected() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        assert!(matches!(
            lat.sites_in_ball(&Ball::new([0.0; DIM], 2.5)),
            Err(Error::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn clamped_ball_is_whole_torus() {
        let lat = Lattice::with_size(4, 0.5).unwrap();
        let density: Vec<f64> = (0..lat.num_sites()).map(|s| (s % 7) as f64).collect();
        let whole = lat.ball_integral(&density, &Ball::whole(lat.spec())).unwrap();
        let global = lat.integral(&density);
        assert!((whole - global).abs() <= 1e-12 * global);
        assert_eq!(lat.sites_in_ball(&Ball::whole(lat.spec())).unwrap().len(), 4096);
    }

    #[test]
    fn ball_integral_examples() {
        let lat = Lattice::with_size(8, 1.0).unwrap();
        let ones = vec![1.0; lat.num_sites()];
        assert_eq!(lat.ball_integral(&ones, &Ball::new([0.0; DIM], 0.5)).unwrap(), 1.0);
        let zeros = vec![0.0; lat.num_sites()];
        assert_eq!(lat.ball_integral(&zeros, &Ball::new([0.0; DIM], 3.0)).unwrap(), 0.0);
    }

    #[test]
    fn smooth_ball_is_continuous_and_monotone() {
        let lat = Lattice::with_size(6, 1.0).unwrap();
        let density: Vec<f64> = (0..lat.num_sites()).map(|s| 1.0 + (s % 5) as f64).collect();
        let c = [0.0; DIM];
        assert_eq!(lat.smooth_ball_integral(&density, &c, 0.0).unwrap(), 0.0);
        let spec = *lat.spec();
        let dist: Vec<f64> = (0..lat.num_sites()).map(|s| spec.distance(&spec.position(s), &c)).collect();
        let delta = 0.01;
        let mut prev = 0.0;
        for k in 1..=250 {
            let r = k as f64 * delta;
            let m = lat.smooth_ball_integral(&density, &c, r).unwrap();
            assert!(m >= prev);
            // Lipschitz in the radius: only sites in the transition band move
            let band: f64 = (0..lat.num_sites())
                .filter(|&s| (dist[s] - r).abs() <= 0.5 + delta + 1e-9)
                .map(|s| density[s])
                .sum();
            let bound = if r > 0.5 + delta { delta * band } else { 3.0 * delta * band };
            assert!(m - prev <= bound * (1.0 + 1e-9), "jump at {r}: {} > {bound}", m - prev);
            prev = m;
        }
    }

    #[test]
    fn scanner_prefixes_match_ball_integrals() {
        let lat = Lattice::with_size(6, 0.7).unwrap();
        let spec = *lat.spec();
        let density: Vec<f64> = (0..lat.num_sites()).map(|s| ((s * 31) % 11) as f64).collect();
        let scanner = SiteBallScanner::new(&spec, 2.0 * 0.7).unwrap();
        let cuts = [scanner.count_within(0.7), scanner.len()];
        let sums = scanner.prefix_sums(&density, &cuts);
        for site in [0, 999, 46655] {
            for (k, r) in [0.7, 1.4].iter().enumerate() {
                let direct = lat.ball_integral(&density, &Ball::at_site(&spec, site, *r)).unwrap();
                let fast = sums[site][k] * spec.volume_element();
                assert!((direct - fast).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn cube_integral_of_constant_is_volume() {
        let lat = Lattice::with_size(5, 0.5).unwrap();
        let ones = vec![2.0; lat.num_sites()];
        let v = lat.cube_integral(&ones, 0, 2).unwrap();
        assert!((v - 2.0 * 1.0f64.powi(6)).abs() < 1e-12);
    }
}
