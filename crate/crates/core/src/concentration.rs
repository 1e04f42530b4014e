//! Concentration sets, atom extraction and blow-up rescaling.
//!
//! All detection runs on `𝓛^{3/2}`, whose integral is scale invariant in six
//! real dimensions.

use std::fmt::Write as _;

use crate::energy::{density, DensityField};
use crate::error::{Error, Result};
use crate::field::{ConnectionField, FieldState, HiggsField};
use crate::lattice::{Ball, Lattice, LatticeSpec, SiteBallScanner, DIM};
use crate::algebra::Mat2;
use crate::par;

/// One element of a sequence: a field state or a bare density.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceEntry {
    State(FieldState),
    Density(Lattice, DensityField),
}

impl SequenceEntry {
    pub fn lattice(&self) -> &Lattice {
        match self {
            SequenceEntry::State(s) => &s.lattice,
            SequenceEntry::Density(l, _) => l,
        }
    }

    pub fn density(&self) -> DensityField {
        match self {
            SequenceEntry::State(s) => density(s),
            SequenceEntry::Density(_, d) => d.clone(),
        }
    }
}

/// Entries on a common lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    lattice: Lattice,
    entries: Vec<SequenceEntry>,
}

impl StateSequence {
    pub fn new(entries: Vec<SequenceEntry>) -> Result<Self> {
        let first = entries.first().ok_or_else(|| Error::InvalidArgument("empty sequence".into()))?;
        let lattice = first.lattice().clone();
        if entries.iter().any(|e| e.lattice() != &lattice) {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self { lattice, entries })
    }

    pub fn from_densities(lattice: &Lattice, densities: Vec<DensityField>) -> Result<Self> {
        if densities.iter().any(|d| d.values.len() != lattice.num_sites()) {
            return Err(Error::LatticeMismatch);
        }
        Self::new(densities.into_iter().map(|d| SequenceEntry::Density(lattice.clone(), d)).collect())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SequenceEntry] {
        &self.entries
    }
}

/// `r0, r0/2, ..., r0/2^(k-1)`.
pub fn radius_ladder(r0: f64, k: usize) -> Vec<f64> {
    (0..k).map(|j| r0 * 0.5f64.powi(j as i32)).collect()
}

/// Ball masses of `values` centred at every site for each ladder radius;
/// `[site][rung]` in the ladder's given order, with `h^6` applied.
fn ladder_masses(lat: &Lattice, values: &[f64], ladder: &[f64]) -> Result<Vec<Vec<f64>>> {
    let rmax = ladder.iter().copied().fold(0.0, f64::max);
    let scanner = SiteBallScanner::new(lat.spec(), rmax)?;
    let mut order: Vec<usize> = (0..ladder.len()).collect();
    order.sort_by(|&a, &b| ladder[a].total_cmp(&ladder[b]));
    let cuts: Vec<usize> = order.iter().map(|&i| scanner.count_within(ladder[i])).collect();
    let dv = lat.spec().volume_element();
    let sums = scanner.prefix_sums(values, &cuts);
    Ok(sums
        .into_iter()
        .map(|row| {
            let mut out = vec![0.0; ladder.len()];
            for (k, &i) in order.iter().enumerate() {
                out[i] = dv * row[k];
            }
            out
        })
        .collect())
}

fn check_ladder(lat: &Lattice, ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::InvalidArgument("empty radius ladder".into()));
    }
    let hp = lat.spec().half_period();
    for &r in ladder {
        if !(r > 0.0 && r <= hp * (1.0 + 1e-12)) {
            return Err(Error::RadiusTooLarge { radius: r, half_period: hp });
        }
    }
    Ok(())
}

/// `T_{i,r}`: sites whose `B_r` carries `𝓛^{3/2}`-mass at least `epsilon`,
/// for every entry and rung. Result is `[entry][rung]`, sites ascending.
pub fn concentration_sets(seq: &StateSequence, epsilon: f64, ladder: &[f64]) -> Result<Vec<Vec<Vec<usize>>>> {
    let lat = seq.lattice();
    check_ladder(lat, ladder)?;
    let mut out = Vec::with_capacity(seq.len());
    for e in seq.entries() {
        let masses = ladder_masses(lat, &e.density().pow32(), ladder)?;
        out.push(threshold_sets(&masses, epsilon, ladder));
    }
    Ok(out)
}

fn threshold_sets(masses: &[Vec<f64>], epsilon: f64, ladder: &[f64]) -> Vec<Vec<usize>> {
    let sets: Vec<Vec<usize>> =
        (0..ladder.len()).map(|k| (0..masses.len()).filter(|&s| masses[s][k] >= epsilon).collect()).collect();
    for a in 0..ladder.len() {
        for b in 0..ladder.len() {
            if ladder[a] <= ladder[b] {
                assert!(is_subset(&sets[a], &sets[b]), "threshold sets are not nested");
            }
        }
    }
    sets
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut j = 0;
    for &s in small {
        while j < big.len() && big[j] < s {
            j += 1;
        }
        if j == big.len() || big[j] != s {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    /// Torus centroid of the surviving cluster.
    pub position: [f64; DIM],
    pub theta: f64,
    /// Site of maximal `r_min`-ball mass in the last entry.
    pub peak_site: usize,
    pub cluster_size: usize,
    /// Largest distance between per-entry peaks over the tail.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedCluster {
    pub sites: Vec<usize>,
    pub drift: f64,
    pub diameter: f64,
    /// Local mass estimate; below `epsilon` for rejected low-mass clusters.
    pub theta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub epsilon: f64,
    pub ladder: Vec<f64>,
    /// `|T_{i,r}|` as `[entry][rung]`.
    pub set_sizes: Vec<Vec<usize>>,
    pub atoms: Vec<Atom>,
    pub unstable: Vec<RejectedCluster>,
    /// Total `𝓛^{3/2}`-mass per entry.
    pub masses: Vec<f64>,
    /// `∫ 𝓛^{3/2}` of the supplied limit, zero otherwise.
    pub limit_mass: f64,
}

impl ConcentrationReport {
    /// Minimum entry mass over the tail.
    pub fn liminf_mass(&self) -> f64 {
        let start = self.masses.len() / 2;
        self.masses[start..].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `#atoms <= floor(mass / epsilon)`.
    pub fn count_bound_holds(&self) -> bool {
        self.atoms.len() as f64 <= (self.liminf_mass() / self.epsilon).floor()
    }

    pub fn all_atoms_above_epsilon(&self) -> bool {
        self.atoms.iter().all(|a| a.theta >= self.epsilon)
    }

    /// `key: value` blocks, one per atom and unstable cluster.
    pub fn to_text(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "epsilon: {:.17e}", self.epsilon);
        let ladder: Vec<String> = self.ladder.iter().map(|r| format!("{r:.17e}")).collect();
        let _ = writeln!(out, "ladder: {}", ladder.join(" "));
        let _ = writeln!(out, "entries: {}", self.masses.len());
        let _ = writeln!(out, "liminf_mass: {:.17e}", self.liminf_mass());
        let _ = writeln!(out, "limit_mass: {:.17e}", self.limit_mass);
        let _ = writeln!(out, "atoms: {}", self.atoms.len());
        let _ = writeln!(out, "unstable: {}", self.unstable.len());
        for (k, a) in self.atoms.iter().enumerate() {
            let pos: Vec<String> = a.position.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "\n[atom {k}]");
            let _ = writeln!(out, "position: {}", pos.join(" "));
            let _ = writeln!(out, "theta: {:.17e}", a.theta);
            let _ = writeln!(out, "peak_site: {}", a.peak_site);
            let _ = writeln!(out, "cluster_size: {}", a.cluster_size);
            let _ = writeln!(out, "drift: {:.17e}", a.drift);
        }
        for (k, u) in self.unstable.iter().enumerate() {
            let _ = writeln!(out, "\n[unstable {k}]");
            let _ = writeln!(out, "reason: {}", u.reason);
            let _ = writeln!(out, "sites: {}", u.sites.len());
            let _ = writeln!(out, "theta: {:.17e}", u.theta);
            let _ = writeln!(out, "drift: {:.17e}", u.drift);
            let _ = writeln!(out, "diameter: {:.17e}", u.diameter);
        }
        out
    }

    /// `entry,r,count` rows.
    pub fn sizes_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("entry,r,count\n");
        for (i, row) in self.set_sizes.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                let _ = writeln!(out, "{i},{:.17e},{c}", self.ladder[k]);
            }
        }
        out
    }
}

/// Single-linkage clusters over `sites` (ascending) with link distance `link`.
fn single_linkage(spec: &LatticeSpec, sites: &[usize], link: f64) -> Vec<Vec<usize>> {
    let pos: Vec<[f64; DIM]> = sites.iter().map(|&s| spec.position(s)).collect();
    let mut label = vec![usize::MAX; sites.len()];
    let mut clusters = Vec::new();
    for start in 0..sites.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[start] = id;
        let mut members = vec![start];
        let mut k = 0;
        while k < members.len() {
            let cur = members[k];
            for j in 0..sites.len() {
                if label[j] == usize::MAX && spec.distance(&pos[cur], &pos[j]) <= link * (1.0 + 1e-12) {
                    label[j] = id;
                    members.push(j);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        clusters.push(members.into_iter().map(|i| sites[i]).collect());
    }
    clusters
}

fn diameter(spec: &LatticeSpec, sites: &[usize]) -> f64 {
    let mut d = 0.0f64;
    for (i, &a) in sites.iter().enumerate() {
        for &b in &sites[i + 1..] {
            d = d.max(spec.distance(&spec.position(a), &spec.position(b)));
        }
    }
    d
}

fn torus_centroid(spec: &LatticeSpec, sites: &[usize]) -> [f64; DIM] {
    let origin = spec.position(sites[0]);
    let mut acc = [0.0; DIM];
    for &s in sites {
        let d = spec.displacement(&origin, &spec.position(s));
        for a in 0..DIM {
            acc[a] += d[a];
        }
    }
    let k = sites.len() as f64;
    spec.wrap_position(&std::array::from_fn(|a| origin[a] + acc[a] / k))
}

/// Extracts atoms `theta_alpha delta_{y_alpha}` from the tail of a sequence.
///
/// Survivors are `T_{i, r_min}` intersected over the last half of the
/// sequence; they are grouped by single linkage at `2 r_min`. A cluster is
/// accepted when its diameter and the drift of its per-entry peaks stay
/// within `2 r_min` and its mass estimate reaches `epsilon`.
pub fn extract_atoms(
    seq: &StateSequence,
    limit: Option<&DensityField>,
    epsilon: f64,
    ladder: &[f64],
) -> Result<ConcentrationReport> {
    if seq.len() < 2 {
        return Err(Error::InvalidArgument("sequence needs at least two entries".into()));
    }
    let lat = seq.lattice();
    check_ladder(lat, ladder)?;
    if let Some(l) = limit {
        if l.values.len() != lat.num_sites() {
            return Err(Error::LatticeMismatch);
        }
    }
    let spec = *lat.spec();
    let rmin_idx = (0..ladder.len()).min_by(|&a, &b| ladder[a].total_cmp(&ladder[b])).expect("non-empty");
    let r_min = ladder[rmin_idx];
    let cap = 2.0 * r_min;

    let mut set_sizes = Vec::new();
    let mut masses = Vec::new();
    let mut tail_rmin_masses: Vec<Vec<f64>> = Vec::new();
    let mut survivors: Option<Vec<usize>> = None;
    let start = seq.len() / 2;
    for (i, e) in seq.entries().iter().enumerate() {
        let q = e.density().pow32();
        masses.push(lat.integral(&q));
        let m = ladder_masses(lat, &q, ladder)?;
        let sets = threshold_sets(&m, epsilon, ladder);
        set_sizes.push(sets.iter().map(Vec::len).collect());
        if i >= start {
            let t = &sets[rmin_idx];
            survivors = Some(match survivors {
                None => t.clone(),
                Some(prev) => prev.into_iter().filter(|s| t.binary_search(s).is_ok()).collect(),
            });
            tail_rmin_masses.push(m.iter().map(|row| row[rmin_idx]).collect());
        }
    }
    let survivors = survivors.unwrap_or_default();
    let limit_r = match limit {
        Some(l) => {
            let q = l.pow32();
            Some((lat.integral(&q), ladder_masses(lat, &q, &[r_min])?))
        }
        None => None,
    };

    let mut atoms = Vec::new();
    let mut unstable = Vec::new();
    for cluster in single_linkage(&spec, &survivors, cap) {
        let peaks: Vec<usize> = tail_rmin_masses
            .iter()
            .map(|m| {
                let mut best = cluster[0];
                for &s in &cluster {
                    if m[s] > m[best] {
                        best = s;
                    }
                }
                best
            })
            .collect();
        let drift = diameter(&spec, &peaks);
        let diam = diameter(&spec, &cluster);
        let peak = *peaks.last().expect("tail non-empty");
        let mut theta = tail_rmin_masses.last().expect("tail non-empty")[peak];
        if let Some((_, lm)) = &limit_r {
            theta -= lm[peak][0];
        }
        let reason = if drift > cap * (1.0 + 1e-12) {
            Some("peak drifts across the tail")
        } else if diam > cap * (1.0 + 1e-12) {
            Some("cluster wider than twice the smallest radius")
        } else if theta < epsilon {
            Some("mass below epsilon after removing the limit")
        } else {
            None
        };
        match reason {
            Some(r) => unstable.push(RejectedCluster { sites: cluster, drift, diameter: diam, theta, reason: r.into() }),
            None => atoms.push(Atom {
                position: torus_centroid(&spec, &cluster),
                theta,
                peak_site: peak,
                cluster_size: cluster.len(),
                drift,
            }),
        }
    }
    Ok(ConcentrationReport {
        epsilon,
        ladder: ladder.to_vec(),
        set_sizes,
        atoms,
        unstable,
        masses,
        limit_mass: limit_r.map_or(0.0, |l| l.0),
    })
}

/// Outcome of the blow-up scale search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowupScale {
    Found {
        center: [f64; DIM],
        center_site: usize,
        rho: f64,
        /// Smooth-ball `𝓛^{3/2}`-mass at `(center, rho)`.
        mass: f64,
    },
    /// The largest smooth-ball mass over the search ball is below `3 eps / 4`.
    NoConcentration { max_mass: f64 },
}

/// Finds `rho` with `sup_y ∫_{B_rho(y)} 𝓛^{3/2} = eps/2` over sites `y` in
/// `search`, by bisection on the continuous smooth-ball mass.
pub fn select_blowup_scale(
    lat: &Lattice,
    d: &DensityField,
    search: &Ball,
    max_radius: f64,
    epsilon: f64,
) -> Result<BlowupScale> {
    let candidates = lat.sites_in_ball(search)?;
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("search ball contains no sites".into()));
    }
    let spec = *lat.spec();
    let q = d.pow32();
    let sup = |rho: f64| -> Result<(f64, usize)> {
        let vals: Vec<Result<f64>> = par::map_indexed(candidates.len(), |k| {
            lat.smooth_ball_integral(&q, &spec.position(candidates[k]), rho)
        });
        let mut best = (f64::NEG_INFINITY, candidates[0]);
        for (k, v) in vals.into_iter().enumerate() {
            let v = v?;
            if v > best.0 {
                best = (v, candidates[k]);
            }
        }
        Ok(best)
    };
    let (full, _) = sup(max_radius)?;
    if full < 0.75 * epsilon {
        return Ok(BlowupScale::NoConcentration { max_mass: full });
    }
    let target = 0.5 * epsilon;
    let (mut lo, mut hi) = (0.0, max_radius);
    let mut found = sup(hi)?;
    let mut rho = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = sup(mid)?;
        rho = mid;
        found = v;
        if (v.0 - target).abs() <= 1e-4 * epsilon {
            break;
        }
        if v.0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BlowupScale::Found { center: spec.position(found.1), center_site: found.1, rho, mass: found.0 })
}

/// Window lattice with coordinates `x_j = (j - floor(n/2)) h` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub n: usize,
    pub spacing: f64,
}

impl Window {
    pub fn offset(&self) -> f64 {
        (self.n / 2) as f64 * self.spacing
    }

    /// Window coordinate of a window site.
    pub fn coordinate(&self, spec: &LatticeSpec, site: usize) -> [f64; DIM] {
        let p = spec.position(site);
        std::array::from_fn(|a| p[a] - self.offset())
    }
}

/// Multilinear interpolation weights and corner sites for a position.
fn interpolation_stencil(spec: &LatticeSpec, p: &[f64; DIM]) -> [(usize, f64); 64] {
    let n = spec.n() as i64;
    let h = spec.spacing();
    let mut base = [0i64; DIM];
    let mut frac = [0.0; DIM];
    for a in 0..DIM {
        let t = p[a] / h;
        let f = t.floor();
        base[a] = f as i64;
        frac[a] = t - f;
    }
    std::array::from_fn(|corner| {
        let mut w = 1.0;
        let mut site = 0;
        for a in 0..DIM {
            let bit = ((corner >> a) & 1) as i64;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            site += ((base[a] + bit).rem_euclid(n) as usize) * spec.stride(a);
        }
        (site, w)
    })
}

/// Pullback of `(A, phi)` under `x -> center + lambda x` onto a window
/// lattice, by multilinear interpolation. Both fields carry weight `lambda`,
/// so `𝓛` scales by `lambda^4` and `∫ 𝓛^{3/2}` is preserved.
pub fn blowup_rescale(state: &FieldState, center: &[f64; DIM], lambda: f64, window: &Window) -> Result<FieldState> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!("scale must lie in (0, 1], got {lambda}")));
    }
    let spec = *state.lattice.spec();
    let reach = lambda * window.spacing * (window.n as f64 / 2.0);
    if reach > spec.half_period() * (1.0 + 1e-12) {
        return Err(Error::RadiusTooLarge { radius: reach, half_period: spec.half_period() });
    }
    let wlat = Lattice::new(LatticeSpec::new(window.n, window.spacing)?);
    let wspec = *wlat.spec();
    let a = &state.connection.0;
    let phi = &state.higgs.0;
    let fields: Vec<([Mat2; DIM], Mat2)> = par::map_indexed(wlat.num_sites(), |j| {
        let x = window.coordinate(&wspec, j);
        let p: [f64; DIM] = std::array::from_fn(|k| center[k] + lambda * x[k]);
        let mut aa = [Mat2::ZERO; DIM];
        let mut pp = Mat2::ZERO;
        for (site, w) in interpolation_stencil(&spec, &p) {
            if w == 0.0 {
                continue;
            }
            for mu in 0..DIM {
                aa[mu] += a[site][mu].scale(w);
            }
            pp += phi[site].scale(w);
        }
        (aa.map(|m| m.scale(lambda)), pp.scale(lambda))
    });
    let (conn, higgs): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
    Ok(FieldState { lattice: wlat, connection: ConnectionField(conn), higgs: HiggsField(higgs) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupResult {
    pub center: [f64; DIM],
    pub rho: f64,
    pub window_mass: f64,
    pub window: Window,
    pub state: FieldState,
}

/// Scale selection followed by rescaling with `lambda = rho`, on a window
/// whose spacing resolves the original lattice `refine` times.
pub fn blowup(
    state: &FieldState,
    search: &Ball,
    max_radius: f64,
    epsilon: f64,
    window_n: usize,
    refine: f64,
) -> Result<Option<BlowupResult>> {
    let d = density(state);
    match select_blowup_scale(&state.lattice, &d, search, max_radius, epsilon)? {
        BlowupScale::NoConcentration { .. } => Ok(None),
        BlowupScale::Found { center, rho, mass, .. } => {
            let window = Window { n: window_n, spacing: state.lattice.spacing() / (rho * refine) };
            let rescaled = blowup_rescale(state, &center, rho, &window)?;
            Ok(Some(BlowupResult { center, rho, window_mass: mass, window, state: rescaled }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy;
    use crate::synth::{bump_density, smooth_background32, DensityBump};

    fn lat6() -> Lattice {
        Lattice::with_size(6, 1.0).unwrap()
    }

    #[test]
    fn zero_sequence_has_no_sets_or_atoms() {
        let lat = lat6();
        let z = DensityField { values: vec![0.0; lat.num_sites()] };
        let seq = StateSequence::from_densities(&lat, vec![z.clone(), z]).unwrap();
        let sets = concentration_sets(&seq, 0.1, &radius_ladder(2.0, 3)).unwrap();
        assert!(sets.iter().flatten().all(|t| t.is_empty()));
        let r = extract_atoms(&seq, None, 0.1, &radius_ladder(2.0, 3)).unwrap();
        assert!(r.atoms.is_empty() && r.unstable.is_empty());
    }

    #[test]
    fn empty_ladder_and_short_sequence_are_rejected() {
        let lat = lat6();
        let z = DensityField { values: vec![0.0; lat.num_sites()] };
        let seq = StateSequence::from_densities(&lat, vec![z.clone()]).unwrap();
        assert!(concentration_sets(&seq, 0.1, &[]).is_err());
        assert!(extract_atoms(&seq, None, 0.1, &[1.0]).is_err());
        let other = Lattice::with_size(4, 1.0).unwrap();
        let mixed = vec![
            SequenceEntry::Density(lat.clone(), z),
            SequenceEntry::State(FieldState::zero(&other)),
        ];
        assert!(matches!(StateSequence::new(mixed), Err(Error::LatticeMismatch)));
    }

    #[test]
    fn sub_threshold_mass_gives_empty_sets() {
        let lat = lat6();
        let eps = 1.0;
        let d = bump_density(&lat, &[DensityBump { center: [0.0; DIM], width: 0.5, mass: 0.9 * eps }], &[]);
        let seq = StateSequence::from_densities(&lat, vec![d]).unwrap();
        let sets = concentration_sets(&seq, eps, &[0.5, 1.0, 3.0]).unwrap();
        assert!(sets[0].iter().all(|t| t.is_empty()));
    }

    #[test]
    fn bump_with_twice_epsilon_is_detected_at_origin() {
        let lat = lat6();
        let eps = 1.0;
        let d = bump_density(&lat, &[DensityBump { center: [0.0; DIM], width: 0.3, mass: 2.0 * eps }], &[]);
        let seq = StateSequence::from_densities(&lat, vec![d]).unwrap();
        let sets = concentration_sets(&seq, eps, &[1.0, 2.0]).unwrap();
        assert!(sets[0][0].contains(&0) && sets[0][1].contains(&0));
        assert!(is_subset(&sets[0][0], &sets[0][1]));
    }

    #[test]
    fn single_shrinking_atom_with_background() {
        let lat = lat6();
        let eps = 0.5;
        let y = [2.0, 1.0, 0.0, 4.0, 3.0, 1.0];
        let bg = smooth_background32(&lat, 1e-4);
        let seq_d = crate::synth::shrinking_sequence(
            &lat,
            &[DensityBump { center: y, width: 0.6, mass: 3.0 * eps }],
            &[1.0, 0.5, 0.25, 0.125],
            &bg,
        );
        let seq = StateSequence::from_densities(&lat, seq_d).unwrap();
        let limit = DensityField { values: bg.iter().map(|q| q.powf(2.0 / 3.0)).collect() };
        let r = extract_atoms(&seq, Some(&limit), eps, &radius_ladder(2.0, 2)).unwrap();
        assert_eq!(r.atoms.len(), 1, "{}", r.to_text(&[]));
        let a = &r.atoms[0];
        assert!(lat.spec().distance(&a.position, &y) <= lat.spacing());
        assert!((a.theta / (3.0 * eps) - 1.0).abs() < 0.1);
        assert!(r.count_bound_holds() && r.all_atoms_above_epsilon());
    }

    #[test]
    fn blowup_scale_on_bump() {
        let lat = Lattice::with_size(8, 0.5).unwrap();
        let eps = 1.0;
        let y = [1.0; DIM];
        let d = bump_density(&lat, &[DensityBump { center: y, width: 0.4, mass: 2.0 * eps }], &[]);
        let search = Ball::new(y, 0.6);
        match select_blowup_scale(&lat, &d, &search, 1.5, eps).unwrap() {
            BlowupScale::Found { center, mass, rho, .. } => {
                assert!(lat.spec().distance(&center, &y) <= lat.spacing());
                assert!((mass - 0.5 * eps).abs() <= 0.02 * eps);
                assert!(rho > 0.0);
            }
            other => panic!("{other:?}"),
        }
        let small = DensityField { values: d.values.iter().map(|v| v * 0.1).collect() };
        assert!(matches!(
            select_blowup_scale(&lat, &small, &search, 1.5, eps).unwrap(),
            BlowupScale::NoConcentration { .. }
        ));
    }

    #[test]
    fn identity_rescale_on_coinciding_grid() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let s = crate::synth::band_limited_state(&lat, &crate::synth::BandLimited::new(0.3, 4));
        let w = Window { n: 4, spacing: 1.0 };
        let center = [2.0; DIM];
        let out = blowup_rescale(&s, &center, 1.0, &w).unwrap();
        // window site j sits at original site j - 2 + 2 = j
        assert_eq!(out.connection, s.connection);
        assert_eq!(out.higgs, s.higgs);
        let m0 = lat.integral(&energy::density(&s).pow32());
        let m1 = out.lattice.integral(&energy::density(&out).pow32());
        assert!((m0 - m1).abs() <= 1e-10 * m0);
    }

    #[test]
    fn flat_state_rescales_to_flat_state() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let out = blowup_rescale(&FieldState::zero(&lat), &[0.3; DIM], 0.5, &Window { n: 4, spacing: 1.0 }).unwrap();
        assert_eq!(out, FieldState::zero(&out.lattice));
        assert!(blowup_rescale(&FieldState::zero(&lat), &[0.0; DIM], 1.5, &Window { n: 4, spacing: 1.0 }).is_err());
        assert!(blowup_rescale(&FieldState::zero(&lat), &[0.0; DIM], 1.0, &Window { n: 8, spacing: 1.0 }).is_err());
    }
}
