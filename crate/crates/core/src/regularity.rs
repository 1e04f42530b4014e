//! Empirical checks of the local inequalities on computed states.

use std::fmt::Write as _;

use crate::energy::{density, DensityField};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::lattice::{Ball, BallStencil, Lattice, DIM};
use crate::ops::dt_residuals;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsParams {
    /// Probes with `ρ^-2 ∫_B 𝓛 <= epsilon` are tested against `c1`, `c2`.
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub kappa: f64,
}

impl Default for EpsParams {
    fn default() -> Self {
        Self { epsilon: 1.0, c1: 10.0, c2: 10.0, kappa: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsProbe {
    pub center: [f64; DIM],
    pub radius: f64,
    /// `ρ^-2 ∫_{B_ρ} 𝓛`
    pub local_energy: f64,
    /// `∫_{B_ρ} 𝓛^{3/2}`
    pub local_energy_32: f64,
    /// `max_{B_ρ} sqrt(𝓛)`
    pub sup_density_sqrt: f64,
    /// `sqrt(𝓛)` at the site nearest the centre.
    pub center_density_sqrt: f64,
    /// `sup ρ^2 / (ρ^-2 ∫ 𝓛)^{1/2}`; zero when the ball carries no energy.
    pub implied_c1: f64,
    /// `sup ρ^2 / (∫ 𝓛^{3/2})^{1/3}`; zero when the ball carries no energy.
    pub implied_c2: f64,
    /// `None` when `local_energy > epsilon`.
    pub holds_c1: Option<bool>,
    pub holds_c2: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsRegularityReport {
    pub params: EpsParams,
    pub probes: Vec<EpsProbe>,
    pub r1_norm: f64,
    pub r2_norm: f64,
}

impl EpsRegularityReport {
    pub fn max_implied_c1(&self) -> f64 {
        self.probes.iter().map(|p| p.implied_c1).fold(0.0, f64::max)
    }

    pub fn max_implied_c2(&self) -> f64 {
        self.probes.iter().map(|p| p.implied_c2).fold(0.0, f64::max)
    }

    pub fn all_hold(&self) -> bool {
        self.probes.iter().all(|p| p.holds_c1 != Some(false) && p.holds_c2 != Some(false))
    }

    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# r1_norm = {:.17e}", self.r1_norm);
        let _ = writeln!(out, "# r2_norm = {:.17e}", self.r2_norm);
        out.push_str("y0,y1,y2,y3,y4,y5,radius,local_energy,local_energy_32,sup_density_sqrt,center_density_sqrt,implied_c1,implied_c2,holds_c1,holds_c2\n");
        let flag = |f: Option<bool>| match f {
            None => "na",
            Some(true) => "1",
            Some(false) => "0",
        };
        for p in &self.probes {
            for c in p.center {
                let _ = write!(out, "{c:.17e},");
            }
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                p.radius,
                p.local_energy,
                p.local_energy_32,
                p.sup_density_sqrt,
                p.center_density_sqrt,
                p.implied_c1,
                p.implied_c2,
                flag(p.holds_c1),
                flag(p.holds_c2)
            );
        }
        out
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Probes one `(center, radius)` pair of a density.
pub fn eps_probe(lat: &Lattice, d: &DensityField, center: &[f64; DIM], radius: f64, p: &EpsParams) -> Result<EpsProbe> {
    let stencil = BallStencil::new(lat.spec(), &Ball::new(*center, radius))?;
    let dv = lat.spec().volume_element();
    let (mut s1, mut s32, mut sup) = (0.0, 0.0, 0.0f64);
    for site in stencil.sites() {
        let v = d.values[site];
        s1 += v;
        s32 += v.powf(1.5);
        sup = sup.max(v);
    }
    let local_energy = dv * s1 / (radius * radius);
    let local_energy_32 = dv * s32;
    let sup_density_sqrt = sup.sqrt();
    let center_density_sqrt = d.values[lat.spec().nearest_site(center)].sqrt();
    let r2 = radius * radius;
    let implied_c1 = ratio(sup_density_sqrt * r2, local_energy.sqrt());
    let implied_c2 = ratio(sup_density_sqrt * r2, local_energy_32.cbrt());
    let (holds_c1, holds_c2) = if local_energy <= p.epsilon {
        (
            Some(center_density_sqrt <= p.c1 / r2 * local_energy.sqrt()),
            Some(center_density_sqrt <= p.c2 / r2 * local_energy_32.cbrt()),
        )
    } else {
        (None, None)
    };
    Ok(EpsProbe {
        center: *center,
        radius,
        local_energy,
        local_energy_32,
        sup_density_sqrt,
        center_density_sqrt,
        implied_c1,
        implied_c2,
        holds_c1,
        holds_c2,
    })
}

pub fn eps_regularity_scan_density(
    lat: &Lattice,
    d: &DensityField,
    centers: &[[f64; DIM]],
    radii: &[f64],
    params: &EpsParams,
) -> Result<Vec<EpsProbe>> {
    for &r in radii {
        check_radius(lat, r)?;
    }
    let mut probes = Vec::with_capacity(centers.len() * radii.len());
    for c in centers {
        for &r in radii {
            probes.push(eps_probe(lat, d, c, r, params)?);
        }
    }
    Ok(probes)
}

pub fn eps_regularity_scan(
    state: &FieldState,
    centers: &[[f64; DIM]],
    radii: &[f64],
    params: &EpsParams,
) -> Result<EpsRegularityReport> {
    let d = density(state);
    let probes = eps_regularity_scan_density(&state.lattice, &d, centers, radii, params)?;
    let r = dt_residuals(state, params.kappa);
    Ok(EpsRegularityReport { params: *params, probes, r1_norm: r.r1_norm, r2_norm: r.r2_norm })
}

/// Default probe centres: the density maximum, the origin, and the points
/// `(L/2) e_i` and `(L/2)(1, ..., 1)`.
pub fn auto_centers(lat: &Lattice, d: &DensityField) -> Vec<[f64; DIM]> {
    let half = lat.spec().half_period();
    let mut out = vec![lat.spec().position(d.argmax()), [0.0; DIM]];
    for i in 0..DIM {
        let mut c = [0.0; DIM];
        c[i] = half;
        out.push(c);
    }
    out.push([half; DIM]);
    out
}

fn check_radius(lat: &Lattice, r: f64) -> Result<()> {
    let hp = lat.spec().half_period();
    if !(r > 0.0 && r <= hp * (1.0 + 1e-12)) {
        return Err(Error::RadiusTooLarge { radius: r, half_period: hp });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub center: [f64; DIM],
    pub radii: Vec<f64>,
    /// `m(ρ) = ρ^-2 ∫_{B_ρ} 𝓛`, by direct ball sums.
    pub values: Vec<f64>,
    /// The same quantity from cumulative shell sums.
    pub shell_values: Vec<f64>,
    /// Pairs `(i, i + 1)` where `m` drops by more than the tolerance.
    pub violations: Vec<(usize, usize)>,
    pub c_tol: f64,
    pub r1_norm: f64,
    pub r2_norm: f64,
}

impl MonotonicityReport {
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        let c: Vec<String> = self.center.iter().map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(out, "# center = {}", c.join(" "));
        let _ = writeln!(out, "# c_tol = {:.17e}", self.c_tol);
        let _ = writeln!(out, "# r1_norm = {:.17e}", self.r1_norm);
        let _ = writeln!(out, "# r2_norm = {:.17e}", self.r2_norm);
        let _ = writeln!(out, "# violations = {}", self.violations.len());
        out.push_str("radius,m,m_shell,violation\n");
        for (i, r) in self.radii.iter().enumerate() {
            let v = i > 0 && self.violations.contains(&(i - 1, i));
            let _ = writeln!(out, "{r:.17e},{:.17e},{:.17e},{}", self.values[i], self.shell_values[i], v as u8);
        }
        out
    }
}

pub fn monotonicity_scan_density(
    lat: &Lattice,
    d: &DensityField,
    center: &[f64; DIM],
    radii: &[f64],
    c_tol: f64,
) -> Result<MonotonicityReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be non-empty and strictly increasing".into()));
    }
    for &r in radii {
        check_radius(lat, r)?;
    }
    let h = lat.spacing();
    let dv = lat.spec().volume_element();
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| Ok(lat.ball_integral(&d.values, &Ball::new(*center, r))? / (r * r)))
        .collect::<Result<_>>()?;

    // cumulative shells from one sweep over the largest ball
    let outer = BallStencil::new(lat.spec(), &Ball::new(*center, *radii.last().expect("non-empty")))?;
    let mut entries: Vec<(f64, f64)> = outer.entries().map(|(s, d2)| (d2, d.values[s])).collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut shell_values = Vec::with_capacity(radii.len());
    let (mut k, mut acc) = (0, 0.0);
    for &r in radii {
        let r2 = {
            let t = r / h;
            (t * t * (1.0 + 1e-12) + 1e-12) * h * h
        };
        while k < entries.len() && entries[k].0 <= r2 {
            acc += entries[k].1;
            k += 1;
        }
        shell_values.push(dv * acc / (r * r));
    }

    let violations = (0..radii.len().saturating_sub(1))
        .filter(|&i| values[i + 1] < values[i] - c_tol * (h / radii[i]) * values[i])
        .map(|i| (i, i + 1))
        .collect();
    Ok(MonotonicityReport {
        center: *center,
        radii: radii.to_vec(),
        values,
        shell_values,
        violations,
        c_tol,
        r1_norm: 0.0,
        r2_norm: 0.0,
    })
}

pub fn monotonicity_scan(
    state: &FieldState,
    center: &[f64; DIM],
    radii: &[f64],
    c_tol: f64,
    kappa: f64,
) -> Result<MonotonicityReport> {
    let mut report = monotonicity_scan_density(&state.lattice, &density(state), center, radii, c_tol)?;
    let r = dt_residuals(state, kappa);
    report.r1_norm = r.r1_norm;
    report.r2_norm = r.r2_norm;
    Ok(report)
}

/// `n` radii `h, ..., half-period`, evenly spaced.
pub fn default_radii(lat: &Lattice, n: usize) -> Vec<f64> {
    let h = lat.spacing();
    let hp = lat.spec().half_period();
    if n == 1 {
        return vec![hp];
    }
    (0..n).map(|i| h + (hp - h) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiouvilleRow {
    pub tau: f64,
    pub sigma: f64,
    /// `σ^-2 ∫_{B_σ} 𝓛`
    pub gamma: f64,
    /// `σ^-2 ∫_{B_τ} 𝓛`
    pub core: f64,
    /// `z (∫_{T \ B_τ} 𝓛^{3/2})^{1/3}`
    pub tail: f64,
    /// `σ^-2 ∫_{B_σ \ B_τ} 𝓛`
    pub annulus: f64,
    /// `σ^-2 (∫_{B_σ \ B_τ} 𝓛^{3/2})^{2/3} |B_σ \ B_τ|^{1/3}`
    pub holder_bound: f64,
    pub tail_dominates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleReport {
    pub center: [f64; DIM],
    pub z: f64,
    pub rows: Vec<LiouvilleRow>,
}

impl LiouvilleReport {
    /// The discrete Hölder inequality on every annulus.
    pub fn holder_holds(&self) -> bool {
        self.rows.iter().all(|r| r.annulus <= r.holder_bound * (1.0 + 1e-12) + 1e-300)
    }

    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# z = {:.17e}", self.z);
        out.push_str("tau,sigma,gamma,core,tail,annulus,holder_bound,tail_dominates\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.tau, r.sigma, r.gamma, r.core, r.tail, r.annulus, r.holder_bound, r.tail_dominates as u8
            );
        }
        out
    }
}

pub fn liouville_diagnostic_density(
    lat: &Lattice,
    d: &DensityField,
    center: &[f64; DIM],
    taus: &[f64],
    sigmas: &[f64],
    z: f64,
) -> Result<LiouvilleReport> {
    for &r in taus.iter().chain(sigmas) {
        check_radius(lat, r)?;
    }
    let dv = lat.spec().volume_element();
    let d32 = d.pow32();
    let total32 = lat.integral(&d32);
    let mut rows = Vec::new();
    for &tau in taus {
        let inner = BallStencil::new(lat.spec(), &Ball::new(*center, tau))?;
        let in_tau: std::collections::HashSet<usize> = inner.sites().collect();
        let core_mass: f64 = dv * inner.sites().map(|s| d.values[s]).sum::<f64>();
        let core32: f64 = dv * inner.sites().map(|s| d32[s]).sum::<f64>();
        let tail = z * (total32 - core32).max(0.0).cbrt();
        for &sigma in sigmas {
            let outer = BallStencil::new(lat.spec(), &Ball::new(*center, sigma))?;
            let s2 = sigma * sigma;
            let gamma = dv * outer.sites().map(|s| d.values[s]).sum::<f64>() / s2;
            let (mut a1, mut a32, mut count) = (0.0, 0.0, 0usize);
            for s in outer.sites().filter(|s| !in_tau.contains(s)) {
                a1 += d.values[s];
                a32 += d32[s];
                count += 1;
            }
            let core = core_mass / s2;
            rows.push(LiouvilleRow {
                tau,
                sigma,
                gamma,
                core,
                tail,
                annulus: dv * a1 / s2,
                holder_bound: (dv * a32).powf(2.0 / 3.0) * (dv * count as f64).cbrt() / s2,
                tail_dominates: tail > core,
            });
        }
    }
    Ok(LiouvilleReport { center: *center, z, rows })
}

pub fn liouville_diagnostic(
    state: &FieldState,
    center: &[f64; DIM],
    taus: &[f64],
    sigmas: &[f64],
    z: f64,
) -> Result<LiouvilleReport> {
    liouville_diagnostic_density(&state.lattice, &density(state), center, taus, sigmas, z)
}
