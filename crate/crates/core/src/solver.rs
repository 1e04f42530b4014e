//! Gradient flow of `L` with Armijo backtracking, and numerical Coulomb gauge.

use std::fmt::Write as _;

use crate::algebra::{exp_su2, Mat2};
use crate::energy::{energy, evaluate, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::{apply_gauge, FieldState, GaugeTransform};
use crate::lattice::{Lattice, DIM};
use crate::ops::dt_residuals;
use crate::par;

const ARMIJO_C: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    /// Initial trial step.
    pub step_size: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Reported alongside the trace; never used to stop.
    pub residual_tol: f64,
    /// Step shrink factor on rejection, in `(0, 1)`.
    pub backtrack: f64,
    /// Step growth factor after an accepted step, `>= 1`.
    pub step_growth: f64,
    /// Start each line search from the Barzilai-Borwein step `s.y / y.y`
    /// instead of the grown previous step.
    pub spectral_step: bool,
    /// Smallest trial step before giving up.
    pub min_step: f64,
    /// Weight of `[phi, phi^dagger]` in the second residual.
    pub kappa: f64,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_steps: 2000,
            grad_tol: 1e-10,
            residual_tol: 1e-4,
            backtrack: 0.5,
            step_growth: 1.5,
            spectral_step: true,
            min_step: 1e-14,
            kappa: 1.0,
            seed: 0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_size > 0.0
            && self.grad_tol >= 0.0
            && self.residual_tol >= 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.step_growth >= 1.0
            && self.min_step > 0.0
            && self.min_step <= self.step_size;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid flow configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub step: usize,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
    pub r1_norm: f64,
    pub r2_norm: f64,
    /// Step accepted to reach this record; zero for the initial record.
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
}

impl FlowTrace {
    pub fn steps(&self) -> usize {
        self.records.last().map_or(0, |r| r.step)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].energy.total <= w[0].energy.total)
    }

    /// CSV with `# `-prefixed preamble lines.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("step,L,term1,term2,term3,grad_norm,r1_norm,r2_norm,step_size\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.step,
                r.energy.total,
                r.energy.curvature_term,
                r.energy.dstar_term,
                r.energy.bracket_term,
                r.grad_norm,
                r.r1_norm,
                r.r2_norm,
                r.step_size
            );
        }
        out
    }
}

fn record(step: usize, state: &FieldState, energy: EnergyBreakdown, grad_norm: f64, t: f64, kappa: f64) -> FlowRecord {
    let r = dt_residuals(state, kappa);
    FlowRecord { step, energy, grad_norm, r1_norm: r.r1_norm, r2_norm: r.r2_norm, step_size: t }
}

/// Steepest descent on `energy(.).total` with Armijo backtracking.
///
/// Only steps that satisfy the sufficient-decrease condition and strictly
/// lower `L` are accepted, so the trace is non-increasing.
pub fn minimize(state0: &FieldState, cfg: &FlowConfig) -> Result<(FieldState, FlowTrace)> {
    cfg.validate()?;
    let mut state = state0.clone();
    let mut eval = evaluate(&state);
    let mut grad_norm = eval.gradient.norm();
    let mut records = vec![record(0, &state, eval.energy, grad_norm, 0.0, cfg.kappa)];
    if grad_norm <= cfg.grad_tol {
        return Ok((state, FlowTrace { records, status: FlowStatus::Converged }));
    }
    let mut t = cfg.step_size;
    for step in 1..=cfg.max_steps {
        let l0 = eval.energy.total;
        let g2 = grad_norm * grad_norm;
        let trial = loop {
            let trial = state.axpy(-t, &eval.gradient);
            let l = energy(&trial).total;
            if l < l0 && l <= l0 - ARMIJO_C * t * g2 {
                break trial;
            }
            t *= cfg.backtrack;
            if t < cfg.min_step {
                return Ok((state, FlowTrace { records, status: FlowStatus::StepUnderflow }));
            }
        };
        let next = evaluate(&trial);
        let accepted = t;
        t *= cfg.step_growth;
        if cfg.spectral_step {
            // s = -t g_k, y = g_{k+1} - g_k
            let y = next.gradient.axpy(-1.0, &eval.gradient);
            let bb = -accepted * eval.gradient.inner(&y) / y.inner(&y);
            if bb.is_finite() && bb >= cfg.min_step {
                t = bb;
            }
        }
        state = trial;
        eval = next;
        grad_norm = eval.gradient.norm();
        records.push(record(step, &state, eval.energy, grad_norm, accepted, cfg.kappa));
        if grad_norm <= cfg.grad_tol {
            return Ok((state, FlowTrace { records, status: FlowStatus::Converged }));
        }
    }
    Ok((state, FlowTrace { records, status: FlowStatus::MaxSteps }))
}

/// `d^*A = -sum_mu D_mu A_mu`.
pub fn divergence(state: &FieldState) -> Vec<Mat2> {
    let lat = &state.lattice;
    let a = &state.connection.0;
    let inv2h = 0.5 / lat.spacing();
    par::map_indexed(lat.num_sites(), |x| {
        (0..DIM).fold(Mat2::ZERO, |acc, mu| acc - (a[lat.up(x, mu)][mu] - a[lat.down(x, mu)][mu]).scale(inv2h))
    })
}

fn l2_norm(lat: &Lattice, f: &[Mat2]) -> f64 {
    (lat.spec().volume_element() * par::sum_indexed(f.len(), |x| f[x].norm_sqr())).sqrt()
}

/// `-sum_mu D_mu D_mu` applied to a vector of scalar triples.
fn laplacian(lat: &Lattice, f: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let c = 0.25 / (lat.spacing() * lat.spacing());
    par::map_indexed(lat.num_sites(), |x| {
        let mut out = [0.0; 3];
        for mu in 0..DIM {
            let up2 = lat.up(lat.up(x, mu), mu);
            let dn2 = lat.down(lat.down(x, mu), mu);
            for k in 0..3 {
                out[k] += c * (2.0 * f[x][k] - f[up2][k] - f[dn2][k]);
            }
        }
        out
    })
}

fn dot3(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    par::sum_indexed(a.len(), |i| a[i][0] * b[i][0] + a[i][1] * b[i][1] + a[i][2] * b[i][2])
}

/// Conjugate gradients for `Δ xi = rhs` on mean-free data; returns the
/// mean-free solution.
fn poisson_solve(lat: &Lattice, rhs: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let n = rhs.len();
    let mean: [f64; 3] = std::array::from_fn(|k| rhs.iter().map(|r| r[k]).sum::<f64>() / n as f64);
    let mut r: Vec<[f64; 3]> = rhs.iter().map(|v| std::array::from_fn(|k| v[k] - mean[k])).collect();
    let mut x = vec![[0.0; 3]; n];
    let mut p = r.clone();
    let mut rr = dot3(&r, &r);
    let stop = rr * 1e-28;
    for _ in 0..10 * n {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ap = laplacian(lat, &p);
        let alpha = rr / dot3(&p, &ap);
        for i in 0..n {
            for k in 0..3 {
                x[i][k] += alpha * p[i][k];
                r[i][k] -= alpha * ap[i][k];
            }
        }
        let rr_new = dot3(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            for k in 0..3 {
                p[i][k] = r[i][k] + beta * p[i][k];
            }
        }
    }
    let xm: [f64; 3] = std::array::from_fn(|k| x.iter().map(|v| v[k]).sum::<f64>() / n as f64);
    x.iter().map(|v| std::array::from_fn(|k| v[k] - xm[k])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoulombResult {
    /// Composite transformation from the input to `state`.
    pub sigma: GaugeTransform,
    pub state: FieldState,
    /// `||d^*A||` of the returned state.
    pub final_norm: f64,
    pub initial_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Drives `d^*A` to zero by repeated gauge steps `exp(xi)`, `Δ xi = d^*A`.
///
/// The returned state is the product of the per-iteration actions, which
/// agrees with acting once by `sigma` up to the gauge-discretisation error.
/// If the iteration fails to reduce the norm, the best iterate is returned.
pub fn coulomb_fix(state: &FieldState, tol: f64, max_iters: usize) -> Result<CoulombResult> {
    let lat = &state.lattice;
    let mut current = state.clone();
    let mut sigma = GaugeTransform::identity(lat.num_sites());
    let mut norm = l2_norm(lat, &divergence(&current));
    let initial_norm = norm;
    let mut best = (current.clone(), sigma.clone(), norm);
    let mut iterations = 0;
    while norm > tol && iterations < max_iters {
        let div = divergence(&current);
        let rhs: Vec<[f64; 3]> = div.iter().map(Mat2::su2_coords).collect();
        let xi = poisson_solve(lat, &rhs);
        let step = GaugeTransform(par::map_indexed(lat.num_sites(), |x| exp_su2(&Mat2::from_su2_coords(xi[x]))));
        current = apply_gauge(&step, &current)?;
        sigma = step.compose(&sigma);
        norm = l2_norm(lat, &divergence(&current));
        iterations += 1;
        if norm < best.2 {
            best = (current.clone(), sigma.clone(), norm);
        }
    }
    let (state, sigma, final_norm) = best;
    Ok(CoulombResult { sigma, state, final_norm, initial_norm, iterations, converged: final_norm <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_su2_group;
    use crate::field::apply_gauge;
    use crate::synth::{band_limited_state, BandLimited};
    use rand::SeedableRng;

    #[test]
    fn zero_state_returns_immediately() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let (s, trace) = minimize(&FieldState::zero(&lat), &FlowConfig::default()).unwrap();
        assert_eq!(trace.steps(), 0);
        assert_eq!(trace.status, FlowStatus::Converged);
        assert_eq!(trace.records[0].energy.total, 0.0);
        assert_eq!(s, FieldState::zero(&lat));
    }

    #[test]
    fn constant_normal_higgs_is_critical() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let mut s = FieldState::zero(&lat);
        s.higgs.0.iter_mut().for_each(|p| *p = Mat2::from_real(0.4, 0.0, 0.0, -0.4));
        let (out, trace) = minimize(&s, &FlowConfig::default()).unwrap();
        assert_eq!(trace.steps(), 0);
        assert_eq!(out, s);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let cfg = FlowConfig { backtrack: 1.0, ..FlowConfig::default() };
        assert!(minimize(&FieldState::zero(&lat), &cfg).is_err());
    }

    #[test]
    fn descent_is_monotone_and_gauge_consistent() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let s = band_limited_state(&lat, &BandLimited::new(0.05, 2));
        let cfg = FlowConfig { max_steps: 15, ..FlowConfig::default() };
        let (_, trace) = minimize(&s, &cfg).unwrap();
        assert!(trace.is_monotone());
        assert!(trace.records.last().unwrap().energy.total < trace.records[0].energy.total);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = GaugeTransform::constant(lat.num_sites(), random_su2_group(&mut rng));
        let (_, rotated) = minimize(&apply_gauge(&g, &s).unwrap(), &cfg).unwrap();
        assert_eq!(rotated.records.len(), trace.records.len());
        for (a, b) in trace.records.iter().zip(&rotated.records) {
            assert!((a.energy.total - b.energy.total).abs() <= 1e-12 * trace.records[0].energy.total);
        }
    }

    #[test]
    fn csv_has_header_and_preamble() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let (_, trace) = minimize(&FieldState::zero(&lat), &FlowConfig::default()).unwrap();
        let csv = trace.to_csv(&["n = 4".into()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# n = 4");
        assert_eq!(lines[1], "step,L,term1,term2,term3,grad_norm,r1_norm,r2_norm,step_size");
        assert!(lines[2].starts_with("0,0.00000000000000000e0,"));
    }

    #[test]
    fn coulomb_of_zero_is_identity() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let r = coulomb_fix(&FieldState::zero(&lat), 1e-10, 10).unwrap();
        assert_eq!(r.final_norm, 0.0);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.sigma, GaugeTransform::identity(lat.num_sites()));
    }

    #[test]
    fn poisson_solve_inverts_laplacian() {
        let lat = Lattice::with_size(4, 0.7).unwrap();
        let s = band_limited_state(&lat, &BandLimited::new(0.3, 8));
        let f: Vec<[f64; 3]> = s.higgs.0.iter().map(|m| m.su2_part().su2_coords()).collect();
        let rhs = laplacian(&lat, &f);
        let xi = poisson_solve(&lat, &rhs);
        let back = laplacian(&lat, &xi);
        let err: f64 = back.iter().zip(&rhs).map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()).sum();
        let scale: f64 = rhs.iter().map(|a| a.iter().map(|v| v * v).sum::<f64>()).sum();
        assert!(err <= 1e-20 * scale.max(1e-300));
    }

    #[test]
    fn coulomb_reduces_divergence_by_three_orders() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let cfg = BandLimited { transverse: false, higgs: false, ..BandLimited::new(0.1, 6) };
        let s = band_limited_state(&lat, &cfg);
        let d0 = l2_norm(&lat, &divergence(&s));
        let r = coulomb_fix(&s, 1e-3 * d0, 500).unwrap();
        assert!(r.converged, "{} vs {}", r.final_norm, d0);
        assert!(r.final_norm <= 1e-3 * d0);
        r.sigma.validate().unwrap();
        let (e0, e1) = (energy(&s).total, energy(&r.state).total);
        assert!((e0 - e1).abs() <= 0.05 * e0, "{e0} {e1}");
    }
}
