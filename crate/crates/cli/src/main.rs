use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dtil_core::algebra::identity_sweep;
use dtil_core::concentration::{self, radius_ladder, BlowupScale, SequenceEntry, StateSequence};
use dtil_core::config::{ExperimentConfig, InitKind};
use dtil_core::lattice::{Ball, Lattice, DIM};
use dtil_core::ops::dt_residuals;
use dtil_core::regularity::{self, EpsParams};
use dtil_core::snapshot::{read_snapshot, write_snapshot, Snapshot};
use dtil_core::synth::{self, BandLimited, DensityBump};
use dtil_core::{density, energy, minimize, par, DensityField, FieldState};

#[derive(Parser)]
#[command(name = "dtil", version, about = "Lattice laboratory for SU(2) instantons on the flat 3-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gradient flow from the configured initial data.
    Minimize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Residual norms and energy terms of a snapshot.
    Residuals {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Epsilon-regularity probes.
    Epsreg {
        #[arg(long = "in")]
        input: PathBuf,
        /// `auto` or a file with one centre (6 numbers) per line.
        #[arg(long, default_value = "auto")]
        centers: String,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 10.0)]
        c1: f64,
        #[arg(long, default_value_t = 10.0)]
        c2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monotonicity of `ρ^-2 ∫_B 𝓛` about a centre; exits 1 on violations.
    Monotonicity {
        #[arg(long = "in")]
        input: PathBuf,
        /// `argmax` or six comma-separated coordinates.
        #[arg(long, default_value = "argmax")]
        center: String,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        c_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decay diagnostic comparing core and tail contributions.
    Liouville {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "argmax")]
        center: String,
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concentration sets and atoms of a snapshot sequence.
    Concentrate {
        #[arg(long, value_delimiter = ',', required = true)]
        seq: Vec<PathBuf>,
        #[arg(long)]
        limit: Option<PathBuf>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 3)]
        rungs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of `|T_{i,r}|` per entry and radius.
        #[arg(long)]
        sizes: Option<PathBuf>,
    },
    /// Scale selection and rescaling about the concentration point.
    Blowup {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        /// Candidate centres: sites within this distance of the density maximum.
        #[arg(long)]
        search_radius: Option<f64>,
        /// Largest radius for the scale search; defaults to the half-period minus a cell.
        #[arg(long)]
        max_radius: Option<f64>,
        #[arg(long, default_value_t = 4)]
        window_n: usize,
        #[arg(long, default_value_t = 4.0)]
        refine: f64,
    },
    /// Synthetic ground-truth snapshots.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Randomised pointwise identity sweeps.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
}

#[derive(Subcommand)]
enum SynthKind {
    /// Density snapshot with one bump of given `𝓛^{3/2}`-mass.
    Bump {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0,0,0,0,0")]
        center: Vec<f64>,
        #[arg(long)]
        width: f64,
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Density snapshots of a bump shrinking by the given factors.
    Sequence {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0,0,0,0,0")]
        center: Vec<f64>,
        #[arg(long)]
        width: f64,
        #[arg(long)]
        mass: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
        factors: Vec<f64>,
        /// Level of a smooth `𝓛^{3/2}` background.
        #[arg(long, default_value_t = 0.0)]
        background: f64,
        /// Output files are `<prefix>-<k>.snap`.
        #[arg(long)]
        prefix: PathBuf,
    },
    /// Band-limited random field state.
    Random {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = 1e-2)]
        amplitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CheckKind {
    /// Trace-free identity and quartic inequality on random matrices.
    Identities {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Snapshot> {
    read_snapshot(path).with_context(|| format!("reading {}", path.display()))
}

fn load_state(path: &Path) -> Result<FieldState> {
    Ok(load(path)?.into_state()?)
}

fn snapshot_density(snap: &Snapshot) -> (Lattice, DensityField) {
    match snap {
        Snapshot::State(s) => (s.lattice.clone(), density(s)),
        Snapshot::Density(l, d) => (l.clone(), d.clone()),
    }
}

fn parse_point(text: &str) -> Result<[f64; DIM]> {
    let v: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad coordinate '{s}'")))
        .collect::<Result<_>>()?;
    point(&v)
}

fn point(v: &[f64]) -> Result<[f64; DIM]> {
    if v.len() != DIM {
        bail!("expected {DIM} coordinates, got {}", v.len());
    }
    Ok(std::array::from_fn(|i| v[i]))
}

fn resolve_center(spec: &str, lat: &Lattice, d: &DensityField) -> Result<[f64; DIM]> {
    if spec == "argmax" {
        Ok(lat.spec().position(d.argmax()))
    } else {
        parse_point(spec)
    }
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

fn lattice_lines(lat: &Lattice) -> Vec<String> {
    vec![format!("n = {}", lat.spec().n()), format!("spacing = {:e}", lat.spacing())]
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Minimize { config, out, trace } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::default(),
            };
            let lat = cfg.lattice()?;
            let start = match cfg.init {
                InitKind::Zero => FieldState::zero(&lat),
                InitKind::Random => synth::band_limited_state(&lat, &BandLimited::new(cfg.amplitude, cfg.seed)),
            };
            let (state, flow) = minimize(&start, &cfg.flow)?;
            write_snapshot(&out, &Snapshot::State(state))?;
            let mut pre = cfg.to_lines();
            pre.push(format!("status = {:?}", flow.status));
            write_text(Some(&trace), &flow.to_csv(&pre))?;
            let last = flow.records.last().expect("initial record");
            eprintln!("{:?} after {} steps, L = {:e}", flow.status, last.step, last.energy.total);
        }
        Command::Residuals { input, kappa } => {
            let s = load_state(&input)?;
            let r = dt_residuals(&s, kappa);
            let e = energy(&s);
            println!("r1_norm = {:.17e}", r.r1_norm);
            println!("r2_norm = {:.17e}", r.r2_norm);
            println!("L = {:.17e}", e.total);
            println!("curvature_term = {:.17e}", e.curvature_term);
            println!("dstar_term = {:.17e}", e.dstar_term);
            println!("bracket_term = {:.17e}", e.bracket_term);
            println!("det_u_l2 = {:.17e}", e.det_u_l2);
        }
        Command::Epsreg { input, centers, radii, epsilon, c1, c2, out } => {
            let s = load_state(&input)?;
            let d = density(&s);
            let pts = if centers == "auto" {
                regularity::auto_centers(&s.lattice, &d)
            } else {
                std::fs::read_to_string(&centers)
                    .with_context(|| format!("reading {centers}"))?
                    .lines()
                    .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                    .map(parse_point)
                    .collect::<Result<_>>()?
            };
            let params = EpsParams { epsilon, c1, c2, kappa: 1.0 };
            let report = regularity::eps_regularity_scan(&s, &pts, &radii, &params)?;
            let mut pre = lattice_lines(&s.lattice);
            pre.extend([
                format!("radii = {}", list(&radii)),
                format!("epsilon = {epsilon:e}"),
                format!("c1 = {c1:e}"),
                format!("c2 = {c2:e}"),
            ]);
            write_text(out.as_deref(), &report.to_csv(&pre))?;
        }
        Command::Monotonicity { input, center, radii, c_tol, out } => {
            let snap = load(&input)?;
            let (lat, d) = snapshot_density(&snap);
            let c = resolve_center(&center, &lat, &d)?;
            let report = match &snap {
                Snapshot::State(s) => regularity::monotonicity_scan(s, &c, &radii, c_tol, 1.0)?,
                Snapshot::Density(..) => regularity::monotonicity_scan_density(&lat, &d, &c, &radii, c_tol)?,
            };
            let mut pre = lattice_lines(&lat);
            pre.push(format!("radii = {}", list(&radii)));
            write_text(out.as_deref(), &report.to_csv(&pre))?;
            if !report.violations.is_empty() {
                eprintln!("{} monotonicity violations", report.violations.len());
                return Ok(ExitCode::from(1));
            }
        }
        Command::Liouville { input, center, taus, sigmas, z, out } => {
            let (lat, d) = snapshot_density(&load(&input)?);
            let c = resolve_center(&center, &lat, &d)?;
            let report = regularity::liouville_diagnostic_density(&lat, &d, &c, &taus, &sigmas, z)?;
            let mut pre = lattice_lines(&lat);
            pre.push(format!("taus = {}", list(&taus)));
            pre.push(format!("sigmas = {}", list(&sigmas)));
            write_text(out.as_deref(), &report.to_csv(&pre))?;
        }
        Command::Concentrate { seq, limit, epsilon, r0, rungs, out, sizes } => {
            let entries = seq
                .iter()
                .map(|p| {
                    Ok(match load(p)? {
                        Snapshot::State(s) => SequenceEntry::State(s),
                        Snapshot::Density(l, d) => SequenceEntry::Density(l, d),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let sequence = StateSequence::new(entries)?;
            let limit_density = match &limit {
                Some(p) => Some(snapshot_density(&load(p)?).1),
                None => None,
            };
            let ladder = radius_ladder(r0, rungs);
            let report = concentration::extract_atoms(&sequence, limit_density.as_ref(), epsilon, &ladder)?;
            let mut pre = lattice_lines(sequence.lattice());
            pre.push(format!("epsilon = {epsilon:e}"));
            pre.push(format!("entries = {}", sequence.len()));
            pre.push(format!("limit = {}", limit.is_some()));
            write_text(out.as_deref(), &report.to_text(&pre))?;
            if let Some(p) = sizes {
                write_text(Some(&p), &report.sizes_csv(&pre))?;
            }
        }
        Command::Blowup { input, epsilon, out, search_radius, max_radius, window_n, refine } => {
            let s = load_state(&input)?;
            let lat = &s.lattice;
            let d = density(&s);
            let search = Ball::new(lat.spec().position(d.argmax()), search_radius.unwrap_or(lat.spacing()));
            let max_r = max_radius.unwrap_or(lat.spec().half_period() - lat.spacing());
            match concentration::select_blowup_scale(lat, &d, &search, max_r, epsilon)? {
                BlowupScale::NoConcentration { max_mass } => {
                    eprintln!("no concentration: largest ball mass {max_mass:e} is below 3 epsilon / 4");
                    return Ok(ExitCode::from(2));
                }
                BlowupScale::Found { center, rho, mass, .. } => {
                    let window = concentration::Window { n: window_n, spacing: lat.spacing() / (rho * refine) };
                    let rescaled = concentration::blowup_rescale(&s, &center, rho, &window)?;
                    write_snapshot(&out, &Snapshot::State(rescaled))?;
                    println!("center = {}", list(&center));
                    println!("rho = {rho:.17e}");
                    println!("window_mass = {mass:.17e}");
                }
            }
        }
        Command::Synth { kind } => match kind {
            SynthKind::Bump { lattice, center, width, mass, out } => {
                let lat = Lattice::with_size(lattice.n, lattice.spacing)?;
                let b = DensityBump { center: point(&center)?, width, mass };
                let d = synth::bump_density(&lat, &[b], &[]);
                write_snapshot(&out, &Snapshot::Density(lat, d))?;
            }
            SynthKind::Sequence { lattice, center, width, mass, factors, background, prefix } => {
                let lat = Lattice::with_size(lattice.n, lattice.spacing)?;
                let b = DensityBump { center: point(&center)?, width, mass };
                let bg = if background > 0.0 { synth::smooth_background32(&lat, background) } else { Vec::new() };
                for (k, d) in synth::shrinking_sequence(&lat, &[b], &factors, &bg).into_iter().enumerate() {
                    let p = PathBuf::from(format!("{}-{k}.snap", prefix.display()));
                    write_snapshot(&p, &Snapshot::Density(lat.clone(), d))?;
                    println!("{}", p.display());
                }
                if !bg.is_empty() {
                    let p = PathBuf::from(format!("{}-limit.snap", prefix.display()));
                    let limit = DensityField { values: bg.iter().map(|q| q.powf(2.0 / 3.0)).collect() };
                    write_snapshot(&p, &Snapshot::Density(lat.clone(), limit))?;
                    println!("{}", p.display());
                }
            }
            SynthKind::Random { lattice, amplitude, seed, out } => {
                let lat = Lattice::with_size(lattice.n, lattice.spacing)?;
                let s = synth::band_limited_state(&lat, &BandLimited::new(amplitude, seed));
                write_snapshot(&out, &Snapshot::State(s))?;
            }
        },
        Command::Check { kind: CheckKind::Identities { samples, seed } } => {
            let sweep = identity_sweep(samples, seed);
            println!("samples = {}", sweep.samples);
            println!("seed = {}", sweep.seed);
            println!("max_identity_error = {:.3e}", sweep.max_identity_error);
            println!("identity_failures = {}", sweep.identity_failures);
            println!("quartic_violations = {}", sweep.quartic_violations);
            println!("min_quartic_slack = {:.3e}", sweep.min_quartic_slack);
            if !sweep.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    par::init_threads_from_env();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
