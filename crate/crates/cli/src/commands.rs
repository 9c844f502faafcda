use std::path::Path;

use dimcert_core::estimates::{
    doubling_radii, AbsorptionReport, FarFieldReport,
};
use dimcert_core::export::{contraction_csv, encode_snapshot, farfield_csv, norms_csv};
use dimcert_core::solver::integrate_with;
use dimcert_core::spectrum::DichotomyEstimate;
use dimcert_core::squeezing::ContractionRow;
use dimcert_core::*;
use std::result::Result;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::OutputDir;
use crate::{CliError, Invocation, Outcome, Subcommand, EXIT_INFEASIBLE, EXIT_OK};

/// Smallest radius of the doubling grid used for far-field reports.
pub const FARFIELD_BASE_RADIUS: f64 = 0.5;

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

fn config_of(inv: &Invocation) -> Result<(Config, &Path), CliError> {
    let path = inv
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{} needs --config", inv.subcommand.name())))?;
    Ok((load_config(path)?, path))
}

/// Initial history of ensemble member `member`.
fn initial_history(cfg: &Config, seed: u64, member: u64) -> HistorySegment {
    let mut rng = SeededRng::for_member(seed, member);
    HistorySegment::from_spec(
        &cfg.run.initial,
        cfg.grid,
        cfg.params.tau,
        cfg.run.steps_per_delay,
        &mut rng,
    )
}

/// Segment-norm bound for the configured family of initial histories.
fn initial_bound(cfg: &Config, phi: &HistorySegment) -> f64 {
    match cfg.run.initial {
        InitialHistorySpec::RandomBumps { max_norm, .. } => max_norm.max(phi.norm()),
        _ => phi.norm(),
    }
}

#[derive(Serialize)]
struct EstimatesDoc<'a> {
    parameters: &'a ProblemParameters,
    grid: &'a Grid,
    initial_bound: f64,
    estimates: &'a EstimateSet,
    absorbing_time: Option<f64>,
    absorbing_time_note: Option<String>,
}

#[derive(Serialize)]
struct SpectrumDoc<'a> {
    spectral: &'a SpectralData,
    dichotomy: Option<&'a DichotomyEstimate>,
}

#[derive(Serialize)]
struct CertificateDoc<'a> {
    mode: CertificateMode,
    feasible: bool,
    certificates: &'a [DimensionCertificate],
}

fn absorbing(p: &ProblemParameters, est: &EstimateSet, bound: f64) -> (Option<f64>, Option<String>) {
    match absorbing_time(p, est, bound) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn dichotomy_options(cfg: &Config, seed: u64) -> DichotomyOptions {
    DichotomyOptions {
        samples: cfg.run.dichotomy_samples,
        seed,
        ..DichotomyOptions::default()
    }
}

/// Spectral partition at the configured cut, with the dichotomy constant
/// when the cut splits the spectrum.
fn spectral_data(
    cfg: &Config,
    seed: u64,
) -> Result<(SpectralData, Option<DichotomyEstimate>), CliError> {
    let run = &cfg.run;
    let mut sd = spectral_partition(
        &cfg.params,
        run.cutoff_radius,
        run.m_cut,
        run.modes,
        run.roots_per_mode,
    )?;
    let dich = if sd.splitting {
        let d = dichotomy_constant(&cfg.params, &sd, &dichotomy_options(cfg, seed))?;
        sd.dichotomy = Some(d.constant);
        Some(d)
    } else {
        None
    };
    Ok((sd, dich))
}

fn requested_kinds(mode: CertificateMode) -> Vec<CertificateKind> {
    match mode {
        CertificateMode::Hausdorff => vec![CertificateKind::Hausdorff],
        CertificateMode::Fractal => vec![CertificateKind::Fractal],
        CertificateMode::Both => vec![CertificateKind::Hausdorff, CertificateKind::Fractal],
    }
}

pub fn cmd_certify(inv: &Invocation) -> Result<Outcome, CliError> {
    let (cfg, path) = config_of(inv)?;
    let p = &cfg.params;
    let phi = initial_history(&cfg, inv.seed, 0);
    let est = compute_estimates(p, p.norm_g(), phi.last().norm());
    let bound = initial_bound(&cfg, &phi);
    let (t_d, note) = absorbing(p, &est, bound);
    let (sd, dich) = spectral_data(&cfg, inv.seed)?;

    let opts = OptimizerOptions {
        max_cut: sd.max_cut().min(OptimizerOptions::default().max_cut),
        refinement: 0,
        dichotomy: dichotomy_options(&cfg, inv.seed),
    };
    let certs = requested_kinds(cfg.run.certificate)
        .into_iter()
        .map(|kind| optimize_certificate(p, &sd, &est, kind, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let feasible = certs.iter().all(|c| c.feasible);

    let mut out = OutputDir::create(&inv.out)?;
    out.write_json(
        "estimates.json",
        &EstimatesDoc {
            parameters: p,
            grid: &cfg.grid,
            initial_bound: bound,
            estimates: &est,
            absorbing_time: t_d,
            absorbing_time_note: note,
        },
    )?;
    out.write_json(
        "spectrum.json",
        &SpectrumDoc {
            spectral: &sd,
            dichotomy: dich.as_ref(),
        },
    )?;
    out.write_json(
        "certificate.json",
        &CertificateDoc {
            mode: cfg.run.certificate,
            feasible,
            certificates: &certs,
        },
    )?;
    let manifest = out.finish(Subcommand::Certify, Some(path), inv.seed)?;

    let mut messages = Vec::new();
    for c in &certs {
        match c.bound() {
            Some(d) if c.feasible => messages.push(format!("{:?} dimension <= {d:.6}", c.kind)),
            _ => {
                messages.push(format!("{:?} certificate infeasible", c.kind));
                messages.extend(c.diagnostics.iter().map(|d| format!("  {d}")));
            }
        }
    }
    Ok(Outcome {
        exit_code: if feasible { EXIT_OK } else { EXIT_INFEASIBLE },
        manifest,
        messages,
    })
}

#[derive(Serialize)]
struct SimulateDoc {
    horizon: f64,
    steps: usize,
    dt: f64,
    initial_segment_norm: f64,
    absorbing_time: Option<f64>,
    absorption: Option<AbsorptionReport>,
    far_field: FarFieldReport,
    max_boundary_fraction: f64,
    snapshots: Vec<String>,
}

pub fn cmd_simulate(inv: &Invocation) -> Result<Outcome, CliError> {
    let (cfg, path) = config_of(inv)?;
    if inv.snapshot_every == Some(0) {
        return Err(CliError::Usage("--snapshot-every must be at least 1".into()));
    }
    let p = &cfg.params;
    let phi = initial_history(&cfg, inv.seed, 0);
    let est = compute_estimates(p, p.norm_g(), phi.last().norm());
    let (t_d, _) = absorbing(p, &est, initial_bound(&cfg, &phi));
    let horizon = cfg
        .run
        .horizon
        .unwrap_or_else(|| t_d.map_or(20.0 * p.tau, |t| t + 4.0));
    let sg = HeatSemigroup::new(cfg.grid, p.mu);
    let traj = integrate_with(&sg, &phi, horizon, p)?;

    let absorption = match t_d {
        Some(t) if t + 2.0 <= traj.end_time() => Some(verify_absorption(&traj, &est, t + 2.0)?),
        _ => None,
    };
    let radii = doubling_radii(FARFIELD_BASE_RADIUS, cfg.grid.half_length);
    let far_field = verify_far_field(&traj, cfg.run.far_field_eps, &radii)?;

    let mut out = OutputDir::create(&inv.out)?;
    out.write("norms.csv", norms_csv(&traj).as_bytes())?;
    out.write("farfield.csv", farfield_csv(&traj, &radii).as_bytes())?;
    let mut snapshots = Vec::new();
    if let Some(k) = inv.snapshot_every {
        for n in (0..=traj.steps()).step_by(k) {
            let name = format!("snapshots/step_{n:07}.bin");
            out.write(&name, &encode_snapshot(&traj.fields[n], traj.time(n)))?;
            snapshots.push(name);
        }
    }
    let doc = SimulateDoc {
        horizon,
        steps: traj.steps(),
        dt: traj.dt,
        initial_segment_norm: phi.norm(),
        absorbing_time: t_d,
        absorption,
        far_field,
        max_boundary_fraction: traj.max_boundary_fraction(),
        snapshots,
    };
    out.write_json("simulate.json", &doc)?;
    let manifest = out.finish(Subcommand::Simulate, Some(path), inv.seed)?;

    let mut messages = vec![format!(
        "integrated {} steps to t = {:.4}",
        traj.steps(),
        traj.end_time()
    )];
    if let Some(a) = &doc.absorption {
        messages.push(format!(
            "max segment norm after T_D + 2: {:.6} (c3 = {:.6})",
            a.max_segment_norm, a.bound
        ));
    }
    if doc.max_boundary_fraction > 1e-6 {
        messages.push(format!(
            "warning: {:.2e} of the mass reached the box edge; enlarge grid.half_length",
            doc.max_boundary_fraction
        ));
    }
    Ok(Outcome {
        exit_code: EXIT_OK,
        manifest,
        messages,
    })
}

pub fn cmd_spectrum(inv: &Invocation) -> Result<Outcome, CliError> {
    let (cfg, path) = config_of(inv)?;
    let (sd, dich) = spectral_data(&cfg, inv.seed)?;
    let mut out = OutputDir::create(&inv.out)?;
    out.write_json(
        "spectrum.json",
        &SpectrumDoc {
            spectral: &sd,
            dichotomy: dich.as_ref(),
        },
    )?;
    let manifest = out.finish(Subcommand::Spectrum, Some(path), inv.seed)?;
    let messages = vec![
        format!("rho_1 = {:.10}", sd.rho1),
        format!("cut {}: k_m = {}, rho_m = {:.10}", sd.m_cut, sd.k_m, sd.rho_m),
        match sd.dichotomy {
            Some(k) => format!("K_m = {k:.6}"),
            None => "no splitting at this cut".into(),
        },
    ];
    Ok(Outcome {
        exit_code: EXIT_OK,
        manifest,
        messages,
    })
}

/// Largest measured-to-bound ratio for each part over an ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, serde::Deserialize)]
pub struct WorstRatios {
    pub p: Option<f64>,
    pub p_doubled: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
}

impl WorstRatios {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a ContractionRow>) -> Self {
        let upd = |acc: &mut Option<f64>, m: Option<f64>, b: f64| {
            if let Some(m) = m {
                let r = m / b;
                *acc = Some(acc.map_or(r, |a: f64| a.max(r)));
            }
        };
        let mut w = WorstRatios::default();
        for row in rows {
            upd(&mut w.p, row.measured_p, row.bounds.bound_p);
            upd(&mut w.p_doubled, row.measured_p, row.bounds.bound_p_doubled);
            upd(&mut w.q, row.measured_q, row.bounds.bound_q);
            upd(&mut w.r, row.measured_r, row.bounds.bound_r);
        }
        w
    }
}

#[derive(Serialize)]
struct SqueezeDoc<'a> {
    inputs: &'a ContractionInputs,
    m_cut: usize,
    k_m: usize,
    cutoff_radius: f64,
    times: &'a [f64],
    pairs: usize,
    zero_difference_pairs: usize,
    worst: WorstRatios,
    /// Whether every P, Q, R ratio stayed within its bound plus 5%.
    within: [bool; 3],
}

pub fn cmd_squeeze(inv: &Invocation) -> Result<Outcome, CliError> {
    let (cfg, path) = config_of(inv)?;
    let p = &cfg.params;
    let (sd, _) = spectral_data(&cfg, inv.seed)?;
    if !sd.splitting {
        return Err(CliError::Infeasible(format!(
            "no spectral splitting at m_cut = {} (rho_m = {})",
            sd.m_cut, sd.rho_m
        )));
    }
    let est = compute_estimates(p, p.norm_g(), 0.0);
    let inputs = ContractionInputs::new(p, &sd, &est)?;
    let ps = ProjectionSet::new(cfg.grid, cfg.run.cutoff_radius, sd.k_m)?;
    let times = cfg.run.contraction_times_for(p.tau);

    let per_pair: Vec<Vec<ContractionRow>> = (0..cfg.run.ensemble as u64)
        .into_par_iter()
        .map(|i| {
            let phi = initial_history(&cfg, inv.seed, 2 * i);
            let psi = initial_history(&cfg, inv.seed, 2 * i + 1);
            measure_contraction(&phi, &psi, &times, p, &ps, &inputs)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<(usize, ContractionRow)> = per_pair
        .iter()
        .enumerate()
        .flat_map(|(i, rs)| rs.iter().map(move |r| (i, r.clone())))
        .collect();
    let worst = WorstRatios::from_rows(rows.iter().map(|(_, r)| r));
    let mut within = [true; 3];
    for (_, r) in &rows {
        for (w, ok) in within.iter_mut().zip(r.within()) {
            *w &= ok;
        }
    }
    let zero_difference_pairs = per_pair
        .iter()
        .filter(|rs| rs.first().is_some_and(|r| r.measured_p.is_none()))
        .count();

    let mut out = OutputDir::create(&inv.out)?;
    out.write("contraction.csv", contraction_csv(&rows).as_bytes())?;
    out.write_json(
        "squeeze.json",
        &SqueezeDoc {
            inputs: &inputs,
            m_cut: sd.m_cut,
            k_m: sd.k_m,
            cutoff_radius: cfg.run.cutoff_radius,
            times: &times,
            pairs: cfg.run.ensemble,
            zero_difference_pairs,
            worst,
            within,
        },
    )?;
    let manifest = out.finish(Subcommand::Squeeze, Some(path), inv.seed)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    let messages = vec![format!(
        "worst measured/bound: P {} (doubled coefficient {}), Q {}, R {}",
        fmt(worst.p),
        fmt(worst.p_doubled),
        fmt(worst.q),
        fmt(worst.r)
    )];
    Ok(Outcome {
        exit_code: EXIT_OK,
        manifest,
        messages,
    })
}
