//! `report`: merge certify (and optionally squeeze) artifacts into a summary
//! table. The output depends only on the input files.

use std::fmt::Write as _;
use std::path::Path;

use dimcert_core::spectrum::{EnumerationStatus, SpectralData};
use dimcert_core::DimensionCertificate;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::commands::WorstRatios;
use crate::output::OutputDir;
use crate::{CliError, Invocation, Outcome, Subcommand, EXIT_OK};

/// Files `report` cannot do without.
pub const REQUIRED: [&str; 3] = ["estimates.json", "spectrum.json", "certificate.json"];

#[derive(Deserialize)]
struct EstimatesIn {
    estimates: EstimateFields,
    absorbing_time: Option<f64>,
}

#[derive(Deserialize)]
struct EstimateFields {
    c3: Option<f64>,
}

#[derive(Deserialize)]
struct SpectrumIn {
    spectral: SpectralData,
}

#[derive(Deserialize)]
struct CertificatesIn {
    certificates: Vec<DimensionCertificate>,
}

#[derive(Deserialize)]
struct SqueezeIn {
    worst: WorstRatios,
}

fn read<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(dir.join(name))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadArtifact {
        name: name.to_string(),
        message: e.to_string(),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub const SUMMARY_HEADER: &str = "kind,feasible,bound,factor,m_cut,k_m,rho1,rho_m,dichotomy,\
alpha,beta_free,t0,c3,absorbing_time,roots_complete,worst_p,worst_p_doubled,worst_q,worst_r,\
margin_p,margin_q,margin_r";

pub fn cmd_report(inv: &Invocation) -> Result<Outcome, CliError> {
    let dir = inv.out.as_path();
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingArtifacts(missing));
    }
    let est: EstimatesIn = read(dir, "estimates.json")?;
    let spec: SpectrumIn = read(dir, "spectrum.json")?;
    let certs: CertificatesIn = read(dir, "certificate.json")?;
    let squeeze: Option<SqueezeIn> = if dir.join("squeeze.json").is_file() {
        Some(read(dir, "squeeze.json")?)
    } else {
        None
    };
    let worst = squeeze.map(|s| s.worst).unwrap_or_default();
    let roots_complete = spec
        .spectral
        .enumeration
        .iter()
        .all(|s| *s != EnumerationStatus::Incomplete);
    let margin = |r: Option<f64>| r.map(|r| 1.0 - r);

    let mut csv = String::from(SUMMARY_HEADER);
    csv.push('\n');
    let mut txt = String::new();
    for c in &certs.certificates {
        let kind = match c.kind {
            dimcert_core::CertificateKind::Hausdorff => "hausdorff",
            dimcert_core::CertificateKind::Fractal => "fractal",
        };
        let factor = c.eta.or(c.zeta);
        let row = [
            kind.to_string(),
            c.feasible.to_string(),
            cell(c.bound()),
            cell(factor),
            c.m_cut.map_or_else(String::new, |m| m.to_string()),
            c.k_m.map_or_else(String::new, |k| k.to_string()),
            c.rho1.to_string(),
            cell(c.rho_m),
            cell(c.dichotomy),
            cell(c.alpha),
            cell(c.beta_free),
            cell(c.t0),
            cell(est.estimates.c3),
            cell(est.absorbing_time),
            roots_complete.to_string(),
            cell(worst.p),
            cell(worst.p_doubled),
            cell(worst.q),
            cell(worst.r),
            cell(margin(worst.p)),
            cell(margin(worst.q)),
            cell(margin(worst.r)),
        ];
        csv.push_str(&row.join(","));
        csv.push('\n');

        let _ = writeln!(txt, "{kind} certificate");
        match c.bound() {
            Some(d) if c.feasible => {
                let _ = writeln!(txt, "  dimension bound     {d:.6}");
                let _ = writeln!(
                    txt,
                    "  contraction factor  {:.6e} at cut m = {} (k_m = {})",
                    factor.unwrap_or(f64::NAN),
                    c.m_cut.unwrap_or(0),
                    c.k_m.unwrap_or(0)
                );
            }
            _ => {
                let _ = writeln!(txt, "  infeasible");
                for d in &c.diagnostics {
                    let _ = writeln!(txt, "  - {d}");
                }
            }
        }
    }
    let _ = writeln!(
        txt,
        "absorbing radius c3 {}  absorbing time {}",
        est.estimates.c3.map_or("n/a".into(), |v| format!("{v:.6}")),
        est.absorbing_time.map_or("n/a".into(), |v| format!("{v:.6}"))
    );
    if !roots_complete {
        let _ = writeln!(txt, "warning: root enumeration incomplete for some mode");
    }
    for (name, r) in [("P", worst.p), ("Q", worst.q), ("R", worst.r)] {
        if let Some(r) = r {
            let _ = writeln!(txt, "squeezing {name}: worst measured/bound {r:.4}");
        }
    }

    let mut out = OutputDir::create(dir)?;
    out.write("summary.csv", csv.as_bytes())?;
    out.write("summary.txt", txt.as_bytes())?;
    let manifest = out.finish(Subcommand::Report, None, inv.seed)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        manifest,
        messages: txt.lines().map(str::to_string).collect(),
    })
}
