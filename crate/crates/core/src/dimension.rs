//! Hausdorff and fractal dimension certificates, their free-parameter
//! search, and covering-number counts for finite-dimensional balls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::estimates::EstimateSet;
use crate::model::ProblemParameters;
use crate::spectrum::{dichotomy_constant, DichotomyOptions, SpectralData};
use crate::squeezing::ContractionInputs;

/// Contraction factor of the covering step for the Hausdorff bound:
/// `2K e^{rho_m t0} + (alpha + 2K L_f/gap) e^{(L_f+rho1) t0} + 2 sqrt(c2) e^{r t0}`.
pub fn eta(t0: f64, alpha: f64, inp: &ContractionInputs) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(argument("t0 must be positive"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(argument("alpha must lie in (0, 2)"));
    }
    let coupling = inp.coupling()?;
    Ok(2.0 * inp.km * (inp.rho_m * t0).exp()
        + (alpha + 2.0 * coupling) * ((inp.lf + inp.rho1) * t0).exp()
        + 2.0 * inp.c2.sqrt() * (inp.outer_rate() * t0).exp())
}

/// `(-ln k_m - k_m ln(2 + 4/alpha)) / ln(eta)` when `eta < 1`.
pub fn hausdorff_bound(alpha: f64, k_m: usize, eta_val: f64) -> Option<f64> {
    if !(eta_val < 1.0 && eta_val > 0.0) || k_m == 0 {
        return None;
    }
    let k = k_m as f64;
    Some((-k.ln() - k * (2.0 + 4.0 / alpha).ln()) / eta_val.ln())
}

/// Unit-time contraction factor for the fractal bound:
/// `beta e^{L_f+rho1} + K e^{rho_m} + K L_f/gap e^{L_f+rho1} + sqrt(c2) e^{r}`.
pub fn zeta(beta_free: f64, inp: &ContractionInputs) -> Result<f64> {
    zeta_at(beta_free, 1.0, inp)
}

/// The same four terms with every exponent multiplied by `t0`. The
/// certificate itself always uses `t0 = 1`; other values are for exploration.
pub fn zeta_at(beta_free: f64, t0: f64, inp: &ContractionInputs) -> Result<f64> {
    if !(beta_free > 0.0) {
        return Err(argument("beta_free must be positive"));
    }
    if !(t0 > 0.0) {
        return Err(argument("t0 must be positive"));
    }
    let coupling = inp.coupling()?;
    let grow = ((inp.lf + inp.rho1) * t0).exp();
    Ok(beta_free * grow
        + inp.km * (inp.rho_m * t0).exp()
        + coupling * grow
        + inp.c2.sqrt() * (inp.outer_rate() * t0).exp())
}

/// `(ln k_m + k_m ln(2 + 2/beta)) / (-ln zeta)` when `zeta < 1`.
pub fn fractal_bound(beta_free: f64, k_m: usize, zeta_val: f64) -> Option<f64> {
    if !(zeta_val < 1.0 && zeta_val > 0.0) || k_m == 0 {
        return None;
    }
    let k = k_m as f64;
    Some((k.ln() + k * (2.0 + 2.0 / beta_free).ln()) / (-zeta_val.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Hausdorff,
    Fractal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Largest spectral cut to try.
    pub max_cut: usize,
    /// Grid refinement level; level `r` evaluates all nested grids `0..=r`.
    pub refinement: u32,
    pub dichotomy: DichotomyOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_cut: 16,
            refinement: 0,
            dichotomy: DichotomyOptions::default(),
        }
    }
}

/// Per-cut summary kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSummary {
    pub m_cut: usize,
    pub k_m: usize,
    pub rho_m: f64,
    pub dichotomy: Option<f64>,
    /// Smallest contraction factor (`eta` or `zeta`) seen at this cut.
    pub best_factor: Option<f64>,
    pub best_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub kind: CertificateKind,
    pub feasible: bool,
    pub eta: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta_free: Option<f64>,
    pub t0: Option<f64>,
    pub m_cut: Option<usize>,
    pub k_m: Option<usize>,
    pub rho1: f64,
    pub rho_m: Option<f64>,
    pub dichotomy: Option<f64>,
    pub hausdorff_bound: Option<f64>,
    pub fractal_bound: Option<f64>,
    /// Smallest contraction factor found anywhere, feasible or not.
    pub best_factor: Option<f64>,
    /// `alpha` at the top of its grid, close to the excluded endpoint 2.
    pub alpha_near_boundary: bool,
    pub refinement: u32,
    pub cuts: Vec<CutSummary>,
    pub diagnostics: Vec<String>,
}

impl DimensionCertificate {
    pub fn bound(&self) -> Option<f64> {
        match self.kind {
            CertificateKind::Hausdorff => self.hausdorff_bound,
            CertificateKind::Fractal => self.fractal_bound,
        }
    }
}

const T0_RANGE: (f64, f64) = (0.1, 20.0);
const BETA_RANGE: (f64, f64) = (1e-3, 1e2);
const COORDINATE_ROUNDS: usize = 3;
const ALPHA_STEP: f64 = 0.1;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (hi / lo).powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

fn alpha_grid(level: u32) -> Vec<f64> {
    let per = 1usize << level;
    let step = ALPHA_STEP / per as f64;
    (1..20 * per).map(|j| j as f64 * step).collect()
}

/// Best point for one cut: `(bound, factor, x, y)` where `(x, y)` is
/// `(t0, alpha)` or `(1, beta_free)`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    bound: f64,
    factor: f64,
    x: f64,
    y: f64,
}

fn evaluate(kind: CertificateKind, inp: &ContractionInputs, k_m: usize, x: f64, y: f64) -> Option<(f64, Option<f64>)> {
    match kind {
        CertificateKind::Hausdorff => {
            let e = eta(x, y, inp).ok()?;
            Some((e, hausdorff_bound(y, k_m, e)))
        }
        CertificateKind::Fractal => {
            let z = zeta(y, inp).ok()?;
            Some((z, fractal_bound(y, k_m, z)))
        }
    }
}

/// Grid search at one refinement level followed by coordinate halving.
/// Returns the best feasible candidate and the smallest factor seen.
fn search_level(
    kind: CertificateKind,
    inp: &ContractionInputs,
    k_m: usize,
    level: u32,
) -> (Option<Candidate>, Option<f64>) {
    let per = 1usize << level;
    let (xs, ys, log_step_y) = match kind {
        CertificateKind::Hausdorff => (
            log_grid(T0_RANGE.0, T0_RANGE.1, 24 * per + 1),
            alpha_grid(level),
            None,
        ),
        CertificateKind::Fractal => {
            let n = 24 * per + 1;
            (
                vec![1.0],
                log_grid(BETA_RANGE.0, BETA_RANGE.1, n),
                Some((BETA_RANGE.1 / BETA_RANGE.0).ln() / (n - 1) as f64),
            )
        }
    };
    let mut best: Option<Candidate> = None;
    let mut min_factor: Option<f64> = None;
    let mut consider = |x: f64, y: f64, best: &mut Option<Candidate>| {
        if let Some((factor, bound)) = evaluate(kind, inp, k_m, x, y) {
            min_factor = Some(min_factor.map_or(factor, |m: f64| m.min(factor)));
            if let Some(b) = bound {
                if best.map_or(true, |c| b < c.bound) {
                    *best = Some(Candidate {
                        bound: b,
                        factor,
                        x,
                        y,
                    });
                }
            }
        }
    };
    for &x in &xs {
        for &y in &ys {
            consider(x, y, &mut best);
        }
    }
    if let Some(start) = best {
        let mut cur = start;
        let mut step_x = (T0_RANGE.1 / T0_RANGE.0).ln() / (24 * per) as f64 / 2.0;
        let mut step_y = match kind {
            CertificateKind::Hausdorff => ALPHA_STEP / per as f64 / 2.0,
            CertificateKind::Fractal => log_step_y.unwrap() / 2.0,
        };
        for _ in 0..COORDINATE_ROUNDS {
            let mut trial = Vec::with_capacity(4);
            match kind {
                CertificateKind::Hausdorff => {
                    trial.push((cur.x * (-step_x).exp(), cur.y));
                    trial.push((cur.x * step_x.exp(), cur.y));
                    trial.push((cur.x, cur.y - step_y));
                    trial.push((cur.x, cur.y + step_y));
                }
                CertificateKind::Fractal => {
                    trial.push((1.0, cur.y * (-step_y).exp()));
                    trial.push((1.0, cur.y * step_y.exp()));
                }
            }
            let mut local = Some(cur);
            for (x, y) in trial {
                consider(x, y, &mut local);
            }
            cur = local.unwrap();
            step_x *= 0.5;
            step_y *= 0.5;
        }
        best = Some(cur);
    }
    (best, min_factor)
}

/// Search cuts and free parameters for the smallest finite dimension bound.
pub fn optimize_certificate(
    p: &ProblemParameters,
    spectral: &SpectralData,
    est: &EstimateSet,
    kind: CertificateKind,
    opts: &OptimizerOptions,
) -> Result<DimensionCertificate> {
    let mut cert = DimensionCertificate {
        kind,
        feasible: false,
        eta: None,
        zeta: None,
        alpha: None,
        beta_free: None,
        t0: None,
        m_cut: None,
        k_m: None,
        rho1: spectral.rho1,
        rho_m: None,
        dichotomy: None,
        hausdorff_bound: None,
        fractal_bound: None,
        best_factor: None,
        alpha_near_boundary: false,
        refinement: opts.refinement,
        cuts: Vec::new(),
        diagnostics: Vec::new(),
    };
    if !est.dissipative() {
        cert.diagnostics.push(format!(
            "condition sigma(L_f+1)e^{{mu tau}} - mu < 0 fails: beta = {:.6e}, mu = {:.6e}",
            est.beta, p.mu
        ));
        return Ok(cert);
    }
    let floor = -50.0 / p.tau;
    let max_cut = opts.max_cut.min(spectral.max_cut());
    let cuts: Vec<usize> = (1..=max_cut)
        .take_while(|&m| spectral.groups[m - 1].re >= floor)
        .collect();

    let per_cut: Vec<Result<(CutSummary, Option<Candidate>)>> = cuts
        .par_iter()
        .map(|&m| {
            let mut sd = spectral.with_cut(m)?;
            let mut summary = CutSummary {
                m_cut: m,
                k_m: sd.k_m,
                rho_m: sd.rho_m,
                dichotomy: None,
                best_factor: None,
                best_bound: None,
            };
            if !sd.splitting {
                return Ok((summary, None));
            }
            let km = dichotomy_constant(p, &sd, &opts.dichotomy)?.constant;
            sd.dichotomy = Some(km);
            summary.dichotomy = Some(km);
            let inp = ContractionInputs::new(p, &sd, est)?;
            if inp.coupling().is_err() {
                return Ok((summary, None));
            }
            let mut best: Option<Candidate> = None;
            for level in 0..=opts.refinement {
                let (cand, min_factor) = search_level(kind, &inp, sd.k_m, level);
                if let Some(f) = min_factor {
                    summary.best_factor = Some(summary.best_factor.map_or(f, |g: f64| g.min(f)));
                }
                if let Some(c) = cand {
                    if best.map_or(true, |b| c.bound < b.bound) {
                        best = Some(c);
                    }
                }
            }
            summary.best_bound = best.map(|c| c.bound);
            Ok((summary, best))
        })
        .collect();

    let mut winner: Option<(usize, Candidate)> = None;
    for r in per_cut {
        let (summary, cand) = r?;
        if let Some(f) = summary.best_factor {
            cert.best_factor = Some(cert.best_factor.map_or(f, |g: f64| g.min(f)));
        }
        if let Some(c) = cand {
            if winner.map_or(true, |(_, w)| c.bound < w.bound) {
                winner = Some((cert.cuts.len(), c));
            }
        }
        cert.cuts.push(summary);
    }

    match winner {
        None => {
            cert.diagnostics.push(match kind {
                CertificateKind::Hausdorff => format!(
                    "no (cut, t0, alpha) on the search grid gives eta < 1; smallest eta = {}",
                    fmt_opt(cert.best_factor)
                ),
                CertificateKind::Fractal => format!(
                    "no (cut, beta) on the search grid gives zeta < 1; smallest zeta = {}",
                    fmt_opt(cert.best_factor)
                ),
            });
            if cuts.is_empty() {
                cert.diagnostics
                    .push("no spectral cut with real part inside the search window".into());
            } else if cert.cuts.iter().all(|c| c.dichotomy.is_none()) {
                cert.diagnostics
                    .push("no cut has rho_m < 0, so no dichotomy constant exists".into());
            }
        }
        Some((idx, c)) => {
            let summary = &cert.cuts[idx];
            cert.feasible = true;
            cert.m_cut = Some(summary.m_cut);
            cert.k_m = Some(summary.k_m);
            cert.rho_m = Some(summary.rho_m);
            cert.dichotomy = summary.dichotomy;
            match kind {
                CertificateKind::Hausdorff => {
                    cert.eta = Some(c.factor);
                    cert.t0 = Some(c.x);
                    cert.alpha = Some(c.y);
                    cert.hausdorff_bound = Some(c.bound);
                    cert.alpha_near_boundary = c.y >= 2.0 - ALPHA_STEP - 1e-12;
                    if cert.alpha_near_boundary {
                        cert.diagnostics.push(format!(
                            "optimal alpha = {} is close to the excluded endpoint 2",
                            c.y
                        ));
                    }
                }
                CertificateKind::Fractal => {
                    cert.zeta = Some(c.factor);
                    cert.t0 = Some(1.0);
                    cert.beta_free = Some(c.y);
                    cert.fractal_bound = Some(c.bound);
                }
            }
        }
    }
    Ok(cert)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

/// `ceil(m 2^m (1 + r1/r2)^m)`: cover count for a radius-`r1` ball in `R^m`
/// by radius-`r2` balls.
pub fn covering_bound(m: usize, r1: f64, r2: f64) -> Result<u64> {
    if m == 0 {
        return Err(argument("dimension m must be at least 1"));
    }
    if !(r2 > 0.0 && r1 > r2) {
        return Err(argument(format!("need r1 > r2 > 0, got r1 = {r1}, r2 = {r2}")));
    }
    let mf = m as f64;
    let v = mf * 2f64.powi(m as i32) * (1.0 + r1 / r2).powf(mf);
    if !v.is_finite() || v >= u64::MAX as f64 {
        return Err(Error::Argument("covering bound overflows u64".into()));
    }
    Ok(v.ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallNorm {
    Sup,
    Euclidean,
}

/// Count of a lattice covering of the radius-`r1` ball by radius-`r2` balls
/// in dimension 1 or 2. Lattice cells that miss the big ball are dropped.
pub fn covering_bruteforce(m: usize, r1: f64, r2: f64, norm: BallNorm) -> Result<u64> {
    if !(r2 > 0.0 && r1 > 0.0) {
        return Err(argument("radii must be positive"));
    }
    match m {
        1 => Ok((r1 / r2 - 1e-12).ceil().max(1.0) as u64),
        2 => {
            // Cells of side s are contained in a small ball centred on them:
            // s = 2 r2 for the sup norm, s = sqrt(2) r2 for the Euclidean norm.
            let s = match norm {
                BallNorm::Sup => 2.0 * r2,
                BallNorm::Euclidean => std::f64::consts::SQRT_2 * r2,
            };
            let per_side = ((2.0 * r1) / s - 1e-12).ceil().max(1.0) as i64;
            let origin = -0.5 * per_side as f64 * s;
            let mut count = 0u64;
            for i in 0..per_side {
                for j in 0..per_side {
                    let (x0, y0) = (origin + i as f64 * s, origin + j as f64 * s);
                    let (x1, y1) = (x0 + s, y0 + s);
                    let hits = match norm {
                        BallNorm::Sup => true,
                        BallNorm::Euclidean => {
                            let cx = 0.0f64.clamp(x0, x1);
                            let cy = 0.0f64.clamp(y0, y1);
                            cx * cx + cy * cy <= r1 * r1
                        }
                    };
                    if hits {
                        count += 1;
                    }
                }
            }
            Ok(count)
        }
        _ => Err(argument("brute-force covering supports m = 1 or 2")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> ContractionInputs {
        ContractionInputs::synthetic(6.0, 0.1, 0.1, 0.5, -2.0, -6.0, 1.0)
    }

    #[test]
    fn eta_example() {
        let e = eta(1.0, 0.5, &synthetic()).unwrap();
        assert!((e - 0.4595).abs() < 1e-3, "{e}");
        let d = hausdorff_bound(0.5, 3, e).unwrap();
        assert!((d - 10.3).abs() < 0.05, "{d}");
    }

    #[test]
    fn eta_rejects_bad_arguments() {
        assert!(eta(0.0, 0.5, &synthetic()).is_err());
        assert!(eta(1.0, 2.0, &synthetic()).is_err());
    }

    #[test]
    fn fractal_example() {
        let d = fractal_bound(2.0, 1, 0.5).unwrap();
        assert!((d - 3f64.ln() / 2f64.ln()).abs() < 1e-15);
        assert!(fractal_bound(2.0, 1, 1.0).is_none());
        assert!(hausdorff_bound(0.5, 1, 1.0).is_none());
    }

    #[test]
    fn covering_examples() {
        assert_eq!(covering_bound(2, 2.0, 1.0).unwrap(), 72);
        assert_eq!(covering_bound(1, 2.0, 1.0).unwrap(), 6);
        assert!(covering_bound(1, 1.0, 1.0).is_err());
        assert_eq!(covering_bruteforce(1, 2.0, 1.0, BallNorm::Sup).unwrap(), 2);
    }
}
