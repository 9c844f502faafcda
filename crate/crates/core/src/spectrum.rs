//! Linear spectral data of the delayed equation restricted to the ball
//! `|x| < K`.
//!
//! Substituting `a(t) e_m(x)` with a Dirichlet eigenfunction `e_m` into the
//! linearized equation `v_t = v_xx - mu v + sigma v(t - tau)` leaves the
//! scalar delay equation `a' = -(mu + mu_m) a + sigma a(t - tau)`, whose
//! exponential solutions `e^{lambda t}` satisfy
//!
//! ```text
//! h(lambda) = lambda + mu + mu_m - sigma e^{-lambda tau} = 0.
//! ```
//!
//! On the real axis `h` is strictly increasing, so there is exactly one real
//! root (for `sigma > 0`). Writing `lambda = x + iy`, the imaginary part of
//! `h` is `y + sigma e^{-x tau} sin(y tau)`, which cannot vanish for
//! `0 < |y| <= pi/tau` or on any line `y = j pi / tau`. Upper half-plane
//! roots therefore live in the strips `(2k-1) pi/tau < y < 2k pi/tau`, and
//! the lines between strips are safe contour edges. Roots are counted with
//! the argument principle on one rectangle per strip, isolated by bisection
//! and polished with Newton's method.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::model::ProblemParameters;
use crate::rng::SeededRng;

/// Which characteristic equation the roots solve, copied into reports.
pub const CHARACTERISTIC_FORM_NOTE: &str = "roots solve lambda + mu + mu_{m,K} - sigma e^{-lambda tau} = 0; \
     the form mu_{m,K}^2 - (lambda + mu - sigma e^{-lambda tau}) = 0 is not used because \
     it disagrees with pure heat decay at sigma = 0";

/// Residual every returned root must satisfy.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Safety factor applied to the sampled dichotomy ratio.
pub const DICHOTOMY_SAFETY: f64 = 1.25;

/// `(m pi / (2K))^2` for `m = 1..=count`: Dirichlet eigenvalues of `-d²/dx²`
/// on `(-K, K)`.
pub fn dirichlet_eigenvalues(k: f64, count: usize, n_dim: usize) -> Result<Vec<f64>> {
    if n_dim != 1 {
        return Err(Error::UnsupportedDimension(n_dim));
    }
    if count == 0 {
        return Err(argument("count must be at least 1"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(argument("K must be positive"));
    }
    Ok((1..=count)
        .map(|m| {
            let q = m as f64 * std::f64::consts::PI / (2.0 * k);
            q * q
        })
        .collect())
}

/// The characteristic function for decay `a = mu + mu_m`.
#[derive(Debug, Clone, Copy)]
pub struct Characteristic {
    pub a: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl Characteristic {
    pub fn new(p: &ProblemParameters, mode_eig: f64) -> Self {
        Self {
            a: p.mu + mode_eig,
            sigma: p.sigma,
            tau: p.tau,
        }
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z + self.a - self.sigma * (-z * self.tau).exp()
    }

    #[inline]
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        1.0 + self.sigma * self.tau * (-z * self.tau).exp()
    }

    #[inline]
    fn eval_real(&self, x: f64) -> f64 {
        x + self.a - self.sigma * (-x * self.tau).exp()
    }

    /// The unique real root, by bracketing bisection followed by a guarded
    /// Newton polish.
    pub fn real_root(&self) -> f64 {
        if self.sigma == 0.0 {
            return -self.a;
        }
        let mut lo = -self.a;
        let mut step = 1.0;
        let mut hi = lo + step;
        while self.eval_real(hi) <= 0.0 {
            lo = hi;
            step *= 2.0;
            hi = lo + step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval_real(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..4 {
            let d = 1.0 + self.sigma * self.tau * (-x * self.tau).exp();
            let nx = x - self.eval_real(x) / d;
            if !(nx.is_finite()) {
                break;
            }
            x = nx;
        }
        x
    }

    fn newton(&self, z0: Complex64, iters: usize) -> Option<Complex64> {
        let mut z = z0;
        for _ in 0..iters {
            let dz = self.eval(z) / self.derivative(z);
            if !(dz.re.is_finite() && dz.im.is_finite()) {
                return None;
            }
            z -= dz;
            if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        // A couple of extra steps settle the last bits.
        for _ in 0..2 {
            let dz = self.eval(z) / self.derivative(z);
            if dz.re.is_finite() && dz.im.is_finite() {
                z -= dz;
            }
        }
        (self.eval(z).norm() <= ROOT_RESIDUAL_TOL).then_some(z)
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack
            && z.re <= self.x1 + slack
            && z.im >= self.y0 - slack
            && z.im <= self.y1 + slack
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }
}

#[derive(Debug)]
struct ContourHit;

/// Total change of `arg h` along the segment `a -> b`, refining until
/// consecutive samples differ by less than `pi/4`.
fn arg_change(
    ch: &Characteristic,
    a: Complex64,
    b: Complex64,
    ha: Complex64,
    hb: Complex64,
    depth: u32,
) -> std::result::Result<f64, ContourHit> {
    let d = (hb / ha).arg();
    if d.abs() < std::f64::consts::FRAC_PI_4 {
        return Ok(d);
    }
    if depth > 48 {
        return Err(ContourHit);
    }
    let m = 0.5 * (a + b);
    let hm = ch.eval(m);
    if hm.norm() <= 1e-9 * (1.0 + m.norm()) {
        return Err(ContourHit);
    }
    Ok(arg_change(ch, a, m, ha, hm, depth + 1)? + arg_change(ch, m, b, hm, hb, depth + 1)?)
}

/// Number of zeros of `h` inside `r` (argument principle).
fn count_zeros(ch: &Characteristic, r: &Rect) -> std::result::Result<usize, ContourHit> {
    let corners = [
        Complex64::new(r.x0, r.y0),
        Complex64::new(r.x1, r.y0),
        Complex64::new(r.x1, r.y1),
        Complex64::new(r.x0, r.y1),
    ];
    let mut total = 0.0;
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        // Start each edge from a fixed subdivision so no fast rotation is
        // missed between two far-apart samples.
        const PIECES: usize = 32;
        let mut prev = a;
        let mut hprev = ch.eval(a);
        if hprev.norm() <= 1e-9 * (1.0 + a.norm()) {
            return Err(ContourHit);
        }
        for j in 1..=PIECES {
            let z = a + (b - a) * (j as f64 / PIECES as f64);
            let hz = ch.eval(z);
            if hz.norm() <= 1e-9 * (1.0 + z.norm()) {
                return Err(ContourHit);
            }
            total += arg_change(ch, prev, z, hprev, hz, 0)?;
            prev = z;
            hprev = hz;
        }
    }
    let w = total / std::f64::consts::TAU;
    let n = w.round();
    if (w - n).abs() > 0.1 || n < 0.0 {
        return Err(ContourHit);
    }
    Ok(n as usize)
}

const SPLIT_OFFSETS: [f64; 4] = [0.5, 0.4871, 0.5173, 0.4519];

/// Locate the `n` zeros inside `r`.
fn isolate(ch: &Characteristic, r: Rect, n: usize, depth: u32, out: &mut Vec<Complex64>) -> bool {
    if n == 0 {
        return true;
    }
    if n == 1 {
        if let Some(z) = ch.newton(r.center(), 60) {
            if r.contains(z, 1e-9 * (1.0 + z.norm())) {
                out.push(z);
                return true;
            }
        }
    }
    if depth > 80 || r.diameter() < 1e-12 {
        return false;
    }
    let split_x = (r.x1 - r.x0) >= (r.y1 - r.y0);
    for off in SPLIT_OFFSETS {
        let (a, b) = if split_x {
            let xm = r.x0 + off * (r.x1 - r.x0);
            (Rect { x1: xm, ..r }, Rect { x0: xm, ..r })
        } else {
            let ym = r.y0 + off * (r.y1 - r.y0);
            (Rect { y1: ym, ..r }, Rect { y0: ym, ..r })
        };
        let (na, nb) = match (count_zeros(ch, &a), count_zeros(ch, &b)) {
            (Ok(na), Ok(nb)) => (na, nb),
            _ => continue,
        };
        if na + nb != n {
            continue;
        }
        return isolate(ch, a, na, depth + 1, out) && isolate(ch, b, nb, depth + 1, out);
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationStatus {
    /// The requested number of roots was found.
    Complete,
    /// The equation has fewer roots than requested and all were returned
    /// (this happens for `sigma = 0`, where the only root is real).
    Exhausted,
    /// Fewer roots than requested were located inside the search window.
    Incomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl Root {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub requested: usize,
    pub status: EnumerationStatus,
}

/// Bounds of the complex search window for delay `tau`.
pub fn search_window(tau: f64) -> (f64, f64, f64) {
    (-50.0 / tau, 5.0, 20.0 * std::f64::consts::PI / tau)
}

/// The `count` rightmost roots (each member of a conjugate pair counts
/// separately), by decreasing real part; among equal real parts the one with
/// positive imaginary part comes first.
pub fn characteristic_roots(
    mode_eig: f64,
    p: &ProblemParameters,
    count: usize,
) -> Result<RootSet> {
    if count == 0 {
        return Err(argument("count must be at least 1"));
    }
    let ch = Characteristic::new(p, mode_eig);
    let residual = |z: Complex64| ch.eval(z).norm();
    let x = ch.real_root();
    let mut roots = vec![Root {
        re: x,
        im: 0.0,
        residual: residual(Complex64::new(x, 0.0)),
    }];
    if ch.sigma == 0.0 {
        let status = if count == 1 {
            EnumerationStatus::Complete
        } else {
            EnumerationStatus::Exhausted
        };
        return Ok(RootSet {
            roots,
            requested: count,
            status,
        });
    }

    let (xlo, xhi, ymax) = search_window(p.tau);
    let pi_tau = std::f64::consts::PI / p.tau;
    let mut k = 1;
    let mut broken = false;
    while roots.len() < count && (2 * k) as f64 * pi_tau <= ymax * (1.0 + 1e-12) {
        let strip = Rect {
            x0: xlo,
            x1: xhi,
            y0: (2 * k - 1) as f64 * pi_tau,
            y1: (2 * k) as f64 * pi_tau,
        };
        let n = match count_zeros(&ch, &strip) {
            Ok(n) => n,
            Err(ContourHit) => {
                broken = true;
                break;
            }
        };
        if n == 0 {
            // Real parts decrease along the strips; nothing further right.
            break;
        }
        let mut found = Vec::new();
        if !isolate(&ch, strip, n, 0, &mut found) {
            broken = true;
            break;
        }
        for z in found {
            let r = residual(z);
            roots.push(Root {
                re: z.re,
                im: z.im,
                residual: r,
            });
            roots.push(Root {
                re: z.re,
                im: -z.im,
                residual: residual(z.conj()),
            });
        }
        k += 1;
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let status = if roots.len() >= count && !broken {
        EnumerationStatus::Complete
    } else {
        EnumerationStatus::Incomplete
    };
    roots.truncate(count);
    Ok(RootSet {
        roots,
        requested: count,
        status,
    })
}

/// A root tagged with its spatial mode (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRoot {
    pub mode: usize,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

/// Distinct real part with the number of roots sharing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootGroup {
    pub re: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub cutoff_radius: f64,
    pub eigenvalues: Vec<f64>,
    pub roots: Vec<ModeRoot>,
    pub groups: Vec<RootGroup>,
    pub enumeration: Vec<EnumerationStatus>,
    pub m_cut: usize,
    pub k_m: usize,
    pub rho1: f64,
    pub rho_m: f64,
    /// `rho_m < 0`; certificates need it.
    pub splitting: bool,
    /// Dichotomy constant, once estimated.
    pub dichotomy: Option<f64>,
    pub note: String,
}

impl SpectralData {
    /// Same spectrum, different cut. Fails when fewer than `m_cut` distinct
    /// real parts were computed.
    pub fn with_cut(&self, m_cut: usize) -> Result<SpectralData> {
        if m_cut == 0 || m_cut > self.groups.len() {
            return Err(argument(format!(
                "m_cut = {m_cut} but only {} distinct real parts were computed",
                self.groups.len()
            )));
        }
        let k_m = self.groups[..m_cut].iter().map(|g| g.multiplicity).sum();
        let rho_m = self.groups[m_cut - 1].re;
        Ok(SpectralData {
            m_cut,
            k_m,
            rho_m,
            splitting: rho_m < 0.0,
            dichotomy: None,
            ..self.clone()
        })
    }

    /// Number of distinct real parts available as cuts.
    pub fn max_cut(&self) -> usize {
        self.groups.len()
    }
}

fn same_real_part(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Roots of the first `modes` spatial modes on `(-K, K)`, merged and grouped
/// by real part, with the cut after the `m_cut`-th distinct real part.
pub fn spectral_partition(
    p: &ProblemParameters,
    k: f64,
    m_cut: usize,
    modes: usize,
    roots_per_mode: usize,
) -> Result<SpectralData> {
    if m_cut == 0 || modes < 1 {
        return Err(argument("need modes >= m_cut >= 1"));
    }
    let eigenvalues = dirichlet_eigenvalues(k, modes, p.spatial_dim)?;
    let mut roots = Vec::new();
    let mut enumeration = Vec::with_capacity(modes);
    for (i, &eig) in eigenvalues.iter().enumerate() {
        let set = characteristic_roots(eig, p, roots_per_mode)?;
        enumeration.push(set.status);
        roots.extend(set.roots.iter().map(|r| ModeRoot {
            mode: i + 1,
            re: r.re,
            im: r.im,
            residual: r.residual,
        }));
    }
    roots.sort_by(|a, b| {
        b.re
            .total_cmp(&a.re)
            .then(b.im.total_cmp(&a.im))
            .then(a.mode.cmp(&b.mode))
    });
    if roots.iter().all(|r| r.re >= 0.0) {
        return Err(Error::NoSplitting);
    }
    let mut groups: Vec<RootGroup> = Vec::new();
    for r in &roots {
        match groups.last_mut() {
            Some(g) if same_real_part(g.re, r.re) => g.multiplicity += 1,
            _ => groups.push(RootGroup {
                re: r.re,
                multiplicity: 1,
            }),
        }
    }
    let base = SpectralData {
        cutoff_radius: k,
        eigenvalues,
        rho1: groups[0].re,
        roots,
        groups,
        enumeration,
        m_cut: 1,
        k_m: 0,
        rho_m: 0.0,
        splitting: false,
        dichotomy: None,
        note: CHARACTERISTIC_FORM_NOTE.to_string(),
    };
    base.with_cut(m_cut)
}

/// Solution of `a' = -(mu + mu_m) a + sigma a(t - tau)` on the step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrajectory {
    pub history: Vec<f64>,
    /// `values[n] = a(n dt)`, `values[0]` equals the last history sample.
    pub values: Vec<f64>,
    pub dt: f64,
}

impl ScalarTrajectory {
    fn at(&self, n: isize) -> f64 {
        let s = self.history.len() as isize - 1;
        if n >= 0 {
            self.values[n as usize]
        } else {
            self.history[(n + s) as usize]
        }
    }
}

/// Integrate one spatial mode of the linearized equation with the same
/// exponential-trapezoid rule as the field solver. `mode_history` holds
/// `steps_per_delay + 1` samples on `[-tau, 0]`.
pub fn linear_delay_evolve(
    mode_history: &[f64],
    p: &ProblemParameters,
    mode_eig: f64,
    horizon: f64,
) -> Result<ScalarTrajectory> {
    if mode_history.len() < 2 {
        return Err(argument("history needs at least two samples"));
    }
    if !(horizon >= 0.0) {
        return Err(argument("horizon must be nonnegative"));
    }
    let s = mode_history.len() - 1;
    let dt = p.tau / s as f64;
    let nsteps = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
    let decay = (-(p.mu + mode_eig) * dt).exp();
    let half = 0.5 * dt * p.sigma;
    let mut values = Vec::with_capacity(nsteps + 1);
    values.push(mode_history[s]);
    for n in 0..nsteps {
        let d_now = if n < s { mode_history[n] } else { values[n - s] };
        let d_next = if n + 1 < s {
            mode_history[n + 1]
        } else {
            values[n + 1 - s]
        };
        let next = decay * (values[n] + half * d_now) + half * d_next;
        values.push(next);
    }
    Ok(ScalarTrajectory {
        history: mode_history.to_vec(),
        values,
        dt,
    })
}

/// Average growth rate of `ln |a|` between two step times.
pub fn decay_rate(traj: &ScalarTrajectory, t1: f64, t2: f64) -> Result<f64> {
    let n1 = (t1 / traj.dt).round() as usize;
    let n2 = (t2 / traj.dt).round() as usize;
    if n2 <= n1 || n2 >= traj.values.len() {
        return Err(argument("rate window outside the trajectory"));
    }
    let (a1, a2) = (traj.values[n1].abs(), traj.values[n2].abs());
    Ok((a2.ln() - a1.ln()) / ((n2 - n1) as f64 * traj.dt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyEstimate {
    /// Safety factor times the sampled maximum.
    pub constant: f64,
    pub sample_max: f64,
    pub safety_factor: f64,
    pub samples: usize,
    /// Spatial modes the random histories were supported on.
    pub modes: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub steps_per_delay: usize,
}

/// Settings for [`dichotomy_constant`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyOptions {
    pub samples: usize,
    /// How many modes beyond the cut carry random data.
    pub extra_modes: usize,
    pub t_max: f64,
    pub t_points: usize,
    pub steps_per_delay: usize,
    pub seed: u64,
}

impl Default for DichotomyOptions {
    fn default() -> Self {
        Self {
            samples: 16,
            extra_modes: 8,
            t_max: 20.0,
            t_points: 40,
            steps_per_delay: 64,
            seed: 0,
        }
    }
}

/// Sampled estimate of the smallest `K_m` with
/// `‖U(t) x‖_C <= K_m e^{rho_m t} ‖x‖_C` for histories `x` living on the
/// spatial modes beyond the first `k_m`. Segment norms are taken in the
/// orthonormal Dirichlet basis, `sup_theta (sum_j a_j(theta)^2)^{1/2}`.
pub fn dichotomy_constant(
    p: &ProblemParameters,
    spectral: &SpectralData,
    opts: &DichotomyOptions,
) -> Result<DichotomyEstimate> {
    if !spectral.splitting {
        return Err(argument("dichotomy constant needs rho_m < 0"));
    }
    if opts.samples == 0 || opts.extra_modes == 0 || opts.steps_per_delay == 0 {
        return Err(argument("samples, extra_modes and steps_per_delay must be positive"));
    }
    let first = spectral.k_m + 1;
    let modes: Vec<usize> = (first..first + opts.extra_modes).collect();
    let eigs = dirichlet_eigenvalues(spectral.cutoff_radius, first + opts.extra_modes - 1, 1)?;
    let s = opts.steps_per_delay;
    let dt = p.tau / s as f64;

    let mut t_grid = vec![0.0];
    let t_min = dt.max(1e-2);
    for i in 0..opts.t_points {
        let t = t_min * (opts.t_max / t_min).powf(i as f64 / (opts.t_points - 1).max(1) as f64);
        let snapped = (t / dt).round() * dt;
        if snapped > *t_grid.last().unwrap() {
            t_grid.push(snapped);
        }
    }
    let horizon = *t_grid.last().unwrap();

    let mut rng = SeededRng::new(opts.seed);
    let mut sample_max: f64 = 1.0;
    for _ in 0..opts.samples {
        // Each mode coefficient varies linearly over the history window.
        let coeffs: Vec<(f64, f64)> = modes.iter().map(|_| (rng.normal(), rng.normal())).collect();
        let hist: Vec<Vec<f64>> = coeffs
            .iter()
            .map(|&(c, d)| {
                (0..=s)
                    .map(|j| c + d * (-1.0 + j as f64 / s as f64))
                    .collect()
            })
            .collect();
        let pointwise = |vals: &[Vec<f64>], idx: usize| -> f64 {
            vals.iter().map(|v| v[idx] * v[idx]).sum::<f64>().sqrt()
        };
        let norm0 = (0..=s).map(|j| pointwise(&hist, j)).fold(0.0, f64::max);
        if norm0 == 0.0 {
            continue;
        }
        let trajs: Vec<ScalarTrajectory> = hist
            .iter()
            .zip(&modes)
            .map(|(h, &m)| linear_delay_evolve(h, p, eigs[m - 1], horizon))
            .collect::<Result<_>>()?;
        for &t in &t_grid {
            let n = (t / dt).round() as isize;
            let seg = (n - s as isize..=n)
                .map(|i| trajs.iter().map(|tr| tr.at(i).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let ratio = seg / (norm0 * (spectral.rho_m * t).exp());
            sample_max = sample_max.max(ratio);
        }
    }
    Ok(DichotomyEstimate {
        constant: DICHOTOMY_SAFETY * sample_max,
        sample_max,
        safety_factor: DICHOTOMY_SAFETY,
        samples: opts.samples,
        modes,
        t_grid,
        steps_per_delay: s,
    })
}
