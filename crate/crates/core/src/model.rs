//! Problem definition and configuration.
//!
//! The equation being simulated is
//!
//! ```text
//! u_t = u_xx - mu*u + sigma*u(t - tau) + f(u(t - tau)) + g(x),   x in R
//! ```
//!
//! with `f` drawn from a small catalog of globally Lipschitz maps that vanish
//! at zero and `g` drawn from a catalog of localized forcing profiles. The
//! nonlinearity acts pointwise on the delayed value.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    Zero,
    ScaledTanh,
    ScaledSin,
    SaturatingLinear,
}

/// Pointwise nonlinearity `f(u) = scale * shape(u)`. Every shape has slope at
/// most one and vanishes at zero, so the exact Lipschitz constant is `|scale|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub scale: f64,
}

impl NonlinearitySpec {
    pub const ZERO: Self = Self {
        kind: NonlinearityKind::Zero,
        scale: 0.0,
    };

    pub fn new(kind: NonlinearityKind, scale: f64) -> Self {
        Self { kind, scale }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::ScaledTanh => self.scale * u.tanh(),
            NonlinearityKind::ScaledSin => self.scale * u.sin(),
            NonlinearityKind::SaturatingLinear => self.scale * u.clamp(-1.0, 1.0),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            NonlinearityKind::Zero => 0.0,
            _ => self.scale.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == NonlinearityKind::Zero || self.scale == 0.0
    }
}

/// Apply `f` to every sample of `values`.
pub fn evaluate_nonlinearity(spec: &NonlinearitySpec, values: &[f64]) -> Vec<f64> {
    values.iter().map(|&u| spec.eval(u)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    Zero,
    /// `amplitude * exp(-(x - center)^2 / (2 width^2))`
    GaussianBump,
    /// `amplitude * (1 - ((x - center)/width)^2)^2` on `|x - center| < width`
    CompactBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default = "one")]
    pub width: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ForcingSpec {
    fn default() -> Self {
        Self::ZERO
    }
}

const COMPACT_BUMP_SQ_INTEGRAL: f64 = 256.0 / 315.0;

impl ForcingSpec {
    pub const ZERO: Self = Self {
        kind: ForcingKind::Zero,
        amplitude: 0.0,
        center: 0.0,
        width: 1.0,
    };

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        Self {
            kind: ForcingKind::GaussianBump,
            amplitude,
            center,
            width,
        }
    }

    pub fn compact(amplitude: f64, center: f64, width: f64) -> Self {
        Self {
            kind: ForcingKind::CompactBump,
            amplitude,
            center,
            width,
        }
    }

    /// Same profile, amplitude rescaled so that the L2(R) norm equals `norm`.
    pub fn with_norm(self, norm: f64) -> Self {
        let unit = Self {
            amplitude: 1.0,
            ..self
        };
        let n = unit.l2_norm();
        if n == 0.0 {
            return self;
        }
        Self {
            amplitude: norm / n,
            ..self
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::GaussianBump => self.amplitude * (-0.5 * s * s).exp(),
            ForcingKind::CompactBump => {
                if s.abs() < 1.0 {
                    let q = 1.0 - s * s;
                    self.amplitude * q * q
                } else {
                    0.0
                }
            }
        }
    }

    /// Norm in L2(R), in closed form.
    pub fn l2_norm(&self) -> f64 {
        let a2w = self.amplitude * self.amplitude * self.width;
        match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::GaussianBump => (a2w * std::f64::consts::PI.sqrt()).sqrt(),
            ForcingKind::CompactBump => (a2w * COMPACT_BUMP_SQ_INTEGRAL).sqrt(),
        }
    }

    /// Radius of a ball around the origin containing the support, if compact.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            ForcingKind::Zero => Some(0.0),
            ForcingKind::GaussianBump => None,
            ForcingKind::CompactBump => Some(self.center.abs() + self.width),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == ForcingKind::Zero || self.amplitude == 0.0
    }
}

/// Uniform periodic grid on `[-L, L)`; node `j` sits at `-L + j*h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub half_length: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            half_length: 32.0,
            points: 512,
        }
    }
}

impl Grid {
    pub fn new(half_length: f64, points: usize) -> Result<Self, ConfigError> {
        let g = Self {
            half_length,
            points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(ConfigError::invalid(
                "grid.half_length",
                "half_length must be positive",
            ));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(ConfigError::invalid(
                "grid.points",
                "points must be a power of two and at least 8",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }
}

/// The fixed data of the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParameters {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub lf: f64,
    pub forcing: ForcingSpec,
    pub nonlinearity: NonlinearitySpec,
    pub spatial_dim: usize,
}

impl ProblemParameters {
    /// Parameters with zero forcing and zero nonlinearity.
    pub fn new(mu: f64, sigma: f64, tau: f64, lf: f64) -> Result<Self, ConfigError> {
        let p = Self {
            mu,
            sigma,
            tau,
            lf,
            forcing: ForcingSpec::ZERO,
            nonlinearity: NonlinearitySpec::ZERO,
            spatial_dim: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_nonlinearity(mut self, nonlinearity: NonlinearitySpec) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    /// Checks the standing hypotheses. `sigma = 0` is accepted as the
    /// zero-coupling limit; negative values are not.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("{key} must be finite")))
            }
        }
        for (k, v) in [
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("lf", self.lf),
        ] {
            finite(k, v)?;
        }
        if self.mu <= 0.0 {
            return Err(ConfigError::invalid("mu", "mu must be positive"));
        }
        if self.tau <= 0.0 {
            return Err(ConfigError::invalid("tau", "tau must be positive"));
        }
        if self.sigma < 0.0 {
            return Err(ConfigError::invalid("sigma", "sigma must be nonnegative"));
        }
        if self.lf < 0.0 {
            return Err(ConfigError::invalid("lf", "lf must be nonnegative"));
        }
        if self.spatial_dim == 0 {
            return Err(ConfigError::invalid(
                "spatial_dim",
                "spatial_dim must be at least 1",
            ));
        }
        let nl = self.nonlinearity;
        if !nl.scale.is_finite() {
            return Err(ConfigError::invalid(
                "nonlinearity.scale",
                "scale must be finite",
            ));
        }
        if nl.lipschitz() > self.lf * (1.0 + 1e-12) {
            return Err(ConfigError::invalid(
                "nonlinearity.scale",
                format!(
                    "Lipschitz constant {} of the nonlinearity exceeds lf = {}",
                    nl.lipschitz(),
                    self.lf
                ),
            ));
        }
        let fo = self.forcing;
        if !(fo.amplitude.is_finite() && fo.center.is_finite()) {
            return Err(ConfigError::invalid("forcing", "forcing must be finite"));
        }
        if fo.kind != ForcingKind::Zero && !(fo.width.is_finite() && fo.width > 0.0) {
            return Err(ConfigError::invalid(
                "forcing.width",
                "width must be positive",
            ));
        }
        Ok(())
    }

    /// `‖g‖` in L2(R).
    pub fn norm_g(&self) -> f64 {
        self.forcing.l2_norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipativity {
    pub beta: f64,
    pub holds: bool,
}

/// Growth rate `beta = sigma (L_f + 1) e^{mu tau}` and whether it is below `mu`.
pub fn check_dissipativity(p: &ProblemParameters) -> Dissipativity {
    let beta = p.sigma * (p.lf + 1.0) * (p.mu * p.tau).exp();
    Dissipativity {
        beta,
        holds: beta < p.mu,
    }
}

/// How initial histories are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialHistorySpec {
    Zero,
    /// The same spatially constant value at every history time.
    Constant { value: f64 },
    /// A Gaussian bump, constant in the history variable.
    GaussianBump {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
    /// Seeded random sums of compact bumps inside `|x| < support`, varying
    /// linearly across the history window, rescaled to a segment norm drawn
    /// uniformly from `[max_norm/2, max_norm]`.
    RandomBumps {
        max_norm: f64,
        #[serde(default = "default_support")]
        support: f64,
        #[serde(default = "default_bumps")]
        bumps: usize,
    },
}

fn default_support() -> f64 {
    4.0
}
fn default_bumps() -> usize {
    3
}

impl Default for InitialHistorySpec {
    fn default() -> Self {
        InitialHistorySpec::RandomBumps {
            max_norm: 5.0,
            support: default_support(),
            bumps: default_bumps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    Hausdorff,
    Fractal,
    #[default]
    Both,
}

/// Numerical and batch settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    pub steps_per_delay: usize,
    /// Simulation horizon; derived from the absorbing time when absent.
    pub horizon: Option<f64>,
    pub cutoff_radius: f64,
    pub smooth_cutoff: bool,
    /// Number of spatial Dirichlet modes kept in spectral computations.
    pub modes: usize,
    /// Spectral cut used by the squeezing decomposition.
    pub m_cut: usize,
    pub roots_per_mode: usize,
    pub initial: InitialHistorySpec,
    /// Number of trajectory pairs in squeezing runs.
    pub ensemble: usize,
    pub dichotomy_samples: usize,
    pub far_field_eps: f64,
    /// Evaluation times for contraction measurements; empty means
    /// `tau, 2 tau, 4 tau, 8 tau`.
    pub contraction_times: Vec<f64>,
    pub certificate: CertificateMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            steps_per_delay: 20,
            horizon: None,
            cutoff_radius: 8.0,
            smooth_cutoff: false,
            modes: 16,
            m_cut: 1,
            roots_per_mode: 12,
            initial: InitialHistorySpec::default(),
            ensemble: 20,
            dichotomy_samples: 16,
            far_field_eps: 1e-3,
            contraction_times: Vec::new(),
            certificate: CertificateMode::Both,
        }
    }
}

impl RunOptions {
    pub fn contraction_times_for(&self, tau: f64) -> Vec<f64> {
        if self.contraction_times.is_empty() {
            vec![tau, 2.0 * tau, 4.0 * tau, 8.0 * tau]
        } else {
            self.contraction_times.clone()
        }
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ProblemParameters,
    pub grid: Grid,
    pub run: RunOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NonlinearityDoc {
    kind: NonlinearityKind,
    #[serde(default)]
    scale: Option<f64>,
}

/// On-disk layout of the configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    mu: f64,
    sigma: f64,
    tau: f64,
    lf: f64,
    #[serde(default = "one_usize")]
    spatial_dim: usize,
    #[serde(default)]
    nonlinearity: Option<NonlinearityDoc>,
    #[serde(default)]
    forcing: ForcingSpec,
    #[serde(default)]
    grid: Grid,
    #[serde(default)]
    run: RunOptions,
}

fn one_usize() -> usize {
    1
}

/// Parse and validate a JSON configuration document.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let doc: ConfigDoc = serde_json::from_str(text).map_err(schema_error)?;
    let nonlinearity = match doc.nonlinearity {
        None => NonlinearitySpec::ZERO,
        Some(n) => NonlinearitySpec {
            kind: n.kind,
            scale: match n.kind {
                NonlinearityKind::Zero => 0.0,
                _ => n.scale.unwrap_or(doc.lf),
            },
        },
    };
    let params = ProblemParameters {
        mu: doc.mu,
        sigma: doc.sigma,
        tau: doc.tau,
        lf: doc.lf,
        forcing: doc.forcing,
        nonlinearity,
        spatial_dim: doc.spatial_dim,
    };
    params.validate()?;
    doc.grid.validate()?;
    validate_run(&doc.run, &doc.grid)?;
    Ok(Config {
        params,
        grid: doc.grid,
        run: doc.run,
    })
}

fn validate_run(run: &RunOptions, grid: &Grid) -> Result<(), ConfigError> {
    if run.steps_per_delay == 0 {
        return Err(ConfigError::invalid(
            "run.steps_per_delay",
            "steps_per_delay must be at least 1",
        ));
    }
    if let Some(h) = run.horizon {
        if !(h.is_finite() && h >= 0.0) {
            return Err(ConfigError::invalid(
                "run.horizon",
                "horizon must be nonnegative",
            ));
        }
    }
    let k = run.cutoff_radius;
    if !(k > 0.0 && 4.0 * k <= grid.half_length) {
        return Err(ConfigError::invalid(
            "run.cutoff_radius",
            "cutoff_radius must be positive and at most a quarter of grid.half_length",
        ));
    }
    if run.modes == 0 || run.m_cut == 0 || run.m_cut > run.modes {
        return Err(ConfigError::invalid(
            "run.m_cut",
            "need 1 <= m_cut <= modes",
        ));
    }
    if run.roots_per_mode == 0 {
        return Err(ConfigError::invalid(
            "run.roots_per_mode",
            "roots_per_mode must be at least 1",
        ));
    }
    if !(run.far_field_eps > 0.0) {
        return Err(ConfigError::invalid(
            "run.far_field_eps",
            "far_field_eps must be positive",
        ));
    }
    if run.contraction_times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(ConfigError::invalid(
            "run.contraction_times",
            "contraction times must be positive",
        ));
    }
    match run.initial {
        InitialHistorySpec::GaussianBump { width, .. } if !(width > 0.0) => {
            return Err(ConfigError::invalid(
                "run.initial.width",
                "width must be positive",
            ))
        }
        InitialHistorySpec::RandomBumps {
            max_norm,
            support,
            bumps,
        } => {
            if !(max_norm >= 0.0 && support > 0.0 && bumps >= 1) {
                return Err(ConfigError::invalid(
                    "run.initial",
                    "random_bumps needs max_norm >= 0, support > 0, bumps >= 1",
                ));
            }
            if support >= grid.half_length {
                return Err(ConfigError::invalid(
                    "run.initial.support",
                    "support must lie inside the grid box",
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

/// Serialize a resolved configuration with every field explicit.
pub fn config_to_json(cfg: &Config) -> String {
    let doc = ConfigDoc {
        mu: cfg.params.mu,
        sigma: cfg.params.sigma,
        tau: cfg.params.tau,
        lf: cfg.params.lf,
        spatial_dim: cfg.params.spatial_dim,
        nonlinearity: Some(NonlinearityDoc {
            kind: cfg.params.nonlinearity.kind,
            scale: Some(cfg.params.nonlinearity.scale),
        }),
        forcing: cfg.params.forcing,
        grid: cfg.grid,
        run: cfg.run.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("config serializes")
}

fn schema_error(e: serde_json::Error) -> ConfigError {
    let message = e.to_string();
    ConfigError::Schema {
        key: backticked(&message),
        message,
    }
}

/// serde reports missing and unknown fields as "missing field `tau`" and
/// "unknown field `foo`, expected ...": pick out the first quoted name.
fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}
