//! Shear profiles `u_s(y)` on the half-line, with the tanh family matched to
//! the Navier slip condition `½ u'(0) = a u(0)`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linear_fit, GridSpec};

/// Decay margin required beyond the inflection point: `u''` must be resolved
/// down to `e^{-20}`.
pub const MIN_DECAY_MARGIN: f64 = 10.0;
/// Default domain length beyond `delta`.
pub const DEFAULT_DECAY_MARGIN: f64 = 25.0;
pub const DEFAULT_NODES: usize = 4001;
/// `|u - u0|` below which a node counts as sitting on the inflection value.
pub const SINGULARITY_TOL: f64 = 1e-8;

/// Parameters of `u(y) = tanh(y - delta) + zeta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TanhProfileParams {
    pub delta: f64,
    pub zeta: f64,
}

impl TanhProfileParams {
    pub fn new(delta: f64, zeta: f64) -> Result<Self> {
        if !(delta > 0.0) || !zeta.is_finite() {
            return Err(Error::InvalidInput(format!("tanh profile needs delta > 0 (got {delta})")));
        }
        Ok(Self { delta, zeta })
    }

    /// `(u, u', u'')` at `y`.
    #[inline]
    pub fn eval(&self, y: f64) -> [f64; 3] {
        let x = y - self.delta;
        let t = x.tanh();
        // `1 - t²` cancels to noise once `tanh` rounds to one.
        let sech2 = 1.0 / (x.cosh() * x.cosh());
        [t + self.zeta, sech2, -2.0 * sech2 * t]
    }

    /// Uniform grid on `[0, delta + 25]` with the default node count.
    pub fn default_grid(&self) -> GridSpec {
        GridSpec { y_max: self.delta + DEFAULT_DECAY_MARGIN, n: DEFAULT_NODES }
    }

    /// `|½u'(0) - a u(0)|`.
    pub fn navier_residual(&self, a: f64) -> f64 {
        let [u, u1, _] = self.eval(0.0);
        (0.5 * u1 - a * u).abs()
    }
}

/// Analytic profile evaluator returning `(u, u', u'')`.
pub type ProfileFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

#[derive(Clone)]
pub enum ProfileShape {
    Tanh(TanhProfileParams),
    Custom(ProfileFn),
}

impl fmt::Debug for ProfileShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileShape::Tanh(p) => f.debug_tuple("Tanh").field(p).finish(),
            ProfileShape::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inflection {
    pub y0: f64,
    pub u0: f64,
}

/// Sampled base flow with analytically evaluated derivatives.
#[derive(Clone, Debug)]
pub struct ShearProfile {
    pub grid: GridSpec,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// First inflection point, if any.
    pub inflection: Option<Inflection>,
    shape: ProfileShape,
}

impl ShearProfile {
    /// Samples an arbitrary analytic profile. The inflection data is the
    /// first sign change of `u''`, refined by bisection.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        let f: ProfileFn = Arc::new(f);
        let mut p = Self::sample(grid, ProfileShape::Custom(f.clone()));
        p.inflection = sign_changes(&p).first().map(|&y0| Inflection { y0, u0: f(y0)[0] });
        p
    }

    fn sample(grid: GridSpec, shape: ProfileShape) -> Self {
        let y = grid.nodes();
        let mut u = Vec::with_capacity(grid.n);
        let mut u1 = Vec::with_capacity(grid.n);
        let mut u2 = Vec::with_capacity(grid.n);
        for &yj in &y {
            let [a, b, c] = eval_shape(&shape, yj);
            u.push(a);
            u1.push(b);
            u2.push(c);
        }
        Self { grid, y, u, u1, u2, inflection: None, shape }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> [f64; 3] {
        eval_shape(&self.shape, y)
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn tanh_params(&self) -> Option<TanhProfileParams> {
        match self.shape {
            ProfileShape::Tanh(p) => Some(p),
            ProfileShape::Custom(_) => None,
        }
    }

    /// Same analytic profile sampled on another grid.
    pub fn resampled(&self, grid: GridSpec) -> Self {
        let mut p = Self::sample(grid, self.shape.clone());
        p.inflection = self.inflection;
        p
    }

    pub fn u_min_max(&self) -> (f64, f64) {
        self.u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn header(&self) -> ProfileHeader {
        let tanh = self.tanh_params();
        ProfileHeader {
            delta: tanh.map(|p| p.delta),
            zeta: tanh.map(|p| p.zeta),
            y0: self.inflection.map(|i| i.y0),
            u0: self.inflection.map(|i| i.u0),
            y_max: self.grid.y_max,
            n: self.grid.n,
        }
    }

    /// CSV with columns `y,u,u1,u2`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("y,u,u1,u2\n");
        for j in 0..self.grid.n {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.y[j], self.u[j], self.u1[j], self.u2[j]
            ));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn eval_shape(shape: &ProfileShape, y: f64) -> [f64; 3] {
    match shape {
        ProfileShape::Tanh(p) => p.eval(y),
        ProfileShape::Custom(f) => f(y),
    }
}

/// JSON header written next to a profile CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub delta: Option<f64>,
    pub zeta: Option<f64>,
    pub y0: Option<f64>,
    pub u0: Option<f64>,
    #[serde(rename = "Ymax")]
    pub y_max: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

pub fn build_tanh_profile(params: TanhProfileParams, grid: GridSpec) -> Result<ShearProfile> {
    let required = params.delta + MIN_DECAY_MARGIN;
    if grid.y_max < required {
        return Err(Error::DomainTooSmall { y_max: grid.y_max, required });
    }
    let mut p = ShearProfile::sample(grid, ProfileShape::Tanh(params));
    p.inflection = Some(Inflection { y0: params.delta, u0: params.zeta });
    Ok(p)
}

/// Slip coefficient and viscosity scaling of `½ ∂_y u₁ = a ε^{-β} u₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavierParams {
    pub a: f64,
    pub beta_exp: f64,
    pub eps: f64,
}

impl NavierParams {
    pub fn new(a: f64, beta_exp: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !(beta_exp >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Navier parameters need eps > 0 and beta >= 0 (got eps = {eps}, beta = {beta_exp})"
            )));
        }
        Ok(Self { a, beta_exp, eps })
    }

    /// `a ε^{-β}`.
    pub fn wall_coefficient(&self) -> f64 {
        self.a * self.eps.powf(-self.beta_exp)
    }
}

/// Which discriminant choice produced the matched profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchBranch {
    /// `a` not an integer: `Δ = ⌊a⌋²`, `X₀ = a - ⌊a⌋`.
    NonInteger,
    /// `a` a nonzero integer: `Δ = (a - ½)²`, `X₀ = ½`.
    Integer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavierMatch {
    pub a: f64,
    pub params: TanhProfileParams,
    /// Root `X₀ = tanh(delta)` of `½X² - aX + aζ - ½ = 0`.
    pub x0: f64,
    pub discriminant: f64,
    pub branch: MatchBranch,
    /// Set for negative non-integer `a`, where `⌊a⌋` follows the floor
    /// convention (e.g. `⌊-2.5⌋ = -3`).
    pub negative_floor: bool,
}

/// Picks `(delta, zeta)` so that `tanh(y - delta) + zeta` satisfies
/// `½u'(0) = a u(0)`.
///
/// With `X = tanh(delta)` the condition reads `½X² - aX + aζ - ½ = 0`, whose
/// discriminant `a² - 2aζ + 1` is steered by `ζ` to a perfect square so that
/// one root lands in `(0, 1)`.
pub fn match_navier_condition(a: f64) -> Result<NavierMatch> {
    if a == 0.0 {
        return Err(Error::ZeroSlip);
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput(format!("slip coefficient must be finite (got {a})")));
    }
    let floor = a.floor();
    let (zeta, x0, discriminant, branch) = if a != floor {
        let zeta = a / 2.0 - (floor * floor - 1.0) / (2.0 * a);
        (zeta, a - floor, floor * floor, MatchBranch::NonInteger)
    } else {
        let zeta = 0.5 + 3.0 / (8.0 * a);
        (zeta, 0.5, (a - 0.5) * (a - 0.5), MatchBranch::Integer)
    };
    let params = TanhProfileParams::new(x0.atanh(), zeta)?;
    Ok(NavierMatch { a, params, x0, discriminant, branch, negative_floor: a < 0.0 && a != floor })
}

/// `K(y) = -u''(y) / (u(y) - u0)` with the removable singularity at `y0`
/// filled by its limit.
pub fn curvature_function(profile: &ShearProfile) -> Result<Vec<f64>> {
    let infl = profile.inflection.ok_or(Error::NoInflection)?;
    let u2_scale = profile.u2.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let h = profile.grid.h();

    // (u - u0) may only change sign at y0.
    for j in 1..profile.grid.n {
        let (g0, g1) = (profile.u[j - 1] - infl.u0, profile.u[j] - infl.u0);
        if g0 * g1 < 0.0 && (profile.y[j] - infl.y0).abs() > 2.0 * h && (profile.y[j - 1] - infl.y0).abs() > 2.0 * h {
            return Err(Error::NonRemovableSingularity { y: profile.y[j], gap: g1, u2: profile.u2[j] });
        }
    }

    let limit = match profile.shape() {
        ProfileShape::Tanh(_) => 2.0,
        ProfileShape::Custom(f) => {
            // L'Hôpital: K(y0) = -u'''(y0) / u'(y0), u''' by a 4th-order stencil on u''.
            let hs = 1e-3;
            let y0 = infl.y0;
            let d3 = (-f(y0 + 2.0 * hs)[2] + 8.0 * f(y0 + hs)[2] - 8.0 * f(y0 - hs)[2] + f(y0 - 2.0 * hs)[2]) / (12.0 * hs);
            -d3 / f(y0)[1]
        }
    };

    let mut k = Vec::with_capacity(profile.grid.n);
    for j in 0..profile.grid.n {
        let gap = profile.u[j] - infl.u0;
        if gap.abs() < SINGULARITY_TOL {
            if profile.u2[j].abs() > 1e-6 * u2_scale {
                return Err(Error::NonRemovableSingularity { y: profile.y[j], gap, u2: profile.u2[j] });
            }
            k.push(limit);
        } else if let ProfileShape::Tanh(p) = profile.shape() {
            // Closed form; the quotient loses digits where tanh is close to ±1.
            let t = (profile.y[j] - p.delta).tanh();
            k.push(2.0 * (1.0 - t * t));
        } else {
            k.push(-profile.u2[j] / gap);
        }
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflectionReport {
    pub inflections: Vec<f64>,
    /// Exactly one inflection point in `(0, y_max)`.
    pub admissible: bool,
}

/// Sign changes of `u''` on `(0, y_max)`; nodes where `u''` vanishes to
/// rounding are skipped rather than counted.
pub fn check_rayleigh_criterion(profile: &ShearProfile) -> InflectionReport {
    let inflections = sign_changes(profile);
    let admissible = inflections.len() == 1;
    InflectionReport { inflections, admissible }
}

fn sign_changes(profile: &ShearProfile) -> Vec<f64> {
    let scale = profile.u2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let zero_tol = 1e-12 * scale;
    let mut out = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (j, &v) in profile.u2.iter().enumerate() {
        if v.abs() <= zero_tol {
            continue;
        }
        if let Some((i, s)) = last {
            if s.signum() != v.signum() {
                out.push(bisect_u2(profile, profile.y[i], profile.y[j]));
            }
        }
        last = Some((j, v));
    }
    out
}

fn bisect_u2(profile: &ShearProfile, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = profile.eval(lo)[2];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
        let f_mid = profile.eval(mid)[2];
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fits `|u''(y)| ≈ C e^{-η y}` on the tail beyond the inflection point;
/// returns `(C, η)`.
pub fn curvature_decay_fit(profile: &ShearProfile) -> (f64, f64) {
    let start = profile.inflection.map_or(0.0, |i| i.y0) + 5.0;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for j in 0..profile.grid.n {
        let y = profile.y[j];
        let v = profile.u2[j].abs();
        if y >= start && v > 1e-250 {
            xs.push(y);
            ys.push(v.ln());
        }
    }
    if xs.len() < 2 {
        return (0.0, f64::INFINITY);
    }
    let (slope, intercept, _) = linear_fit(&xs, &ys);
    (intercept.exp(), -slope)
}
