//! k-space integrals of isotropic kernels.
//!
//! The three families needed by the engines reduce to one-dimensional radial
//! integrals once the angular average is done analytically:
//!
//! * heating: `∫ d³k k_x² f(k) = (4π/3) ∫ k⁴ f(k) dk`
//! * dephasing: `∫ d³k f(k) sin²(k_x δx / 2) = 2π ∫ k² f(k) (1 − sinc(k δx)) dk`
//! * Gaussian-weighted projections onto Fock states, done on a `(k, cos θ)` grid.
//!
//! All radial integrals use adaptive 21-point Gauss–Kronrod with bisection of
//! the worst interval. [`mc_oracle_3d`] integrates directly in three dimensions
//! and is only used to cross-check the reductions.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::C64;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_638,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// weights of the embedded 10-point Gauss rule, on XGK[1], XGK[3], ..., XGK[9]
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances and limits for the adaptive radial integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Optional override of the kernel's own upper limit, 1/m.
    pub k_max: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_subdivisions: 2000,
            k_max: None,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::domain(
                "quadrature rel_tol",
                alloc::format!("must lie in (0, 1e-3], got {:e}", self.rel_tol),
            ));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::domain("quadrature abs_tol", "must be non-negative"));
        }
        if self.max_subdivisions < 16 {
            return Err(Error::domain(
                "quadrature max_subdivisions",
                alloc::format!("must be at least 16, got {}", self.max_subdivisions),
            ));
        }
        if let Some(k) = self.k_max {
            crate::error::require_positive("quadrature k_max", k)?;
        }
        Ok(())
    }

    fn upper_limit(&self, f: &dyn RadialFunction) -> f64 {
        match self.k_max {
            Some(k) => k.min(f.k_max()),
            None => f.k_max(),
        }
    }
}

/// An isotropic function `k ↦ f(k)` on `(0, k_max]`.
pub trait RadialFunction {
    fn value(&self, k: f64) -> f64;
    /// Upper end of the support (or of the numerically relevant range).
    fn k_max(&self) -> f64;
    /// Points in `(0, k_max)` where the function is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Adapts a closure to [`RadialFunction`].
pub struct Radial<F> {
    pub f: F,
    pub k_max: f64,
}

impl<F: Fn(f64) -> f64> RadialFunction for Radial<F> {
    fn value(&self, k: f64) -> f64 {
        (self.f)(k)
    }
    fn k_max(&self) -> f64 {
        self.k_max
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod_21(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut kronrod = f_center * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = kronrod * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * f64::min(1.0, libm::pow(200.0 * error / res_asc, 1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Adaptive integral of `f` over `[a, b]`, starting from the partition given
/// by `breakpoints` (points outside `(a, b)` are ignored).
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let mut points = vec![a];
    points.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut segments: Vec<Segment> = points
        .windows(2)
        .map(|w| gauss_kronrod_21(&mut f, w[0], w[1]))
        .collect();
    let mut heap: BinaryHeap<ByError> = segments
        .iter()
        .enumerate()
        .map(|(index, s)| ByError { error: s.error, index })
        .collect();
    let budget = spec.max_subdivisions + segments.len();
    let mut value: f64 = segments.iter().map(|s| s.value).sum();
    let mut error: f64 = segments.iter().map(|s| s.error).sum();
    let mut since_resum = 0usize;
    loop {
        if !value.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                error,
                requested: spec.rel_tol,
                subdivisions: segments.len(),
            });
        }
        let target = f64::max(spec.abs_tol, spec.rel_tol * value.abs());
        if error <= target {
            // running sums drift; confirm against a fresh sum before accepting
            value = segments.iter().map(|s| s.value).sum();
            error = segments.iter().map(|s| s.error).sum();
            if error <= f64::max(spec.abs_tol, spec.rel_tol * value.abs()) {
                return Ok(Integral {
                    value,
                    error,
                    subdivisions: segments.len(),
                });
            }
        }
        let worst = heap.pop().expect("at least one segment").index;
        let Segment { a: sa, b: sb, .. } = segments[worst];
        let mid = 0.5 * (sa + sb);
        let width_floor = 64.0 * f64::EPSILON * f64::max(sa.abs(), sb.abs());
        if segments.len() >= budget || (sb - sa).abs() <= width_floor {
            return Err(Error::Quadrature {
                estimate: value,
                error,
                requested: target,
                subdivisions: segments.len(),
            });
        }
        let left = gauss_kronrod_21(&mut f, sa, mid);
        let right = gauss_kronrod_21(&mut f, mid, sb);
        value += left.value + right.value - segments[worst].value;
        error += left.error + right.error - segments[worst].error;
        heap.push(ByError {
            error: left.error,
            index: worst,
        });
        heap.push(ByError {
            error: right.error,
            index: segments.len(),
        });
        segments[worst] = left;
        segments.push(right);
        since_resum += 1;
        if since_resum == 256 {
            since_resum = 0;
            value = segments.iter().map(|s| s.value).sum();
            error = segments.iter().map(|s| s.error).sum();
        }
    }
}

struct ByError {
    error: f64,
    index: usize,
}

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ByError {}

impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.index.cmp(&self.index))
    }
}

/// `∫ d³k k_x² f(k)`: the momentum-diffusion moment of a kernel, m⁻² times the
/// kernel's units.
pub fn heating_moment(f: &dyn RadialFunction, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let k_max = spec.upper_limit(f);
    let radial = integrate(
        |k| {
            let k2 = k * k;
            k2 * k2 * f.value(k)
        },
        0.0,
        k_max,
        &f.breakpoints(),
        spec,
    )?;
    Ok(4.0 * PI / 3.0 * radial.value)
}

/// `1 − sin(x)/x`, accurate for small `x`.
pub fn one_minus_sinc(x: f64) -> f64 {
    let x = x.abs();
    if x < 0.1 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        1.0 - libm::sin(x) / x
    }
}

/// Above this many oscillation periods the radial range is split at the zeros
/// of the sinc factor.
const PERIOD_SPLIT_THRESHOLD: f64 = 8.0;
const MAX_PERIODS: f64 = 4.0e6;

/// `∫ d³k f(k) sin²(k_x δx / 2)`: the loss rate of two-branch coherence over a
/// separation `δx`, in the kernel's units.
pub fn dephasing_moment(f: &dyn RadialFunction, delta_x: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    crate::error::require_non_negative("superposition width", delta_x)?;
    if delta_x == 0.0 {
        return Ok(0.0);
    }
    let k_max = spec.upper_limit(f);
    let mut breaks = f.breakpoints();
    let periods = k_max * delta_x / (2.0 * PI);
    if periods > MAX_PERIODS {
        return Err(Error::domain(
            "dephasing integral",
            alloc::format!("{periods:e} oscillation periods exceed the supported {MAX_PERIODS:e}"),
        ));
    }
    if periods > PERIOD_SPLIT_THRESHOLD {
        let step = 2.0 * PI / delta_x;
        let count = libm::floor(periods) as usize;
        breaks.extend((1..=count).map(|j| j as f64 * step));
    }
    let radial = integrate(
        |k| k * k * f.value(k) * one_minus_sinc(k * delta_x),
        0.0,
        k_max,
        &breaks,
        spec,
    )?;
    Ok(2.0 * PI * radial.value)
}

/// `∫_{-1}^{1} u² cos(x u) du`.
fn angular_cos_weight(x: f64) -> f64 {
    let x = x.abs();
    if x < 0.1 {
        let x2 = x * x;
        2.0 / 3.0 - x2 / 5.0 + x2 * x2 / 84.0 - x2 * x2 * x2 / 3240.0
    } else {
        let (s, c) = (libm::sin(x), libm::cos(x));
        2.0 * s / x + 4.0 * c / (x * x) - 4.0 * s / (x * x * x)
    }
}

/// `∫ d³k k_x² f(k) cos(k_x d)`: the correlated momentum diffusion of two
/// masses at separation `d` driven by a shared kernel `f`.
pub fn correlated_moment(f: &dyn RadialFunction, d: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    crate::error::require_non_negative("separation", d)?;
    let k_max = spec.upper_limit(f);
    let mut breaks = f.breakpoints();
    let periods = k_max * d / (2.0 * PI);
    if periods > MAX_PERIODS {
        return Err(Error::domain(
            "correlated integral",
            alloc::format!("{periods:e} oscillation periods exceed the supported {MAX_PERIODS:e}"),
        ));
    }
    if periods > PERIOD_SPLIT_THRESHOLD {
        let step = 2.0 * PI / d;
        breaks.extend((1..=libm::floor(periods) as usize).map(|j| j as f64 * step));
    }
    let radial = integrate(
        |k| {
            let k2 = k * k;
            k2 * k2 * f.value(k) * angular_cos_weight(k * d)
        },
        0.0,
        k_max,
        &breaks,
        spec,
    )?;
    Ok(2.0 * PI * radial.value)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("Gauss-Legendre order", "must be at least 1"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for iteration in 0.. {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
            if iteration > 100 {
                return Err(Error::NoConvergence {
                    what: "Gauss-Legendre node",
                    residual: step.abs(),
                    iterations: iteration,
                });
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok((nodes, weights))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Projection of the displacement-channel family on Fock states `n, m ≥ 1`:
///
/// `i^(n−m) / √(n! m!) ∫ d³k f(k) e^(−k_x² s) (k_x √s)^(n+m)`
///
/// with `s` the squared zero-point length (m²). The angular integral is done by
/// nested quadrature in `cos θ`.
pub fn gaussian_weighted_moment(
    f: &dyn RadialFunction,
    n: usize,
    m: usize,
    s: f64,
    spec: &QuadratureSpec,
) -> Result<C64> {
    spec.validate()?;
    if n < 1 || m < 1 {
        return Err(Error::domain("Fock index", "n and m must be at least 1"));
    }
    crate::error::require_positive("Gaussian width s", s)?;
    let p = n + m;
    if p % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let root_s = libm::sqrt(s);
    let k_max = spec.upper_limit(f);
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol,
        abs_tol: 0.0,
        ..*spec
    };
    let mut inner_error = None;
    let radial = integrate(
        |k| {
            let c = k * root_s;
            let angular = integrate(
                |u| {
                    let y = c * u;
                    libm::pow(y, p as f64) * libm::exp(-y * y)
                },
                0.0,
                1.0,
                &[],
                &inner_spec,
            );
            match angular {
                Ok(a) => 2.0 * a.value * k * k * f.value(k),
                Err(e) => {
                    inner_error.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        k_max,
        &f.breakpoints(),
        spec,
    )?;
    if let Some(e) = inner_error {
        return Err(e);
    }
    let magnitude = 2.0 * PI * radial.value / libm::sqrt(factorial(n) * factorial(m));
    let phase = match (n as isize - m as isize).rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    Ok(phase * magnitude)
}

/// Radial proposal density for [`mc_oracle_3d`]. Directions are always uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProposal {
    /// Uniform in the ball of radius `k_max` (density ∝ k²).
    UniformBall,
    /// Density ∝ k^exponent on `[0, k_max]`, exponent > −1.
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Importance-sampled Monte Carlo estimate of `∫_{|k| ≤ k_max} d³k g(k)`.
///
/// The estimate is a deterministic function of `seed`.
pub fn mc_oracle_3d(
    integrand: impl Fn([f64; 3]) -> f64,
    k_max: f64,
    proposal: RadialProposal,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    crate::error::require_positive("Monte Carlo k_max", k_max)?;
    if n_samples < 10_000 {
        return Err(Error::domain(
            "Monte Carlo sample count",
            alloc::format!("need at least 1e4 samples, got {n_samples}"),
        ));
    }
    let exponent = match proposal {
        RadialProposal::UniformBall => 2.0,
        RadialProposal::PowerLaw { exponent } if exponent > -1.0 => exponent,
        RadialProposal::PowerLaw { exponent } => {
            return Err(Error::domain(
                "Monte Carlo proposal",
                alloc::format!("exponent must exceed -1, got {exponent}"),
            ))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..n_samples {
        // radial density p(k) = (e+1) k^e / K^(e+1)
        let u = 1.0 - unit_f64(&mut rng);
        let k = k_max * libm::pow(u, 1.0 / (exponent + 1.0));
        let cos_t = 2.0 * unit_f64(&mut rng) - 1.0;
        let phi = 2.0 * PI * unit_f64(&mut rng);
        let sin_t = libm::sqrt((1.0 - cos_t * cos_t).max(0.0));
        let v = [k * cos_t, k * sin_t * libm::cos(phi), k * sin_t * libm::sin(phi)];
        let radial_pdf = (exponent + 1.0) * libm::pow(k, exponent) / libm::pow(k_max, exponent + 1.0);
        let weight = 4.0 * PI * k * k / radial_pdf;
        let sample = integrand(v) * weight;
        let delta = sample - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (sample - mean);
    }
    let variance = m2 / (n_samples - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        std_error: libm::sqrt(variance / n_samples as f64),
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(k_max: f64) -> Radial<impl Fn(f64) -> f64> {
        Radial { f: |_k| 1.0, k_max }
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for degree in 0..2 * n {
                let sum: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, degree as f64)).sum();
                let exact = if degree % 2 == 1 {
                    0.0
                } else {
                    2.0 / (degree as f64 + 1.0)
                };
                assert!((sum - exact).abs() < 1e-13, "n={n} degree={degree}: {sum}");
            }
        }
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn kronrod_integrates_known_functions() {
        let spec = QuadratureSpec::default();
        let r = integrate(libm::sin, 0.0, PI, &[], &spec).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-13);
        let r = integrate(|x| 1.0 / libm::sqrt(x), 0.0, 1.0, &[], &spec).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
        let r = integrate(|x| x.powi(20), 0.0, 1.0, &[], &spec).unwrap();
        assert_relative_eq!(r.value, 1.0 / 21.0, max_relative = 1e-13);
    }

    #[test]
    fn reports_failure_with_estimate() {
        let spec = QuadratureSpec {
            max_subdivisions: 16,
            rel_tol: 1e-12,
            ..Default::default()
        };
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, &[], &spec).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let bad = QuadratureSpec {
            rel_tol: 1e-2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            max_subdivisions: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn heating_of_flat_kernel() {
        let k = 3.0;
        let h = heating_moment(&flat(k), &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(h, 4.0 * PI * k.powi(5) / 15.0, max_relative = 1e-12);
        let zero = Radial {
            f: |_k| 0.0,
            k_max: 2.0,
        };
        assert_eq!(heating_moment(&zero, &QuadratureSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn dephasing_limits() {
        let spec = QuadratureSpec::default();
        let k = 2.0;
        assert_eq!(dephasing_moment(&flat(k), 0.0, &spec).unwrap(), 0.0);
        // small δx: sin² → (k_x δx/2)², so the moment → heating · δx²/4
        let dx = 1e-5;
        let small = dephasing_moment(&flat(k), dx, &spec).unwrap();
        let heating = heating_moment(&flat(k), &spec).unwrap();
        assert_relative_eq!(small, heating * dx * dx / 4.0, max_relative = 1e-8);
        // δx → ∞: sin² averages to 1/2 over the ball
        let big = dephasing_moment(&flat(k), 1e4, &spec).unwrap();
        assert_relative_eq!(big, 0.5 * 4.0 * PI * k.powi(3) / 3.0, max_relative = 1e-3);
    }

    #[test]
    fn one_minus_sinc_branches_agree() {
        for &x in &[0.0999, 0.1, 0.1001, 0.05, 1e-3] {
            let direct = 1.0 - libm::sin(x) / x;
            assert_relative_eq!(one_minus_sinc(x), direct, max_relative = 1e-9);
        }
        assert_eq!(one_minus_sinc(0.0), 0.0);
    }

    #[test]
    fn angular_weight_branches_agree() {
        for &x in &[0.0999f64, 0.1001, 0.5, 3.0] {
            let quad = integrate(|u| u * u * libm::cos(x * u), -1.0, 1.0, &[], &QuadratureSpec::default())
                .unwrap()
                .value;
            assert_relative_eq!(angular_cos_weight(x), quad, max_relative = 1e-10);
        }
    }

    #[test]
    fn correlated_moment_at_zero_separation_is_heating() {
        let spec = QuadratureSpec::default();
        let f = Radial {
            f: |k: f64| libm::exp(-k) / (1.0 + k),
            k_max: 50.0,
        };
        let c = correlated_moment(&f, 0.0, &spec).unwrap();
        assert_relative_eq!(c, heating_moment(&f, &spec).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn gaussian_moment_small_k_limit() {
        // for k √s ≪ 1 the Gaussian is 1 and the n = m = 1 entry is s ∫ k_x² f
        let s = 1e-6;
        let k = 1.0;
        let d11 = gaussian_weighted_moment(&flat(k), 1, 1, s, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(d11.re, s * 4.0 * PI / 15.0, max_relative = 1e-5);
        assert_eq!(d11.im, 0.0);
        let odd = gaussian_weighted_moment(&flat(k), 1, 2, s, &QuadratureSpec::default()).unwrap();
        assert_eq!(odd, C64::new(0.0, 0.0));
        let zero = Radial {
            f: |_k| 0.0,
            k_max: 1.0,
        };
        let z = gaussian_weighted_moment(&zero, 2, 2, 1.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn mc_constant_gives_ball_volume() {
        let k = 1.5;
        let est = mc_oracle_3d(|_| 1.0, k, RadialProposal::PowerLaw { exponent: 0.0 }, 200_000, 3).unwrap();
        let volume = 4.0 * PI * k * k * k / 3.0;
        assert!((est.estimate - volume).abs() < 3.0 * est.std_error + 1e-12);
        let uniform = mc_oracle_3d(|_| 1.0, k, RadialProposal::UniformBall, 20_000, 3).unwrap();
        assert_relative_eq!(uniform.estimate, volume, max_relative = 1e-12);
    }

    #[test]
    fn mc_is_deterministic() {
        let g = |v: [f64; 3]| v[0] * v[0] * libm::exp(-v[1]);
        let a = mc_oracle_3d(g, 2.0, RadialProposal::UniformBall, 10_000, 42).unwrap();
        let b = mc_oracle_3d(g, 2.0, RadialProposal::UniformBall, 10_000, 42).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert!(mc_oracle_3d(g, 2.0, RadialProposal::UniformBall, 100, 42).is_err());
    }
}
