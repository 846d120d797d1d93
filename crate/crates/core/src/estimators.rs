//! Information measures of arbitrary radially symmetric densities by adaptive
//! one-dimensional quadrature in the radius.
//!
//! Every integral has the form n ω_n ∫ r^{n-1} h(r) dr. Compact supports are
//! integrated over (0, R); unbounded ones are split at the density's scale and
//! the tail is mapped onto a finite interval. Nothing here calls the q-Gaussian
//! closed forms, so these routines serve as their independent oracle.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measures::{holder_conjugate, is_q_one, MeasureMethods, MeasureSet, Method, ParamsEcho};
use crate::qgaussian::QGaussianParams;
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, QuadOptions};
use crate::special::{sphere_area, unit_ball_volume};
use crate::spline::CubicSpline;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative shrink of a compact support before Fisher integration.
const EDGE_EPS: f64 = 1e-10;
/// Relative finite-difference step.
const FD_STEP: f64 = 1e-6;

/// A radially symmetric density f(x) = f_r(|x|) on R^n.
#[derive(Clone)]
pub struct RadialDensity {
    dim: usize,
    profile: Profile,
    derivative: Option<Profile>,
    support: Option<f64>,
    scale: f64,
    continuous: bool,
    descriptor: String,
    qgaussian: Option<QGaussianParams>,
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialDensity")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("scale", &self.scale)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("continuous", &self.continuous)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl RadialDensity {
    /// A density from its radial profile. The profile is trusted to be
    /// nonnegative and normalized; see [`RadialDensity::normalization`].
    pub fn new(
        dim: usize,
        descriptor: impl Into<String>,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        Ok(Self {
            dim,
            profile: Arc::new(profile),
            derivative: None,
            support: None,
            scale: 1.0,
            continuous: true,
            descriptor: descriptor.into(),
            qgaussian: None,
        })
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Restricts the support to the ball of radius `radius`.
    pub fn with_support(mut self, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("support radius must be > 0, got {radius}")));
        }
        self.support = Some(radius);
        Ok(self)
    }

    /// Characteristic radius used to split the quadrature range and size FD steps.
    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::domain(format!("scale must be > 0, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    /// Marks a jump to zero at the support boundary; the Fisher information is
    /// then undefined.
    pub fn with_edge_jump(mut self) -> Self {
        self.continuous = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn support(&self) -> Option<f64> {
        self.support
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }
    pub fn is_continuous(&self) -> bool {
        self.continuous
    }
    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }
    /// The q-Gaussian this density was built from, if any.
    pub fn qgaussian(&self) -> Option<&QGaussianParams> {
        self.qgaussian.as_ref()
    }

    /// Same profile with the analytic derivative dropped, forcing finite differences.
    pub fn without_derivative(&self) -> Self {
        let mut d = self.clone();
        d.derivative = None;
        d
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.support {
            Some(rs) if r >= rs => 0.0,
            _ => (self.profile)(r),
        }
    }

    /// f_r'(r), analytic when available and otherwise a Richardson-extrapolated
    /// central difference. Near a compact support edge the step shrinks so the
    /// stencil stays inside the support.
    pub fn derivative_at(&self, r: f64) -> f64 {
        if let Some(d) = &self.derivative {
            return d(r);
        }
        let mut h = FD_STEP * r.max(self.scale);
        if let Some(rs) = self.support {
            h = h.min((rs - r) / 3.0);
        }
        if !(h > 0.0) {
            return 0.0;
        }
        let diff = |h: f64| (self.value(r + h) - self.value(r - h)) / (2.0 * h);
        (4.0 * diff(0.5 * h) - diff(h)) / 3.0
    }

    /// The q-Gaussian G_γ as a radial density with analytic derivative.
    pub fn qgaussian_density(params: &QGaussianParams) -> Self {
        let p = *params;
        let dens = Self {
            dim: p.n(),
            profile: Arc::new(move |r| p.radial(r)),
            derivative: Some(Arc::new(move |r| p.radial_derivative(r))),
            support: p.support_radius(),
            scale: p.gamma().powf(-1.0 / p.alpha()),
            continuous: true,
            descriptor: format!(
                "qgaussian(n={}, alpha={}, q={}, gamma={})",
                p.n(),
                p.alpha(),
                p.q(),
                p.gamma()
            ),
            qgaussian: Some(p),
        };
        dens
    }

    /// Isotropic normal N(0, σ² I_n).
    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
        }
        let p = QGaussianParams::new(dim, 2.0, 1.0, 1.0 / (2.0 * sigma * sigma))?;
        let mut d = Self::qgaussian_density(&p);
        d.descriptor = format!("gaussian(n={dim}, sigma={sigma})");
        Ok(d)
    }

    /// Centered isotropic Gaussian mixture Σ w_i N(0, σ_i² I_n); weights are
    /// renormalized to sum to one.
    pub fn gaussian_mixture(dim: usize, components: &[(f64, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        if components.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        for &(w, s) in components {
            if !(w.is_finite() && w > 0.0 && s.is_finite() && s > 0.0) {
                return Err(Error::domain(format!("invalid mixture component ({w}, {s})")));
            }
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        let nd = dim as f64;
        // (weight × normalizer, 1/σ²)
        let terms: Vec<(f64, f64)> = components
            .iter()
            .map(|&(w, s)| (w / total * (2.0 * PI * s * s).powf(-nd / 2.0), 1.0 / (s * s)))
            .collect();
        let t1 = terms.clone();
        let t2 = terms;
        let scale = components.iter().map(|c| c.1).fold(0.0, f64::max);
        let desc = components
            .iter()
            .map(|(w, s)| format!("{w},0,{s}"))
            .collect::<Vec<_>>()
            .join(";");
        Self::new(dim, format!("mixture(n={dim}: {desc})"), move |r| {
            t1.iter().map(|&(c, p)| c * (-0.5 * p * r * r).exp()).sum()
        })?
        .with_derivative(move |r| t2.iter().map(|&(c, p)| -c * p * r * (-0.5 * p * r * r).exp()).sum())
        .with_scale(scale)
    }

    /// Uniform density on the ball of radius `radius`.
    pub fn uniform_ball(dim: usize, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("radius must be > 0, got {radius}")));
        }
        let height = 1.0 / (unit_ball_volume(dim)? * radius.powi(dim as i32));
        Ok(Self::new(dim, format!("uniform-ball(n={dim}, radius={radius})"), move |_| height)?
            .with_derivative(|_| 0.0)
            .with_support(radius)?
            .with_scale(radius)?
            .with_edge_jump())
    }

    /// Exponential profile e^{-rate·r} tapered by (1 - r/R)² so that it vanishes
    /// smoothly at the truncation radius R.
    pub fn tapered_exponential(dim: usize, rate: f64, radius: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0 && radius.is_finite() && radius > 0.0) {
            return Err(Error::domain("tapered exponential needs rate > 0 and radius > 0"));
        }
        let kernel = move |r: f64| (-rate * r).exp() * (1.0 - r / radius).powi(2);
        let kernel_d = move |r: f64| {
            let t = 1.0 - r / radius;
            (-rate * r).exp() * (-rate * t * t - 2.0 * t / radius)
        };
        let raw = Self::new(dim, "", kernel)?.with_support(radius)?.with_scale(radius.min(1.0 / rate))?;
        let z = raw.normalization()?;
        Self::new(dim, format!("tapered-exp(n={dim}, rate={rate}, radius={radius})"), move |r| kernel(r) / z)?
            .with_derivative(move |r| kernel_d(r) / z)
            .with_support(radius)?
            .with_scale(radius.min(1.0 / rate))
    }

    /// A tabulated profile interpolated by a natural cubic spline and
    /// renormalized. The table's last radius bounds the support; a nonzero last
    /// value is treated as a jump to zero.
    pub fn from_table(dim: usize, radii: Vec<f64>, values: Vec<f64>, descriptor: impl Into<String>) -> Result<Self> {
        if radii.first().copied() != Some(0.0) {
            return Err(Error::domain("profile table must start at r = 0"));
        }
        if values.iter().any(|v| *v < 0.0) {
            return Err(Error::domain("profile values must be nonnegative"));
        }
        let peak = values.iter().copied().fold(0.0, f64::max);
        let jump = values.last().copied().unwrap_or(0.0) > 1e-12 * peak;
        let spline = Arc::new(CubicSpline::new(radii, values)?);
        let (_, r_max) = spline.domain();
        let s1 = spline.clone();
        let raw = Self::new(dim, "", move |r| s1.value(r).max(0.0))?
            .with_support(r_max)?
            .with_scale(r_max / 4.0)?;
        let z = raw.normalization()?;
        let s2 = spline.clone();
        let s3 = spline;
        let d = Self::new(dim, descriptor, move |r| s2.value(r).max(0.0) / z)?
            .with_derivative(move |r| if s3.value(r) > 0.0 { s3.derivative(r) / z } else { 0.0 })
            .with_support(r_max)?
            .with_scale(r_max / 4.0)?;
        Ok(if jump { d.with_edge_jump() } else { d })
    }
}

/// Quadrature settings for the estimators.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorOptions {
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

fn accept(what: &str, est: Estimate, rel_tol: f64) -> Result<f64> {
    let ok = est.is_finite() && (est.converged || est.error <= 100.0 * rel_tol * est.value.abs());
    if ok {
        Ok(est.value)
    } else {
        Err(Error::Divergent {
            what: what.to_string(),
            partial: est.value,
        })
    }
}

impl RadialDensity {
    fn radial_integral<G: Fn(f64) -> f64>(&self, what: &str, g: G, shrink_edge: bool, opts: EstimatorOptions) -> Result<f64> {
        let qo = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: opts.rel_tol,
            max_intervals: opts.max_intervals,
        };
        let n = self.dim as i32;
        let h = |r: f64| {
            let v = g(r);
            if v == 0.0 {
                0.0
            } else {
                r.powi(n - 1) * v
            }
        };
        let value = match self.support {
            Some(rs) => {
                let upper = if shrink_edge { rs * (1.0 - EDGE_EPS) } else { rs };
                let total = accept(what, integrate(&h, 0.0, upper, qo), opts.rel_tol)?;
                if shrink_edge {
                    // An integrable edge singularity puts less mass in the inner
                    // shell than in the outer one; a non-integrable one does not.
                    let outer = integrate(&h, rs * (1.0 - 1e-4), rs * (1.0 - 1e-7), qo).value;
                    let inner = integrate(&h, rs * (1.0 - 1e-7), upper, qo).value;
                    if inner > 1e-8 * total.abs() && inner >= 0.9 * outer {
                        return Err(Error::Divergent {
                            what: format!("{what} (edge singularity)"),
                            partial: sphere_area(self.dim)? * total,
                        });
                    }
                }
                total
            }
            None => {
                let split = self.scale;
                let head = accept(what, integrate(&h, 0.0, split, qo), opts.rel_tol)?;
                let tail = integrate_to_infinity(&h, split, qo);
                head + accept(what, tail, opts.rel_tol)?
            }
        };
        Ok(sphere_area(self.dim)? * value)
    }

    /// n ω_n ∫ r^{n-1} f_r(r) dr.
    pub fn normalization(&self) -> Result<f64> {
        self.radial_integral("normalization", |r| self.value(r), false, EstimatorOptions::default())
    }

    pub fn check_normalization(&self, tol: f64) -> Result<()> {
        let z = self.normalization()?;
        if (z - 1.0).abs() > tol {
            return Err(Error::domain(format!(
                "{} integrates to {z}, not 1 within {tol:e}",
                self.descriptor
            )));
        }
        Ok(())
    }

    // Is f positive anywhere beyond r? Distinguishes interior zeros from tail underflow.
    fn positive_beyond(&self, r: f64) -> bool {
        let limit = self.support.unwrap_or(f64::INFINITY);
        [1e-3, 1e-2, 0.1, 0.5, 1.0]
            .iter()
            .map(|d| r + d * self.scale.max(r))
            .filter(|x| *x < limit)
            .any(|x| self.value(x) > 0.0)
    }
}

/// M_q[f] = ∫ f^q.
pub fn quad_mq(f: &RadialDensity, q: f64) -> Result<f64> {
    quad_mq_with(f, q, EstimatorOptions::default())
}

pub fn quad_mq_with(f: &RadialDensity, q: f64, opts: EstimatorOptions) -> Result<f64> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::domain(format!("M_q needs q >= 0, got {q}")));
    }
    f.radial_integral(
        "M_q",
        |r| {
            let v = f.value(r);
            if v > 0.0 {
                v.powf(q)
            } else {
                0.0
            }
        },
        false,
        opts,
    )
}

/// m_α[f] = ∫ |x|^α f.
pub fn quad_moment(f: &RadialDensity, alpha: f64) -> Result<f64> {
    quad_moment_with(f, alpha, EstimatorOptions::default())
}

pub fn quad_moment_with(f: &RadialDensity, alpha: f64, opts: EstimatorOptions) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!("moment order must be > 0, got {alpha}")));
    }
    f.radial_integral("m_alpha", |r| r.powf(alpha) * f.value(r), false, opts)
}

/// Shannon entropy -∫ f ln f.
pub fn quad_shannon(f: &RadialDensity) -> Result<f64> {
    f.radial_integral(
        "Shannon entropy",
        |r| {
            let v = f.value(r);
            if v > 0.0 {
                -v * v.ln()
            } else {
                0.0
            }
        },
        false,
        EstimatorOptions::default(),
    )
}

/// I_{β,q}[f] = n ω_n ∫ r^{n-1} f^{β(q-1)+1} |f'/f|^β dr.
pub fn quad_fisher(f: &RadialDensity, beta: f64, q: f64) -> Result<f64> {
    quad_fisher_with(f, beta, q, EstimatorOptions::default())
}

pub fn quad_fisher_with(f: &RadialDensity, beta: f64, q: f64, opts: EstimatorOptions) -> Result<f64> {
    if !(beta.is_finite() && beta > 1.0) {
        return Err(Error::domain(format!("Fisher information needs beta > 1, got {beta}")));
    }
    if !q.is_finite() {
        return Err(Error::domain("q must be finite"));
    }
    if !f.continuous {
        return Err(Error::NotApplicable(format!(
            "{} jumps at its support boundary; the (beta,q)-Fisher information is undefined",
            f.descriptor
        )));
    }
    let power = beta * (q - 1.0) + 1.0;
    let interior_zero: Cell<Option<f64>> = Cell::new(None);
    let value = f.radial_integral(
        "I_bq",
        |r| {
            let v = f.value(r);
            if v <= 0.0 {
                if interior_zero.get().is_none() && f.positive_beyond(r) {
                    interior_zero.set(Some(r));
                }
                return 0.0;
            }
            let d = f.derivative_at(r).abs();
            if d == 0.0 {
                return 0.0;
            }
            (power * v.ln() + beta * (d / v).ln()).exp()
        },
        true,
        opts,
    );
    if let Some(r) = interior_zero.get() {
        return Err(Error::ZeroDensity { r });
    }
    value
}

/// Every measure of `f` at (α, q) by quadrature. At q = 1 the entropies are the
/// Shannon entropy. The Fisher entry is absent for α ≤ 1 or when `f` jumps at
/// its support edge.
pub fn measure_all(f: &RadialDensity, alpha: f64, q: f64) -> Result<MeasureSet> {
    match measure_all_split(f, alpha, q)? {
        (_, Some(e)) => Err(e),
        (set, None) => Ok(set),
    }
}

/// Like [`measure_all`], but a failed Fisher integral is handed back next to
/// the remaining measures (with `i_bq` empty) instead of aborting.
pub fn measure_all_split(f: &RadialDensity, alpha: f64, q: f64) -> Result<(MeasureSet, Option<Error>)> {
    let beta = holder_conjugate(alpha);
    let mq = quad_mq(f, q).map_err(|e| e.in_field("Mq"))?;
    let shannon = if is_q_one(q) {
        Some(quad_shannon(f).map_err(|e| e.in_field("Hq"))?)
    } else {
        None
    };
    let m_alpha = quad_moment(f, alpha).map_err(|e| e.in_field("m_alpha"))?;
    let (i_bq, fisher_error) = match beta {
        Some(b) if f.continuous => match quad_fisher(f, b, q) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.in_field("I_bq"))),
        },
        _ => (None, None),
    };
    let set = MeasureSet::assemble(
        ParamsEcho {
            n: f.dim,
            alpha,
            beta,
            q,
        },
        mq,
        shannon,
        m_alpha,
        i_bq,
        MeasureMethods::uniform(Method::Quadrature),
    )
    .map_err(|e| e.in_field("Hq"))?;
    Ok((set, fisher_error))
}
