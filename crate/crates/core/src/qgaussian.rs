//! The generalized q-Gaussian family and its closed-form information measures.
//!
//! All closed forms are built from the unnormalized moment
//!
//! ```text
//! μ_{p,ν} = ∫ |x|^p (1 - sγ|x|^α)_+^{ν/s} dx
//!         = (n ω_n / α) γ^{-(p+n)/α} × { |s|^{-(p+n)/α} B(·,·)   s ≠ 0
//!                                      { ν^{-(p+n)/α} Γ((p+n)/α)  s = 0
//! ```
//!
//! evaluated in log space. The 1/α prefactor is what the polar substitution
//! t = γ|s| r^α produces; it is pinned by the Gaussian normalization test below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Validity};
use crate::measures::{
    holder_conjugate, is_q_one, MeasureMethods, MeasureSet, Method, ParamsEcho,
};
use crate::special::{ln_beta, ln_gamma, sphere_area};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    n: usize,
    alpha: f64,
    q: f64,
    gamma: f64,
}

/// One member (n, α, q, γ) of the q-Gaussian family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct QGaussianParams {
    n: usize,
    alpha: f64,
    q: f64,
    gamma: f64,
    ln_z: f64,
}

impl From<QGaussianParams> for RawParams {
    fn from(p: QGaussianParams) -> Self {
        RawParams {
            n: p.n,
            alpha: p.alpha,
            q: p.q,
            gamma: p.gamma,
        }
    }
}

impl TryFrom<RawParams> for QGaussianParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        QGaussianParams::new(raw.n, raw.alpha, raw.q, raw.gamma)
    }
}

impl QGaussianParams {
    /// Validates n ≥ 1, α > 0, γ > 0 and the existence bound q > (n - α)/n.
    pub fn new(n: usize, alpha: f64, q: f64, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("dimension n must be >= 1"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::domain(format!("gamma must be finite and > 0, got {gamma}")));
        }
        if !q.is_finite() {
            return Err(Error::domain(format!("q must be finite, got {q}")));
        }
        let mut p = Self {
            n,
            alpha,
            q,
            gamma,
            ln_z: f64::NAN,
        };
        if q <= (n as f64 - alpha) / n as f64 {
            return Err(p.violation(Validity::Existence));
        }
        p.ln_z = ln_mu(&p, 0.0, 1.0, p.s())?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// β = α/(α - 1); `None` for α ≤ 1.
    pub fn beta(&self) -> Option<f64> {
        holder_conjugate(self.alpha)
    }

    /// k = β/(β(q - 1) + 1).
    pub fn k(&self) -> Option<f64> {
        self.beta().map(|b| b / (b * (self.q - 1.0) + 1.0))
    }

    /// λ = n(q - 1) + 1.
    pub fn lambda(&self) -> f64 {
        self.n as f64 * (self.q - 1.0) + 1.0
    }

    pub fn is_exponential(&self) -> bool {
        is_q_one(self.q)
    }

    /// Radius of the compact support for q > 1.
    pub fn support_radius(&self) -> Option<f64> {
        (self.q > 1.0 && !self.is_exponential())
            .then(|| (self.gamma * (self.q - 1.0)).powf(-1.0 / self.alpha))
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.n, self.alpha, self.q, gamma)
    }

    pub fn echo(&self) -> ParamsEcho {
        ParamsEcho {
            n: self.n,
            alpha: self.alpha,
            beta: self.beta(),
            q: self.q,
        }
    }

    pub fn mq_finite(&self) -> bool {
        let n = self.n as f64;
        self.q > n / (n + self.alpha)
    }

    pub fn fisher_finite(&self) -> bool {
        let n = self.n as f64;
        self.alpha > 1.0 && self.q > (1.0 - self.alpha).max(n / (n + self.alpha))
    }

    pub fn stam_condition(&self) -> bool {
        let n = self.n as f64;
        self.alpha > 1.0 && self.q > ((n - 1.0) / n).max(n / (n + self.alpha))
    }

    pub fn violation(&self, v: Validity) -> Error {
        Error::Validity {
            violation: v,
            n: self.n,
            alpha: self.alpha,
            q: self.q,
        }
    }

    pub fn require(&self, v: Validity) -> Result<()> {
        let ok = match v {
            Validity::Existence => true,
            Validity::MqFiniteness => self.mq_finite(),
            Validity::FisherFiniteness => self.fisher_finite(),
            Validity::StamCondition => self.stam_condition(),
        };
        if ok {
            Ok(())
        } else {
            Err(self.violation(v))
        }
    }

    fn s(&self) -> f64 {
        if self.is_exponential() {
            0.0
        } else {
            self.q - 1.0
        }
    }

    /// ln of the unnormalized profile (1 - (q-1)γ r^α)_+^{1/(q-1)}; -∞ outside the support.
    fn ln_kernel(&self, r: f64) -> f64 {
        let t = self.gamma * r.powf(self.alpha);
        if self.is_exponential() {
            return -t;
        }
        let s = self.q - 1.0;
        let base = 1.0 - s * t;
        if base <= 0.0 {
            f64::NEG_INFINITY
        } else {
            base.ln() / s
        }
    }

    /// ln Z(γ).
    pub fn ln_partition(&self) -> f64 {
        self.ln_z
    }

    /// Radial profile G_γ(r), r = |x|.
    pub fn radial(&self, r: f64) -> f64 {
        let l = self.ln_kernel(r.abs());
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            (l - self.ln_partition()).exp()
        }
    }

    /// Analytic derivative dG_γ/dr.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let r = r.abs();
        let g = self.radial(r);
        if g == 0.0 {
            return 0.0;
        }
        let base = if self.is_exponential() {
            1.0
        } else {
            1.0 - (self.q - 1.0) * self.gamma * r.powf(self.alpha)
        };
        let slope = if r == 0.0 {
            match self.alpha {
                a if a > 1.0 => 0.0,
                a if a == 1.0 => self.gamma,
                _ => f64::INFINITY,
            }
        } else {
            self.alpha * self.gamma * r.powf(self.alpha - 1.0)
        };
        -slope * g / base
    }
}

/// G_γ(x) for a point x ∈ R^n.
pub fn density(params: &QGaussianParams, x: &[f64]) -> Result<f64> {
    if x.len() != params.n {
        return Err(Error::domain(format!(
            "point has dimension {}, expected {}",
            x.len(),
            params.n
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("point must be finite"));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(params.radial(r))
}

fn ln_mu(params: &QGaussianParams, p: f64, nu: f64, s: f64) -> Result<f64> {
    if !(p >= 0.0 && p.is_finite() && nu.is_finite() && s.is_finite()) {
        return Err(Error::domain(format!("invalid moment arguments p = {p}, nu = {nu}, s = {s}")));
    }
    let n = params.n as f64;
    let alpha = params.alpha;
    let a = (p + n) / alpha;
    let divergent = |why: String| Error::Divergent {
        what: format!("mu_{{p,nu}} with p = {p}, nu = {nu}, s = {s}: {why}"),
        partial: f64::INFINITY,
    };
    let prefactor = (sphere_area(params.n)? / alpha).ln() - a * params.gamma.ln();
    let branch = if s.abs() < crate::measures::Q_ONE_TOL {
        if nu <= 0.0 {
            return Err(divergent("s = 0 needs nu > 0".into()));
        }
        -a * nu.ln() + ln_gamma(a)?
    } else if s > 0.0 {
        let b = nu / s + 1.0;
        if b <= 0.0 {
            return Err(divergent("s > 0 needs nu/s > -1".into()));
        }
        -a * s.ln() + ln_beta(a, b)?
    } else {
        // strict: the integral diverges logarithmically at s = -να/(p+n)
        let lower = -nu * alpha / (p + n);
        if !(lower < s) {
            return Err(divergent(format!("s < 0 needs s > {lower}")));
        }
        -a * (-s).ln() + ln_beta(a, -nu / s - a)?
    };
    Ok(prefactor + branch)
}

/// μ_{p,ν} = ∫|x|^p (1 - sγ|x|^α)_+^{ν/s} dx for the dimension, α and γ of `params`.
pub fn mu_pnu(params: &QGaussianParams, p: f64, nu: f64, s: f64) -> Result<f64> {
    ln_mu(params, p, nu, s).map(f64::exp)
}

/// Partition function Z(γ) = μ_{0,1} at s = q - 1.
pub fn partition_fn(params: &QGaussianParams) -> Result<f64> {
    mu_pnu(params, 0.0, 1.0, params.s())
}

/// ln M_q[G_γ] = ln μ_{0,q} - q ln μ_{0,1}.
pub fn ln_closed_mq(params: &QGaussianParams) -> Result<f64> {
    params.require(Validity::MqFiniteness)?;
    let s = params.s();
    Ok(ln_mu(params, 0.0, params.q, s)? - params.q * ln_mu(params, 0.0, 1.0, s)?)
}

/// Information generating function M_q[G_γ] = ∫G_γ^q.
pub fn closed_mq(params: &QGaussianParams) -> Result<f64> {
    ln_closed_mq(params).map(f64::exp)
}

/// Rényi entropy H_q[G_γ]; at q = 1 the Shannon entropy ln Z + n/α.
pub fn closed_renyi(params: &QGaussianParams) -> Result<f64> {
    if params.is_exponential() {
        return Ok(params.ln_partition() + params.n as f64 / params.alpha);
    }
    Ok(ln_closed_mq(params)? / (1.0 - params.q))
}

/// Tsallis entropy S_q[G_γ]; equals the Shannon entropy at q = 1.
pub fn closed_tsallis(params: &QGaussianParams) -> Result<f64> {
    if params.is_exponential() {
        return closed_renyi(params);
    }
    Ok((1.0 - closed_mq(params)?) / (1.0 - params.q))
}

/// Entropy power N_q[G_γ] = exp(H_q).
pub fn closed_entropy_power(params: &QGaussianParams) -> Result<f64> {
    closed_renyi(params).map(f64::exp)
}

/// Elliptic moment m_α[G_γ] = (n/α) / (γ (1 + (q - 1)(n/α + 1))).
///
/// The algebraic form is continuous through q = 1, where it equals n/(αγ).
pub fn closed_moment_alpha(params: &QGaussianParams) -> Result<f64> {
    params.require(Validity::MqFiniteness)?;
    let na = params.n as f64 / params.alpha;
    Ok(na / (params.gamma * (1.0 + params.s() * (na + 1.0))))
}

/// Generalized Fisher information I_{β,q}[G_γ] = (αγ)^β μ_{α,1} / μ_{0,1}^{β(q-1)+1}.
pub fn closed_fisher(params: &QGaussianParams) -> Result<f64> {
    params.require(Validity::FisherFiniteness)?;
    let beta = params.beta().expect("alpha > 1 checked");
    let s = params.s();
    let ln = beta * (params.alpha * params.gamma).ln() + ln_mu(params, params.alpha, 1.0, s)?
        - (beta * s + 1.0) * ln_mu(params, 0.0, 1.0, s)?;
    Ok(ln.exp())
}

/// The same Fisher information through explicit Beta functions, written with
/// the 1/α polar prefactor and the B(n/α, -1/(q-1) - n/α) normalizer.
pub fn closed_fisher_beta_form(params: &QGaussianParams) -> Result<f64> {
    params.require(Validity::FisherFiniteness)?;
    let beta = params.beta().expect("alpha > 1 checked");
    let n = params.n as f64;
    let alpha = params.alpha;
    let q = params.q;
    let na = n / alpha;
    let common = beta * alpha.ln() + (beta / alpha) * params.lambda() * params.gamma.ln();
    if params.is_exponential() {
        return Ok((common + na.ln()).exp());
    }
    let s = q - 1.0;
    let scaled = beta * (1.0 - q) * (sphere_area(params.n)? / alpha).ln()
        + (na * beta * s - 1.0) * s.abs().ln();
    let ratio = if q > 1.0 {
        ln_beta(1.0 + na, q / s)? - (beta * s + 1.0) * ln_beta(na, q / s)?
    } else {
        ln_beta(1.0 + na, -q / s - na)? - (beta * s + 1.0) * ln_beta(na, -1.0 / s - na)?
    };
    Ok((common + scaled + ratio).exp())
}

/// The full closed-form measure set of G_γ. Requires M_q finiteness; the Fisher
/// entry is present when α > 1.
pub fn closed_measures(params: &QGaussianParams) -> Result<MeasureSet> {
    params.require(Validity::MqFiniteness)?;
    let i_bq = if params.alpha > 1.0 {
        Some(closed_fisher(params)?)
    } else {
        None
    };
    let shannon = params.is_exponential().then(|| closed_renyi(params)).transpose()?;
    MeasureSet::assemble(
        params.echo(),
        closed_mq(params)?,
        shannon,
        closed_moment_alpha(params)?,
        i_bq,
        MeasureMethods::uniform(Method::ClosedForm),
    )
}

/// Measures at scale `gamma_new`, obtained from the γ = 1 closed forms through
/// the power laws M_q ∝ γ^{(n/α)(q-1)}, I_{β,q} ∝ γ^{(β/α)λ}, m_α ∝ γ^{-1}.
pub fn rescale(params: &QGaussianParams, gamma_new: f64) -> Result<MeasureSet> {
    if !(gamma_new.is_finite() && gamma_new > 0.0) {
        return Err(Error::domain(format!("gamma_new must be > 0, got {gamma_new}")));
    }
    let unit = closed_measures(&params.with_gamma(1.0)?)?;
    let n = params.n as f64;
    let alpha = params.alpha;
    let q = params.q;
    let lg = gamma_new.ln();
    let mq = (unit.mq.ln() + (n / alpha) * (q - 1.0) * lg).exp();
    let m_alpha = unit.m_alpha / gamma_new;
    let i_bq = match (unit.i_bq, params.beta()) {
        (Some(i), Some(beta)) => Some((i.ln() + (beta / alpha) * params.lambda() * lg).exp()),
        _ => None,
    };
    // H_q shifts by -(n/α) ln γ on every branch
    let shannon = params.is_exponential().then(|| unit.hq - (n / alpha) * lg);
    MeasureSet::assemble(params.echo(), mq, shannon, m_alpha, i_bq, unit.method)
}
