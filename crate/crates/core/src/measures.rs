//! The bundle of information measures attached to one density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Branch switch for the q = 1 (exponential / Shannon) limit.
pub const Q_ONE_TOL: f64 = 1e-12;

pub fn is_q_one(q: f64) -> bool {
    (q - 1.0).abs() < Q_ONE_TOL
}

/// Hölder conjugate β = α/(α - 1), defined for α > 1.
pub fn holder_conjugate(alpha: f64) -> Option<f64> {
    (alpha > 1.0 && alpha.is_finite()).then(|| alpha / (alpha - 1.0))
}

/// How a measure value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub n: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureMethods {
    #[serde(rename = "Mq")]
    pub mq: Method,
    #[serde(rename = "Hq")]
    pub hq: Method,
    #[serde(rename = "Sq")]
    pub sq: Method,
    #[serde(rename = "Nq")]
    pub nq: Method,
    pub m_alpha: Method,
    #[serde(rename = "I_bq")]
    pub i_bq: Method,
}

impl MeasureMethods {
    pub fn uniform(m: Method) -> Self {
        Self {
            mq: m,
            hq: m,
            sq: m,
            nq: m,
            m_alpha: m,
            i_bq: m,
        }
    }
}

/// M_q, H_q, S_q, N_q, m_α and I_{β,q} of one density.
///
/// `i_bq` is `None` when α ≤ 1 (no finite Hölder conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    #[serde(rename = "Mq")]
    pub mq: f64,
    #[serde(rename = "Hq")]
    pub hq: f64,
    #[serde(rename = "Sq")]
    pub sq: f64,
    #[serde(rename = "Nq")]
    pub nq: f64,
    pub m_alpha: f64,
    #[serde(rename = "I_bq")]
    pub i_bq: Option<f64>,
    pub method: MeasureMethods,
    pub params_echo: ParamsEcho,
}

impl MeasureSet {
    /// Builds the set from M_q. At q = 1 the Shannon entropy must be supplied;
    /// it becomes both H_1 and S_1, and N_1 = exp(H_1).
    pub fn assemble(
        params: ParamsEcho,
        mq: f64,
        shannon: Option<f64>,
        m_alpha: f64,
        i_bq: Option<f64>,
        method: MeasureMethods,
    ) -> Result<Self> {
        let q = params.q;
        let (hq, sq, nq) = if is_q_one(q) {
            let h = shannon
                .ok_or_else(|| Error::domain("q = 1 requires the Shannon entropy"))?;
            (h, h, h.exp())
        } else {
            (
                renyi_entropy(mq, q)?,
                tsallis_entropy(mq, q)?,
                entropy_power(mq, q)?,
            )
        };
        Ok(Self {
            mq,
            hq,
            sq,
            nq,
            m_alpha,
            i_bq,
            method,
            params_echo: params,
        })
    }

    pub fn fisher(&self) -> Result<f64> {
        self.i_bq
            .ok_or_else(|| Error::NotApplicable("Fisher information needs alpha > 1".into()))
    }
}

fn check_mq(mq: f64, q: f64) -> Result<()> {
    if !(mq.is_finite() && mq > 0.0) {
        return Err(Error::domain(format!("M_q must be finite and positive, got {mq}")));
    }
    if is_q_one(q) {
        return Err(Error::domain(
            "the algebraic entropy forms are undefined at q = 1; use the Shannon entropy",
        ));
    }
    Ok(())
}

/// Rényi entropy H_q = ln(M_q)/(1 - q).
pub fn renyi_entropy(mq: f64, q: f64) -> Result<f64> {
    check_mq(mq, q)?;
    Ok(mq.ln() / (1.0 - q))
}

/// Tsallis entropy S_q = (1 - M_q)/(1 - q).
pub fn tsallis_entropy(mq: f64, q: f64) -> Result<f64> {
    check_mq(mq, q)?;
    Ok((1.0 - mq) / (1.0 - q))
}

/// Entropy power N_q = M_q^{1/(1 - q)}.
pub fn entropy_power(mq: f64, q: f64) -> Result<f64> {
    check_mq(mq, q)?;
    Ok((mq.ln() / (1.0 - q)).exp())
}
