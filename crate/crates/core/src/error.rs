use thiserror::Error;

/// Named validity-domain violations of the q-Gaussian family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    /// q must exceed (n - alpha)/n for the density to exist.
    Existence,
    /// q must exceed n/(n + alpha) for M_q (and the moment) to be finite.
    MqFiniteness,
    /// q must exceed max{1 - alpha, n/(n + alpha)} and alpha > 1 for I_{beta,q}.
    FisherFiniteness,
    /// q must exceed max{(n - 1)/n, n/(n + alpha)} for the Stam and Cramer-Rao bounds.
    StamCondition,
}

impl std::fmt::Display for Validity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Validity::Existence => "existence (q > (n - alpha)/n)",
            Validity::MqFiniteness => "Mq-finiteness (q > n/(n + alpha))",
            Validity::FisherFiniteness => {
                "Fisher-finiteness (alpha > 1 and q > max{1 - alpha, n/(n + alpha)})"
            }
            Validity::StamCondition => "Stam/Cramer-Rao condition (q > max{(n - 1)/n, n/(n + alpha)})",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validity violation: {violation} (n = {n}, alpha = {alpha}, q = {q})")]
    Validity {
        violation: Validity,
        n: usize,
        alpha: f64,
        q: f64,
    },

    #[error("divergent integral in {what} (partial value {partial:e})")]
    Divergent { what: String, partial: f64 },

    #[error("density vanishes at interior radius r = {r:e}; Fisher information undefined")]
    ZeroDensity { r: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("solver did not converge after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("{field}: {source}")]
    Field {
        field: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_field(self, field: &'static str) -> Self {
        Error::Field {
            field,
            source: Box::new(self),
        }
    }

    /// Strips field annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Field { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for invalid-input style failures (bad parameters, violated preconditions).
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self.root(),
            Error::Domain(_) | Error::Validity { .. } | Error::NotApplicable(_)
        )
    }

    /// True for numerical failures: divergent integrals, solver breakdown, vanishing density.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::Divergent { .. } | Error::NonConvergence { .. } | Error::ZeroDensity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
