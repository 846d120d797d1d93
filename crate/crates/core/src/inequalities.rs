//! The four information inequalities, evaluated on arbitrary radial densities.
//!
//! Each check reports lhs/rhs with the q-Gaussian side taken from closed forms
//! at γ = 1; the inequalities are scale invariant, so the choice of γ does not
//! matter. Fisher–moment–entropy additionally assumes r^n f_r(r)^q → 0 at
//! infinity, which is the caller's responsibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Validity};
use crate::estimators::{measure_all_split, RadialDensity};
use crate::measures::{holder_conjugate, is_q_one, MeasureSet, Method};
use crate::qgaussian::{closed_measures, QGaussianParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    FisherMomentEntropy,
    MomentEntropy,
    Stam,
    CramerRao,
}

impl Inequality {
    pub const ALL: [Inequality; 4] = [
        Inequality::FisherMomentEntropy,
        Inequality::MomentEntropy,
        Inequality::Stam,
        Inequality::CramerRao,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::FisherMomentEntropy => "fisher-moment-entropy",
            Inequality::MomentEntropy => "moment-entropy",
            Inequality::Stam => "stam",
            Inequality::CramerRao => "cramer-rao",
        }
    }

    /// Does the check need the Fisher information of the tested density?
    pub fn uses_fisher(self) -> bool {
        self != Inequality::MomentEntropy
    }
}

impl std::fmt::Display for Inequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Inequality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Inequality::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown inequality '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub eq_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            eq_tol: 1e-5,
        }
    }
}

/// Where the measures of the tested density come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    /// Closed forms for a q-Gaussian evaluated at its own (α, q); quadrature otherwise.
    #[default]
    Auto,
    Quadrature,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CheckOptions {
    pub tolerances: Tolerances,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub q: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodTags {
    pub lhs: Method,
    pub rhs: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: Inequality,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub deficit: f64,
    pub passes: bool,
    pub equality: bool,
    pub params: ReportParams,
    pub density: String,
    pub tolerances: Tolerances,
    pub method_tags: MethodTags,
}

/// Measures of the tested density together with how they were obtained.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub measures: MeasureSet,
    pub method: Method,
    pub density: String,
    pub gamma: Option<f64>,
    /// Why the Fisher information is missing, when its integral failed.
    pub fisher_error: Option<Error>,
}

/// Measures of `f` at (α, q), computed once and shared between checks.
pub fn evaluate(f: &RadialDensity, alpha: f64, q: f64, evaluation: Evaluation) -> Result<Evaluated> {
    let tagged = f
        .qgaussian()
        .filter(|p| evaluation == Evaluation::Auto && p.alpha() == alpha && same_q(p.q(), q));
    let (measures, fisher_error, method, gamma) = match tagged {
        Some(p) => (closed_measures(p)?, None, Method::ClosedForm, Some(p.gamma())),
        None => {
            let (set, err) = measure_all_split(f, alpha, q)?;
            (set, err, Method::Quadrature, f.qgaussian().map(|p| p.gamma()))
        }
    };
    Ok(Evaluated {
        measures,
        method,
        density: f.descriptor().to_string(),
        gamma,
        fisher_error,
    })
}

fn same_q(a: f64, b: f64) -> bool {
    a == b || (is_q_one(a) && is_q_one(b))
}

/// The γ = 1 q-Gaussian matching (n, α, q), after checking the precondition of `which`.
fn reference(n: usize, alpha: f64, q: f64, which: Inequality) -> Result<(QGaussianParams, MeasureSet)> {
    if which.uses_fisher() && holder_conjugate(alpha).is_none() {
        return Err(Error::domain(format!("{which} needs alpha > 1, got {alpha}")));
    }
    let g = QGaussianParams::new(n, alpha, q, 1.0)?;
    // the Stam condition implies M_q finiteness, and names the bound the user asked about
    if matches!(which, Inequality::Stam | Inequality::CramerRao) {
        g.require(Validity::StamCondition)?;
    }
    g.require(Validity::MqFiniteness)?;
    if which.uses_fisher() {
        g.require(Validity::FisherFiniteness)?;
    }
    let set = closed_measures(&g)?;
    Ok((g, set))
}

fn fisher_of(e: &Evaluated, which: Inequality) -> Result<f64> {
    if let Some(err) = &e.fisher_error {
        return Err(err.clone());
    }
    e.measures.i_bq.ok_or_else(|| {
        Error::NotApplicable(format!(
            "{which} needs the Fisher information of {}, which is undefined",
            e.density
        ))
    })
}

/// Evaluates one inequality from precomputed measures.
pub fn check_evaluated(e: &Evaluated, which: Inequality, tol: Tolerances) -> Result<InequalityReport> {
    let echo = e.measures.params_echo;
    let (n, alpha, q) = (echo.n, echo.alpha, echo.q);
    let (g, gset) = reference(n, alpha, q, which)?;
    let nf = n as f64;
    let lambda = g.lambda();
    let f = &e.measures;
    let (lhs, rhs, rhs_method) = match which {
        Inequality::FisherMomentEntropy => {
            let beta = g.beta().expect("alpha > 1");
            let lhs = fisher_of(e, which)?.powf(1.0 / beta) * f.m_alpha.powf(1.0 / alpha);
            (lhs, nf / q * f.mq, e.method)
        }
        Inequality::MomentEntropy => {
            let side = |s: &MeasureSet| s.m_alpha.powf(1.0 / alpha) / s.nq.powf(1.0 / nf);
            (side(f), side(&gset), Method::ClosedForm)
        }
        Inequality::Stam => {
            let beta = g.beta().expect("alpha > 1");
            let e_i = nf / (beta * lambda);
            let lhs = f.nq * fisher_of(e, which)?.powf(e_i);
            (lhs, gset.nq * gset.i_bq.expect("alpha > 1").powf(e_i), Method::ClosedForm)
        }
        Inequality::CramerRao => {
            let beta = g.beta().expect("alpha > 1");
            let e_i = 1.0 / (beta * lambda);
            let lhs = fisher_of(e, which)?.powf(e_i) * f.m_alpha.powf(1.0 / alpha);
            let rhs = gset.i_bq.expect("alpha > 1").powf(e_i) * gset.m_alpha.powf(1.0 / alpha);
            (lhs, rhs, Method::ClosedForm)
        }
    };
    if !(lhs.is_finite() && rhs.is_finite() && lhs > 0.0 && rhs > 0.0) {
        return Err(Error::Divergent {
            what: format!("{which} sides"),
            partial: lhs,
        });
    }
    let ratio = lhs / rhs;
    let deficit = ratio - 1.0;
    Ok(InequalityReport {
        name: which,
        lhs,
        rhs,
        ratio,
        deficit,
        passes: ratio >= 1.0 - tol.rel_tol,
        equality: deficit.abs() <= tol.eq_tol,
        params: ReportParams {
            n,
            alpha,
            beta: g.beta(),
            q,
            lambda,
            gamma: e.gamma,
        },
        density: e.density.clone(),
        tolerances: tol,
        method_tags: MethodTags {
            lhs: e.method,
            rhs: rhs_method,
        },
    })
}

pub fn check(f: &RadialDensity, alpha: f64, q: f64, which: Inequality, opts: CheckOptions) -> Result<InequalityReport> {
    // precondition errors take priority over measure evaluation
    reference(f.dim(), alpha, q, which)?;
    let e = evaluate(f, alpha, q, opts.evaluation)?;
    check_evaluated(&e, which, opts.tolerances)
}

pub fn check_fisher_moment_entropy(f: &RadialDensity, alpha: f64, q: f64) -> Result<InequalityReport> {
    check(f, alpha, q, Inequality::FisherMomentEntropy, CheckOptions::default())
}

pub fn check_moment_entropy(f: &RadialDensity, alpha: f64, q: f64) -> Result<InequalityReport> {
    check(f, alpha, q, Inequality::MomentEntropy, CheckOptions::default())
}

pub fn check_stam(f: &RadialDensity, alpha: f64, q: f64) -> Result<InequalityReport> {
    check(f, alpha, q, Inequality::Stam, CheckOptions::default())
}

pub fn check_cramer_rao(f: &RadialDensity, alpha: f64, q: f64) -> Result<InequalityReport> {
    check(f, alpha, q, Inequality::CramerRao, CheckOptions::default())
}

/// All four checks on one set of measures. Inapplicable ones (Fisher-based
/// checks on a discontinuous density) come back as `NotApplicable` errors.
pub fn check_all(f: &RadialDensity, alpha: f64, q: f64, opts: CheckOptions) -> Result<Vec<Result<InequalityReport>>> {
    let e = evaluate(f, alpha, q, opts.evaluation)?;
    Ok(Inequality::ALL
        .iter()
        .map(|&w| check_evaluated(&e, w, opts.tolerances))
        .collect())
}

/// Relative gap between the Cramér–Rao ratio and the moment-entropy ratio
/// times the n-th root of the Stam ratio. The Stam inequality carries N_q to
/// the first power, so its n-th root supplies the N_q^{1/n} that cancels.
pub fn product_identity_gap(moment_entropy: &InequalityReport, stam: &InequalityReport, cramer_rao: &InequalityReport) -> f64 {
    let n = cramer_rao.params.n as f64;
    let product = moment_entropy.ratio * stam.ratio.powf(1.0 / n);
    (cramer_rao.ratio - product).abs() / cramer_rao.ratio
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qg(n: usize, alpha: f64, q: f64, gamma: f64) -> RadialDensity {
        RadialDensity::qgaussian_density(&QGaussianParams::new(n, alpha, q, gamma).unwrap())
    }

    fn mixture() -> RadialDensity {
        RadialDensity::gaussian_mixture(1, &[(0.5, 1.0), (0.5, 2.0)]).unwrap()
    }

    #[test]
    fn standard_normal_examples() {
        let f = RadialDensity::gaussian(1, 1.0).unwrap();
        let fme = check_fisher_moment_entropy(&f, 2.0, 1.0).unwrap();
        assert!((fme.lhs - 1.0).abs() < 1e-12 && (fme.rhs - 1.0).abs() < 1e-12 && fme.equality);
        let stam = check_stam(&f, 2.0, 1.0).unwrap();
        let want = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
        assert!((stam.lhs - want).abs() < 1e-9 && (stam.rhs - want).abs() < 1e-9);
        let cr = check_cramer_rao(&f, 2.0, 1.0).unwrap();
        assert!((cr.lhs - 1.0).abs() < 1e-12 && (cr.rhs - 1.0).abs() < 1e-12);
        assert!(check_moment_entropy(&f, 2.0, 1.0).unwrap().equality);
    }

    #[test]
    fn scaled_normal_cramer_rao() {
        let f = RadialDensity::gaussian(1, 2.0).unwrap();
        let opts = CheckOptions {
            evaluation: Evaluation::Quadrature,
            ..Default::default()
        };
        let cr = check(&f, 2.0, 1.0, Inequality::CramerRao, opts).unwrap();
        assert!((cr.lhs - 1.0).abs() < 1e-8, "{}", cr.lhs);
        assert!(cr.equality);
    }

    #[test]
    fn qgaussian_equality_cases() {
        let cases = [
            (Inequality::FisherMomentEntropy, qg(2, 2.0, 1.2, 3.0), 1.2),
            (Inequality::Stam, qg(1, 2.0, 2.0, 3.0), 2.0),
            (Inequality::CramerRao, qg(3, 2.0, 1.1, 0.7), 1.1),
            (Inequality::MomentEntropy, qg(2, 3.0, 0.9, 0.1), 0.9),
            (Inequality::MomentEntropy, qg(2, 3.0, 0.9, 10.0), 0.9),
        ];
        for (which, f, q) in cases {
            for evaluation in [Evaluation::Auto, Evaluation::Quadrature] {
                let opts = CheckOptions {
                    evaluation,
                    ..Default::default()
                };
                let r = check(&f, f.qgaussian().unwrap().alpha(), q, which, opts).unwrap();
                assert!(r.deficit.abs() <= 1e-6, "{which} {evaluation:?}: {}", r.deficit);
                assert!(r.equality && r.passes);
            }
        }
    }

    #[test]
    fn mixture_is_strict() {
        let f = mixture();
        for which in Inequality::ALL {
            let r = check(&f, 2.0, 1.0, which, CheckOptions::default()).unwrap();
            assert!(r.ratio > 1.0 + 1e-6 && r.passes && !r.equality, "{which}: {}", r.ratio);
            assert_eq!(r.method_tags.lhs, Method::Quadrature);
        }
    }

    #[test]
    fn uniform_disk_moment_entropy() {
        let f = RadialDensity::uniform_ball(2, 1.0).unwrap();
        let me = check_moment_entropy(&f, 2.0, 1.0).unwrap();
        // m_2 = 1/2, N_1 = π, so lhs = (1/2)^{1/2}/π^{1/2}; rhs from the Gaussian: (2σ²)^{1/2}/(2πeσ²)^{1/2}
        let lhs = (0.5f64 / std::f64::consts::PI).sqrt();
        let rhs = (1.0 / (std::f64::consts::PI * std::f64::consts::E)).sqrt();
        assert!((me.lhs - lhs).abs() < 1e-10 && (me.rhs - rhs).abs() < 1e-10);
        assert!(me.ratio > 1.0);
        assert!(matches!(check_stam(&f, 2.0, 1.0), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn divergent_fisher_spares_moment_entropy() {
        // (1 - r/R)^2 taper: the β = 3 Fisher integrand blows up at the edge for q = 0.9
        let f = RadialDensity::tapered_exponential(1, 1.0, 4.0).unwrap();
        let me = check_moment_entropy(&f, 1.5, 0.9).unwrap();
        assert!(me.ratio > 1.0 + 1e-6);
        let err = check_stam(&f, 1.5, 0.9).unwrap_err();
        assert!(err.is_numeric(), "{err}");
        let all = check_all(&f, 1.5, 0.9, CheckOptions::default()).unwrap();
        assert!(all[1].is_ok() && all[0].is_err() && all[2].is_err() && all[3].is_err());
    }

    #[test]
    fn product_identity() {
        for f in [mixture(), RadialDensity::gaussian_mixture(3, &[(0.2, 0.7), (0.8, 1.4)]).unwrap()] {
            for q in [0.9, 1.0, 1.3] {
                let all = check_all(&f, 2.0, q, CheckOptions::default()).unwrap();
                let [_, me, st, cr] = [&all[0], &all[1], &all[2], &all[3]].map(|r| r.as_ref().unwrap().clone());
                assert!(product_identity_gap(&me, &st, &cr) < 1e-12);
            }
        }
    }

    #[test]
    fn fisher_moment_entropy_at_q_one_has_rhs_n() {
        let f = RadialDensity::gaussian_mixture(3, &[(0.5, 1.0), (0.5, 2.0)]).unwrap();
        let r = check_fisher_moment_entropy(&f, 2.0, 1.0).unwrap();
        assert!((r.rhs - 3.0).abs() < 1e-9);
    }

    #[test]
    fn preconditions_are_named() {
        let f = qg(3, 2.0, 1.0, 1.0);
        let err = check_stam(&f, 2.0, 0.6).unwrap_err();
        assert!(matches!(
            err,
            Error::Validity {
                violation: Validity::StamCondition,
                ..
            }
        ));
        assert!(check_cramer_rao(&f, 1.0, 1.0).is_err());
        assert!(check_moment_entropy(&qg(2, 2.0, 1.0, 1.0), 2.0, 0.5).is_err());
    }

    #[test]
    fn scale_invariance_of_ratios() {
        let base = RadialDensity::gaussian_mixture(2, &[(0.3, 0.5), (0.7, 1.5)]).unwrap();
        let wide = RadialDensity::gaussian_mixture(2, &[(0.3, 1.5), (0.7, 4.5)]).unwrap();
        for which in Inequality::ALL {
            let a = check(&base, 2.0, 1.2, which, CheckOptions::default()).unwrap().ratio;
            let b = check(&wide, 2.0, 1.2, which, CheckOptions::default()).unwrap().ratio;
            assert!((a - b).abs() < 1e-8 * a, "{which}: {a} vs {b}");
        }
    }

    #[test]
    fn report_json_field_names() {
        let r = check_stam(&mixture(), 2.0, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "name", "lhs", "rhs", "ratio", "deficit", "passes", "equality", "params", "density", "tolerances",
            "method_tags",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["name"], "stam");
        for key in ["n", "alpha", "beta", "q", "lambda"] {
            assert!(v["params"].get(key).is_some(), "{key}");
        }
        assert!(v["params"].get("gamma").is_none());
        let back: InequalityReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
