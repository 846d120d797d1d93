//! Constrained minimization of the generalized Fisher information over radial
//! profiles.
//!
//! With u = f^{1/k} the problem becomes: minimize the β-Dirichlet energy
//! n ω_n ∫ r^{n-1} |u'|^β dr subject to n ω_n ∫ r^{n-1} u^k dr = 1 and
//! n ω_n ∫ r^{n-1} r^α u^k dr = m. The minimizer should be G_{γ*}^{1/k} where
//! γ* matches the moment, and the optimal energy is |k|^{-β} I_{β,q}[G_{γ*}].
//!
//! The energy uses one difference per grid cell (evaluated at the cell
//! midpoint), the constraints use trapezoid weights, and u vanishes at the
//! truncation radius. An augmented-Lagrangian outer loop drives the
//! constraints; each inner problem is solved by projected Newton on u ≥ 0.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Validity};
use crate::measures::holder_conjugate;
use crate::qgaussian::{closed_fisher, closed_moment_alpha, QGaussianParams};
use crate::quadrature::{integrate_to_infinity, QuadOptions};
use crate::special::sphere_area;

/// Smoothing of |u'|^β for β < 2.
pub const SMOOTHING_EPS: f64 = 1e-8;
/// Tail mass left beyond the truncation radius when q ≤ 1.
const TAIL_MASS: f64 = 1e-10;
/// Upper bound on the truncation radius in units of γ*^{-1/α}.
const MAX_RADIUS_SCALES: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Flat,
    Exponential,
    QgaussianDetuned,
}

impl std::str::FromStr for Init {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Init::Flat),
            "exponential" => Ok(Init::Exponential),
            "qgaussian-detuned" | "detuned" => Ok(Init::QgaussianDetuned),
            _ => Err(Error::domain(format!("unknown init '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Target for the largest relative constraint violation.
    pub constraint_tol: f64,
    /// Return an unconverged solution instead of an error.
    pub allow_unconverged: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer: 60,
            max_inner: 400,
            constraint_tol: 1e-11,
            allow_unconverged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalProblem {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub m_target: f64,
    pub grid: Vec<f64>,
    pub radius: f64,
}

impl VariationalProblem {
    /// Uniform grid of `nodes` points on [0, R] with the default truncation radius.
    pub fn new(n: usize, alpha: f64, q: f64, m_target: f64, nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::domain(format!("need at least 8 grid nodes, got {nodes}")));
        }
        let radius = truncation_radius(n, alpha, q, m_target)?;
        let grid = (0..nodes).map(|i| radius * i as f64 / (nodes - 1) as f64).collect();
        Self::with_grid(n, alpha, q, m_target, grid)
    }

    pub fn with_grid(n: usize, alpha: f64, q: f64, m_target: f64, grid: Vec<f64>) -> Result<Self> {
        if !(m_target.is_finite() && m_target > 0.0) {
            return Err(Error::domain(format!("moment target must be > 0, got {m_target}")));
        }
        let beta = holder_conjugate(alpha)
            .ok_or_else(|| Error::domain(format!("the variational problem needs alpha > 1, got {alpha}")))?;
        let p = QGaussianParams::new(n, alpha, q, 1.0)?;
        p.require(Validity::FisherFiniteness)?;
        match p.k() {
            Some(k) if k.is_finite() && k > 0.0 => {}
            k => {
                return Err(Error::domain(format!(
                    "k = beta/(beta(q-1)+1) must be finite and positive, got {k:?}"
                )))
            }
        }
        if grid.len() < 8 || grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("grid must start at 0, increase strictly and have >= 8 nodes"));
        }
        let radius = *grid.last().expect("nonempty");
        Ok(Self {
            n,
            alpha,
            beta,
            q,
            m_target,
            grid,
            radius,
        })
    }

    pub fn k(&self) -> f64 {
        self.beta / (self.beta * (self.q - 1.0) + 1.0)
    }

    /// γ* with m_α[G_{γ*}] = m_target.
    pub fn gamma_star(&self) -> f64 {
        gamma_for_moment(self.n, self.alpha, self.q, self.m_target)
    }

    /// The q-Gaussian the minimizer should reproduce.
    pub fn reference(&self) -> Result<QGaussianParams> {
        QGaussianParams::new(self.n, self.alpha, self.q, self.gamma_star())
    }

    /// Closed-form optimum |k|^{-β} I_{β,q}[G_{γ*}].
    pub fn optimum(&self) -> Result<f64> {
        Ok(closed_fisher(&self.reference()?)? * self.k().abs().powf(-self.beta))
    }

    /// G_{γ*}^{1/k} on the grid.
    pub fn closed_form_profile(&self) -> Result<Vec<f64>> {
        let g = self.reference()?;
        let k = self.k();
        Ok(self.grid.iter().map(|&r| g.radial(r).powf(1.0 / k)).collect())
    }

    /// Relative L² distance with the radial measure r^{n-1} dr.
    pub fn relative_l2(&self, u: &[f64], v: &[f64]) -> f64 {
        let w = self.trapezoid_weights();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.grid.len() {
            let rw = w[i] * self.grid[i].powi(self.n as i32 - 1);
            num += rw * (u[i] - v[i]).powi(2);
            den += rw * v[i] * v[i];
        }
        (num / den).sqrt()
    }

    fn trapezoid_weights(&self) -> Vec<f64> {
        let g = &self.grid;
        let last = g.len() - 1;
        (0..=last)
            .map(|i| {
                let left = if i > 0 { g[i] - g[i - 1] } else { 0.0 };
                let right = if i < last { g[i + 1] - g[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

fn gamma_for_moment(n: usize, alpha: f64, q: f64, m: f64) -> f64 {
    let na = n as f64 / alpha;
    na / (m * (1.0 + (q - 1.0) * (na + 1.0)))
}

/// Support radius plus 5% for q > 1; otherwise the radius leaving tail mass
/// below 1e-10, capped at 200 γ*^{-1/α}.
pub fn truncation_radius(n: usize, alpha: f64, q: f64, m: f64) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::domain(format!("moment target must be > 0, got {m}")));
    }
    let p = QGaussianParams::new(n, alpha, q, gamma_for_moment(n, alpha, q, m))?;
    p.require(Validity::MqFiniteness)?;
    if let Some(rs) = p.support_radius() {
        return Ok(1.05 * rs);
    }
    let scale = p.gamma().powf(-1.0 / alpha);
    let area = sphere_area(n)?;
    let tail = |r0: f64| {
        integrate_to_infinity(|r| area * r.powi(n as i32 - 1) * p.radial(r), r0, QuadOptions::default()).value
    };
    let cap = MAX_RADIUS_SCALES * scale;
    if tail(cap) > TAIL_MASS {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > TAIL_MASS {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 * scale {
            break;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub normalization: f64,
    pub moment: f64,
}

/// Energy and constraint violation after one inner step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub objective: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalSolution {
    pub u_values: Vec<f64>,
    pub objective: f64,
    pub constraints_achieved: Constraints,
    pub multipliers: Multipliers,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
    #[serde(skip)]
    pub history: Vec<IterateRecord>,
}

#[derive(Serialize)]
struct SolutionExport<'a> {
    grid: &'a [f64],
    u_values: &'a [f64],
    objective: f64,
    multipliers: Multipliers,
    constraints: Constraints,
    converged: bool,
    iterations: usize,
}

impl VariationalSolution {
    pub fn to_json(&self, problem: &VariationalProblem) -> serde_json::Value {
        serde_json::to_value(SolutionExport {
            grid: &problem.grid,
            u_values: &self.u_values,
            objective: self.objective,
            multipliers: self.multipliers,
            constraints: self.constraints_achieved,
            converged: self.converged,
            iterations: self.iterations,
        })
        .expect("plain data serializes")
    }

    /// Rows of (r, u, closed_form_u).
    pub fn write_csv<W: Write>(&self, problem: &VariationalProblem, mut w: W) -> io::Result<()> {
        let exact = problem
            .closed_form_profile()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        writeln!(w, "r,u,closed_form_u")?;
        for ((r, u), v) in problem.grid.iter().zip(&self.u_values).zip(&exact) {
            writeln!(w, "{r:?},{u:?},{v:?}")?;
        }
        Ok(())
    }
}

/// Discretized functional, shared by the solver and its tests.
struct Discrete {
    beta: f64,
    k: f64,
    eps: f64,
    // free unknowns u_0..u_{M-1}; u_M = 0
    m: usize,
    h: Vec<f64>,
    // S · h_i · r_{i+1/2}^{n-1}
    cell: Vec<f64>,
    // S · w_i r_i^{n-1} and the same times r_i^α / m_target
    e_norm: Vec<f64>,
    e_mom: Vec<f64>,
}

struct Evaluation {
    lagrangian: f64,
    objective: f64,
    c: [f64; 2],
    grad: Vec<f64>,
}

impl Discrete {
    fn new(p: &VariationalProblem) -> Result<Self> {
        let s = sphere_area(p.n)?;
        let g = &p.grid;
        let m = g.len() - 1;
        let n1 = p.n as i32 - 1;
        let h: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
        let cell = g
            .windows(2)
            .zip(&h)
            .map(|(w, hi)| s * hi * (0.5 * (w[0] + w[1])).powi(n1))
            .collect();
        let tw = p.trapezoid_weights();
        let e_norm: Vec<f64> = (0..m).map(|i| s * tw[i] * g[i].powi(n1)).collect();
        let e_mom = (0..m).map(|i| e_norm[i] * g[i].powf(p.alpha) / p.m_target).collect();
        Ok(Self {
            beta: p.beta,
            k: p.k(),
            eps: if p.beta < 2.0 { SMOOTHING_EPS } else { 0.0 },
            m,
            h,
            cell,
            e_norm,
            e_mom,
        })
    }

    fn slope(&self, u: &[f64], i: usize) -> f64 {
        let next = if i + 1 < self.m { u[i + 1] } else { 0.0 };
        (next - u[i]) / self.h[i]
    }

    fn phi(&self, d: f64) -> (f64, f64, f64) {
        let b = self.beta;
        if self.eps > 0.0 {
            let s = d * d + self.eps * self.eps;
            let v = s.powf(0.5 * b);
            let d1 = b * d * s.powf(0.5 * b - 1.0);
            let d2 = b * s.powf(0.5 * b - 2.0) * (s + (b - 2.0) * d * d);
            (v, d1, d2)
        } else {
            let a = d.abs();
            (a.powf(b), b * d * a.powf(b - 2.0), b * (b - 1.0) * a.powf(b - 2.0))
        }
    }

    fn energy(&self, u: &[f64]) -> f64 {
        (0..self.m).map(|i| self.cell[i] * self.phi(self.slope(u, i)).0).sum()
    }

    fn constraints(&self, u: &[f64]) -> [f64; 2] {
        let mut c = [-1.0, -1.0];
        for i in 0..self.m {
            let uk = u[i].powf(self.k);
            c[0] += self.e_norm[i] * uk;
            c[1] += self.e_mom[i] * uk;
        }
        c
    }

    fn evaluate(&self, u: &[f64], lam: [f64; 2], mu: f64) -> Evaluation {
        let objective = self.energy(u);
        let c = self.constraints(u);
        let lagrangian = objective + lam[0] * c[0] + lam[1] * c[1] + 0.5 * mu * (c[0] * c[0] + c[1] * c[1]);
        let mut grad = vec![0.0; self.m];
        for i in 0..self.m {
            let d1 = self.cell[i] * self.phi(self.slope(u, i)).1 / self.h[i];
            grad[i] -= d1;
            if i + 1 < self.m {
                grad[i + 1] += d1;
            }
        }
        let y = [lam[0] + mu * c[0], lam[1] + mu * c[1]];
        let floor = u.iter().copied().fold(0.0, f64::max) * 1e-12;
        for i in 0..self.m {
            let ukm1 = if u[i] > 0.0 || self.k < 1.0 {
                u[i].max(floor).powf(self.k - 1.0)
            } else if self.k == 1.0 {
                1.0
            } else {
                0.0
            };
            grad[i] += self.k * ukm1 * (y[0] * self.e_norm[i] + y[1] * self.e_mom[i]);
        }
        Evaluation {
            lagrangian,
            objective,
            c,
            grad,
        }
    }

    fn lagrangian(&self, u: &[f64], lam: [f64; 2], mu: f64) -> f64 {
        let c = self.constraints(u);
        self.energy(u) + lam[0] * c[0] + lam[1] * c[1] + 0.5 * mu * (c[0] * c[0] + c[1] * c[1])
    }

    /// Newton direction H^{-1} g on the free set, H = tridiagonal + diagonal +
    /// μ Σ g_j g_jᵀ, solved by Woodbury. Returns None if no shift makes the
    /// tridiagonal part positive definite.
    fn newton_direction(&self, u: &[f64], ev: &Evaluation, lam: [f64; 2], mu: f64, free: &[bool]) -> Option<Vec<f64>> {
        let m = self.m;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m]; // off[i] couples i and i+1
        for i in 0..m {
            let w = self.cell[i] * self.phi(self.slope(u, i)).2 / (self.h[i] * self.h[i]);
            diag[i] += w;
            if i + 1 < m {
                diag[i + 1] += w;
                off[i] = -w;
            }
        }
        let y = [lam[0] + mu * ev.c[0], lam[1] + mu * ev.c[1]];
        let k = self.k;
        let mut g1 = vec![0.0; m];
        let mut g2 = vec![0.0; m];
        let floor = u.iter().copied().fold(0.0, f64::max) * 1e-12;
        for i in 0..m {
            if !free[i] {
                continue;
            }
            let ui = u[i].max(floor);
            let c2 = k * (k - 1.0) * ui.powf(k - 2.0);
            diag[i] += c2 * (y[0] * self.e_norm[i] + y[1] * self.e_mom[i]);
            let c1 = k * ui.powf(k - 1.0);
            g1[i] = c1 * self.e_norm[i];
            g2[i] = c1 * self.e_mom[i];
        }
        for i in 0..m {
            if !free[i] {
                diag[i] = 1.0;
                off[i] = 0.0;
                if i > 0 {
                    off[i - 1] = 0.0;
                }
            }
        }
        let rhs: Vec<f64> = (0..m).map(|i| if free[i] { ev.grad[i] } else { 0.0 }).collect();
        let scale = diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(1e-300);
        let mut shift = 0.0;
        for _ in 0..30 {
            if let Some(fac) = Tridiag::factor(&diag, &off, shift, free) {
                let z = fac.solve(&rhs);
                let a1 = fac.solve(&g1);
                let a2 = fac.solve(&g2);
                let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
                // (I/μ + Gᵀ A^{-1} G) s = Gᵀ A^{-1} g
                let s11 = 1.0 / mu + dot(&g1, &a1);
                let s12 = dot(&g1, &a2);
                let s22 = 1.0 / mu + dot(&g2, &a2);
                let t1 = dot(&g1, &z);
                let t2 = dot(&g2, &z);
                let det = s11 * s22 - s12 * s12;
                let w1 = (s22 * t1 - s12 * t2) / det;
                let w2 = (s11 * t2 - s12 * t1) / det;
                let d: Vec<f64> = (0..m).map(|i| z[i] - a1[i] * w1 - a2[i] * w2).collect();
                if det > 0.0 && dot(&d, &rhs) > 0.0 && d.iter().all(|v| v.is_finite()) {
                    return Some(d);
                }
            }
            shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
        }
        None
    }
}

/// LDLᵀ factorization of a symmetric tridiagonal matrix plus a shift on the free set.
struct Tridiag {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Tridiag {
    fn factor(diag: &[f64], off: &[f64], shift: f64, free: &[bool]) -> Option<Self> {
        let m = diag.len();
        let mut d = vec![0.0; m];
        let mut l = vec![0.0; m];
        for i in 0..m {
            let mut di = diag[i] + if free[i] { shift } else { 0.0 };
            if i > 0 {
                di -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if !(di > 0.0) || !di.is_finite() {
                return None;
            }
            d[i] = di;
            if i + 1 < m {
                l[i] = off[i] / di;
            }
        }
        Some(Self { d, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut x = b.to_vec();
        for i in 1..m {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..m {
            x[i] /= self.d[i];
        }
        for i in (0..m - 1).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
        x
    }
}

fn initial_profile(p: &VariationalProblem, disc: &Discrete, init: Init) -> Result<Vec<f64>> {
    let k = p.k();
    let mut u: Vec<f64> = match init {
        Init::Flat => vec![1.0; disc.m],
        Init::Exponential => {
            let s = p.m_target.powf(1.0 / p.alpha);
            p.grid[..disc.m].iter().map(|r| (-r / s).exp()).collect()
        }
        Init::QgaussianDetuned => {
            let g = QGaussianParams::new(p.n, p.alpha, p.q, 2.0 * p.gamma_star())?;
            p.grid[..disc.m].iter().map(|&r| g.radial(r).powf(1.0 / k)).collect()
        }
    };
    let c = disc.constraints(&u)[0] + 1.0;
    let s = c.powf(-1.0 / k);
    u.iter_mut().for_each(|v| *v *= s);
    Ok(u)
}

/// Solves the discretized problem from the given initialization.
pub fn solve(problem: &VariationalProblem, init: Init) -> Result<VariationalSolution> {
    solve_with(problem, init, SolverOptions::default())
}

pub fn solve_with(problem: &VariationalProblem, init: Init, opts: SolverOptions) -> Result<VariationalSolution> {
    let disc = Discrete::new(problem)?;
    let mut u = initial_profile(problem, &disc, init)?;
    let mut lam = [0.0; 2];
    let mut mu = 10.0;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut prev_violation = f64::INFINITY;
    let mut converged = false;
    let mut ev = disc.evaluate(&u, lam, mu);

    for _outer in 0..opts.max_outer {
        let inner_ok = inner_solve(&disc, &mut u, lam, mu, opts.max_inner, &mut history, &mut iterations);
        ev = disc.evaluate(&u, lam, mu);
        let violation = ev.c[0].abs().max(ev.c[1].abs());
        if inner_ok && violation <= opts.constraint_tol {
            converged = true;
            break;
        }
        lam = [lam[0] + mu * ev.c[0], lam[1] + mu * ev.c[1]];
        if violation > 0.25 * prev_violation {
            mu = (mu * 10.0).min(1e12);
        }
        prev_violation = violation;
    }

    let y = [lam[0] + mu * ev.c[0], lam[1] + mu * ev.c[1]];
    let mut u_values = u;
    u_values.push(0.0);
    let sol = VariationalSolution {
        u_values,
        objective: ev.objective,
        constraints_achieved: Constraints {
            normalization: ev.c[0] + 1.0,
            moment: (ev.c[1] + 1.0) * problem.m_target,
        },
        multipliers: Multipliers {
            a: y[0],
            b: y[1] / problem.m_target,
        },
        iterations,
        converged,
        epsilon: disc.eps,
        history,
    };
    if !converged && !opts.allow_unconverged {
        return Err(Error::NonConvergence {
            iterations,
            detail: format!(
                "last iterate: objective {:e}, normalization {:e}, moment {:e}",
                sol.objective, sol.constraints_achieved.normalization, sol.constraints_achieved.moment
            ),
        });
    }
    Ok(sol)
}

// Projected Newton on the augmented Lagrangian. Near the solution the change
// in the Lagrangian drops below its rounding error, so once the Newton
// decrement is tiny full steps are taken without a sufficient-decrease test.
// Converged when a step moves u by less than 1e-12 of its peak.
fn inner_solve(
    disc: &Discrete,
    u: &mut Vec<f64>,
    lam: [f64; 2],
    mu: f64,
    max_inner: usize,
    history: &mut Vec<IterateRecord>,
    iterations: &mut usize,
) -> bool {
    let mut trial = vec![0.0; disc.m];
    for _ in 0..max_inner {
        *iterations += 1;
        let ev = disc.evaluate(u, lam, mu);
        let free: Vec<bool> = (0..disc.m).map(|i| !(u[i] <= 0.0 && ev.grad[i] >= 0.0)).collect();
        let Some(d) = disc.newton_direction(u, &ev, lam, mu, &free) else {
            return false;
        };
        let decrement: f64 = d.iter().zip(&ev.grad).map(|(a, b)| a * b).sum();
        let take_full = decrement <= 1e-10 * (1.0 + ev.lagrangian.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..disc.m {
                trial[i] = (u[i] - t * d[i]).max(0.0);
            }
            if take_full {
                accepted = true;
                break;
            }
            let drop: f64 = (0..disc.m).map(|i| ev.grad[i] * (u[i] - trial[i])).sum();
            if disc.lagrangian(&trial, lam, mu) <= ev.lagrangian - 1e-4 * drop {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return false;
        }
        let peak = u.iter().copied().fold(0.0, f64::max);
        let moved = u.iter().zip(&trial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(u, &mut trial);
        let c = disc.constraints(u);
        history.push(IterateRecord {
            objective: disc.energy(u),
            violation: c[0].abs().max(c[1].abs()),
        });
        if moved <= 1e-12 * peak {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMultipliers {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub a_factor: f64,
}

/// a = -A n, b = A λ γ with A = (β/k)^β (γ/(β-1))^{β-1} Z(γ)^{β(1-q)}.
pub fn analytic_multipliers(params: &QGaussianParams) -> Result<AnalyticMultipliers> {
    params.require(Validity::FisherFiniteness)?;
    let beta = params.beta().expect("alpha > 1 checked");
    let k = params.k().filter(|k| k.is_finite() && *k > 0.0).ok_or_else(|| {
        Error::domain("k = beta/(beta(q-1)+1) must be finite and positive")
    })?;
    let gamma = params.gamma();
    let ln_a = beta * (beta / k).ln()
        + (beta - 1.0) * (gamma / (beta - 1.0)).ln()
        + beta * (1.0 - params.q()) * params.ln_partition();
    let a_factor = ln_a.exp();
    Ok(AnalyticMultipliers {
        a: -a_factor * params.n() as f64,
        b: a_factor * params.lambda() * gamma,
        a_factor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub multipliers: AnalyticMultipliers,
}

/// Normalized residual of (r^{n-1}|u'|^{β-2}u')' - (k/β) r^{n-1}(a + b r^α) u^{k-1}
/// at u = G_γ^{1/k}, over interior radii.
///
/// With B = 1 - (q-1)γ r^α the flux is -(αγ/k)^{β-1} r^n (u/B)^{β-1}, which is
/// differentiated analytically.
pub fn euler_lagrange_residual(params: &QGaussianParams) -> Result<ResidualReport> {
    let mult = analytic_multipliers(params)?;
    let beta = params.beta().expect("alpha > 1 checked");
    let k = params.k().expect("checked by analytic_multipliers");
    let (n, alpha, q, gamma) = (params.n() as f64, params.alpha(), params.q(), params.gamma());
    let s = if params.is_exponential() { 0.0 } else { q - 1.0 };
    let outer = params
        .support_radius()
        .unwrap_or_else(|| (30.0 / gamma).powf(1.0 / alpha));
    let c = (alpha * gamma / k).powf(beta - 1.0);
    let (mut worst, mut size) = (0.0f64, 0.0f64);
    for j in 1..400 {
        let r = outer * j as f64 / 400.0;
        let u = params.radial(r).powf(1.0 / k);
        let b = 1.0 - s * gamma * r.powf(alpha);
        let flux_d = -c
            * (u / b).powf(beta - 1.0)
            * r.powf(n - 1.0)
            * (n + (beta - 1.0) * (alpha * gamma * r.powf(alpha) / b) * (s - 1.0 / k));
        let source = (k / beta) * r.powf(n - 1.0) * (mult.a + mult.b * r.powf(alpha)) * u.powf(k - 1.0);
        worst = worst.max((flux_d - source).abs());
        size = size.max(flux_d.abs()).max(source.abs());
    }
    Ok(ResidualReport {
        max_residual: worst / size,
        multipliers: mult,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposition1 {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
}

fn prop1(lhs: f64, k: f64, beta: f64, a: f64, b: f64, m: f64) -> Proposition1 {
    let rhs = -(k / beta) * (a + b * m);
    Proposition1 {
        lhs,
        rhs,
        rel_gap: (lhs - rhs).abs() / lhs.abs(),
    }
}

/// Energy of a converged solution against -(k/β)(a + b m) with the recovered
/// multipliers.
pub fn check_proposition1(solution: &VariationalSolution, problem: &VariationalProblem) -> Result<Proposition1> {
    if !solution.converged {
        return Err(Error::NonConvergence {
            iterations: solution.iterations,
            detail: "refusing to check an unconverged solution".into(),
        });
    }
    if solution.u_values.last().copied() != Some(0.0) {
        return Err(Error::domain("solved profile does not vanish at the truncation radius"));
    }
    let Multipliers { a, b } = solution.multipliers;
    Ok(prop1(solution.objective, problem.k(), problem.beta, a, b, problem.m_target))
}

/// The same identity in closed forms: |k|^{-β} I_{β,q}[G_γ] against
/// -(k/β)(a + b m_α[G_γ]) with the analytic multipliers.
pub fn proposition1_analytic(params: &QGaussianParams) -> Result<Proposition1> {
    let mult = analytic_multipliers(params)?;
    let beta = params.beta().expect("alpha > 1 checked");
    let k = params.k().expect("checked");
    let lhs = closed_fisher(params)? * k.abs().powf(-beta);
    Ok(prop1(lhs, k, beta, mult.a, mult.b, closed_moment_alpha(params)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn residual_examples() {
        for (n, alpha, q, gamma, tol) in [
            (1, 2.0, 1.0, 0.5, 1e-8),
            (2, 2.0, 1.5, 1.0, 1e-8),
            (1, 3.0, 1.1, 2.0, 1e-6),
            (3, 1.5, 0.9, 1.0, 1e-8),
        ] {
            let p = QGaussianParams::new(n, alpha, q, gamma).unwrap();
            let r = euler_lagrange_residual(&p).unwrap();
            assert!(r.max_residual <= tol, "{p:?}: {}", r.max_residual);
        }
    }

    #[test]
    fn residual_flux_matches_finite_differences() {
        // independent check of the analytic flux derivative
        let p = QGaussianParams::new(2, 3.0, 1.3, 0.7).unwrap();
        let beta = p.beta().unwrap();
        let k = p.k().unwrap();
        let flux = |r: f64| {
            let up = p.radial_derivative(r) * p.radial(r).powf(1.0 / k - 1.0) / k;
            r.powi(1) * up.abs().powf(beta - 2.0) * up
        };
        let mult = analytic_multipliers(&p).unwrap();
        let rs = p.support_radius().unwrap();
        for j in 1..20 {
            let r = rs * j as f64 / 20.0;
            let h = 1e-5 * rs;
            let fd = (flux(r + h) - flux(r - h)) / (2.0 * h);
            let u = p.radial(r).powf(1.0 / k);
            let src = (k / beta) * r * (mult.a + mult.b * r.powi(3)) * u.powf(k - 1.0);
            assert!((fd - src).abs() <= 1e-6 * src.abs().max(fd.abs()), "r={r}: {fd} vs {src}");
        }
    }

    #[test]
    fn proposition1_analytic_identity() {
        for (n, alpha, q, gamma) in [(1, 2.0, 1.0, 1.0), (2, 3.0, 0.9, 0.5), (3, 1.5, 1.5, 2.0), (2, 2.0, 2.0, 1.0)] {
            let p = QGaussianParams::new(n, alpha, q, gamma).unwrap();
            let r = proposition1_analytic(&p).unwrap();
            assert!(r.rel_gap <= 1e-10, "{p:?}: {r:?}");
        }
    }

    #[test]
    fn standard_normal_minimizer() {
        let p = VariationalProblem::new(1, 2.0, 1.0, 1.0, 2000).unwrap();
        assert!(rel(p.optimum().unwrap(), 0.25) < 1e-12);
        let s = solve(&p, Init::Exponential).unwrap();
        assert!(s.converged);
        assert!(rel(s.objective, 0.25) < 1e-4, "{}", s.objective);
        let exact = p.closed_form_profile().unwrap();
        assert!(p.relative_l2(&s.u_values, &exact) < 1e-3);
        let gap = check_proposition1(&s, &p).unwrap();
        assert!(gap.rel_gap <= 1e-4, "{gap:?}");
        // recovered multipliers against the analytic ones
        let m = analytic_multipliers(&p.reference().unwrap()).unwrap();
        assert!(rel(s.multipliers.a, m.a) < 1e-3 && rel(s.multipliers.b, m.b) < 1e-3, "{:?} {m:?}", s.multipliers);
    }

    #[test]
    fn wide_normal_objective() {
        let p = VariationalProblem::new(1, 2.0, 1.0, 4.0, 2000).unwrap();
        let s = solve(&p, Init::Flat).unwrap();
        assert!(rel(s.objective, 1.0 / 16.0) < 1e-4, "{}", s.objective);
    }

    #[test]
    fn compact_case_and_init_independence() {
        let p = VariationalProblem::new(2, 2.0, 1.2, 1.0, 800).unwrap();
        let exact = p.closed_form_profile().unwrap();
        let sols: Vec<_> = [Init::Flat, Init::Exponential, Init::QgaussianDetuned]
            .into_iter()
            .map(|i| solve(&p, i).unwrap())
            .collect();
        for s in &sols {
            assert!(p.relative_l2(&s.u_values, &exact) < 1e-3);
            assert!(check_proposition1(s, &p).unwrap().rel_gap < 1e-3);
        }
        assert!(p.relative_l2(&sols[0].u_values, &sols[1].u_values) < 1e-3);
        assert!(p.relative_l2(&sols[0].u_values, &sols[2].u_values) < 1e-3);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(VariationalProblem::new(1, 2.0, 1.0, -1.0, 100).is_err());
        assert!(VariationalProblem::new(1, 1.0, 1.0, 1.0, 100).is_err());
        // q in (1/3, 1/2) makes k negative for n = 1, α = 2
        assert!(VariationalProblem::new(1, 2.0, 0.45, 1.0, 100).is_err());
    }

    #[test]
    fn exports() {
        let p = VariationalProblem::new(1, 2.0, 1.5, 0.5, 200).unwrap();
        let s = solve(&p, Init::QgaussianDetuned).unwrap();
        let v = s.to_json(&p);
        for key in ["grid", "u_values", "objective", "multipliers", "constraints", "converged", "iterations"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let mut buf = Vec::new();
        s.write_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,u,closed_form_u\n"));
        assert_eq!(text.lines().count(), 201);
    }
}
