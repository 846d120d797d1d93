use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qgfisher::estimators::measure_all;
use qgfisher::inequalities::{
    check, check_evaluated, evaluate, CheckOptions, Evaluation, Inequality, InequalityReport, Tolerances,
};
use qgfisher::qgaussian::closed_measures;
use qgfisher::sampler::{sample, RNG_ALGORITHM};
use qgfisher::variational::{check_proposition1, solve, Init, VariationalProblem};
use qgfisher::{Error, MeasureSet, QGaussianParams, Validity};

use crate::args::*;
use crate::density;
use crate::CliError;

/// The fully resolved invocation, echoed into every output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<ParamArgs>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub density: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerances: Option<Tolerances>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub inequalities: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub grid: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rng: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub moment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub init: Option<InitArg>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<String>,
}

impl RunConfig {
    fn new(subcommand: &str, format: Format, out: Option<&Path>) -> Self {
        Self {
            subcommand: subcommand.into(),
            params: None,
            density: None,
            method: None,
            tolerances: None,
            inequalities: Vec::new(),
            grid: Vec::new(),
            seed: None,
            count: None,
            rng: None,
            moment: None,
            nodes: None,
            init: None,
            format,
            out: out.map(|p| p.display().to_string()),
        }
    }

    fn json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    fn csv_header_line(&self) -> String {
        format!("# config: {}\n", serde_json::to_string(self).expect("config serializes"))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(CliError::Io)?);
            w.write_all(text.as_bytes()).map_err(CliError::Io)?;
            w.flush().map_err(CliError::Io)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).map_err(CliError::Io)
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

// Debug formatting is round-trip exact and switches to exponents for tiny values
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

const MEASURE_COLUMNS: &str = "mq,hq,sq,nq,m_alpha,i_bq";

fn measure_cells(m: &MeasureSet) -> String {
    [m.mq, m.hq, m.sq, m.nq, m.m_alpha].map(num).join(",") + "," + &opt(m.i_bq)
}

pub fn measures(a: &MeasuresArgs) -> Result<i32, CliError> {
    let mut cfg = RunConfig::new("measures", a.output.format, a.output.out.as_deref());
    cfg.params = Some(a.params);
    cfg.density = Some(a.density.clone());
    cfg.method = Some(format!("{:?}", a.method).to_lowercase());

    let f = density::resolve(&a.density, &a.params)?;
    if f.qgaussian().is_some() {
        // closed forms and quadrature alike need a finite M_q
        QGaussianParams::new(a.params.n, a.params.alpha, a.params.q, a.params.gamma)?
            .require(Validity::MqFiniteness)?;
    }
    let closed = match a.method {
        MeasureMethod::Closed | MeasureMethod::Both => {
            let p = f.qgaussian().ok_or_else(|| {
                CliError::Input(format!("closed forms exist only for q-Gaussians, not {}", f.descriptor()))
            })?;
            Some(closed_measures(p)?)
        }
        MeasureMethod::Quadrature => None,
    };
    let quad = match a.method {
        MeasureMethod::Quadrature | MeasureMethod::Both => Some(measure_all(&f, a.params.alpha, a.params.q)?),
        MeasureMethod::Closed => None,
    };

    let text = match a.output.format {
        Format::Json => {
            let mut v = json!({ "config": cfg.json(), "density": f.descriptor() });
            if let Some(c) = &closed {
                v["closed_form"] = serde_json::to_value(c).expect("measures serialize");
            }
            if let Some(q) = &quad {
                v["quadrature"] = serde_json::to_value(q).expect("measures serialize");
            }
            if let (Some(c), Some(q)) = (&closed, &quad) {
                v["max_rel_diff"] = json!(max_rel_diff(c, q));
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut s = cfg.csv_header_line();
            s.push_str(&format!("method,n,alpha,q,gamma,{MEASURE_COLUMNS}\n"));
            let p = &a.params;
            for (name, set) in [("closed-form", &closed), ("quadrature", &quad)] {
                if let Some(m) = set {
                    s.push_str(&format!("{name},{},{},{},{},{}\n", p.n, p.alpha, p.q, p.gamma, measure_cells(m)));
                }
            }
            s
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(0)
}

fn max_rel_diff(a: &MeasureSet, b: &MeasureSet) -> f64 {
    let mut pairs = vec![(a.mq, b.mq), (a.hq, b.hq), (a.sq, b.sq), (a.nq, b.nq), (a.m_alpha, b.m_alpha)];
    if let (Some(x), Some(y)) = (a.i_bq, b.i_bq) {
        pairs.push((x, y));
    }
    pairs
        .into_iter()
        .map(|(x, y)| (x - y).abs() / x.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn evaluation(m: CheckMethod) -> Evaluation {
    match m {
        CheckMethod::Auto => Evaluation::Auto,
        CheckMethod::Quadrature => Evaluation::Quadrature,
    }
}

pub fn verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let tolerances = Tolerances {
        rel_tol: a.rel_tol,
        eq_tol: a.eq_tol,
    };
    let mut cfg = RunConfig::new("verify", a.output.format, a.output.out.as_deref());
    cfg.params = Some(a.params);
    cfg.density = Some(a.density.clone());
    cfg.method = Some(format!("{:?}", a.method).to_lowercase());
    cfg.tolerances = Some(tolerances);

    let which: Vec<Inequality> = if a.all {
        Inequality::ALL.to_vec()
    } else if a.ineq.is_empty() {
        return Err(CliError::Input("choose inequalities with --ineq or --all".into()));
    } else {
        a.ineq.iter().map(|s| s.parse()).collect::<Result<_, Error>>()?
    };
    cfg.inequalities = which.iter().map(|w| w.name().to_string()).collect();

    let f = density::resolve(&a.density, &a.params)?;
    let opts = CheckOptions {
        tolerances,
        evaluation: evaluation(a.method),
    };
    let (alpha, q) = (a.params.alpha, a.params.q);
    let mut reports: Vec<InequalityReport> = Vec::new();
    let mut skipped: Vec<Value> = Vec::new();
    if a.all {
        // one evaluation of the density shared by all four checks
        let e = evaluate(&f, alpha, q, opts.evaluation)?;
        for w in which {
            match check_evaluated(&e, w, tolerances) {
                Ok(r) => reports.push(r),
                // inapplicable checks, and Fisher checks whose integral diverged, are listed not fatal
                Err(err) if err.is_invalid_input() || (w.uses_fisher() && e.fisher_error.is_some()) => {
                    skipped.push(json!({ "name": w.name(), "reason": err.to_string() }))
                }
                Err(err) => return Err(err.into()),
            }
        }
    } else {
        for w in which {
            reports.push(check(&f, alpha, q, w, opts)?);
        }
    }
    if reports.is_empty() {
        return Err(CliError::Input(format!("no requested inequality applies to {}", f.descriptor())));
    }
    let all_pass = reports.iter().all(|r| r.passes);

    let text = match a.output.format {
        Format::Json => pretty(&json!({
            "config": cfg.json(),
            "reports": reports,
            "skipped": skipped,
            "all_pass": all_pass,
        })),
        Format::Csv => {
            let mut s = cfg.csv_header_line();
            s.push_str("name,lhs,rhs,ratio,deficit,passes,equality,n,alpha,beta,q,lambda,density,lhs_method,rhs_method\n");
            for r in &reports {
                let p = &r.params;
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},\"{}\",{},{}\n",
                    r.name,
                    num(r.lhs),
                    num(r.rhs),
                    num(r.ratio),
                    num(r.deficit),
                    r.passes,
                    r.equality,
                    p.n,
                    p.alpha,
                    opt(p.beta),
                    p.q,
                    p.lambda,
                    r.density.replace('"', "'"),
                    r.method_tags.lhs,
                    r.method_tags.rhs
                ));
            }
            s
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(if all_pass { 0 } else { 4 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: &'static str,
    pub values: Vec<f64>,
}

/// `name=start:stop:step` (inclusive of stop) or `name=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<GridAxis, CliError> {
    let (name, range) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("grid '{spec}' must look like name=start:stop:step")))?;
    let name = match name.trim() {
        "n" => "n",
        "alpha" => "alpha",
        "q" => "q",
        "gamma" => "gamma",
        other => return Err(CliError::Input(format!("cannot sweep over '{other}'"))),
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Input(format!("grid '{spec}': '{s}' is not a number")))
    };
    let values = if range.contains(':') {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Input(format!("grid '{spec}' must be start:stop:step")));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::Input(format!("grid '{spec}': step must be > 0")));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            Vec::new()
        } else {
            // rounded so that 0.8 + 3*0.1 prints as 1.1
            (0..=count as usize)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
    } else {
        range.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<_, _>>()?
    };
    Ok(GridAxis { name, values })
}

pub fn grid_points(base: &ParamArgs, axes: &[GridAxis]) -> Result<Vec<ParamArgs>, CliError> {
    let mut points = vec![*base];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for &v in &axis.values {
                let mut p = *p;
                match axis.name {
                    "n" => {
                        if v < 1.0 || v.fract() != 0.0 {
                            return Err(CliError::Input(format!("grid value n = {v} is not a positive integer")));
                        }
                        p.n = v as usize;
                    }
                    "alpha" => p.alpha = v,
                    "q" => p.q = v,
                    _ => p.gamma = v,
                }
                next.push(p);
            }
        }
        points = next;
    }
    Ok(points)
}

struct SweepRow {
    measures: Option<MeasureSet>,
    deficits: [Option<f64>; 4],
    errors: Vec<String>,
}

fn sweep_row(p: &ParamArgs, opts: CheckOptions) -> SweepRow {
    let mut row = SweepRow {
        measures: None,
        deficits: [None; 4],
        errors: Vec::new(),
    };
    let params = match QGaussianParams::new(p.n, p.alpha, p.q, p.gamma) {
        Ok(params) => params,
        Err(e) => {
            row.errors.push(e.to_string());
            return row;
        }
    };
    let f = qgfisher::RadialDensity::qgaussian_density(&params);
    let e = match params.require(Validity::MqFiniteness).and_then(|_| evaluate(&f, p.alpha, p.q, opts.evaluation)) {
        Ok(e) => e,
        Err(e) => {
            row.errors.push(e.to_string());
            return row;
        }
    };
    row.measures = Some(e.measures);
    for (slot, w) in row.deficits.iter_mut().zip(Inequality::ALL) {
        match check_evaluated(&e, w, opts.tolerances) {
            Ok(r) => *slot = Some(r.deficit),
            Err(err) => row.errors.push(format!("{w}: {err}")),
        }
    }
    row
}

pub fn sweep(a: &SweepArgs) -> Result<i32, CliError> {
    let tolerances = Tolerances {
        rel_tol: a.rel_tol,
        eq_tol: a.eq_tol,
    };
    let mut cfg = RunConfig::new("sweep", a.format, a.out.as_deref());
    cfg.params = Some(a.params);
    cfg.grid = a.grid.clone();
    cfg.method = Some(format!("{:?}", a.method).to_lowercase());
    cfg.tolerances = Some(tolerances);

    let axes = a.grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>, _>>()?;
    if axes.is_empty() || axes.iter().any(|ax| ax.values.is_empty()) {
        return Err(CliError::Input("empty grid: give at least one non-empty --grid".into()));
    }
    let points = grid_points(&a.params, &axes)?;
    let opts = CheckOptions {
        tolerances,
        evaluation: evaluation(a.method),
    };
    // par_iter keeps the input order in the collected rows
    let rows: Vec<SweepRow> = points.par_iter().map(|p| sweep_row(p, opts)).collect();

    let text = match a.format {
        Format::Csv => {
            let mut s = cfg.csv_header_line();
            s.push_str(&format!(
                "index,n,alpha,q,gamma,{MEASURE_COLUMNS},deficit_fisher_moment_entropy,deficit_moment_entropy,deficit_stam,deficit_cramer_rao,error\n"
            ));
            for (i, (p, row)) in points.iter().zip(&rows).enumerate() {
                let measures = row
                    .measures
                    .as_ref()
                    .map(measure_cells)
                    .unwrap_or_else(|| ",,,,,".to_string());
                let deficits: Vec<String> = row.deficits.iter().map(|d| opt(*d)).collect();
                s.push_str(&format!(
                    "{i},{},{},{},{},{measures},{},\"{}\"\n",
                    p.n,
                    p.alpha,
                    p.q,
                    p.gamma,
                    deficits.join(","),
                    row.errors.join("; ").replace('"', "'")
                ));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = points
                .iter()
                .zip(&rows)
                .enumerate()
                .map(|(i, (p, row))| {
                    let deficits: serde_json::Map<String, Value> = Inequality::ALL
                        .iter()
                        .zip(&row.deficits)
                        .map(|(w, d)| (w.name().to_string(), json!(d)))
                        .collect();
                    json!({
                        "index": i,
                        "params": p,
                        "measures": row.measures,
                        "deficits": deficits,
                        "error": if row.errors.is_empty() { Value::Null } else { json!(row.errors.join("; ")) },
                    })
                })
                .collect();
            pretty(&json!({ "config": cfg.json(), "rows": rows }))
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

pub fn sample_cmd(a: &SampleArgs) -> Result<i32, CliError> {
    let mut cfg = RunConfig::new("sample", a.format, a.out.as_deref());
    cfg.params = Some(a.params);
    cfg.seed = Some(a.seed);
    cfg.count = Some(a.count);
    cfg.rng = Some(RNG_ALGORITHM.to_string());

    let p = &a.params;
    let params = QGaussianParams::new(p.n, p.alpha, p.q, p.gamma)?;
    let batch = sample(&params, a.count, a.seed)?;
    let text = match a.format {
        Format::Csv => {
            let mut buf = cfg.csv_header_line().into_bytes();
            batch.write_csv(&mut buf).map_err(CliError::Io)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => {
            let points: Vec<&[f64]> = batch.points().collect();
            pretty(&json!({ "config": cfg.json(), "points": points }))
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

pub fn minimize(a: &MinimizeArgs) -> Result<i32, CliError> {
    let mut cfg = RunConfig::new("minimize", a.output.format, a.output.out.as_deref());
    cfg.params = Some(ParamArgs {
        n: a.n,
        alpha: a.alpha,
        q: a.q,
        gamma: 1.0,
    });
    cfg.moment = Some(a.moment);
    cfg.nodes = Some(a.nodes);
    cfg.init = Some(a.init);

    let problem = VariationalProblem::new(a.n, a.alpha, a.q, a.moment, a.nodes)?;
    let init = match a.init {
        InitArg::Flat => Init::Flat,
        InitArg::Exponential => Init::Exponential,
        InitArg::QgaussianDetuned => Init::QgaussianDetuned,
    };
    let solution = solve(&problem, init)?;
    let prop1 = check_proposition1(&solution, &problem)?;
    let optimum = problem.optimum()?;
    let exact = problem.closed_form_profile()?;
    let l2 = problem.relative_l2(&solution.u_values, &exact);

    let text = match a.output.format {
        Format::Json => {
            let mut v = solution.to_json(&problem);
            v["config"] = cfg.json();
            v["prop1"] = serde_json::to_value(prop1).expect("serializes");
            v["prop1_gap"] = json!(prop1.rel_gap);
            v["closed_form_optimum"] = json!(optimum);
            v["gamma_star"] = json!(problem.gamma_star());
            v["relative_l2_to_closed_form"] = json!(l2);
            v["smoothing_epsilon"] = json!(solution.epsilon);
            pretty(&v)
        }
        Format::Csv => {
            eprintln!(
                "objective = {}, closed-form optimum = {optimum}, prop1_gap = {}, relative L2 = {l2}",
                solution.objective, prop1.rel_gap
            );
            let mut buf = cfg.csv_header_line().into_bytes();
            solution.write_csv(&problem, &mut buf).map_err(CliError::Io)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_ranges() {
        let ax = parse_axis("q=0.8:2.0:0.1").unwrap();
        assert_eq!(ax.values.len(), 13);
        assert_eq!(ax.values[3], 1.1);
        assert_eq!(*ax.values.last().unwrap(), 2.0);
        assert_eq!(parse_axis("gamma=0.5,1,2").unwrap().values, vec![0.5, 1.0, 2.0]);
        assert!(parse_axis("q=2:1:0.1").unwrap().values.is_empty());
        assert!(parse_axis("beta=1:2:1").is_err());
        assert!(parse_axis("q=1:2:0").is_err());
    }

    #[test]
    fn cartesian_order() {
        let base = ParamArgs {
            n: 1,
            alpha: 2.0,
            q: 1.0,
            gamma: 1.0,
        };
        let axes = [parse_axis("n=1,2").unwrap(), parse_axis("q=1,1.5").unwrap()];
        let pts = grid_points(&base, &axes).unwrap();
        let pairs: Vec<(usize, f64)> = pts.iter().map(|p| (p.n, p.q)).collect();
        assert_eq!(pairs, vec![(1, 1.0), (1, 1.5), (2, 1.0), (2, 1.5)]);
        assert!(grid_points(&base, &[parse_axis("n=1.5").unwrap()]).is_err());
    }

    #[test]
    fn config_round_trips() {
        let mut cfg = RunConfig::new("verify", Format::Json, None);
        cfg.params = Some(ParamArgs {
            n: 2,
            alpha: 2.0,
            q: 1.2,
            gamma: 3.0,
        });
        cfg.tolerances = Some(Tolerances::default());
        let back: RunConfig = serde_json::from_value(cfg.json()).unwrap();
        assert_eq!(back, cfg);
    }
}
