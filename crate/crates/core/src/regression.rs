//! Probit maximum likelihood, forward stepwise selection and McFadden's
//! pseudo-R².

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Year;

pub const INTERCEPT: &str = "intercept";
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-8;
const SEPARATION_BOUND: f64 = 50.0;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// `ln Φ(x)`, finite far into the lower tail.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x < -30.0 {
        // Φ(x) = φ(x)/|x| · (1 − 1/x² + 3/x⁴ − 15/x⁶ + …)
        let z2 = 1.0 / (x * x);
        let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
        -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + series.ln()
    } else if x > 5.0 {
        (-norm_cdf(-x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// Inverse Mills ratio `φ(x)/Φ(x)`.
fn mills(x: f64) -> f64 {
    if x < -30.0 {
        (-0.5 * x * x - LN_SQRT_2PI - ln_norm_cdf(x)).exp()
    } else {
        norm_pdf(x) / norm_cdf(x)
    }
}

/// Standard normal quantile: Wichura's AS241 rational approximation
/// followed by one Halley step.
pub fn norm_inv(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    let mut x = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r
            + 45921.953931549871457)
            * r
            + 13731.693765509461125)
            * r
            + 1971.5909503065514427)
            * r
            + 133.14166789178437745)
            * r
            + 3.387132872796366608)
            / (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0)
    } else {
        let mut r = if q < 0.0 { p } else { 1.0 - p };
        r = (-r.ln()).sqrt();
        let val = if r <= 5.0 {
            r -= 1.6;
            (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r
                + 1.27045825245236838258)
                * r
                + 3.64784832476320460504)
                * r
                + 5.7694972214606914055)
                * r
                + 4.6303378461565452959)
                * r
                + 1.42343711074968357734)
                / (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966)
                    * r
                    + 0.14810397642748007459)
                    * r
                    + 0.68976733498510000455)
                    * r
                    + 1.6763848301838038494)
                    * r
                    + 2.05319162663775882187)
                    * r
                    + 1.0)
        } else {
            r -= 5.0;
            (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r
                + 0.026532189526576123093)
                * r
                + 0.29656057182850489123)
                * r
                + 1.7848265399172913358)
                * r
                + 5.4637849111641143699)
                * r
                + 6.6579046435011037772)
                / (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5)
                    * r
                    + 7.868691311456132591e-4)
                    * r
                    + 0.0148753612908506148525)
                    * r
                    + 0.13692988092273580531)
                    * r
                    + 0.59983220655588793769)
                    * r
                    + 1.0)
        };
        if q < 0.0 {
            -val
        } else {
            val
        }
    };
    // Halley refinement against the erfc-based CDF, working in the tail
    // closer to p to keep the residual well conditioned.
    let pdf = norm_pdf(x);
    if pdf > 0.0 {
        let e = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
        let u = e / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// McFadden's pseudo-R², `1 − ll_model/ll_null`.
pub fn pseudo_r2(ll_model: f64, ll_null: f64) -> Result<f64> {
    if ll_model > 0.0 {
        return Err(Error::LogLikelihood(format!("model log-likelihood {ll_model} is positive")));
    }
    if !(ll_null < 0.0) {
        return Err(Error::LogLikelihood(format!("null log-likelihood {ll_null} must be negative")));
    }
    Ok(1.0 - ll_model / ll_null)
}

/// Probit likelihood over a design with a leading intercept column.
#[derive(Debug, Clone)]
pub struct ProbitProblem {
    names: Vec<String>,
    n: usize,
    p: usize,
    /// row-major, `n × p`
    x: Vec<f64>,
    /// `+1` for positives, `−1` for negatives
    q: Vec<f64>,
}

impl ProbitProblem {
    pub fn new(names: &[String], columns: &[&[f64]], y: &[bool]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InsufficientData("one name per column required".into()));
        }
        let n = y.len();
        if let Some((i, _)) = columns.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::InsufficientData(format!(
                "column {} has {} rows, outcomes have {n}",
                names[i],
                columns[i].len()
            )));
        }
        let p = columns.len() + 1;
        let mut x = Vec::with_capacity(n * p);
        for i in 0..n {
            x.push(1.0);
            x.extend(columns.iter().map(|c| c[i]));
        }
        let mut all = vec![INTERCEPT.to_string()];
        all.extend(names.iter().cloned());
        Ok(ProbitProblem {
            names: all,
            n,
            p,
            x,
            q: y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()
    }

    /// `Σ ln Φ(qᵢ·xᵢβ)`.
    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        (0..self.n).map(|i| ln_norm_cdf(self.q[i] * self.eta(i, beta))).sum()
    }

    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.p];
        for i in 0..self.n {
            let t = self.q[i] * self.eta(i, beta);
            let s = self.q[i] * mills(t);
            for (gj, xj) in g.iter_mut().zip(self.row(i)) {
                *gj += s * xj;
            }
        }
        g
    }

    /// Observed information, the negated Hessian
    /// `Σ λ(t)(λ(t) + t)·xxᵀ` with `t = q·xβ`.
    pub fn information(&self, beta: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        let mut m = DMatrix::zeros(p, p);
        for i in 0..self.n {
            let t = self.q[i] * self.eta(i, beta);
            let l = mills(t);
            let w = l * (l + t);
            let row = self.row(i);
            for a in 0..p {
                let wa = w * row[a];
                for b in 0..=a {
                    m[(a, b)] += wa * row[b];
                }
            }
        }
        m.fill_upper_triangle_with_lower_triangle();
        m
    }

    /// Columns that are linear combinations of earlier ones, each listed
    /// with the earlier columns it depends on.
    fn collinear_columns(&self) -> Vec<String> {
        let p = self.p;
        let mut gram = DMatrix::<f64>::zeros(p, p);
        for i in 0..self.n {
            let row = self.row(i);
            for a in 0..p {
                for b in 0..p {
                    gram[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut kept: Vec<usize> = Vec::new();
        let mut named: Vec<usize> = Vec::new();
        for j in 0..p {
            let mut idx = kept.clone();
            idx.push(j);
            if is_singular(&gram.select_rows(&idx).select_columns(&idx)) {
                let sub = gram.select_rows(&kept).select_columns(&kept);
                let rhs = DVector::from_iterator(kept.len(), kept.iter().map(|&k| gram[(k, j)]));
                if let Some(coef) = sub.clone().cholesky().map(|c| c.solve(&rhs)) {
                    for (c, &k) in coef.iter().zip(&kept) {
                        if c.abs() > 1e-8 && !named.contains(&k) {
                            named.push(k);
                        }
                    }
                }
                named.push(j);
            } else {
                kept.push(j);
            }
        }
        named.sort_unstable();
        named.dedup();
        named.into_iter().map(|k| self.names[k].clone()).collect()
    }
}

fn is_singular(m: &DMatrix<f64>) -> bool {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    max == 0.0 || min <= max * 1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbitFit {
    /// Variable names, intercept first.
    pub variables: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub pseudo_r2: f64,
    pub iterations: usize,
    pub n_obs: usize,
    pub n_positive: usize,
}

impl ProbitFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn z(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.z_stats[i])
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// `Φ(xβ)` for one row of predictor values (without the intercept).
    pub fn predict(&self, row: &[f64]) -> f64 {
        let eta = self.coefficients[0]
            + self.coefficients[1..]
                .iter()
                .zip(row)
                .map(|(b, x)| b * x)
                .sum::<f64>();
        norm_cdf(eta)
    }
}

fn separation(problem: &ProbitProblem, beta: &[f64]) -> Error {
    // blame the largest slope; the intercept only when there is none
    let j = (1..beta.len())
        .max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()))
        .unwrap_or(0);
    Error::Separation {
        variable: problem.names[j].clone(),
        value: beta[j],
    }
}

/// Fits a probit model with intercept by Newton's method with step halving.
pub fn fit_probit(names: &[String], columns: &[&[f64]], y: &[bool]) -> Result<ProbitFit> {
    let problem = ProbitProblem::new(names, columns, y)?;
    let n = problem.n;
    let p = problem.p;
    if n < 10 * p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} parameters; need at least {}",
            10 * p
        )));
    }
    let n1 = y.iter().filter(|&&b| b).count();
    if n1 == 0 || n1 == n {
        return Err(Error::InsufficientData("outcomes contain a single class".into()));
    }
    let ybar = n1 as f64 / n as f64;
    let null_ll = n1 as f64 * ybar.ln() + (n - n1) as f64 * (1.0 - ybar).ln();

    let mut beta = vec![0.0; p];
    beta[0] = norm_inv(ybar);
    let mut ll = problem.log_likelihood(&beta);
    let mut iterations = 0;
    let singular = || Error::Singular {
        columns: problem.collinear_columns(),
    };
    loop {
        if iterations >= MAX_ITERATIONS {
            log::warn!("probit did not converge in {MAX_ITERATIONS} iterations");
            break;
        }
        iterations += 1;
        let info = problem.information(&beta);
        if is_singular(&info) {
            return Err(singular());
        }
        let g = DVector::from_vec(problem.gradient(&beta));
        let step = info.cholesky().ok_or_else(singular)?.solve(&g);
        let mut scale = 1.0;
        let (next, next_ll) = loop {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let cand_ll = problem.log_likelihood(&cand);
            if cand_ll >= ll - 1e-12 * ll.abs() || scale < 1e-10 {
                break (cand, cand_ll);
            }
            scale /= 2.0;
        };
        let delta = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        ll = next_ll;
        if let Some((j, &b)) = beta.iter().enumerate().find(|(_, b)| b.abs() > SEPARATION_BOUND) {
            return Err(Error::Separation {
                variable: problem.names[j].clone(),
                value: b,
            });
        }
        if delta < TOLERANCE {
            break;
        }
        // every observation on the correct side: scaling β up keeps raising
        // the likelihood, so no finite maximum exists
        if (0..n).all(|i| problem.q[i] * problem.eta(i, &beta) > 0.0) {
            return Err(separation(&problem, &beta));
        }
    }
    if iterations >= MAX_ITERATIONS {
        return Err(separation(&problem, &beta));
    }
    let info = problem.information(&beta);
    let cov = info.cholesky().ok_or_else(singular)?.inverse();
    let standard_errors: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    let z_stats = beta.iter().zip(&standard_errors).map(|(b, s)| b / s).collect();
    Ok(ProbitFit {
        variables: problem.names.clone(),
        coefficients: beta,
        standard_errors,
        z_stats,
        log_likelihood: ll,
        null_log_likelihood: null_ll,
        pseudo_r2: pseudo_r2(ll.min(0.0), null_ll)?,
        iterations,
        n_obs: n,
        n_positive: n1,
    })
}

/// Outcomes with named candidate predictor columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<bool>,
}

impl Dataset {
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn fit(&self, vars: &[String]) -> Result<ProbitFit> {
        let cols: Vec<&[f64]> = vars.iter().map(|v| self.column(v)).collect::<Result<_>>()?;
        fit_probit(vars, &cols, &self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub variable: String,
    /// |Z| of the univariate fit for the first step, |correlation| with the
    /// residual afterwards.
    pub criterion: f64,
    pub z: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    pub selected: Vec<String>,
    /// Fit over the selected variables; intercept-only when none survive.
    pub fit: ProbitFit,
    pub steps: Vec<SelectionStep>,
    pub z_threshold: f64,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Forward stepwise selection: the strongest univariate predictor by |Z|
/// first, then repeatedly the candidate most correlated with the response
/// residual `y − Φ(xβ̂)`, keeping it only while its refitted |Z| reaches
/// `z_threshold`.
pub fn stepwise_select(data: &Dataset, z_threshold: f64) -> Result<StepwiseResult> {
    if data.names.len() < 2 {
        return Err(Error::InsufficientData("stepwise selection needs at least 2 candidates".into()));
    }
    let univariate: Vec<ProbitFit> = data
        .names
        .par_iter()
        .map(|name| data.fit(std::slice::from_ref(name)))
        .collect::<Result<_>>()?;
    let (first, first_fit) = univariate
        .iter()
        .enumerate()
        .fold(None::<(usize, &ProbitFit)>, |best, (i, f)| match best {
            Some((_, b)) if b.z_stats[1].abs() >= f.z_stats[1].abs() => best,
            _ => Some((i, f)),
        })
        .expect("at least two candidates");
    let z1 = first_fit.z_stats[1];
    let mut steps = vec![SelectionStep {
        variable: data.names[first].clone(),
        criterion: z1.abs(),
        z: z1,
        accepted: z1.abs() >= z_threshold,
    }];
    if z1.abs() < z_threshold {
        return Ok(StepwiseResult {
            selected: vec![],
            fit: data.fit(&[])?,
            steps,
            z_threshold,
        });
    }
    let mut selected = vec![data.names[first].clone()];
    let mut fit = first_fit.clone();
    loop {
        let cols: Vec<&[f64]> = selected.iter().map(|v| data.column(v)).collect::<Result<_>>()?;
        let residual: Vec<f64> = (0..data.y.len())
            .map(|i| {
                let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
                f64::from(u8::from(data.y[i])) - fit.predict(&row)
            })
            .collect();
        let candidates: Vec<usize> = (0..data.names.len())
            .filter(|&j| !selected.contains(&data.names[j]))
            .collect();
        if candidates.is_empty() {
            break;
        }
        let corr: Vec<f64> = candidates
            .par_iter()
            .map(|&j| pearson(&residual, &data.columns[j]).abs())
            .collect();
        let (k, &c) = corr
            .iter()
            .enumerate()
            .fold(None::<(usize, &f64)>, |best, (k, c)| match best {
                Some((_, b)) if b >= c => best,
                _ => Some((k, c)),
            })
            .expect("nonempty candidates");
        let name = data.names[candidates[k]].clone();
        let mut trial_vars = selected.clone();
        trial_vars.push(name.clone());
        let trial = data.fit(&trial_vars)?;
        let z = trial.z(&name).expect("fitted variable");
        let accepted = z.abs() >= z_threshold;
        steps.push(SelectionStep {
            variable: name,
            criterion: c,
            z,
            accepted,
        });
        if !accepted {
            break;
        }
        selected = trial_vars;
        fit = trial;
    }
    Ok(StepwiseResult {
        selected,
        fit,
        steps,
        z_threshold,
    })
}

/// Provenance of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub model_year: Year,
    pub forecast_years: Vec<Year>,
    pub ry_min: i32,
    pub ry_max: i32,
    pub min_papers: u32,
    pub n_obs: usize,
    pub n_positive: usize,
}

/// Persisted result of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub variables: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub pseudo_r2: f64,
    pub z_threshold: f64,
    pub steps: Vec<SelectionStep>,
    pub training: TrainingMeta,
}

impl FittedModel {
    pub fn new(result: StepwiseResult, training: TrainingMeta) -> Self {
        let f = result.fit;
        FittedModel {
            variables: f.variables,
            coefficients: f.coefficients,
            standard_errors: f.standard_errors,
            z_stats: f.z_stats,
            log_likelihood: f.log_likelihood,
            null_log_likelihood: f.null_log_likelihood,
            pseudo_r2: f.pseudo_r2,
            z_threshold: result.z_threshold,
            steps: result.steps,
            training,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    // Φ and Φ⁻¹ reference values computed with 50-digit arithmetic.
    const CDF: [(f64, f64); 9] = [
        (-8.0, 6.220960574271784e-16),
        (-5.0, 2.866515718791939e-7),
        (-3.0, 0.0013498980316300945),
        (-1.0, 0.15865525393145705),
        (0.5, 0.6914624612740131),
        (1.0, 0.8413447460685429),
        (2.0, 0.9772498680518208),
        (3.0, 0.9986501019683699),
        (5.0, 0.9999997133484281),
    ];
    const QUANTILES: [(f64, f64); 4] = [
        (1e-10, -6.361340902404056),
        (0.001, -3.090232306167814),
        (0.025, -1.959963984540054),
        (0.999999, 4.753424308822899),
    ];

    #[test]
    fn cdf_matches_reference() {
        for (x, p) in CDF {
            assert!((norm_cdf(x) - p).abs() < 1e-15, "Φ({x})");
            if p < 0.5 {
                assert!(((norm_cdf(x) - p) / p).abs() < 1e-12, "Φ({x}) relative");
            }
        }
    }

    #[test]
    fn quantile_matches_reference() {
        for (p, x) in QUANTILES {
            // the references are for the exact decimal p; rounding p to f64
            // moves the true quantile by up to half an ulp over φ(x)
            let conditioning = 0.5 * f64::EPSILON * p.max(1.0 - p) / norm_pdf(x);
            let tol = 1e-12 + conditioning;
            assert!((norm_inv(p) - x).abs() < tol, "Φ⁻¹({p}) = {} vs {x}", norm_inv(p));
        }
        assert_eq!(norm_inv(0.5), 0.0);
        for (x, p) in CDF.iter().filter(|(x, _)| x.abs() <= 5.0) {
            assert!((norm_inv(*p) - x).abs() < 1e-9, "Φ⁻¹(Φ({x}))");
        }
    }

    #[test]
    fn ln_cdf_is_continuous_at_switch_points() {
        for x in [-30.0, 5.0] {
            let below = ln_norm_cdf(x - 1e-9);
            let above = ln_norm_cdf(x + 1e-9);
            assert!((below - above).abs() < 1e-6 * below.abs().max(1e-12), "{x}");
        }
        assert!(ln_norm_cdf(-40.0).is_finite());
        // mills ratio tends to −x in the far tail
        assert!((mills(-40.0) / 40.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn pseudo_r2_cases() {
        assert_eq!(pseudo_r2(-100.0, -100.0).unwrap(), 0.0);
        assert!((pseudo_r2(-63.0, -100.0).unwrap() - 0.37).abs() < 1e-15);
        assert!((pseudo_r2(-1e-12, -100.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(pseudo_r2(0.5, -100.0).is_err());
    }

    fn planted(n: usize, beta: &[f64], seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = beta.len() - 1;
        let mut cols = vec![Vec::with_capacity(n); k];
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut eta = beta[0];
            for (j, col) in cols.iter_mut().enumerate() {
                let x: f64 = rng.sample(StandardNormal);
                col.push(x);
                eta += beta[j + 1] * x;
            }
            let e: f64 = rng.sample(StandardNormal);
            y.push(eta + e > 0.0);
        }
        (cols, y)
    }

    #[test]
    fn intercept_only_hits_inverse_cdf() {
        let y: Vec<bool> = (0..10_000).map(|i| i < 8413).collect();
        let fit = fit_probit(&[], &[], &y).unwrap();
        assert!((fit.coefficients[0] - norm_inv(0.8413)).abs() < 1e-6);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-3);
        let y: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        assert!(fit_probit(&[], &[], &y).unwrap().coefficients[0].abs() < 1e-12);
    }

    #[test]
    fn doubling_data_scales_standard_errors() {
        let (cols, y) = planted(2000, &[-0.5, 0.7], 3);
        let names = vec!["a".to_string()];
        let fit = fit_probit(&names, &[&cols[0]], &y).unwrap();
        let x2: Vec<f64> = cols[0].iter().chain(&cols[0]).copied().collect();
        let y2: Vec<bool> = y.iter().chain(&y).copied().collect();
        let fit2 = fit_probit(&names, &[&x2], &y2).unwrap();
        for j in 0..2 {
            assert!((fit.coefficients[j] - fit2.coefficients[j]).abs() < 1e-8);
            assert!((fit.standard_errors[j] / fit2.standard_errors[j] - 2f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn separation_is_reported() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 - 49.5).collect();
        let y: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
        match fit_probit(&["x".to_string()], &[&x], &y) {
            Err(Error::Separation { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collinear_columns_are_named() {
        let (cols, y) = planted(500, &[0.0, 0.5, 0.5], 1);
        let doubled: Vec<f64> = cols[0].iter().map(|v| 2.0 * v).collect();
        let names: Vec<String> = ["a", "b", "a2"].iter().map(|s| s.to_string()).collect();
        match fit_probit(&names, &[&cols[0], &cols[1], &doubled], &y) {
            Err(Error::Singular { columns }) => assert_eq!(columns, vec!["a", "a2"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stepwise_on_pure_noise_selects_nothing() {
        let (cols, y) = planted(5000, &[-1.0, 0.0, 0.0, 0.0], 9);
        let data = Dataset {
            names: vec!["a".into(), "b".into(), "c".into()],
            columns: cols,
            y,
        };
        let res = stepwise_select(&data, DEFAULT_Z_THRESHOLD).unwrap();
        assert!(res.selected.is_empty());
        assert_eq!(res.fit.variables, vec![INTERCEPT]);
    }
}
