//! Single-predictor binary logistic regression `π(x) = 1 / (1 + e^{−(a + bx)})`
//! fitted by maximum likelihood, with the likelihood-ratio test and a
//! cutoff-based confusion report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 100;
/// Largest coefficient magnitude accepted on the standardized scale.
pub const SEPARATION_GUARD: f64 = 50.0;
const MIN_SAMPLES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit<T> {
    pub a: T,
    pub b: T,
    pub se_a: T,
    pub se_b: T,
    pub ll_full: T,
    pub ll_null: T,
    pub chi2: T,
    pub p_value: T,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<T> {
    pub cutoff: T,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `tp / (tp + fn)`; `None` without positive samples.
    pub sensitivity: Option<T>,
    /// `tn / (tn + fp)`; `None` without negative samples.
    pub specificity: Option<T>,
}

fn ratio<T: Scalar>(num: usize, den: usize) -> Option<T> {
    (den > 0).then(|| T::from_usize_lossy(num) / T::from_usize_lossy(den))
}

impl<T: Scalar> ClassificationReport<T> {
    pub fn from_predictions(cutoff: T, predicted: &[bool], truth: &[bool]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &y) in predicted.iter().zip(truth) {
            match (p, y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        ClassificationReport {
            cutoff,
            tp,
            fp,
            tn,
            fn_,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid<T: Scalar>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// `Σ y·η − ln(1 + e^η)` with `η = a + b·x`.
pub fn log_likelihood<T: Scalar>(a: T, b: T, xs: &[T], ys: &[bool]) -> T {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let eta = a + b * x;
            let fit = if y { eta } else { T::zero() };
            fit - softplus(eta)
        })
        .sum()
}

pub fn predict<T: Scalar>(fit: &LogisticFit<T>, x: T) -> T {
    sigmoid(fit.a + fit.b * x)
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn lr_p_value<T: Scalar>(chi2: T) -> T {
    let c = chi2.to_f64_lossy().max(0.0);
    T::from_f64_lossy(libm::erfc((c / 2.0).sqrt()))
}

/// The `x` at which the fitted probability equals `p`.
pub fn threshold_x<T: Scalar>(fit: &LogisticFit<T>, p: T) -> Result<T> {
    if fit.b == T::zero() {
        return Err(Error::NoThreshold);
    }
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::RegressionInput(format!("probability {p} outside (0, 1)")));
    }
    Ok(((p / (T::one() - p)).ln() - fit.a) / fit.b)
}

pub fn classify<T: Scalar>(fit: &LogisticFit<T>, xs: &[T], ys: &[bool], cutoff: T) -> ClassificationReport<T> {
    let predicted: Vec<bool> = xs.iter().map(|&x| predict(fit, x) >= cutoff).collect();
    ClassificationReport::from_predictions(cutoff, &predicted, ys)
}

fn validate<T: Scalar>(xs: &[T], ys: &[bool]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::RegressionInput(format!(
            "{} predictor values but {} responses",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < MIN_SAMPLES {
        return Err(Error::RegressionInput(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::RegressionInput("non-finite predictor value".into()));
    }
    if ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
        return Err(Error::RegressionInput("response has a single class".into()));
    }
    Ok(())
}

/// True when a threshold on `x` classifies every sample correctly (ties allowed),
/// in which case the likelihood has no finite maximum.
fn separated<T: Scalar>(xs: &[T], ys: &[bool]) -> bool {
    let extreme = |class: bool| {
        let mut it = xs.iter().zip(ys).filter(|(_, &y)| y == class).map(|(&x, _)| x);
        let first = it.next().expect("both classes present");
        it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (lo0, hi0) = extreme(false);
    let (lo1, hi1) = extreme(true);
    hi0 <= lo1 || hi1 <= lo0
}

/// Maximum-likelihood fit by Newton-Raphson on the standardized predictor.
pub fn fit_logistic<T: Scalar>(xs: &[T], ys: &[bool]) -> Result<LogisticFit<T>> {
    validate(xs, ys)?;
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let scale = (xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n).sqrt();
    if scale == T::zero() {
        return Err(Error::RegressionInput("predictor is constant".into()));
    }
    if separated(xs, ys) {
        return Err(Error::Separation);
    }
    let zs: Vec<T> = xs.iter().map(|&x| (x - mean) / scale).collect();
    let guard = T::from_f64_lossy(SEPARATION_GUARD);
    let tol = T::loglik_tolerance();
    let two = T::one() + T::one();

    let positives = ys.iter().filter(|&&y| y).count();
    let p_bar = T::from_usize_lossy(positives) / n;
    let ll_null = T::from_usize_lossy(positives) * p_bar.ln()
        + T::from_usize_lossy(xs.len() - positives) * (T::one() - p_bar).ln();

    // Start at the intercept-only optimum.
    let (mut alpha, mut beta) = ((p_bar / (T::one() - p_bar)).ln(), T::zero());
    let mut ll = ll_null;
    let mut converged = false;
    let mut iterations = 0;
    let mut info = [[T::zero(); 2]; 2];
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (mut g0, mut g1) = (T::zero(), T::zero());
        let (mut h00, mut h01, mut h11) = (T::zero(), T::zero(), T::zero());
        for (&z, &y) in zs.iter().zip(ys) {
            let p = sigmoid(alpha + beta * z);
            let r = if y { T::one() - p } else { -p };
            let w = p * (T::one() - p);
            g0 = g0 + r;
            g1 = g1 + r * z;
            h00 = h00 + w;
            h01 = h01 + w * z;
            h11 = h11 + w * z * z;
        }
        info = [[h00, h01], [h01, h11]];
        let det = h00 * h11 - h01 * h01;
        if !(det > T::zero()) {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let mut step = T::one();
        let mut next = (alpha + d0, beta + d1);
        let mut next_ll = log_likelihood(next.0, next.1, &zs, ys);
        let mut halvings = 0;
        while !(next_ll >= ll) && halvings < 30 {
            step = step / two;
            next = (alpha + step * d0, beta + step * d1);
            next_ll = log_likelihood(next.0, next.1, &zs, ys);
            halvings += 1;
        }
        if !(next_ll >= ll) {
            break;
        }
        let delta = next_ll - ll;
        (alpha, beta, ll) = (next.0, next.1, next_ll);
        if beta.abs() > guard {
            return Err(Error::Separation);
        }
        if delta < tol {
            converged = true;
            break;
        }
    }

    // Refresh the information matrix at the final estimate.
    let (mut h00, mut h01, mut h11) = (T::zero(), T::zero(), T::zero());
    for &z in &zs {
        let p = sigmoid(alpha + beta * z);
        let w = p * (T::one() - p);
        h00 = h00 + w;
        h01 = h01 + w * z;
        h11 = h11 + w * z * z;
    }
    if h00 * h11 - h01 * h01 > T::zero() {
        info = [[h00, h01], [h01, h11]];
    }
    let det = info[0][0] * info[1][1] - info[0][1] * info[0][1];
    let (var_alpha, cov, var_beta) = (info[1][1] / det, -info[0][1] / det, info[0][0] / det);

    let shift = mean / scale;
    let b = beta / scale;
    let a = alpha - beta * shift;
    let var_a = var_alpha + shift * shift * var_beta - two * shift * cov;
    let var_b = var_beta / (scale * scale);
    let chi2 = (two * (ll - ll_null)).max(T::zero());
    Ok(LogisticFit {
        a,
        b,
        se_a: var_a.max(T::zero()).sqrt(),
        se_b: var_b.max(T::zero()).sqrt(),
        ll_full: ll,
        ll_null,
        chi2,
        p_value: lr_p_value(chi2),
        converged,
        iterations,
    })
}

/// Summary of one fit as emitted by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub ll_full: f64,
    pub ll_null: f64,
    pub chi2: f64,
    pub p: f64,
    pub converged: bool,
    pub iterations: usize,
    pub cutoff: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    #[serde(rename = "threshold_x@0.5")]
    pub threshold_x: Option<f64>,
}

impl RegressionReport {
    pub fn new<T: Scalar>(fit: &LogisticFit<T>, report: &ClassificationReport<T>) -> Self {
        let f = |x: T| x.to_f64_lossy();
        RegressionReport {
            n: report.total(),
            a: f(fit.a),
            b: f(fit.b),
            se_a: f(fit.se_a),
            se_b: f(fit.se_b),
            ll_full: f(fit.ll_full),
            ll_null: f(fit.ll_null),
            chi2: f(fit.chi2),
            p: f(fit.p_value),
            converged: fit.converged,
            iterations: fit.iterations,
            cutoff: f(report.cutoff),
            tp: report.tp,
            fp: report.fp,
            tn: report.tn,
            fn_: report.fn_,
            sensitivity: report.sensitivity.map(f),
            specificity: report.specificity.map(f),
            threshold_x: threshold_x(fit, T::from_f64_lossy(0.5)).ok().map(f),
        }
    }
}
