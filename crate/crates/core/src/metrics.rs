//! Structural metrics: the scaling exponent and degree-inequality (Gini)
//! coefficients of an automaton's transition graph.

use serde::{Deserialize, Serialize};

use crate::automaton::Automaton;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `ln|δ| / ln|Q|`; `None` when `|Q| ≤ 1` or `δ` is empty.
pub fn beta<T: Scalar>(a: &Automaton) -> Option<T> {
    beta_of_counts(a.state_count(), a.transition_count())
}

pub fn beta_of_counts<T: Scalar>(states: usize, transitions: usize) -> Option<T> {
    if states <= 1 || transitions == 0 {
        return None;
    }
    let q = T::from_usize_lossy(states);
    let d = T::from_usize_lossy(transitions);
    Some(d.ln() / q.ln())
}

/// Gini coefficient: `Σ(2i − n − 1)·x_i / (n·Σx)` over the values sorted
/// ascending, `i` from 1. `None` for an empty or all-zero input.
pub fn gini<T: Scalar>(values: &[T]) -> Result<Option<T>> {
    if let Some(bad) = values.iter().find(|v| !(**v >= T::zero())) {
        return Err(Error::NegativeValue(bad.to_f64_lossy()));
    }
    if values.is_empty() {
        return Ok(None);
    }
    let mut xs = values.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let total: T = xs.iter().copied().sum();
    if total == T::zero() {
        return Ok(None);
    }
    let n = T::from_usize_lossy(xs.len());
    let weighted: T = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let rank = T::from_usize_lossy(2 * (i + 1));
            (rank - n - T::one()) * x
        })
        .sum();
    Ok(Some(weighted / (n * total)))
}

fn gini_counts<T: Scalar>(degrees: &[usize]) -> Option<T> {
    let xs: Vec<T> = degrees.iter().map(|&d| T::from_usize_lossy(d)).collect();
    gini(&xs).expect("degrees are non-negative")
}

/// Gini coefficient of the per-state in-degrees (internal transitions included).
pub fn gini_in<T: Scalar>(a: &Automaton) -> Option<T> {
    gini_counts(&a.in_degrees())
}

/// Gini coefficient of the per-state out-degrees (internal transitions included).
pub fn gini_out<T: Scalar>(a: &Automaton) -> Option<T> {
    gini_counts(&a.out_degrees())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord<T> {
    pub states: usize,
    pub transitions: usize,
    pub internal_transitions: usize,
    pub beta: Option<T>,
    pub gini_in: Option<T>,
    pub gini_out: Option<T>,
}

pub fn metrics_record<T: Scalar>(a: &Automaton) -> MetricsRecord<T> {
    MetricsRecord {
        states: a.state_count(),
        transitions: a.transition_count(),
        internal_transitions: a.internal_transition_count(),
        beta: beta(a),
        gini_in: gini_in(a),
        gini_out: gini_out(a),
    }
}

/// Population mean and standard deviation.
pub fn mean_std<T: Scalar>(xs: &[T]) -> Option<(T, T)> {
    if xs.is_empty() {
        return None;
    }
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    Some((mean, var.sqrt()))
}

/// Population skewness `m3 / m2^{3/2}`; `None` for fewer than two values or
/// zero variance.
pub fn skewness<T: Scalar>(xs: &[T]) -> Option<T> {
    let (mean, std) = mean_std(xs)?;
    if xs.len() < 2 || std == T::zero() {
        return None;
    }
    let n = T::from_usize_lossy(xs.len());
    let m3 = xs.iter().map(|&x| (x - mean).powi(3)).sum::<T>() / n;
    Some(m3 / std.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::Hierarchy;

    fn counts(states: usize, edges: &[(usize, usize)]) -> Automaton {
        let h: Hierarchy = "(A)".parse().unwrap();
        let mut b = Automaton::builder("M", h)
            .states((0..states).map(|i| format!("s{i}")))
            .unwrap()
            .initial("s0")
            .unwrap();
        for &(s, t) in edges {
            b = b.trans(format!("s{s}"), "(A,x,-)", format!("s{t}")).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn beta_cases() {
        let full: Vec<(usize, usize)> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).collect();
        assert_eq!(beta::<f64>(&counts(4, &full)), Some(2.0));
        assert_eq!(beta::<f64>(&counts(2, &[(0, 1), (1, 0)])), Some(1.0));
        let b: f64 = beta_of_counts(10, 23).unwrap();
        assert!((b - 1.361_727_836_017_592_7).abs() < 1e-9);
        assert_eq!(beta::<f64>(&counts(1, &[(0, 0)])), None);
        assert_eq!(beta::<f64>(&counts(3, &[])), None);
        assert_eq!(beta::<f32>(&counts(4, &full)), Some(2.0));
    }

    #[test]
    fn gini_cases() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]).unwrap(), Some(0.0));
        assert_eq!(gini(&[0.0, 0.0, 0.0, 8.0]).unwrap(), Some(0.75));
        assert_eq!(gini(&[4.0, 1.0, 3.0, 2.0]).unwrap(), Some(0.25));
        assert_eq!(gini(&[0.0, 0.0, 0.0, 0.0, 4.0]).unwrap(), Some(0.8));
        assert_eq!(gini::<f64>(&[]).unwrap(), None);
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), None);
        assert_eq!(gini(&[1.0, -1.0]), Err(Error::NegativeValue(-1.0)));
        assert!(gini(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn degree_ginis() {
        let star = counts(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(gini_out::<f64>(&star), Some(0.8));
        let cycle = counts(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(gini_in::<f64>(&cycle), Some(0.0));
        assert_eq!(gini_out::<f64>(&cycle), Some(0.0));
    }

    #[test]
    fn records() {
        let empty = counts(3, &[]);
        let r = metrics_record::<f64>(&empty);
        assert_eq!((r.beta, r.gini_in, r.gini_out), (None, None, None));

        let h: Hierarchy = "(A B)".parse().unwrap();
        let input = Automaton::builder("I", h.clone())
            .states(["s0", "s1"])
            .unwrap()
            .initial("s0")
            .unwrap()
            .trans("s0", "(-,m,A)", "s1")
            .unwrap()
            .build()
            .unwrap();
        let r = metrics_record::<f64>(&input);
        assert_eq!((r.states, r.transitions, r.internal_transitions), (2, 1, 0));
        assert_eq!(r.beta, Some(0.0));

        let chain = Automaton::builder("C", h)
            .states(["s0", "s1", "s2"])
            .unwrap()
            .initial("s0")
            .unwrap()
            .trans("s0", "(A,t,B)", "s1")
            .unwrap()
            .trans("s1", "(A,t,B)", "s2")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(metrics_record::<f64>(&chain).internal_transitions, 2);
    }

    #[test]
    fn moments() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - 1.25f64.sqrt()).abs() < 1e-12);
        assert!(skewness(&[1.0, 1.0, 1.0, 10.0]).unwrap() > 0.0);
        assert_eq!(skewness(&[2.0, 2.0]), None);
    }
}
