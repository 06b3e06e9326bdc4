//! Independent reference implementations and random inputs shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use cia::{Automaton, Hierarchy, IoSets, Label, LabelKind};

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

/// Labels over components `A` and `B` used by [`random_automaton`].
const LABELS: &[&str] = &[
    "(-,a,A)", "(-,b,B)", "(A,a,-)", "(B,c,-)", "(A,t,B)", "(B,u,A)", "(A,t,A)",
];

/// An automaton with `2..=max_states` states over hierarchy `(A B)`; roughly
/// half of the labels are internal so that silent merges are common.
pub fn random_automaton(rng: &mut impl Rng, max_states: usize) -> Automaton {
    let n = rng.random_range(2..=max_states);
    let edges = rng.random_range(0..=2 * n);
    let mut b = Automaton::builder("R", "(A B)".parse().unwrap())
        .states((0..n).map(|i| format!("q{i}")))
        .unwrap()
        .initial(format!("q{}", rng.random_range(0..n)))
        .unwrap();
    for _ in 0..edges {
        let l = LABELS[rng.random_range(0..LABELS.len())];
        b = b
            .trans(format!("q{}", rng.random_range(0..n)), l, format!("q{}", rng.random_range(0..n)))
            .unwrap();
    }
    b.build().unwrap()
}

/// A component named `name` (hierarchy leaf `(name)`) with up to `max_states`
/// states over actions `a`, `b`, `c`.
pub fn random_component(rng: &mut impl Rng, name: &str, max_states: usize) -> Automaton {
    let n = rng.random_range(1..=max_states);
    let edges = rng.random_range(0..=2 * n);
    let h: Hierarchy = format!("({name})").parse().unwrap();
    let mut b = Automaton::builder(name, h)
        .states((0..n).map(|i| format!("{}{i}", name.to_lowercase())))
        .unwrap()
        .initial(format!("{}0", name.to_lowercase()))
        .unwrap();
    for _ in 0..edges {
        let action = ["a", "b", "c"][rng.random_range(0..3)];
        let label = match rng.random_range(0..3) {
            0 => format!("(-,{action},{name})"),
            1 => format!("({name},{action},-)"),
            _ => format!("({name},{action},{name})"),
        };
        let s = format!("{}{}", name.to_lowercase(), rng.random_range(0..n));
        let t = format!("{}{}", name.to_lowercase(), rng.random_range(0..n));
        b = b.trans(s, &label, t).unwrap();
    }
    b.build().unwrap()
}

pub type Triple = (String, String, String);

/// Transitions of an automaton as `(source id, label text, target id)`.
pub fn triples(a: &Automaton) -> BTreeSet<Triple> {
    a.transitions()
        .iter()
        .map(|t| (a.state(t.source).to_string(), t.label.to_string(), a.state(t.target).to_string()))
        .collect()
}

fn tuple_name(parts: &[&str]) -> String {
    format!("({})", parts.join(","))
}

/// Product transitions by direct enumeration of the four transition classes
/// over all pairs of composite states.
pub fn brute_force_compose(components: &[Automaton], io: &IoSets) -> (BTreeSet<String>, BTreeSet<Triple>) {
    let mut tuples: Vec<Vec<usize>> = vec![vec![]];
    for c in components {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (0..c.state_count()).map(move |q| {
                    let mut t = t.clone();
                    t.push(q);
                    t
                })
            })
            .collect();
    }
    let name = |t: &[usize]| {
        let parts: Vec<&str> = t.iter().zip(components).map(|(&q, c)| c.state(q).as_str()).collect();
        tuple_name(&parts)
    };
    let has = |i: usize, q: usize, l: &Label, q2: usize| {
        components[i]
            .transitions()
            .iter()
            .any(|t| t.source == q && &t.label == l && t.target == q2)
    };
    let others_stay = |q: &[usize], q2: &[usize], moved: &[usize]| {
        (0..q.len()).all(|j| moved.contains(&j) || q[j] == q2[j])
    };
    let all_labels: BTreeSet<Label> = components.iter().flat_map(|c| c.labels()).collect();
    let mut out = BTreeSet::new();
    for q in &tuples {
        for q2 in &tuples {
            for i in 0..components.len() {
                for l in all_labels.iter().filter(|_| others_stay(q, q2, &[i])) {
                    if !has(i, q[i], l, q2[i]) {
                        continue;
                    }
                    let keep = match l.kind() {
                        LabelKind::Internal => true,
                        LabelKind::Input => io.required.contains(l.action()),
                        LabelKind::Output => io.provided.contains(l.action()),
                    };
                    if keep {
                        out.insert((name(q), l.to_string(), name(q2)));
                    }
                }
                for i2 in 0..components.len() {
                    if i2 == i || !others_stay(q, q2, &[i, i2]) {
                        continue;
                    }
                    for lo in all_labels.iter().filter(|l| l.kind() == LabelKind::Output) {
                        for li in all_labels
                            .iter()
                            .filter(|l| l.kind() == LabelKind::Input && l.action() == lo.action())
                        {
                            if has(i, q[i], lo, q2[i]) && has(i2, q[i2], li, q2[i2]) {
                                let sync = format!("({},{},{})", lo.src().unwrap(), lo.action(), li.dst().unwrap());
                                out.insert((name(q), sync, name(q2)));
                            }
                        }
                    }
                }
            }
        }
    }
    let states = tuples.iter().map(|t| name(t)).collect();
    (states, out)
}

/// Gini coefficient in exact rational arithmetic, or `None` for zero sum.
pub fn exact_gini(values: &[f64]) -> Option<f64> {
    let mut xs: Vec<BigRational> = values.iter().map(|&v| BigRational::from_float(v).unwrap()).collect();
    xs.sort();
    let n = BigInt::from(xs.len());
    let total: BigRational = xs.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    if total.is_zero() {
        return None;
    }
    let mut num = BigRational::zero();
    for (i, x) in xs.iter().enumerate() {
        let coeff = BigInt::from(2 * (i as i64 + 1)) - &n - BigInt::one();
        num += BigRational::from_integer(coeff) * x;
    }
    (num / (BigRational::from_integer(n) * total)).to_f64()
}

const FIXED_DIGITS: u32 = 60;

fn scale() -> BigInt {
    BigInt::from(10).pow(FIXED_DIGITS)
}

/// `2·atanh(y)` for `y = num/den`, in fixed point.
fn two_atanh(num: &BigInt, den: &BigInt) -> BigInt {
    let s = scale();
    let y = num * &s / den;
    let y2 = &y * &y / &s;
    let mut power = y.clone();
    let mut sum = BigInt::zero();
    let mut k = 0u32;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * k + 1);
        power = &power * &y2 / &s;
        k += 1;
    }
    sum * 2
}

/// `ln(n)` in fixed point with 60 decimal digits, from `n = 2^k · m`.
pub fn fixed_ln(n: u64) -> BigInt {
    assert!(n >= 1);
    let k = 63 - n.leading_zeros();
    let pow = BigInt::from(1u64 << k);
    let n = BigInt::from(n);
    let ln2 = two_atanh(&BigInt::one(), &BigInt::from(3));
    ln2 * BigInt::from(k) + two_atanh(&(&n - &pow), &(&n + &pow))
}

/// `ln(transitions)/ln(states)` evaluated with 60-digit logarithms.
pub fn precise_beta(states: u64, transitions: u64) -> f64 {
    let q = fixed_ln(states);
    let d = fixed_ln(transitions);
    let ratio = d * BigInt::from(10).pow(30) / q;
    ratio.to_f64().unwrap() / 1e30
}

/// Log-likelihood of a logistic model, written out directly.
pub fn loglik(a: f64, b: f64, xs: &[f64], ys: &[bool]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let p = 1.0 / (1.0 + (-(a + b * x)).exp());
            if y {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Maximizes [`loglik`] by a shrinking grid search around `(a0, b0)`. The
/// window halves each round, so the optimum stays several grid steps inside it
/// even along the correlated ridge of `(a, b)`.
pub fn grid_search(xs: &[f64], ys: &[bool], a0: f64, b0: f64, width: f64) -> (f64, f64) {
    let (mut a, mut b) = (a0, b0);
    let (mut wa, mut wb) = (width, width);
    let steps = 10;
    while wa > 1e-6 || wb > 1e-6 {
        let mut best = (loglik(a, b, xs, ys), a, b);
        for i in -steps..=steps {
            for j in -steps..=steps {
                let ca = a + wa * f64::from(i) / f64::from(steps);
                let cb = b + wb * f64::from(j) / f64::from(steps);
                let ll = loglik(ca, cb, xs, ys);
                if ll > best.0 {
                    best = (ll, ca, cb);
                }
            }
        }
        (a, b) = (best.1, best.2);
        wa /= 2.0;
        wb /= 2.0;
    }
    (a, b)
}

/// `n` samples with `x ~ U[0, 10)` and `y ~ Bernoulli(σ(a + b·x))`.
pub fn logistic_sample(seed: u64, n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let x: f64 = r.random_range(0.0..10.0);
            let p = 1.0 / (1.0 + (-(a + b * x)).exp());
            (x, r.random_bool(p))
        })
        .unzip()
}

pub fn abs_diff(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

pub fn is_negative(x: &BigInt) -> bool {
    x.is_negative()
}

/// Largest weak bisimulation over the states of `a`, with internal labels
/// silent: repeatedly deletes pairs until no pair violates the transfer
/// condition. Quadratic in memory and slow; only for tiny inputs.
pub fn naive_weak_bisim(a: &Automaton) -> Vec<Vec<bool>> {
    let n = a.state_count();
    let mut tau = vec![vec![false; n]; n];
    for (p, row) in tau.iter_mut().enumerate() {
        row[p] = true;
    }
    for t in a.transitions().iter().filter(|t| t.label.is_internal()) {
        tau[t.source][t.target] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if tau[i][k] {
                for j in 0..n {
                    if tau[k][j] {
                        tau[i][j] = true;
                    }
                }
            }
        }
    }
    // Weak successors of p under an observable label l.
    let weak = |p: usize, l: &Label| -> Vec<usize> {
        let mut out = vec![false; n];
        for t in a.transitions().iter().filter(|t| &t.label == l && tau[p][t.source]) {
            for (q, reach) in tau[t.target].iter().enumerate() {
                if *reach {
                    out[q] = true;
                }
            }
        }
        (0..n).filter(|&q| out[q]).collect()
    };
    let mut rel = vec![vec![true; n]; n];
    loop {
        let mut changed = false;
        for p in 0..n {
            for q in 0..n {
                if !rel[p][q] {
                    continue;
                }
                let ok = a.transitions().iter().filter(|t| t.source == p).all(|t| {
                    let answers: Vec<usize> = if t.label.is_internal() {
                        (0..n).filter(|&r| tau[q][r]).collect()
                    } else {
                        weak(q, &t.label)
                    };
                    answers.iter().any(|&r| rel[t.target][r])
                });
                if !ok {
                    rel[p][q] = false;
                    rel[q][p] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}
