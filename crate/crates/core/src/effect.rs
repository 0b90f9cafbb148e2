// SPDX-License-Identifier: Apache-2.0
//! Exceptional monads: `Maybe`, `List + 1` and `Dist + 1`.
//!
//! Every kind has a distinguished [`Effect::Exception`] that absorbs under
//! [`Effect::bind`]: an exception in any branch makes the whole result an
//! exception. The empty list is a zero of `List + 1` but is not
//! exceptional.
//!
//! Sampling uses [`SimRng`], ChaCha with 8 rounds seeded from a `u64`. A
//! draw takes one `f64` uniform in `[0, 1)` and walks the cumulative
//! weights in branch order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The seedable generator used for every random choice.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tolerance for probability weights.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffectKind {
    Maybe,
    ListE,
    DistE,
}

impl EffectKind {
    pub const ALL: [EffectKind; 3] = [EffectKind::Maybe, EffectKind::ListE, EffectKind::DistE];
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectKind::Maybe => "maybe",
            EffectKind::ListE => "list",
            EffectKind::DistE => "dist",
        })
    }
}

impl FromStr for EffectKind {
    type Err = EffectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maybe" => Ok(EffectKind::Maybe),
            "list" => Ok(EffectKind::ListE),
            "dist" => Ok(EffectKind::DistE),
            _ => Err(EffectError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EffectError {
    #[error("unknown monad `{0}` (expected maybe, list or dist)")]
    UnknownKind(String),
    #[error("the {0} monad has no empty value")]
    NoEmpty(EffectKind),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("cannot sample from a {0} value")]
    NotSampleable(EffectKind),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Effect<T> {
    Exception,
    Just(T),
    List(Vec<T>),
    /// Branches with positive weights summing to one. Equal outcomes are
    /// merged.
    Dist(Vec<(f64, T)>),
}

pub(crate) fn merge<T: PartialEq>(out: &mut Vec<(f64, T)>, w: f64, x: T) {
    if w <= 0.0 {
        return;
    }
    match out.iter_mut().find(|(_, y)| *y == x) {
        Some((acc, _)) => *acc += w,
        None => out.push((w, x)),
    }
}

impl<T> Effect<T> {
    pub fn pure(kind: EffectKind, x: T) -> Self {
        match kind {
            EffectKind::Maybe => Effect::Just(x),
            EffectKind::ListE => Effect::List(vec![x]),
            EffectKind::DistE => Effect::Dist(vec![(1.0, x)]),
        }
    }

    pub fn throw(_kind: EffectKind) -> Self {
        Effect::Exception
    }

    /// The empty list. Only `List + 1` has one.
    pub fn empty(kind: EffectKind) -> Result<Self, EffectError> {
        match kind {
            EffectKind::ListE => Ok(Effect::List(Vec::new())),
            k => Err(EffectError::NoEmpty(k)),
        }
    }

    pub fn is_exception(&self) -> bool {
        matches!(self, Effect::Exception)
    }

    /// The kind of a non-exceptional value.
    pub fn kind(&self) -> Option<EffectKind> {
        match self {
            Effect::Exception => None,
            Effect::Just(_) => Some(EffectKind::Maybe),
            Effect::List(_) => Some(EffectKind::ListE),
            Effect::Dist(_) => Some(EffectKind::DistE),
        }
    }

    /// Carried values with their weights (1 for `Maybe` and list branches).
    pub fn branches(&self) -> Vec<(f64, &T)> {
        match self {
            Effect::Exception => Vec::new(),
            Effect::Just(x) => vec![(1.0, x)],
            Effect::List(xs) => xs.iter().map(|x| (1.0, x)).collect(),
            Effect::Dist(ws) => ws.iter().map(|(w, x)| (*w, x)).collect(),
        }
    }

    pub fn into_branches(self) -> Vec<(f64, T)> {
        match self {
            Effect::Exception => Vec::new(),
            Effect::Just(x) => vec![(1.0, x)],
            Effect::List(xs) => xs.into_iter().map(|x| (1.0, x)).collect(),
            Effect::Dist(ws) => ws,
        }
    }

    /// Kleisli extension. Any exceptional branch makes the result
    /// exceptional.
    ///
    /// # Panics
    ///
    /// If `f` returns a value of a different kind than `self`, or if the
    /// flattened weights are no longer normalized.
    pub fn bind<U: PartialEq>(self, mut f: impl FnMut(T) -> Effect<U>) -> Effect<U> {
        match self {
            Effect::Exception => Effect::Exception,
            Effect::Just(x) => match f(x) {
                e @ (Effect::Exception | Effect::Just(_)) => e,
                _ => panic!("effect kind mismatch in bind"),
            },
            Effect::List(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    match f(x) {
                        Effect::Exception => return Effect::Exception,
                        Effect::List(ys) => out.extend(ys),
                        _ => panic!("effect kind mismatch in bind"),
                    }
                }
                Effect::List(out)
            }
            Effect::Dist(ws) => {
                let mut out = Vec::new();
                for (w, x) in ws {
                    match f(x) {
                        Effect::Exception => return Effect::Exception,
                        Effect::Dist(ys) => {
                            for (v, y) in ys {
                                merge(&mut out, w * v, y);
                            }
                        }
                        _ => panic!("effect kind mismatch in bind"),
                    }
                }
                let total: f64 = out.iter().map(|(w, _)| w).sum();
                assert!(
                    (total - 1.0).abs() <= WEIGHT_TOL,
                    "distribution lost normalization: {total}"
                );
                Effect::Dist(out)
            }
        }
    }

    pub fn map<U: PartialEq>(self, mut f: impl FnMut(T) -> U) -> Effect<U> {
        let kind = self.kind();
        self.bind(|x| Effect::pure(kind.expect("non-exceptional"), f(x)))
    }

    /// Draws one branch. `Ok(None)` is the exception.
    pub fn sample(&self, rng: &mut SimRng) -> Result<Option<&T>, EffectError> {
        match self {
            Effect::Exception => Ok(None),
            Effect::Just(x) => Ok(Some(x)),
            Effect::List(_) => Err(EffectError::NotSampleable(EffectKind::ListE)),
            Effect::Dist(ws) => Ok(Some(&ws[sample_index(ws.iter().map(|(w, _)| *w), rng)].1)),
        }
    }

    /// Structural equality with distribution weights compared up to `tol`
    /// after merging equal outcomes.
    pub fn approx_eq(&self, other: &Effect<T>, tol: f64, eq: &impl Fn(&T, &T) -> bool) -> bool {
        match (self, other) {
            (Effect::Exception, Effect::Exception) => true,
            (Effect::Just(a), Effect::Just(b)) => eq(a, b),
            (Effect::List(a), Effect::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| eq(x, y))
            }
            (Effect::Dist(a), Effect::Dist(b)) => {
                let mass = |ws: &[(f64, T)], x: &T| {
                    ws.iter()
                        .filter(|(_, y)| eq(x, y))
                        .map(|(w, _)| w)
                        .sum::<f64>()
                };
                a.iter()
                    .chain(b)
                    .all(|(_, x)| (mass(a, x) - mass(b, x)).abs() <= tol)
            }
            _ => false,
        }
    }
}

impl<T: PartialEq> Effect<T> {
    /// A distribution from non-negative weights, normalized by their sum.
    /// Zero-weight branches are dropped and equal outcomes merged.
    pub fn dist(weighted: Vec<(f64, T)>) -> Result<Self, EffectError> {
        let total: f64 = weighted.iter().map(|(w, _)| w).sum();
        if weighted.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(EffectError::Weights(
                "weights must be finite and non-negative".into(),
            ));
        }
        if total <= 0.0 {
            return Err(EffectError::Weights("weights sum to zero".into()));
        }
        let mut out = Vec::new();
        for (w, x) in weighted {
            merge(&mut out, w / total, x);
        }
        Ok(Effect::Dist(out))
    }

    /// Sum of weights (1 for a normalized distribution, 0 for exceptions).
    pub fn total_weight(&self) -> f64 {
        self.branches().iter().map(|(w, _)| w).sum()
    }
}

/// Index drawn by cumulative weights. Falls back to the last positive
/// branch if rounding leaves the draw past the end.
pub fn sample_index(weights: impl IntoIterator<Item = f64>, rng: &mut SimRng) -> usize {
    let ws: Vec<f64> = weights.into_iter().collect();
    let total: f64 = ws.iter().sum();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in ws.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    ws.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}
