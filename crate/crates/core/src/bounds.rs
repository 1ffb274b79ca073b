//! Cut-set lower bound, single-server multicast reference rates and gap
//! ratios, all in exact rationals.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::centralized::{centralized_envelope, minimum_memory};
use crate::rational::{int, rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSource {
    UpperCentralized,
    UpperDecentralized,
    LowerCutset,
    MulticastUpper,
    MulticastLower,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatePoint {
    #[serde(with = "crate::rational::serde_str")]
    pub memory: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub rate: Rational,
    pub source: RateSource,
}

/// Cut parameters `s` admitted by the bound: `1..=min(K, floor(N/2))`,
/// skipping values where the denominator vanishes.
pub fn cut_range(users: u32, files: u32) -> impl Iterator<Item = u32> {
    (1..=users.min(files / 2)).filter(move |&s| s != users && files / s != 1)
}

/// Unclamped cut-set term for one `s`.
pub fn cutset_term(users: u32, files: u32, memory: &Rational, s: u32) -> Rational {
    let (k, s_) = (users as i64, s as i64);
    let q = (files / s) as i64;
    let num = int(k) * (int(s_ * q - 1) - int(s_ - 1) * memory);
    num / int((q - 1) * (k - s_))
}

/// Unclamped multicast term: the cut-set term without the `K/(K-s)` factor.
pub fn multicast_term(files: u32, memory: &Rational, s: u32) -> Rational {
    let s_ = s as i64;
    let q = (files / s) as i64;
    (int(s_ * q - 1) - int(s_ - 1) * memory) / int(q - 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBound {
    pub value: Rational,
    /// Maximizing `s`, or `None` when every term clamps to zero.
    pub argmax: Option<u32>,
}

fn clamp(r: Rational) -> Rational {
    if r.is_negative() {
        Rational::zero()
    } else {
        r
    }
}

pub fn lower_bound(users: u32, files: u32, memory: &Rational) -> LowerBound {
    let mut best = LowerBound { value: Rational::zero(), argmax: None };
    for s in cut_range(users, files) {
        let v = clamp(cutset_term(users, files, memory, s));
        if v > best.value {
            best = LowerBound { value: v, argmax: Some(s) };
        }
    }
    best
}

/// `K(N+M-1) / (N+(K+1)(M-1))`.
pub fn multicast_upper(users: u32, files: u32, memory: &Rational) -> Rational {
    let (k, n) = (int(users as i64), int(files as i64));
    let one = int(1);
    &k * (&n + memory - &one) / (&n + (&k + &one) * (memory - &one))
}

pub fn multicast_lower(users: u32, files: u32, memory: &Rational) -> Rational {
    (1..=users.min(files / 2))
        .filter(|&s| files / s != 1)
        .map(|s| clamp(multicast_term(files, memory, s)))
        .max()
        .unwrap_or_else(Rational::zero)
}

pub fn multicast_rates(users: u32, files: u32, memory: &Rational) -> (Rational, Rational) {
    (multicast_upper(users, files, memory), multicast_lower(users, files, memory))
}

/// Upper bound on the ratio of the centralized rate to the multicast rate.
pub const MULTICAST_GAP_CONSTANT: i64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    #[serde(with = "crate::rational::serde_str")]
    pub memory: Rational,
    pub in_regime: bool,
    #[serde(with = "crate::rational::serde_opt_str")]
    pub centralized: Option<Rational>,
    #[serde(with = "crate::rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub multicast_upper: Rational,
    /// Centralized rate over the cut-set bound.
    #[serde(with = "crate::rational::serde_opt_str")]
    pub ratio_lower: Option<Rational>,
    /// Centralized rate over the multicast rate.
    #[serde(with = "crate::rational::serde_opt_str")]
    pub ratio_multicast: Option<Rational>,
    pub within_constant: bool,
    /// True at the `t = K-1` corner, where upper and lower bounds meet.
    pub at_optimal_corner: bool,
}

pub fn optimal_corner_memory(users: u32, files: u32) -> Rational {
    int(files as i64 * (users as i64 - 1)) + rat(users as i64, users as i64 - 1)
}

pub fn gap_report(users: u32, files: u32, memory: &Rational) -> GapReport {
    let in_regime = memory >= &minimum_memory(users, files);
    let lower = lower_bound(users, files, memory).value;
    let mu = multicast_upper(users, files, memory);
    let centralized = centralized_envelope(users, files, memory).ok();
    let ratio_lower = centralized
        .as_ref()
        .filter(|_| !lower.is_zero())
        .map(|c| c / &lower);
    let ratio_multicast = centralized.as_ref().map(|c| c / &mu);
    let within_constant = ratio_multicast
        .as_ref()
        .is_some_and(|r| r <= &int(MULTICAST_GAP_CONSTANT));
    GapReport {
        memory: memory.clone(),
        in_regime,
        centralized,
        lower,
        multicast_upper: mu,
        ratio_lower,
        ratio_multicast,
        within_constant,
        at_optimal_corner: memory == &optimal_corner_memory(users, files),
    }
}
