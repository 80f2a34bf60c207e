//! Interpolated modified Kneser-Ney estimation.
//!
//! Three closed-form discounts per order are derived from count-of-count
//! statistics; the discounted mass becomes the interpolation weight toward
//! the next-shorter context, and at the unigram level the leftover mass is
//! shared uniformly across the predictable alphabet, which is where the
//! unknown token's probability comes from. Probabilities are interpolated
//! bottom-up, so the stored values and backoff weights define a normalized
//! conditional distribution for every context.

use std::collections::HashMap;

use super::counts::{Gram, NGramCounts};
use super::model::{Entry, NGramModel, PLACEHOLDER_LOG10};
use super::vocab::{TokenId, BOS, UNK};
use super::LmError;
use crate::pgn::RatingLevel;

/// Estimator knobs.
#[derive(Debug, Clone)]
pub struct SmoothingConfig {
    /// Discount used for every bin at an order whose count-of-count
    /// statistics are degenerate (some `n_k` is zero or a closed-form
    /// discount comes out non-positive). Common on tiny corpora.
    pub fallback_discount: f64,
    /// Level tag attached to the resulting model.
    pub level_tag: Option<RatingLevel>,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            fallback_discount: 0.75,
            level_tag: None,
        }
    }
}

/// The three modified Kneser-Ney discounts for one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
}

impl Discounts {
    /// Closed-form discounts from count-of-count statistics.
    /// Returns `None` when the statistics cannot support them.
    pub fn closed_form(n1: u64, n2: u64, n3: u64, n4: u64) -> Option<Discounts> {
        if n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0 {
            return None;
        }
        let (n1, n2, n3, n4) = (n1 as f64, n2 as f64, n3 as f64, n4 as f64);
        let y = n1 / (n1 + 2.0 * n2);
        let d = Discounts {
            d1: 1.0 - 2.0 * y * n2 / n1,
            d2: 2.0 - 3.0 * y * n3 / n2,
            d3plus: 3.0 - 4.0 * y * n4 / n3,
        };
        let valid = d.d1 > 0.0 && d.d2 > 0.0 && d.d3plus > 0.0;
        valid.then_some(d)
    }

    pub fn flat(d: f64) -> Discounts {
        Discounts {
            d1: d,
            d2: d,
            d3plus: d,
        }
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }
}

/// An estimated model plus estimator diagnostics.
#[derive(Debug)]
pub struct Estimation {
    pub model: NGramModel,
    /// Orders that used the fallback discount.
    pub fallback_orders: Vec<usize>,
}

/// Estimate an interpolated modified Kneser-Ney model from counts.
pub fn estimate(counts: &NGramCounts, config: &SmoothingConfig) -> Result<Estimation, LmError> {
    let order = counts.order();
    let vocab = counts.vocab().clone();
    let mut fallback_orders = Vec::new();

    // Per-order discounts from the adjusted counts of predictable entries.
    let mut discounts = Vec::with_capacity(order);
    for n in 1..=order {
        let mut n1234 = [0u64; 4];
        for (gram, _) in counts.grams_of_order(n) {
            if gram.last() == Some(&BOS) {
                continue;
            }
            let adjusted = counts.adjusted(gram);
            if (1..=4).contains(&adjusted) {
                n1234[adjusted as usize - 1] += 1;
            }
        }
        match Discounts::closed_form(n1234[0], n1234[1], n1234[2], n1234[3]) {
            Some(d) => discounts.push(d),
            None => {
                fallback_orders.push(n);
                discounts.push(Discounts::flat(config.fallback_discount));
            }
        }
    }

    // Interpolated probabilities, bottom-up. `probs[n-1]` maps stored
    // n-grams to plain probabilities; `bows` collects context weights.
    let mut probs: Vec<HashMap<Gram, f64>> = Vec::with_capacity(order);
    let mut bows: Vec<HashMap<Gram, f64>> = vec![HashMap::new(); order];

    // Unigrams: interpolate with the uniform distribution over the
    // predictable alphabet; the unknown token keeps the uniform share.
    let predictable = vocab.predictable_len() as f64;
    let d1 = &discounts[0];
    let unigrams: Vec<(&Gram, u64)> = counts
        .grams_of_order(1)
        .filter(|(g, _)| g.last() != Some(&BOS))
        .collect();
    let total: u64 = unigrams.iter().map(|(g, _)| counts.adjusted(g)).sum();
    let mut p1: HashMap<Gram, f64> = HashMap::new();
    if total == 0 {
        // Nothing was observed; all mass sits on the unknown token.
        p1.insert(Gram::from(&[UNK][..]), 1.0);
    } else {
        let total = total as f64;
        let mut discount_mass = 0.0;
        for (gram, _) in &unigrams {
            let a = counts.adjusted(gram);
            discount_mass += d1.for_count(a);
            p1.insert((*gram).clone(), (a as f64 - d1.for_count(a)) / total);
        }
        let gamma = discount_mass / total;
        let uniform_share = gamma / predictable;
        for p in p1.values_mut() {
            *p += uniform_share;
        }
        p1.entry(Gram::from(&[UNK][..]))
            .and_modify(|p| *p += uniform_share)
            .or_insert(uniform_share);
    }
    probs.push(p1);

    for n in 2..=order {
        let dn = &discounts[n - 1];
        // Group stored entries by context.
        struct CtxStat {
            total: u64,
            singles: u64,
            doubles: u64,
            rest: u64,
        }
        let mut contexts: HashMap<&[TokenId], CtxStat> = HashMap::new();
        for (gram, _) in counts.grams_of_order(n) {
            if gram.last() == Some(&BOS) {
                continue;
            }
            let a = counts.adjusted(gram);
            let stat = contexts.entry(&gram[..n - 1]).or_insert(CtxStat {
                total: 0,
                singles: 0,
                doubles: 0,
                rest: 0,
            });
            stat.total += a;
            match a {
                0 => {}
                1 => stat.singles += 1,
                2 => stat.doubles += 1,
                _ => stat.rest += 1,
            }
        }

        let mut pn: HashMap<Gram, f64> = HashMap::new();
        for (gram, _) in counts.grams_of_order(n) {
            if gram.last() == Some(&BOS) {
                continue;
            }
            let a = counts.adjusted(gram);
            let stat = &contexts[&gram[..n - 1]];
            let lower = probs[n - 2]
                .get(&gram[1..])
                .copied()
                .expect("suffix of a stored n-gram is stored at the lower order");
            let gamma = (dn.d1 * stat.singles as f64
                + dn.d2 * stat.doubles as f64
                + dn.d3plus * stat.rest as f64)
                / stat.total as f64;
            let p = (a as f64 - dn.for_count(a)) / stat.total as f64 + gamma * lower;
            pn.insert(gram.clone(), p);
        }
        for (context, stat) in &contexts {
            let gamma = (dn.d1 * stat.singles as f64
                + dn.d2 * stat.doubles as f64
                + dn.d3plus * stat.rest as f64)
                / stat.total as f64;
            bows[n - 2].insert(Gram::from(*context), gamma);
        }
        probs.push(pn);
    }

    // Assemble log-space entry tables. Contexts with no probability of their
    // own (begin-marker runs) get placeholder entries.
    let mut entries: Vec<HashMap<Gram, Entry>> = Vec::with_capacity(order);
    for n in 1..=order {
        let pn = &probs[n - 1];
        let bn = &bows[n - 1];
        let mut table: HashMap<Gram, Entry> = HashMap::with_capacity(pn.len());
        for (gram, &p) in pn {
            table.insert(
                gram.clone(),
                Entry {
                    logp: p.log10(),
                    bow: bn.get(gram).map(|b| b.log10()),
                },
            );
        }
        for (context, &b) in bn {
            table.entry(context.clone()).or_insert_with(|| {
                debug_assert!(context.iter().all(|&t| t == BOS));
                Entry {
                    logp: PLACEHOLDER_LOG10,
                    bow: Some(b.log10()),
                }
            });
        }
        entries.push(table);
    }

    Ok(Estimation {
        model: NGramModel::from_parts(order, vocab, entries, config.level_tag),
        fallback_orders,
    })
}
