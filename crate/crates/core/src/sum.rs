//! Order-independent floating point reductions.
//!
//! Group actions permute pixels, and a permuted array summed left to right
//! does not generally round to the same value. Sorting the terms first makes
//! the result a function of the multiset of terms, so every quantity built on
//! these helpers is bitwise invariant under permutations.

/// Sum of `terms`, independent of their order.
pub fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Maximum of `terms`, `0.0` when empty. Terms are expected to be nonnegative.
pub fn max_or_zero(terms: impl IntoIterator<Item = f64>) -> f64 {
    terms.into_iter().fold(0.0, f64::max)
}
