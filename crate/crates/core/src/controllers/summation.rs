//! Exact global sums in two synchronous neighbor-exchange rounds, valid on
//! graphs where every pair of agents is adjacent or shares a neighbor.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::linalg::Vector;

/// Every agent's copy of `Σ_j values[j]`.
///
/// Round one: each agent broadcasts its own value, so agent `i` learns every
/// value in its closed neighborhood `N̄_i`. Round two: each agent forwards what
/// it learned, and agent `i` adds the entries from `∪_{j∈N_i} N̄_j ∖ N̄_i`.
pub fn distributed_summation(values: &[Vector], topology: &Topology) -> Result<Vec<Vector>> {
    let n = topology.n_agents();
    if values.len() != n {
        return Err(Error::Dimension(format!("{} values for {n} agents", values.len())));
    }
    if let Some((i, j)) = topology.uncovered_pair() {
        return Err(Error::UncoveredPair(i, j));
    }

    // round one
    let known: Vec<BTreeMap<usize, &Vector>> = (0..n)
        .map(|i| {
            let mut seen = BTreeMap::from([(i, &values[i])]);
            for &j in topology.neighbors(i) {
                seen.insert(j, &values[j]);
            }
            seen
        })
        .collect();
    let round_one: Vec<Vector> = known.iter().map(|seen| seen.values().copied().sum()).collect();

    // round two
    Ok((0..n)
        .map(|i| {
            let mut extra: BTreeMap<usize, &Vector> = BTreeMap::new();
            for &j in topology.neighbors(i) {
                for (&l, &val) in &known[j] {
                    if !known[i].contains_key(&l) {
                        extra.insert(l, val);
                    }
                }
            }
            extra.values().fold(round_one[i].clone(), |acc, v| acc + *v)
        })
        .collect())
}
