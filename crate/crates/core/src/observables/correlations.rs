use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{ObservableError, ObservableResult, StateQuery};

/// Spin correlators of all pairs up to a maximum distance, measured once and
/// shared between the noise and real-space correlation observables.
#[derive(Clone, Debug)]
pub(crate) struct PairTable {
    pub num_sites: Option<usize>,
    pub max_distance: usize,
    /// `rows[i][d - 1] = (⟨S_i·S_{i+d}⟩, ⟨S^+_i S^-_{i+d}⟩)`; on the infinite
    /// chain only the two unit-cell sites `i = 0, 1` are stored.
    pub rows: Vec<Vec<(f64, C64)>>,
}

impl PairTable {
    pub fn build<Q: StateQuery + ?Sized>(state: &Q, max_distance: usize) -> ObservableResult<Self> {
        let num_sites = state.num_sites();
        let starts = num_sites.map_or(2, |n| n.saturating_sub(1));
        let rows = (0..starts)
            .map(|i| {
                let reach = num_sites.map_or(max_distance, |n| max_distance.min(n - 1 - i));
                state.correlation_row(i, reach)
            })
            .collect::<ObservableResult<Vec<Vec<_>>>>()?;
        Ok(Self { num_sites, max_distance, rows })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseCorrelation {
    pub distance: usize,
    /// Mean of `Re⟨S^+_i S^-_{i+l}⟩` over contributing pairs.
    pub g_pm: f64,
    /// Mean of `(-1)^i Re⟨S^+_i S^-_{i+l}⟩`, `i` the left site of the pair.
    pub q_pm: f64,
}

/// `G⁺⁻(l)` and the staggered `Q⁺⁻(l)` for `l = 1..=l_max`, normalized per
/// contributing pair so finite and infinite chains are comparable.
pub fn transverse_correlations<Q: StateQuery + ?Sized>(
    state: &Q,
    l_max: usize,
) -> ObservableResult<Vec<TransverseCorrelation>> {
    if let Some(n) = state.num_sites() {
        if l_max >= n {
            return Err(ObservableError::Unsupported(format!("distance {l_max} exceeds a chain of {n} sites")));
        }
    }
    Ok(transverse_from_table(&PairTable::build(state, l_max)?, l_max))
}

pub(crate) fn transverse_from_table(table: &PairTable, l_max: usize) -> Vec<TransverseCorrelation> {
    (1..=l_max.min(table.max_distance))
        .map(|l| {
            let (mut g, mut q, mut count) = (0.0, 0.0, 0usize);
            for (i, row) in table.rows.iter().enumerate() {
                if let Some(&(_, pm)) = row.get(l - 1) {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    g += pm.re;
                    q += sign * pm.re;
                    count += 1;
                }
            }
            let n = count.max(1) as f64;
            TransverseCorrelation { distance: l, g_pm: g / n, q_pm: q / n }
        })
        .collect()
}
