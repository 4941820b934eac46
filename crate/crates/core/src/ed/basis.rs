//! Computational basis: bit `k` of a state is site `k`, set bit = spin up.

const ABSENT: u32 = u32::MAX;

/// Basis of the full Hilbert space or of one total-S^z sector.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    num_sites: usize,
    /// Number of up spins when restricted to a sector.
    up_count: Option<usize>,
    states: Vec<u32>,
    /// Inverse of `states` over all `2^L` bitstrings; empty for the full space
    /// where the index is the bitstring itself.
    lookup: Vec<u32>,
}

impl Basis {
    pub fn full(num_sites: usize) -> Self {
        assert!(num_sites <= 24);
        Self { num_sites, up_count: None, states: (0..1u32 << num_sites).collect(), lookup: Vec::new() }
    }

    pub fn sector(num_sites: usize, up_count: usize) -> Self {
        assert!(num_sites <= 24 && up_count <= num_sites);
        let states: Vec<u32> = (0..1u32 << num_sites).filter(|s| s.count_ones() as usize == up_count).collect();
        let mut lookup = vec![ABSENT; 1 << num_sites];
        for (k, &s) in states.iter().enumerate() {
            lookup[s as usize] = k as u32;
        }
        Self { num_sites, up_count: Some(up_count), states, lookup }
    }

    /// Sector with total `S^z = sz`.
    pub fn with_sz(num_sites: usize, sz: i32) -> Option<Self> {
        let up = sz + num_sites as i32 / 2;
        (0..=num_sites as i32).contains(&up).then(|| Self::sector(num_sites, up as usize))
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn up_count(&self) -> Option<usize> {
        self.up_count
    }

    /// Total `S^z` of the sector.
    pub fn sz(&self) -> Option<i32> {
        self.up_count.map(|u| u as i32 - self.num_sites as i32 / 2)
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u32 {
        self.states[index]
    }

    pub fn index(&self, state: u32) -> Option<usize> {
        if self.lookup.is_empty() {
            ((state as usize) < self.states.len()).then_some(state as usize)
        } else {
            match self.lookup.get(state as usize) {
                Some(&k) if k != ABSENT => Some(k as usize),
                _ => None,
            }
        }
    }
}

/// Local spin index `0 = ↑`, `1 = ↓` of `site` in `state`.
#[inline]
pub fn local(state: u32, site: usize) -> usize {
    1 - ((state >> site) & 1) as usize
}

/// Writes local spin index `s` at `site`.
#[inline]
pub fn with_local(state: u32, site: usize, s: usize) -> u32 {
    if s == 0 {
        state | (1 << site)
    } else {
        state & !(1 << site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_dimensions_are_binomial() {
        assert_eq!(Basis::sector(8, 4).dim(), 70);
        assert_eq!(Basis::with_sz(10, 0).unwrap().dim(), 252);
        assert_eq!(Basis::with_sz(6, -2).unwrap().dim(), 6);
        assert!(Basis::with_sz(4, 3).is_none());
        assert_eq!(Basis::full(5).dim(), 32);
    }

    #[test]
    fn lookup_inverts_states() {
        let b = Basis::sector(10, 3);
        for (k, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index(s), Some(k));
        }
        assert_eq!(b.index(0b1111), None);
        let f = Basis::full(4);
        assert_eq!(f.index(9), Some(9));
        assert_eq!(f.index(16), None);
    }

    #[test]
    fn local_index_convention() {
        assert_eq!(local(0b01, 0), 0);
        assert_eq!(local(0b01, 1), 1);
        assert_eq!(with_local(0, 2, 0), 0b100);
        assert_eq!(with_local(0b100, 2, 1), 0);
    }
}
