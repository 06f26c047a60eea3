use crate::error::{Error, Result};

/// Disjoint coordinate groups `G_1..G_q` covering `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    groups: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl BlockPartition {
    pub fn new(mut groups: Vec<Vec<usize>>, d: usize) -> Result<Self> {
        let mut block_of = vec![usize::MAX; d];
        for (j, g) in groups.iter_mut().enumerate() {
            if g.is_empty() {
                return Err(Error::invalid(format!("block {j} is empty")));
            }
            g.sort_unstable();
            for &c in g.iter() {
                if c >= d {
                    return Err(Error::invalid(format!(
                        "coordinate {c} out of range 0..{d}"
                    )));
                }
                if block_of[c] != usize::MAX {
                    return Err(Error::invalid(format!(
                        "coordinate {c} appears in two blocks"
                    )));
                }
                block_of[c] = j;
            }
        }
        if let Some(c) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::invalid(format!("coordinate {c} is not covered")));
        }
        Ok(Self { groups, block_of })
    }

    /// `q` contiguous ranges whose sizes differ by at most one.
    pub fn contiguous(d: usize, q: usize) -> Result<Self> {
        if q == 0 || q > d {
            return Err(Error::invalid(format!(
                "block count {q} must lie in [1, {d}]"
            )));
        }
        let base = d / q;
        let extra = d % q;
        let mut groups = Vec::with_capacity(q);
        let mut start = 0;
        for j in 0..q {
            let len = base + usize::from(j < extra);
            groups.push((start..start + len).collect());
            start += len;
        }
        Self::new(groups, d)
    }

    pub fn singletons(d: usize) -> Result<Self> {
        Self::contiguous(d, d)
    }

    pub fn num_blocks(&self) -> usize {
        self.groups.len()
    }

    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn group(&self, j: usize) -> &[usize] {
        &self.groups[j]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn block_of(&self, coord: usize) -> usize {
        self.block_of[coord]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_partitions() {
        assert!(BlockPartition::new(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(BlockPartition::new(vec![vec![0]], 2).is_err());
        assert!(BlockPartition::new(vec![vec![0, 1], vec![]], 2).is_err());
        assert!(BlockPartition::new(vec![vec![0, 2]], 2).is_err());
        assert!(BlockPartition::contiguous(3, 4).is_err());
        assert!(BlockPartition::contiguous(3, 0).is_err());
    }

    #[test]
    fn custom_groups_are_sorted() {
        let p = BlockPartition::new(vec![vec![3, 0], vec![2, 1]], 4).unwrap();
        assert_eq!(p.group(0), &[0, 3]);
        assert_eq!(p.block_of(2), 1);
    }

    proptest! {
        #[test]
        fn contiguous_covers_and_inverts(d in 1usize..200, qf in 0.0f64..1.0) {
            let q = 1 + ((d - 1) as f64 * qf) as usize;
            let p = BlockPartition::contiguous(d, q).unwrap();
            prop_assert_eq!(p.num_blocks(), q);
            let mut seen = vec![false; d];
            for (j, g) in p.groups().iter().enumerate() {
                for &c in g {
                    prop_assert!(!seen[c]);
                    seen[c] = true;
                    prop_assert_eq!(p.block_of(c), j);
                }
            }
            prop_assert!(seen.into_iter().all(|s| s));
            let sizes: Vec<usize> = p.groups().iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
