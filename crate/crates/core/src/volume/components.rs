use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::BinaryMask;

/// Voxel adjacency used for connected components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbours.
    #[serde(rename = "6")]
    Six,
    /// Face, edge and corner neighbours.
    #[default]
    #[serde(rename = "26")]
    TwentySix,
}

impl Connectivity {
    pub fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::TwentySix => manhattan > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Keeps only the largest connected component. Among equally large
/// components the one whose first voxel comes earliest in x-fastest scan
/// order wins. An empty mask stays empty.
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let dims = mask.grid.dims;
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; mask.data.len()];
    let mut queue = VecDeque::new();
    let mut next_label = 0u32;
    let mut best: Option<(u32, usize)> = None;

    for seed in 0..mask.data.len() {
        if !mask.data[seed] || labels[seed] != 0 {
            continue;
        }
        next_label += 1;
        labels[seed] = next_label;
        queue.push_back(seed);
        let mut size = 0usize;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let [i, j, k] = mask.grid.coords(idx);
            for off in &offsets {
                let (ii, jj, kk) = (i as i64 + off[0], j as i64 + off[1], k as i64 + off[2]);
                if ii < 0
                    || jj < 0
                    || kk < 0
                    || ii >= dims[0] as i64
                    || jj >= dims[1] as i64
                    || kk >= dims[2] as i64
                {
                    continue;
                }
                let n = mask.grid.index(ii as usize, jj as usize, kk as usize);
                if mask.data[n] && labels[n] == 0 {
                    labels[n] = next_label;
                    queue.push_back(n);
                }
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((next_label, size));
        }
    }

    let mut out = BinaryMask::empty(mask.grid.clone());
    if let Some((label, _)) = best {
        for (o, &l) in out.data.iter_mut().zip(&labels) {
            *o = l == label;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    #[test]
    fn keeps_bigger_blob() {
        let mut m = BinaryMask::empty(Grid::unit([12, 6, 6]));
        for i in 0..10 {
            m.set(i, 1, 1, true);
        }
        for i in 0..3 {
            m.set(i, 4, 4, true);
        }
        let out = largest_component(&m, Connectivity::TwentySix);
        assert_eq!(out.count(), 10);
        assert!((0..10).all(|i| out.get(i, 1, 1)));
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::empty(Grid::unit([4, 4, 4]));
        assert_eq!(largest_component(&m, Connectivity::Six).count(), 0);
    }

    #[test]
    fn diagonal_contact_depends_on_connectivity() {
        let mut m = BinaryMask::empty(Grid::unit([4, 4, 4]));
        m.set(0, 0, 0, true);
        m.set(1, 1, 1, true);
        m.set(3, 3, 3, true);
        assert_eq!(largest_component(&m, Connectivity::TwentySix).count(), 2);
        // All singletons under 6-connectivity: the earliest one wins.
        let six = largest_component(&m, Connectivity::Six);
        assert_eq!(six.count(), 1);
        assert!(six.get(0, 0, 0));
    }
}
