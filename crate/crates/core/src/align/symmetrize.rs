use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::Alignment;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetrization {
    Intersection,
    Union,
    #[default]
    GrowDiagFinalAnd,
}

impl FromStr for Symmetrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(Symmetrization::Intersection),
            "union" => Ok(Symmetrization::Union),
            "grow-diag-final-and" | "grow_diag_final_and" | "gdfa" => Ok(Symmetrization::GrowDiagFinalAnd),
            _ => Err(Error::arg(format!("unknown symmetrization {s:?}"))),
        }
    }
}

impl fmt::Display for Symmetrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetrization::Intersection => "intersection",
            Symmetrization::Union => "union",
            Symmetrization::GrowDiagFinalAnd => "grow-diag-final-and",
        })
    }
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];

/// Combines a source→target alignment with a target→source one that has
/// already been transposed into source×target orientation.
pub fn symmetrize(forward: &Alignment, reverse: &Alignment, heuristic: Symmetrization) -> Result<Alignment> {
    if (forward.src_len, forward.tgt_len) != (reverse.src_len, reverse.tgt_len) {
        return Err(Error::arg(format!(
            "pair {}: forward alignment is {}x{} but reverse is {}x{}",
            forward.pair_index, forward.src_len, forward.tgt_len, reverse.src_len, reverse.tgt_len
        )));
    }
    let (n, m) = (forward.src_len, forward.tgt_len);
    let links = match heuristic {
        Symmetrization::Intersection => forward.links.intersection(&reverse.links).copied().collect(),
        Symmetrization::Union => forward.links.union(&reverse.links).copied().collect(),
        Symmetrization::GrowDiagFinalAnd => grow_diag_final_and(forward, reverse, n, m),
    };
    Ok(Alignment {
        pair_index: forward.pair_index,
        src_len: n,
        tgt_len: m,
        links,
    })
}

struct Grid {
    m: usize,
    cells: Vec<bool>,
    src: Vec<bool>,
    tgt: Vec<bool>,
}

impl Grid {
    fn new(n: usize, m: usize) -> Self {
        Grid {
            m,
            cells: vec![false; n * m],
            src: vec![false; n],
            tgt: vec![false; m],
        }
    }

    fn add(&mut self, i: usize, j: usize) {
        self.cells[i * self.m + j] = true;
        self.src[i] = true;
        self.tgt[j] = true;
    }

    fn has(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.m + j]
    }
}

fn grow_diag_final_and(
    forward: &Alignment,
    reverse: &Alignment,
    n: usize,
    m: usize,
) -> std::collections::BTreeSet<(usize, usize)> {
    let mut grid = Grid::new(n, m);
    for &(i, j) in forward.links.intersection(&reverse.links) {
        grid.add(i, j);
    }
    let in_union = |i: usize, j: usize| forward.links.contains(&(i, j)) || reverse.links.contains(&(i, j));

    loop {
        let mut grew = false;
        for i in 0..n {
            for j in 0..m {
                if !grid.has(i, j) {
                    continue;
                }
                for (di, dj) in NEIGHBORS {
                    let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj)) else {
                        continue;
                    };
                    if ni >= n || nj >= m || grid.has(ni, nj) {
                        continue;
                    }
                    if (!grid.src[ni] || !grid.tgt[nj]) && in_union(ni, nj) {
                        grid.add(ni, nj);
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }

    for direction in [forward, reverse] {
        for &(i, j) in &direction.links {
            if !grid.src[i] && !grid.tgt[j] {
                grid.add(i, j);
            }
        }
    }

    (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| grid.has(i, j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al(n: usize, m: usize, links: &[(usize, usize)]) -> Alignment {
        Alignment::new(0, n, m, links.iter().copied()).unwrap()
    }

    #[test]
    fn agreement_is_a_fixed_point() {
        let a = al(3, 3, &[(0, 0), (1, 2), (2, 1)]);
        for h in [Symmetrization::Intersection, Symmetrization::Union, Symmetrization::GrowDiagFinalAnd] {
            assert_eq!(symmetrize(&a, &a, h).unwrap().links, a.links);
        }
    }

    #[test]
    fn disjoint_sets() {
        let f = al(3, 3, &[(0, 0)]);
        let r = al(3, 3, &[(2, 2)]);
        assert!(symmetrize(&f, &r, Symmetrization::Intersection).unwrap().links.is_empty());
        assert_eq!(symmetrize(&f, &r, Symmetrization::Union).unwrap().to_pharaoh(), "0-0 2-2");
        // final-and restores both since their rows and columns are free
        assert_eq!(symmetrize(&f, &r, Symmetrization::GrowDiagFinalAnd).unwrap().to_pharaoh(), "0-0 2-2");
    }

    #[test]
    fn grows_along_the_diagonal() {
        // seed 0-0 from the intersection; 1-1 is union-only and diagonal to it
        let f = al(3, 3, &[(0, 0), (1, 1)]);
        let r = al(3, 3, &[(0, 0)]);
        assert_eq!(symmetrize(&f, &r, Symmetrization::Intersection).unwrap().to_pharaoh(), "0-0");
        let out = symmetrize(&f, &r, Symmetrization::GrowDiagFinalAnd).unwrap();
        assert_eq!(out.to_pharaoh(), "0-0 1-1");
    }

    #[test]
    fn final_and_needs_both_ends_free() {
        // 2-0 is not adjacent to the seed and its target is already taken
        let f = al(3, 3, &[(0, 0)]);
        let r = al(3, 3, &[(0, 0), (2, 0)]);
        let out = symmetrize(&f, &r, Symmetrization::GrowDiagFinalAnd).unwrap();
        assert_eq!(out.to_pharaoh(), "0-0");
    }

    #[test]
    fn grow_step_allows_one_side_aligned() {
        // 0-1 neighbors the seed 0-0 and its target is free
        let f = al(2, 2, &[(0, 0), (0, 1)]);
        let r = al(2, 2, &[(0, 0)]);
        let out = symmetrize(&f, &r, Symmetrization::GrowDiagFinalAnd).unwrap();
        assert_eq!(out.to_pharaoh(), "0-0 0-1");
    }

    #[test]
    fn mismatched_lengths() {
        assert!(symmetrize(&al(2, 3, &[]), &al(3, 2, &[]), Symmetrization::Union).is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!("grow-diag-final-and".parse::<Symmetrization>().unwrap(), Symmetrization::GrowDiagFinalAnd);
        assert!("diag".parse::<Symmetrization>().is_err());
    }
}
