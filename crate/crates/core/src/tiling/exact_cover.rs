use crate::abelian::{Element, GroupSpec};
use crate::error::{Error, Result};
use crate::tiling::Tile;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obstruction {
    /// `|F|` does not divide `|G|`.
    Cardinality { tile: usize, tile_size: usize, order: u64 },
    /// Tiles of one system must share a size for a common `A` to exist.
    SizeMismatch { first: usize, other: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingEnumeration {
    /// Every `A` (sorted) with `A (+) F = G`, in lexicographic order.
    pub tilings: Vec<Vec<Element>>,
    pub obstruction: Option<Obstruction>,
    /// False when the node budget ran out before the search finished.
    pub complete: bool,
    pub nodes: u64,
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn disjoint(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }

    fn or_assign(&mut self, other: &Bits) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }

    fn xor_assign(&mut self, other: &Bits) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a ^= b);
    }

    fn first_zero(&self, n: usize) -> Option<usize> {
        self.0.iter().enumerate().find_map(|(w, &word)| {
            (word != u64::MAX)
                .then(|| w * 64 + (!word).trailing_zeros() as usize)
                .filter(|&i| i < n)
        })
    }
}

struct Search<'a> {
    n: usize,
    translates: Vec<Bits>,
    /// `candidates[x]`: every `a` with `x in a + F`, ascending.
    candidates: Vec<Vec<usize>>,
    budget: Option<u64>,
    nodes: u64,
    exhausted: bool,
    chosen: Vec<usize>,
    found: Vec<Vec<usize>>,
    accept: &'a dyn Fn(&[usize]) -> bool,
}

impl Search<'_> {
    fn run(&mut self, covered: &mut Bits) {
        let Some(x) = covered.first_zero(self.n) else {
            let mut a = self.chosen.clone();
            a.sort_unstable();
            if (self.accept)(&a) {
                self.found.push(a);
            }
            return;
        };
        for k in 0..self.candidates[x].len() {
            let a = self.candidates[x][k];
            if !covered.disjoint(&self.translates[a]) {
                continue;
            }
            self.nodes += 1;
            if self.budget.is_some_and(|b| self.nodes > b) {
                self.exhausted = true;
                return;
            }
            covered.or_assign(&self.translates[a]);
            self.chosen.push(a);
            self.run(covered);
            self.chosen.pop();
            covered.xor_assign(&self.translates[a]);
            if self.exhausted {
                return;
            }
        }
    }
}

fn dense_offsets(g: &GroupSpec, f: &Tile) -> Result<Vec<Element>> {
    if f.group() != g {
        return Err(Error::GroupMismatch {
            left: g.to_string(),
            right: f.group().to_string(),
        });
    }
    Ok(f.elements().iter().cloned().collect())
}

/// All tilings `A (+) F = G` of a finite group by one tile.
pub fn enumerate_tilings(g: &GroupSpec, f: &Tile) -> Result<TilingEnumeration> {
    enumerate_tilings_of_system(g, std::slice::from_ref(f), None)
}

/// All `A` with `A (+) F^(m) = G` for every tile of the system. Branches on the
/// least uncovered element of `G` using the first tile; the remaining tiles
/// filter complete covers. `budget` bounds the number of search nodes.
pub fn enumerate_tilings_of_system(
    g: &GroupSpec,
    system: &[Tile],
    budget: Option<u64>,
) -> Result<TilingEnumeration> {
    let order = g.order()?;
    let n = usize::try_from(order).map_err(|_| Error::TooLarge(g.to_string()))?;
    if n > 1 << 22 {
        return Err(Error::TooLarge(g.to_string()));
    }
    let offsets = system
        .iter()
        .map(|f| dense_offsets(g, f))
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = offsets.first() else {
        return Err(Error::InvalidParams("empty tile system".into()));
    };
    let empty = |obstruction| TilingEnumeration {
        tilings: Vec::new(),
        obstruction: Some(obstruction),
        complete: true,
        nodes: 0,
    };
    for (m, f) in offsets.iter().enumerate() {
        if order % f.len() as u64 != 0 {
            return Ok(empty(Obstruction::Cardinality {
                tile: m,
                tile_size: f.len(),
                order,
            }));
        }
        if f.len() != first.len() {
            return Ok(empty(Obstruction::SizeMismatch {
                first: first.len(),
                other: f.len(),
            }));
        }
    }

    let elements = g.elements()?;
    // sums[m][a] = indices of a + F^(m)
    let sums: Vec<Vec<Vec<usize>>> = offsets
        .iter()
        .map(|f| {
            elements
                .iter()
                .map(|a| f.iter().map(|e| g.index_of(&g.add(a, e))).collect())
                .collect()
        })
        .collect();
    let translates: Vec<Bits> = sums[0]
        .iter()
        .map(|idx| {
            let mut b = Bits::new(n);
            idx.iter().for_each(|&i| b.set(i));
            b
        })
        .collect();
    let mut candidates = vec![Vec::new(); n];
    for (a, idx) in sums[0].iter().enumerate() {
        for &x in idx {
            candidates[x].push(a);
        }
    }
    candidates.iter_mut().for_each(|c| {
        c.sort_unstable();
        c.dedup();
    });

    let rest = &sums[1..];
    let accept = |a: &[usize]| {
        rest.iter().all(|tile_sums| {
            let mut count = vec![0u8; n];
            for &ai in a {
                for &x in &tile_sums[ai] {
                    count[x] = count[x].saturating_add(1);
                }
            }
            count.iter().all(|&c| c == 1)
        })
    };
    let mut search = Search {
        n,
        translates,
        candidates,
        budget,
        nodes: 0,
        exhausted: false,
        chosen: Vec::new(),
        found: Vec::new(),
        accept: &accept,
    };
    search.run(&mut Bits::new(n));
    let mut found = search.found;
    found.sort();
    Ok(TilingEnumeration {
        tilings: found
            .into_iter()
            .map(|a| a.into_iter().map(|i| elements[i].clone()).collect())
            .collect(),
        obstruction: None,
        complete: !search.exhausted,
        nodes: search.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic_tile(n: u64, els: &[i64]) -> (GroupSpec, Tile) {
        let g = GroupSpec::cyclic(n).unwrap();
        let t = Tile::new(g.clone(), els.iter().map(|&a| g.torsion_element(&[a]).unwrap())).unwrap();
        (g, t)
    }

    fn as_ints(e: &TilingEnumeration) -> Vec<Vec<u64>> {
        e.tilings
            .iter()
            .map(|a| a.iter().map(|x| x.torsion()[0]).collect())
            .collect()
    }

    // Naive oracle: every subset of G, checked by counting sums.
    fn brute_force(g: &GroupSpec, f: &Tile) -> Vec<Vec<Element>> {
        let els = g.elements().unwrap();
        let n = els.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            let a: Vec<&Element> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &els[i]).collect();
            let mut count = vec![0; n];
            for x in &a {
                for e in f.elements() {
                    count[g.index_of(&g.add(x, e))] += 1;
                }
            }
            if count.iter().all(|&c| c == 1) {
                out.push(a.into_iter().cloned().collect());
            }
        }
        out.sort();
        out
    }

    #[test]
    fn small_cyclic_examples() {
        let (g, f) = cyclic_tile(4, &[0, 1]);
        assert_eq!(as_ints(&enumerate_tilings(&g, &f).unwrap()), vec![vec![0, 2], vec![1, 3]]);

        let (g, f) = cyclic_tile(4, &[0, 2]);
        assert_eq!(
            as_ints(&enumerate_tilings(&g, &f).unwrap()),
            vec![vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]
        );

        let (g, f) = cyclic_tile(5, &[0, 1]);
        let e = enumerate_tilings(&g, &f).unwrap();
        assert!(e.tilings.is_empty());
        assert_eq!(
            e.obstruction,
            Some(Obstruction::Cardinality { tile: 0, tile_size: 2, order: 5 })
        );
    }

    #[test]
    fn agrees_with_brute_force() {
        let cases: Vec<(Vec<u64>, Vec<Vec<i64>>)> = vec![
            (vec![6], vec![vec![0], vec![1], vec![3]]),
            (vec![8], vec![vec![0], vec![1], vec![4], vec![5]]),
            (vec![12], vec![vec![0], vec![3], vec![6], vec![9]]),
            (vec![12], vec![vec![0], vec![1], vec![2]]),
            (vec![2, 6], vec![vec![0, 0], vec![1, 1], vec![0, 3]]),
            (vec![3, 4], vec![vec![0, 0], vec![1, 2]]),
            (vec![2, 2, 3], vec![vec![0, 0, 0], vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 2]]),
            (vec![10], vec![vec![0], vec![1], vec![3], vec![4], vec![7]]),
        ];
        for (moduli, raw) in cases {
            let g = GroupSpec::finite(moduli).unwrap();
            let refs: Vec<&[i64]> = raw.iter().map(|v| v.as_slice()).collect();
            let f = Tile::from_torsion(g.clone(), &refs).unwrap();
            let got = enumerate_tilings(&g, &f).unwrap();
            assert!(got.complete);
            assert_eq!(got.tilings, brute_force(&g, &f), "group {g}");
        }
    }

    #[test]
    fn systems_filter_by_every_tile() {
        let g = GroupSpec::cyclic(6).unwrap();
        let t = |els: &[i64]| Tile::new(g.clone(), els.iter().map(|&a| g.torsion_element(&[a]).unwrap())).unwrap();
        let e = enumerate_tilings_of_system(&g, &[t(&[0, 1, 2]), t(&[0, 2, 4])], None).unwrap();
        assert_eq!(as_ints(&e), vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        let e = enumerate_tilings_of_system(&g, &[t(&[0, 1, 2]), t(&[0, 1])], None).unwrap();
        assert!(matches!(e.obstruction, Some(Obstruction::SizeMismatch { .. })));
    }

    #[test]
    fn budget_marks_incomplete() {
        let g = GroupSpec::cyclic(12).unwrap();
        let f = Tile::new(g.clone(), [0, 1].map(|a| g.torsion_element(&[a]).unwrap())).unwrap();
        let e = enumerate_tilings_of_system(&g, &[f], Some(3)).unwrap();
        assert!(!e.complete);
    }
}
