//! Translational tiling equations `A (+) F = G` over `Z^r x G0`.

mod exact_cover;
mod graph;
mod partition;

pub use exact_cover::{enumerate_tilings, enumerate_tilings_of_system, Obstruction, TilingEnumeration};
pub use graph::{graph_detect, partial_graph, Graph};
pub use partition::{
    find_intersective_partition, stack, verify_intersective, IntersectiveReport, Partition,
    PartitionFound, PartitionSearch, Violation,
};

use std::collections::BTreeSet;

use crate::abelian::{quotient_elements, reduce_element, Element, GroupSpec, Lattice};
use crate::error::{Error, Result};

/// A finite non-empty subset of a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tile {
    group: GroupSpec,
    elements: BTreeSet<Element>,
}

impl Tile {
    pub fn new(group: GroupSpec, elements: impl IntoIterator<Item = Element>) -> Result<Self> {
        let elements: BTreeSet<Element> = elements.into_iter().collect();
        if elements.is_empty() {
            return Err(Error::EmptyTile);
        }
        for x in &elements {
            group.check(x)?;
        }
        Ok(Tile { group, elements })
    }

    /// Tile in a finite cyclic-product group from raw torsion coordinates.
    pub fn from_torsion(group: GroupSpec, raw: &[&[i64]]) -> Result<Self> {
        let els = raw
            .iter()
            .map(|t| group.torsion_element(t))
            .collect::<Result<Vec<_>>>()?;
        Tile::new(group, els)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn elements(&self) -> &BTreeSet<Element> {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn translate(&self, v: &Element) -> Tile {
        Tile {
            group: self.group.clone(),
            elements: self.elements.iter().map(|x| self.group.add(x, v)).collect(),
        }
    }
}

/// A finite union of cosets of `lattice x {0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicSet {
    group: GroupSpec,
    lattice: Lattice,
    residues: BTreeSet<Element>,
}

impl PeriodicSet {
    pub fn new(
        group: GroupSpec,
        lattice: Lattice,
        residues: impl IntoIterator<Item = Element>,
    ) -> Result<Self> {
        let mut reduced = BTreeSet::new();
        let mut original: Vec<Element> = Vec::new();
        for x in residues {
            group.check(&x)?;
            let r = reduce_element(&group, &lattice, &x)?;
            if let Some(prev) = original.iter().find(|y| {
                reduce_element(&group, &lattice, y).map(|ry| ry == r).unwrap_or(false)
            }) {
                return Err(Error::CongruentResidues(prev.clone(), x));
            }
            original.push(x);
            reduced.insert(r);
        }
        Ok(PeriodicSet {
            group,
            lattice,
            residues: reduced,
        })
    }

    /// An arbitrary subset of a finite group.
    pub fn finite(group: GroupSpec, elements: impl IntoIterator<Item = Element>) -> Result<Self> {
        if !group.is_finite() {
            return Err(Error::NotFinite(group.to_string()));
        }
        Self::new(group, Lattice::trivial(), elements)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Canonical residues, reduced into the pivot box.
    pub fn residues(&self) -> &BTreeSet<Element> {
        &self.residues
    }

    pub fn contains(&self, x: &Element) -> Result<bool> {
        self.group.check(x)?;
        Ok(self
            .residues
            .contains(&reduce_element(&self.group, &self.lattice, x)?))
    }

    /// `self x {h}` inside `G x H` for a finite `H`.
    pub fn lift(&self, fiber: &GroupSpec, h: &Element) -> Result<PeriodicSet> {
        fiber.check(h)?;
        let group = self.group.product(fiber);
        PeriodicSet::new(
            group,
            self.lattice.clone(),
            self.residues.iter().map(|a| a.join(h)),
        )
    }

    pub fn translate(&self, v: &Element) -> Result<PeriodicSet> {
        PeriodicSet::new(
            self.group.clone(),
            self.lattice.clone(),
            self.residues.iter().map(|a| self.group.add(a, v)),
        )
    }
}

/// Outcome of a tiling check. `ok` holds exactly when `defects` is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingReport {
    pub defects: Vec<Defect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Defect {
    pub tile: usize,
    pub point: Element,
    pub count: usize,
}

impl TilingReport {
    pub fn ok(&self) -> bool {
        self.defects.is_empty()
    }
}

fn same_group(a: &GroupSpec, b: &GroupSpec) -> Result<()> {
    if a != b {
        return Err(Error::GroupMismatch {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

/// `#{f in F : x - f in A}`.
pub fn coverage_count(a: &PeriodicSet, f: &Tile, x: &Element) -> Result<usize> {
    same_group(&a.group, &f.group)?;
    a.group.check(x)?;
    let mut count = 0;
    for e in &f.elements {
        if a.contains(&a.group.checked_sub(x, e)?)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Checks `A (+) F^(m) = G` for every tile. Coverage is periodic modulo the
/// lattice, so one fundamental domain suffices.
pub fn verify_tiling(a: &PeriodicSet, system: &[Tile]) -> Result<TilingReport> {
    for f in system {
        same_group(&a.group, &f.group)?;
    }
    let domain = quotient_elements(&a.group, &a.lattice)?;
    let mut defects = Vec::new();
    for (m, f) in system.iter().enumerate() {
        for x in &domain {
            let count = coverage_count(a, f, x)?;
            if count != 1 {
                defects.push(Defect {
                    tile: m,
                    point: x.clone(),
                    count,
                });
            }
        }
    }
    Ok(TilingReport { defects })
}
