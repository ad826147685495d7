//! Finitely generated abelian groups of the form `Z^r x Z/n1 x ... x Z/nk`.
//!
//! Elements carry a free part (`i64` per coordinate) and a torsion part that
//! is always stored reduced into `[0, n_j)`. Free coordinates never wrap:
//! [`GroupSpec::checked_add`] and friends report [`Error::Overflow`], and the
//! plain [`GroupSpec::add`] / [`GroupSpec::sub`] / [`GroupSpec::neg`] panic on
//! overflow. Lattice reduction runs in `i128` and converts back with a check.
//! Every window used in this crate (including `p^3`-deep windows for `p = 53`)
//! stays far inside the `i64` range.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `Z^rank x Z/moduli[0] x ... x Z/moduli[k-1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    rank: usize,
    moduli: Vec<u64>,
}

/// A group element. Torsion coordinates are reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    free: Vec<i64>,
    torsion: Vec<u64>,
}

impl Element {
    pub fn free(&self) -> &[i64] {
        &self.free
    }

    pub fn torsion(&self) -> &[u64] {
        &self.torsion
    }

    /// Concatenates an element of `G` with an element of a finite `H`,
    /// giving the corresponding element of `G x H`.
    pub fn join(&self, fiber: &Element) -> Element {
        debug_assert!(fiber.free.is_empty());
        let mut torsion = self.torsion.clone();
        torsion.extend_from_slice(&fiber.torsion);
        Element {
            free: self.free.clone(),
            torsion,
        }
    }

    /// Inverse of [`Element::join`]: splits an element of `base x H`.
    pub fn split(&self, base: &GroupSpec) -> (Element, Element) {
        let k = base.moduli.len();
        (
            Element {
                free: self.free.clone(),
                torsion: self.torsion[..k].to_vec(),
            },
            Element {
                free: Vec::new(),
                torsion: self.torsion[k..].to_vec(),
            },
        )
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "((")?;
        for (i, a) in self.free.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ");(")?;
        for (i, b) in self.torsion.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "))")
    }
}

/// Parses `((a1,...,ar);(b1,...,bk))` into raw integer vectors.
pub fn parse_raw_element(s: &str) -> Result<(Vec<i64>, Vec<i64>)> {
    let bad = || Error::parse(0, format!("malformed element `{s}`"));
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (left, right) = inner.split_once(';').ok_or_else(bad)?;
    let vector = |part: &str| -> Result<Vec<i64>> {
        let body = part
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(bad)?;
        if body.trim().is_empty() {
            return Ok(Vec::new());
        }
        body.split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| bad()))
            .collect()
    };
    Ok((vector(left)?, vector(right)?))
}

impl GroupSpec {
    pub fn new(rank: usize, moduli: Vec<u64>) -> Result<Self> {
        if let Some(&n) = moduli.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGroup(format!("modulus {n} < 2")));
        }
        Ok(GroupSpec { rank, moduli })
    }

    /// `Z^rank`.
    pub fn free_abelian(rank: usize) -> Self {
        GroupSpec {
            rank,
            moduli: Vec::new(),
        }
    }

    pub fn finite(moduli: Vec<u64>) -> Result<Self> {
        Self::new(0, moduli)
    }

    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(0, vec![n])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn is_finite(&self) -> bool {
        self.rank == 0
    }

    /// Order of a finite group.
    pub fn order(&self) -> Result<u64> {
        if !self.is_finite() {
            return Err(Error::NotFinite(self.to_string()));
        }
        self.moduli
            .iter()
            .try_fold(1u64, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::TooLarge(self.to_string()))
    }

    /// Order of the torsion part `G0`.
    pub fn torsion_order(&self) -> Result<u64> {
        self.moduli
            .iter()
            .try_fold(1u64, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::TooLarge(self.to_string()))
    }

    /// `self x other`; free coordinates first, then the torsion of `self`,
    /// then the torsion of `other`.
    pub fn product(&self, other: &GroupSpec) -> GroupSpec {
        assert!(
            other.rank == 0 || self.moduli.is_empty(),
            "product would interleave free and torsion coordinates"
        );
        let mut moduli = self.moduli.clone();
        moduli.extend_from_slice(&other.moduli);
        GroupSpec {
            rank: self.rank + other.rank,
            moduli,
        }
    }

    pub fn zero(&self) -> Element {
        Element {
            free: vec![0; self.rank],
            torsion: vec![0; self.moduli.len()],
        }
    }

    /// Builds an element from raw integer vectors, reducing the torsion part.
    pub fn normalize(&self, free: &[i64], torsion: &[i64]) -> Result<Element> {
        if free.len() != self.rank || torsion.len() != self.moduli.len() {
            return Err(Error::ShapeMismatch {
                expected_free: self.rank,
                expected_torsion: self.moduli.len(),
                got_free: free.len(),
                got_torsion: torsion.len(),
            });
        }
        let torsion = torsion
            .iter()
            .zip(&self.moduli)
            .map(|(&b, &n)| (b as i128).rem_euclid(n as i128) as u64)
            .collect();
        Ok(Element {
            free: free.to_vec(),
            torsion,
        })
    }

    /// Shorthand for [`GroupSpec::normalize`] on a finite group.
    pub fn torsion_element(&self, torsion: &[i64]) -> Result<Element> {
        self.normalize(&[], torsion)
    }

    /// Whether `x` is a well-formed element of this group.
    pub fn contains(&self, x: &Element) -> bool {
        x.free.len() == self.rank
            && x.torsion.len() == self.moduli.len()
            && x.torsion.iter().zip(&self.moduli).all(|(&b, &n)| b < n)
    }

    pub fn check(&self, x: &Element) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_free: self.rank,
                expected_torsion: self.moduli.len(),
                got_free: x.free.len(),
                got_torsion: x.torsion.len(),
            })
        }
    }

    pub fn checked_add(&self, x: &Element, y: &Element) -> Result<Element> {
        let free = x
            .free
            .iter()
            .zip(&y.free)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        let torsion = x
            .torsion
            .iter()
            .zip(&y.torsion)
            .zip(&self.moduli)
            .map(|((a, b), n)| (a + b) % n)
            .collect();
        Ok(Element { free, torsion })
    }

    pub fn checked_neg(&self, x: &Element) -> Result<Element> {
        let free = x
            .free
            .iter()
            .map(|a| a.checked_neg().ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        let torsion = x
            .torsion
            .iter()
            .zip(&self.moduli)
            .map(|(a, n)| (n - a) % n)
            .collect();
        Ok(Element { free, torsion })
    }

    pub fn checked_sub(&self, x: &Element, y: &Element) -> Result<Element> {
        let free = x
            .free
            .iter()
            .zip(&y.free)
            .map(|(a, b)| a.checked_sub(*b).ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        let torsion = x
            .torsion
            .iter()
            .zip(&y.torsion)
            .zip(&self.moduli)
            .map(|((a, b), n)| (a + n - b) % n)
            .collect();
        Ok(Element { free, torsion })
    }

    /// Panics on free-coordinate overflow.
    pub fn add(&self, x: &Element, y: &Element) -> Element {
        self.checked_add(x, y).expect("free coordinate overflow")
    }

    /// Panics on free-coordinate overflow.
    pub fn sub(&self, x: &Element, y: &Element) -> Element {
        self.checked_sub(x, y).expect("free coordinate overflow")
    }

    /// Panics on free-coordinate overflow.
    pub fn neg(&self, x: &Element) -> Element {
        self.checked_neg(x).expect("free coordinate overflow")
    }

    /// Dense index of an element of a finite group, mixed radix with the
    /// first modulus most significant. Agrees with the lexicographic order.
    pub fn index_of(&self, x: &Element) -> usize {
        debug_assert!(self.is_finite());
        x.torsion
            .iter()
            .zip(&self.moduli)
            .fold(0usize, |acc, (&b, &n)| acc * n as usize + b as usize)
    }

    pub fn element_at(&self, mut index: usize) -> Element {
        debug_assert!(self.is_finite());
        let mut torsion = vec![0u64; self.moduli.len()];
        for (slot, &n) in torsion.iter_mut().zip(&self.moduli).rev() {
            *slot = (index % n as usize) as u64;
            index /= n as usize;
        }
        Element {
            free: Vec::new(),
            torsion,
        }
    }

    /// All elements of a finite group in lexicographic order.
    pub fn elements(&self) -> Result<Vec<Element>> {
        let order = self.order()?;
        if order > 1 << 26 {
            return Err(Error::TooLarge(self.to_string()));
        }
        Ok((0..order as usize).map(|i| self.element_at(i)).collect())
    }

    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let (free, torsion) = parse_raw_element(s)?;
        self.normalize(&free, &torsion)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut factors = Vec::new();
        match self.rank {
            0 if self.moduli.is_empty() => factors.push("Z^0".to_string()),
            0 => {}
            1 => factors.push("Z".to_string()),
            r => factors.push(format!("Z^{r}")),
        }
        factors.extend(self.moduli.iter().map(|n| format!("Z/{n}")));
        write!(f, "{}", factors.join(" x "))
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `Z^r x Z/n1 x ... x Z/nk`; `Z` means `Z^1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut rank = 0usize;
        let mut moduli = Vec::new();
        for factor in s.split(['x', '×']) {
            let factor = factor.trim();
            if let Some(n) = factor.strip_prefix("Z/") {
                let n = n
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidGroup(format!("bad factor `{factor}`")))?;
                moduli.push(n);
            } else if factor == "Z" {
                rank += 1;
            } else if let Some(r) = factor.strip_prefix("Z^") {
                rank += r
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidGroup(format!("bad factor `{factor}`")))?;
            } else {
                return Err(Error::InvalidGroup(format!("bad factor `{factor}`")));
            }
            if !moduli.is_empty() && factor.starts_with("Z") && !factor.starts_with("Z/") {
                return Err(Error::InvalidGroup(
                    "free factors must precede finite factors".into(),
                ));
            }
        }
        GroupSpec::new(rank, moduli)
    }
}

/// A full-rank sublattice of `Z^r`, kept in upper-triangular Hermite normal
/// form: row `k` is zero before column `k`, has a positive pivot `d_k`, and
/// the entries above each pivot are reduced into `[0, d_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    rows: Vec<Vec<i64>>,
}

impl Lattice {
    /// The lattice generated by the columns of `basis` (an `r x r` matrix
    /// given as rows).
    pub fn from_columns(basis: &[Vec<i64>]) -> Result<Self> {
        let r = basis.len();
        if basis.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidParams("lattice basis must be square".into()));
        }
        let generators: Vec<Vec<i128>> = (0..r)
            .map(|c| (0..r).map(|row| basis[row][c] as i128).collect())
            .collect();
        Self::from_generators(generators)
    }

    /// The lattice generated by the given row vectors.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidParams("lattice basis must be square".into()));
        }
        Self::from_generators(
            rows.iter()
                .map(|v| v.iter().map(|&a| a as i128).collect())
                .collect(),
        )
    }

    pub fn diagonal(d: &[i64]) -> Result<Self> {
        let r = d.len();
        let rows: Vec<Vec<i64>> = (0..r)
            .map(|i| (0..r).map(|j| if i == j { d[i] } else { 0 }).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// The zero-dimensional lattice, used for finite groups.
    pub fn trivial() -> Self {
        Lattice { rows: Vec::new() }
    }

    fn from_generators(mut rows: Vec<Vec<i128>>) -> Result<Self> {
        let r = rows.len();
        for k in 0..r {
            loop {
                let pivot = (k..r)
                    .filter(|&i| rows[i][k] != 0)
                    .min_by_key(|&i| rows[i][k].abs())
                    .ok_or(Error::SingularLattice)?;
                rows.swap(k, pivot);
                let mut clean = true;
                for i in k + 1..r {
                    let q = rows[i][k] / rows[k][k];
                    if q != 0 {
                        for c in k..r {
                            rows[i][c] -= q * rows[k][c];
                        }
                    }
                    clean &= rows[i][k] == 0;
                }
                if clean {
                    break;
                }
            }
            if rows[k][k] < 0 {
                rows[k].iter_mut().for_each(|a| *a = -*a);
            }
        }
        for k in 0..r {
            for i in 0..k {
                let q = rows[i][k].div_euclid(rows[k][k]);
                if q != 0 {
                    for c in k..r {
                        rows[i][c] -= q * rows[k][c];
                    }
                }
            }
        }
        let rows = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|a| i64::try_from(a).map_err(|_| Error::Overflow))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Lattice { rows })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Hermite normal form rows.
    pub fn hnf(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// Pivots of the normal form; the fundamental domain is their box.
    pub fn pivots(&self) -> Vec<i64> {
        (0..self.rank()).map(|k| self.rows[k][k]).collect()
    }

    /// `[Z^r : self] = |det|`.
    pub fn index(&self) -> u64 {
        self.pivots().iter().map(|&d| d as u64).product()
    }

    /// Canonical representative of `x + self` inside the pivot box.
    pub fn reduce(&self, x: &[i64]) -> Result<Vec<i64>> {
        debug_assert_eq!(x.len(), self.rank());
        let mut y: Vec<i128> = x.iter().map(|&a| a as i128).collect();
        for (k, row) in self.rows.iter().enumerate() {
            let q = y[k].div_euclid(row[k] as i128);
            if q != 0 {
                for c in k..y.len() {
                    y[c] -= q * row[c] as i128;
                }
            }
        }
        y.into_iter()
            .map(|a| i64::try_from(a).map_err(|_| Error::Overflow))
            .collect()
    }

    pub fn contains(&self, x: &[i64]) -> Result<bool> {
        Ok(self.reduce(x)?.iter().all(|&a| a == 0))
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            return write!(f, "finite");
        }
        let r = self.rank();
        // Written as the column-generator matrix, row-major.
        let entries: Vec<String> = (0..r)
            .flat_map(|row| (0..r).map(move |col| (row, col)))
            .map(|(row, col)| self.rows[col][row].to_string())
            .collect();
        write!(f, "{}", entries.join(" "))
    }
}

/// Canonical representative of `x` modulo `lattice x {0}`.
pub fn reduce_element(g: &GroupSpec, lattice: &Lattice, x: &Element) -> Result<Element> {
    if lattice.rank() != g.rank() {
        return Err(Error::LatticeRank {
            lattice: lattice.rank(),
            group: g.rank(),
        });
    }
    Ok(Element {
        free: lattice.reduce(&x.free)?,
        torsion: x.torsion.clone(),
    })
}

/// Coset representatives of `(Z^r / lattice) x G0`, free parts in the pivot
/// box, lexicographic.
pub fn quotient_elements(g: &GroupSpec, lattice: &Lattice) -> Result<Vec<Element>> {
    if lattice.rank() != g.rank() {
        return Err(Error::LatticeRank {
            lattice: lattice.rank(),
            group: g.rank(),
        });
    }
    let count = (lattice.index() as u128) * g.torsion_order()? as u128;
    if count > 1 << 26 {
        return Err(Error::TooLarge(format!("quotient of size {count}")));
    }
    let ranges: Vec<(i64, i64)> = lattice.pivots().iter().map(|&d| (0, d - 1)).collect();
    Ok(box_points(g, &ranges))
}

/// A box of free coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    ranges: Vec<(i64, i64)>,
}

impl Window {
    pub fn new(ranges: Vec<(i64, i64)>) -> Result<Self> {
        if let Some(&(lo, hi)) = ranges.iter().find(|(lo, hi)| lo > hi) {
            return Err(Error::InvalidWindow(format!("[{lo}, {hi}] is empty")));
        }
        Ok(Window { ranges })
    }

    pub fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }
}

pub fn window_points(g: &GroupSpec, w: &Window) -> Result<Vec<Element>> {
    if w.ranges.len() != g.rank() {
        return Err(Error::InvalidWindow(format!(
            "window has {} ranges, group rank is {}",
            w.ranges.len(),
            g.rank()
        )));
    }
    Ok(box_points(g, &w.ranges))
}

fn box_points(g: &GroupSpec, ranges: &[(i64, i64)]) -> Vec<Element> {
    let mut free_points: Vec<Vec<i64>> = vec![Vec::new()];
    for &(lo, hi) in ranges {
        free_points = free_points
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |a| {
                    let mut v = prefix.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    let torsion_group = GroupSpec {
        rank: 0,
        moduli: g.moduli.clone(),
    };
    let torsion_count = torsion_group.torsion_order().unwrap_or(0) as usize;
    let mut out = Vec::with_capacity(free_points.len() * torsion_count);
    for free in free_points {
        for t in 0..torsion_count {
            out.push(Element {
                free: free.clone(),
                torsion: torsion_group.element_at(t).torsion,
            });
        }
    }
    out
}
