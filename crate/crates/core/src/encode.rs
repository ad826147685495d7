//! Functional equations encoded as tiling equations on `G x H`.
//!
//! A set `A` in `G x H` tiles by `{0} x H` iff it is the graph of some
//! `f: G -> H`; each encoder below produces tiles whose graph tilings are
//! exactly the solutions of one functional equation. The checkers validate
//! that correspondence exhaustively on finite quotients `Z/L`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::abelian::{Element, GroupSpec};
use crate::error::{Error, Result};
use crate::padic::is_prime;
use crate::tiling::{enumerate_tilings_of_system, graph_detect, Tile};

/// A total function from a finite list of domain points into a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    domain: Vec<Element>,
    codomain: GroupSpec,
    values: Vec<Element>,
}

impl FunctionTable {
    pub fn new(domain: Vec<Element>, codomain: GroupSpec, values: Vec<Element>) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(Error::InvalidParams(format!(
                "{} domain points but {} values",
                domain.len(),
                values.len()
            )));
        }
        for v in &values {
            codomain.check(v)?;
        }
        Ok(FunctionTable { domain, codomain, values })
    }

    /// A function on `{0, .., len-1}` (as points of `Z/len`) into `Z/modulus`.
    pub fn cyclic(modulus: u64, values: &[i64]) -> Result<Self> {
        let codomain = GroupSpec::cyclic(modulus)?;
        let n = values.len().max(1) as u64;
        let dom = GroupSpec::cyclic(n)?;
        let domain = (0..values.len()).map(|i| dom.element_at(i)).collect();
        let values = values
            .iter()
            .map(|&v| codomain.torsion_element(&[v]))
            .collect::<Result<_>>()?;
        FunctionTable::new(domain, codomain, values)
    }

    pub fn domain(&self) -> &[Element] {
        &self.domain
    }

    pub fn codomain(&self) -> &GroupSpec {
        &self.codomain
    }

    pub fn values(&self) -> &[Element] {
        &self.values
    }

    pub fn value(&self, x: &Element) -> Option<&Element> {
        self.domain.iter().position(|d| d == x).map(|i| &self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The functional equation a tile system encodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Meaning {
    /// `f(x + v) = f(x)`
    Periodicity { v: Element },
    /// `f(x) = x + c mod n`
    ShiftedMod { n: u64 },
    /// `a_1 f_1(x) + ... + a_K f_K(x) = c` in `Z/2q`
    Linear { q: u64, coefficients: Vec<i64> },
    /// `{f(x,0), f(x,1)} = {a, b}` for some even `a` and odd `b`
    BooleanPair { q: u64 },
}

impl fmt::Display for Meaning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Meaning::Periodicity { v } => write!(f, "f(x+{v}) = f(x)"),
            Meaning::ShiftedMod { n } => write!(f, "f(x) = x + c mod {n}"),
            Meaning::Linear { q, coefficients } => {
                let terms: Vec<String> = coefficients
                    .iter()
                    .enumerate()
                    .map(|(i, a)| format!("{a}*f{}", i + 1))
                    .collect();
                write!(f, "{} = c mod {}", terms.join(" + "), 2 * q)
            }
            Meaning::BooleanPair { .. } => {
                write!(f, "{{f(x,0), f(x,1)}} = {{a, b}} with a even, b odd")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedConstraint {
    pub base: GroupSpec,
    pub fiber: GroupSpec,
    pub tiles: Vec<Tile>,
    pub meaning: Meaning,
}

impl EncodedConstraint {
    pub fn group(&self) -> GroupSpec {
        self.base.product(&self.fiber)
    }

    /// Replaces every free coordinate of the base by `Z/l`. Finite bases are
    /// returned unchanged.
    pub fn quotient(&self, l: u64) -> Result<EncodedConstraint> {
        if self.base.is_finite() {
            return Ok(self.clone());
        }
        if l == 0 {
            return Err(Error::IncompatibleQuotient {
                size: l,
                reason: "quotient size must be positive".into(),
            });
        }
        if let Meaning::ShiftedMod { n } = self.meaning {
            if !l.is_multiple_of(n) {
                return Err(Error::IncompatibleQuotient {
                    size: l,
                    reason: format!("{n} does not divide {l}"),
                });
            }
        }
        let rank = self.base.rank();
        let mut moduli = vec![l; rank];
        moduli.extend_from_slice(self.base.moduli());
        let base = GroupSpec::finite(moduli)?;
        let group = base.product(&self.fiber);
        let project = |x: &Element| -> Result<Element> {
            let torsion: Vec<i64> = x
                .free()
                .iter()
                .copied()
                .chain(x.torsion().iter().map(|&t| t as i64))
                .collect();
            group.torsion_element(&torsion)
        };
        let tiles = self
            .tiles
            .iter()
            .map(|t| Tile::new(group.clone(), t.elements().iter().map(project).collect::<Result<Vec<_>>>()?))
            .collect::<Result<Vec<_>>>()?;
        let meaning = match &self.meaning {
            Meaning::Periodicity { v } => Meaning::Periodicity {
                v: {
                    let torsion: Vec<i64> = v
                        .free()
                        .iter()
                        .copied()
                        .chain(v.torsion().iter().map(|&t| t as i64))
                        .collect();
                    base.torsion_element(&torsion)?
                },
            },
            m => m.clone(),
        };
        Ok(EncodedConstraint {
            base,
            fiber: self.fiber.clone(),
            tiles,
            meaning,
        })
    }
}

fn product_tile(base: &GroupSpec, fiber: &GroupSpec, pairs: impl IntoIterator<Item = (Element, Element)>) -> Result<Tile> {
    let group = base.product(fiber);
    Tile::new(group, pairs.into_iter().map(|(x, h)| x.join(&h)))
}

/// `({0} x {0}) u ({v} x (H \ {0}))`
pub fn encode_periodicity(base: &GroupSpec, fiber: &GroupSpec, v: &Element) -> Result<EncodedConstraint> {
    if !fiber.is_finite() {
        return Err(Error::NotFinite(fiber.to_string()));
    }
    base.check(v)?;
    let zero = fiber.zero();
    let mut pairs = vec![(base.zero(), zero.clone())];
    pairs.extend(fiber.elements()?.into_iter().filter(|h| *h != zero).map(|h| (v.clone(), h)));
    Ok(EncodedConstraint {
        base: base.clone(),
        fiber: fiber.clone(),
        tiles: vec![product_tile(base, fiber, pairs)?],
        meaning: Meaning::Periodicity { v: v.clone() },
    })
}

/// `({0} x {0}) u ({1} x (Z/N \ {1}))` over `Z x Z/N`
pub fn encode_shifted_mod(n: u64) -> Result<EncodedConstraint> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("N must be at least 2, got {n}")));
    }
    let base = GroupSpec::free_abelian(1);
    let fiber = GroupSpec::cyclic(n)?;
    let x = |a: i64| base.normalize(&[a], &[]);
    let mut pairs = vec![(x(0)?, fiber.zero())];
    for h in 0..n as i64 {
        if h != 1 {
            pairs.push((x(1)?, fiber.torsion_element(&[h])?));
        }
    }
    Ok(EncodedConstraint {
        tiles: vec![product_tile(&base, &fiber, pairs)?],
        base,
        fiber,
        meaning: Meaning::ShiftedMod { n },
    })
}

/// `({0} x E) u ({1} x (H \ E))` over `Z x (Z/2q)^K`, `E = {y : sum a_i y_i = 0}`.
pub fn encode_linear(k: usize, q: u64, coefficients: &[i64]) -> Result<EncodedConstraint> {
    if !is_prime(q) {
        return Err(Error::InvalidParams(format!("q must be prime, got {q}")));
    }
    if k == 0 || coefficients.len() != k {
        return Err(Error::InvalidParams(format!(
            "expected {k} coefficients, got {}",
            coefficients.len()
        )));
    }
    let m = 2 * q as i64;
    if coefficients.iter().all(|a| a.rem_euclid(m) == 0) {
        return Err(Error::InvalidParams("all coefficients vanish mod 2q".into()));
    }
    if (2 * q).checked_pow(k as u32).is_none_or(|s| s > 1 << 20) {
        return Err(Error::TooLarge(format!("(Z/{})^{k}", 2 * q)));
    }
    let base = GroupSpec::free_abelian(1);
    let fiber = GroupSpec::finite(vec![2 * q; k])?;
    let zero = base.zero();
    let one = base.normalize(&[1], &[])?;
    let pairs = fiber.elements()?.into_iter().map(|y| {
        let s = y
            .torsion()
            .iter()
            .zip(coefficients)
            .fold(0i64, |acc, (&yi, &a)| (acc + a.rem_euclid(m) * yi as i64) % m);
        let x = if s == 0 { zero.clone() } else { one.clone() };
        (x, y)
    });
    Ok(EncodedConstraint {
        tiles: vec![product_tile(&base, &fiber, pairs.collect::<Vec<_>>())?],
        base,
        fiber,
        meaning: Meaning::Linear {
            q,
            coefficients: coefficients.to_vec(),
        },
    })
}

/// Two tiles over `(Z x Z/2) x Z/2q`: `F = {(0,0),(0,1)} x 2Z/2q` and
/// `F` with `(0,*,0)` moved to `(1,*,0)`.
pub fn encode_boolean_pair(q: u64) -> Result<EncodedConstraint> {
    if q < 3 || !is_prime(q) {
        return Err(Error::InvalidParams(format!("q must be a prime >= 3, got {q}")));
    }
    let base = GroupSpec::new(1, vec![2])?;
    let fiber = GroupSpec::cyclic(2 * q)?;
    let b = |x: i64, y: i64| base.normalize(&[x], &[y]);
    let h = |v: i64| fiber.torsion_element(&[v]);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for y in 0..2 {
        for v in (0..2 * q as i64).step_by(2) {
            first.push((b(0, y)?, h(v)?));
            if v != 0 {
                second.push((b(0, y)?, h(v)?));
            }
        }
        second.push((b(1, y)?, h(0)?));
    }
    Ok(EncodedConstraint {
        tiles: vec![
            product_tile(&base, &fiber, first)?,
            product_tile(&base, &fiber, second)?,
        ],
        base,
        fiber,
        meaning: Meaning::BooleanPair { q },
    })
}

fn boolean_residue(q: u64, v: i8) -> Result<u64> {
    match v {
        1 => Ok(1),
        -1 => Ok(2 * q - 1),
        _ => Err(Error::MalformedTwoValued(format!("{v} is not boolean (+1/-1)"))),
    }
}

/// Represents `+1, -1` as `1, 2q-1` in `Z/2q`.
pub fn boolean_to_residues(q: u64, f: &[i8]) -> Result<Vec<u64>> {
    f.iter().map(|&v| boolean_residue(q, v)).collect()
}

fn check_booleans(fs: [&[i8]; 3]) -> Result<usize> {
    let n = fs[0].len();
    if fs.iter().any(|f| f.len() != n) {
        return Err(Error::MalformedTwoValued("functions have different domains".into()));
    }
    for f in fs {
        for &v in f {
            boolean_residue(2, v)?;
        }
    }
    Ok(n)
}

/// First point where `(f1, f2, f3)` takes one of the patterns `(-1,-1,-1)`
/// or `(+1,+1,+1)`.
pub fn sum_constraint_violation(f1: &[i8], f2: &[i8], f3: &[i8]) -> Result<Option<usize>> {
    let n = check_booleans([f1, f2, f3])?;
    Ok((0..n).find(|&x| f1[x] == f2[x] && f2[x] == f3[x]))
}

/// The boolean `f4 = f1 + f2 + f3`, or the first point where the sum leaves `{-1, +1}`.
pub fn sum_constraint_witness(f1: &[i8], f2: &[i8], f3: &[i8]) -> Result<Vec<i8>> {
    let n = check_booleans([f1, f2, f3])?;
    (0..n)
        .map(|x| {
            let s = f1[x] + f2[x] + f3[x];
            if s.abs() == 1 {
                Ok(s)
            } else {
                Err(Error::NoSumWitness {
                    point: x,
                    pattern: [f1[x], f2[x], f3[x]],
                })
            }
        })
        .collect()
}

/// Tiles for `f1 + f2 + f3 - f4 = c` over `Z x (Z/2q)^4`.
pub fn encode_sum_constraint(q: u64) -> Result<EncodedConstraint> {
    encode_linear(4, q, &[1, 1, 1, 2 * q as i64 - 1])
}

/// `|d|` on `Z/2q`: the magnitude of the representative in `(-q, q]`.
pub fn min_magnitude(q: u64, d: i64) -> u64 {
    let r = d.rem_euclid(2 * q as i64) as u64;
    if r > q {
        2 * q - r
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignmentVerdict {
    /// `f1 + f2 - (2 f3 + f4)` is constant.
    pub constant: bool,
    /// `(f1, f2)` hits all four value pairs.
    pub surjective: bool,
    /// `|a1 - b1| = |a2 - b2|`, evaluated only when both hypotheses hold.
    pub conclusion: Option<bool>,
}

impl AlignmentVerdict {
    pub fn hypotheses_hold(&self) -> bool {
        self.constant && self.surjective
    }

    pub fn is_counterexample(&self) -> bool {
        self.conclusion == Some(false)
    }
}

fn check_two_valued(q: u64, points: &[[u64; 4]], pairs: &[(u64, u64); 4]) -> Result<()> {
    let m = 2 * q;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        if a >= m || b >= m {
            return Err(Error::MalformedTwoValued(format!("f{}: values must lie in Z/{m}", i + 1)));
        }
        if (a as i64 - b as i64).rem_euclid(2) != 1 {
            return Err(Error::MalformedTwoValued(format!(
                "f{}: {a} - {b} is not odd",
                i + 1
            )));
        }
        let (mut seen_a, mut seen_b) = (false, false);
        for pt in points {
            match pt[i] {
                v if v == a => seen_a = true,
                v if v == b => seen_b = true,
                v => {
                    return Err(Error::MalformedTwoValued(format!(
                        "f{} takes {v} outside {{{a}, {b}}}",
                        i + 1
                    )))
                }
            }
        }
        if !(seen_a && seen_b) {
            return Err(Error::MalformedTwoValued(format!(
                "f{} does not take both of {{{a}, {b}}}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn alignment_verdict(q: u64, points: &[[u64; 4]], pairs: &[(u64, u64); 4]) -> AlignmentVerdict {
    let m = 2 * q;
    let combo = |p: &[u64; 4]| (p[0] + p[1] + 2 * (m - p[2]) + (m - p[3])) % m;
    let first = combo(&points[0]);
    let constant = points.iter().all(|p| combo(p) == first);
    let mut hit = [false; 4];
    for p in points {
        hit[usize::from(p[0] == pairs[0].1) * 2 + usize::from(p[1] == pairs[1].1)] = true;
    }
    let surjective = hit.iter().all(|&h| h);
    let conclusion = (constant && surjective).then(|| {
        let d = |(a, b): (u64, u64)| min_magnitude(q, a as i64 - b as i64);
        d(pairs[0]) == d(pairs[1])
    });
    AlignmentVerdict {
        constant,
        surjective,
        conclusion,
    }
}

/// Tests the hypotheses and conclusion of the alignment statement for four
/// two-valued functions into `Z/2q` on a common domain.
pub fn alignment_check(q: u64, fs: [&FunctionTable; 4], pairs: [(u64, u64); 4]) -> Result<AlignmentVerdict> {
    let z2q = GroupSpec::cyclic(2 * q)?;
    let n = fs[0].len();
    for (i, f) in fs.iter().enumerate() {
        if f.codomain() != &z2q {
            return Err(Error::MalformedTwoValued(format!(
                "f{} maps into {}, expected {z2q}",
                i + 1,
                f.codomain()
            )));
        }
        if f.domain() != fs[0].domain() {
            return Err(Error::MalformedTwoValued(format!("f{} has a different domain", i + 1)));
        }
    }
    if n == 0 {
        return Err(Error::MalformedTwoValued("empty domain".into()));
    }
    let points: Vec<[u64; 4]> = (0..n)
        .map(|x| std::array::from_fn(|i| fs[i].values()[x].torsion()[0]))
        .collect();
    alignment_check_raw(q, &points, pairs)
}

/// [`alignment_check`] on a list of value tuples `(f1(x), .., f4(x))`.
pub fn alignment_check_raw(q: u64, points: &[[u64; 4]], pairs: [(u64, u64); 4]) -> Result<AlignmentVerdict> {
    if points.is_empty() {
        return Err(Error::MalformedTwoValued("empty domain".into()));
    }
    check_two_valued(q, points, &pairs)?;
    Ok(alignment_verdict(q, points, &pairs))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentCounterexample {
    pub q: u64,
    pub pairs: [(u64, u64); 4],
    pub points: Vec<[u64; 4]>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentSearch {
    /// Configurations passed to the checker (well-formed two-valued tuples).
    pub checked: u64,
    pub hypotheses_held: u64,
    pub counterexamples: u64,
    /// Up to `keep` counterexamples, in search order.
    pub examples: Vec<AlignmentCounterexample>,
}

/// Exhaustive search over all two-valued `(f1, .., f4)` into `Z/2q` with odd
/// gaps on domains of at most `max_points` points.
///
/// Adding a constant to `f_i` shifts the tested combination by a constant and
/// preserves `|a_i - b_i|`, and reordering the domain changes nothing, so it is
/// enough to take `a_i = 0`, `b_i = d_i` odd, and domains given as multisets of
/// patterns in `{0,1}^4` (point `x` has `f_i(x) = pattern_i * d_i`).
pub fn alignment_search(q: u64, max_points: usize, keep: usize) -> Result<AlignmentSearch> {
    if !is_prime(q) {
        return Err(Error::InvalidParams(format!("q must be prime, got {q}")));
    }
    let m = 2 * q;
    let odd: Vec<u64> = (1..m).step_by(2).collect();
    let tuples: Vec<[u64; 4]> = odd
        .iter()
        .flat_map(|&d1| {
            let odd = &odd;
            odd.iter().flat_map(move |&d2| {
                odd.iter()
                    .flat_map(move |&d3| odd.iter().map(move |&d4| [d1, d2, d3, d4]))
            })
        })
        .collect();
    let parts: Vec<AlignmentSearch> = tuples
        .par_iter()
        .map(|d| {
            let mut out = AlignmentSearch::default();
            let pairs: [(u64, u64); 4] = std::array::from_fn(|i| (0, d[i]));
            let value = |pat: usize| -> [u64; 4] { std::array::from_fn(|i| ((pat >> (3 - i)) & 1) as u64 * d[i]) };
            let mut stack: Vec<usize> = Vec::with_capacity(max_points);
            let mut points: Vec<[u64; 4]> = Vec::with_capacity(max_points);
            fn dfs(
                q: u64,
                max_points: usize,
                keep: usize,
                pairs: &[(u64, u64); 4],
                value: &dyn Fn(usize) -> [u64; 4],
                stack: &mut Vec<usize>,
                points: &mut Vec<[u64; 4]>,
                out: &mut AlignmentSearch,
            ) {
                if !points.is_empty() {
                    // Malformed tuples (some f_i single-valued) are not configurations.
                    if let Ok(v) = alignment_check_raw(q, points, *pairs) {
                        out.checked += 1;
                        if v.hypotheses_hold() {
                            out.hypotheses_held += 1;
                        }
                        if v.is_counterexample() {
                            out.counterexamples += 1;
                            if out.examples.len() < keep {
                                out.examples.push(AlignmentCounterexample {
                                    q,
                                    pairs: *pairs,
                                    points: points.clone(),
                                });
                            }
                        }
                    }
                }
                if stack.len() == max_points {
                    return;
                }
                let start = stack.last().copied().unwrap_or(0);
                let m = 2 * q;
                let combo = |p: &[u64; 4]| (p[0] + p[1] + 2 * (m - p[2]) + (m - p[3])) % m;
                for pat in start..16 {
                    let v = value(pat);
                    // Adding a point with a different combination value can
                    // never restore constancy.
                    if points.first().is_some_and(|p0| combo(p0) != combo(&v)) {
                        continue;
                    }
                    stack.push(pat);
                    points.push(v);
                    dfs(q, max_points, keep, pairs, value, stack, points, out);
                    stack.pop();
                    points.pop();
                }
            }
            dfs(q, max_points, keep, &pairs, &value, &mut stack, &mut points, &mut out);
            out
        })
        .collect();
    let mut total = AlignmentSearch::default();
    for p in parts {
        total.checked += p.checked;
        total.hypotheses_held += p.hypotheses_held;
        total.counterexamples += p.counterexamples;
        for e in p.examples {
            if total.examples.len() < keep {
                total.examples.push(e);
            }
        }
    }
    Ok(total)
}

/// One function on which the functional equation and the tiling disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discrepancy {
    /// `f` in base order.
    pub values: Vec<Element>,
    pub satisfies_property: bool,
    /// First defect of the graph against a tile: `(tile, point, count)`.
    pub defect: Option<(usize, Element, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub base: GroupSpec,
    pub fiber: GroupSpec,
    pub meaning: Meaning,
    pub functions: u64,
    /// Functions satisfying the equation, in enumeration order.
    pub property: Vec<Vec<Element>>,
    /// Functions whose graph tiles by every tile of the constraint.
    pub tiling: Vec<Vec<Element>>,
    pub discrepancies: Vec<Discrepancy>,
    /// Tilings of `G x H` by `{0} x H` together with the constraint's tiles.
    pub system_tilings: usize,
    /// Every such tiling is a graph.
    pub system_all_graphs: bool,
    /// Their graphs are exactly the `tiling` set.
    pub system_matches: bool,
    pub system_complete: bool,
    /// Tilings by the constraint's tiles alone.
    pub tilings_alone: usize,
    /// Those that are not graphs, e.g. unions of whole fibers.
    pub non_graph_tilings: Vec<Vec<Element>>,
    pub tilings_alone_complete: bool,
}

impl EquivalenceReport {
    pub fn coincide(&self) -> bool {
        self.discrepancies.is_empty()
    }

    /// Equation and tiling agree, and the graph-forced tilings are exactly those graphs.
    pub fn ok(&self) -> bool {
        self.coincide() && self.system_all_graphs && self.system_matches && self.system_complete
    }
}

fn show_function(values: &[Element]) -> String {
    let v: Vec<String> = values.iter().map(|e| e.to_string()).collect();
    format!("[{}]", v.join(" "))
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "equivalence v1")?;
        writeln!(f, "base {}", self.base)?;
        writeln!(f, "fiber {}", self.fiber)?;
        writeln!(f, "meaning {}", self.meaning)?;
        writeln!(f, "functions {}", self.functions)?;
        writeln!(f, "property {}", self.property.len())?;
        writeln!(f, "tiling {}", self.tiling.len())?;
        writeln!(f, "coincide {}", self.coincide())?;
        for d in &self.discrepancies {
            write!(
                f,
                "discrepancy {} property={} tiles={}",
                show_function(&d.values),
                d.satisfies_property,
                d.defect.is_none()
            )?;
            if let Some((t, x, c)) = &d.defect {
                write!(f, " defect tile={t} point={x} count={c}")?;
            }
            writeln!(f)?;
        }
        writeln!(
            f,
            "system tilings={} graphs={} matches={} complete={}",
            self.system_tilings, self.system_all_graphs, self.system_matches, self.system_complete
        )?;
        writeln!(
            f,
            "tiles-alone tilings={} non-graph={} complete={}",
            self.tilings_alone,
            self.non_graph_tilings.len(),
            self.tilings_alone_complete
        )?;
        writeln!(f, "result {}", if self.ok() { "ok" } else { "mismatch" })
    }
}

/// Dense tables for checking graphs of functions on a finite base.
struct DenseSystem {
    base_els: Vec<Element>,
    fiber_els: Vec<Element>,
    base_add: Vec<u32>,
    fiber_add: Vec<u32>,
    /// Tile offsets as `(base index, fiber index)`.
    tiles: Vec<Vec<(u32, u32)>>,
}

impl DenseSystem {
    fn new(e: &EncodedConstraint) -> Result<Self> {
        let base_els = e.base.elements()?;
        let fiber_els = e.fiber.elements()?;
        let table = |g: &GroupSpec, els: &[Element]| -> Vec<u32> {
            els.iter()
                .flat_map(|x| els.iter().map(move |y| g.index_of(&g.add(x, y)) as u32))
                .collect()
        };
        let tiles = e
            .tiles
            .iter()
            .map(|t| {
                t.elements()
                    .iter()
                    .map(|z| {
                        let (x, h) = z.split(&e.base);
                        (e.base.index_of(&x) as u32, e.fiber.index_of(&h) as u32)
                    })
                    .collect()
            })
            .collect();
        Ok(DenseSystem {
            base_add: table(&e.base, &base_els),
            fiber_add: table(&e.fiber, &fiber_els),
            base_els,
            fiber_els,
            tiles,
        })
    }

    /// First uncovered or multiply covered point of `graph(f) + tile`.
    fn graph_defect(&self, f: &[u32], tile: usize, counts: &mut Vec<u8>) -> Option<(usize, usize)> {
        let nb = self.base_els.len();
        let nf = self.fiber_els.len();
        counts.clear();
        counts.resize(nb * nf, 0);
        for (x, &fx) in f.iter().enumerate() {
            for &(b, h) in &self.tiles[tile] {
                let y = self.base_add[x * nb + b as usize] as usize;
                let v = self.fiber_add[fx as usize * nf + h as usize] as usize;
                let c = &mut counts[y * nf + v];
                *c = c.saturating_add(1);
            }
        }
        counts.iter().position(|&c| c != 1).map(|i| (i, counts[i] as usize))
    }

    fn point(&self, index: usize) -> Element {
        let nf = self.fiber_els.len();
        self.base_els[index / nf].join(&self.fiber_els[index % nf])
    }

    fn holds(&self, e: &EncodedConstraint, f: &[u32]) -> bool {
        let nb = self.base_els.len();
        let value = |x: usize| &self.fiber_els[f[x] as usize];
        match &e.meaning {
            Meaning::Periodicity { v } => {
                let vi = e.base.index_of(v);
                (0..nb).all(|x| f[self.base_add[x * nb + vi] as usize] == f[x])
            }
            Meaning::ShiftedMod { n } => {
                let c = value(0).torsion()[0];
                (0..nb).all(|x| {
                    let rep = self.base_els[x].torsion()[0];
                    value(x).torsion()[0] == (rep + c) % n
                })
            }
            Meaning::Linear { q, coefficients } => {
                let m = 2 * *q as i64;
                let lin = |x: usize| {
                    value(x)
                        .torsion()
                        .iter()
                        .zip(coefficients)
                        .fold(0i64, |acc, (&y, &a)| (acc + a.rem_euclid(m) * y as i64) % m)
                };
                let c = lin(0);
                (0..nb).all(|x| lin(x) == c)
            }
            Meaning::BooleanPair { .. } => {
                // base points are (x, y) with y in Z/2 as the last coordinate
                let mut pair: Option<BTreeSet<u64>> = None;
                for x in (0..nb).step_by(2) {
                    let (a, b) = (value(x).torsion()[0], value(x + 1).torsion()[0]);
                    if a % 2 == b % 2 {
                        return false;
                    }
                    let s = BTreeSet::from([a, b]);
                    match &pair {
                        None => pair = Some(s),
                        Some(p) if *p != s => return false,
                        Some(_) => {}
                    }
                }
                true
            }
        }
    }
}

/// Exhaustive comparison of the equation and the tiling on the finite
/// quotient `Z/l` of the base (finite bases are used as they are).
pub fn encoder_equivalence_check(e: &EncodedConstraint, l: u64) -> Result<EquivalenceReport> {
    equivalence_on_finite(&e.quotient(l)?, Some(50_000_000))
}

/// As [`encoder_equivalence_check`] for a constraint whose base is already
/// finite. `budget` bounds each tiling enumeration.
pub fn equivalence_on_finite(e: &EncodedConstraint, budget: Option<u64>) -> Result<EquivalenceReport> {
    if !e.base.is_finite() {
        return Err(Error::NotFinite(e.base.to_string()));
    }
    if let Meaning::BooleanPair { .. } = e.meaning {
        if e.base.moduli().last() != Some(&2) {
            return Err(Error::InvalidEncoder("boolean pair base must end in Z/2".into()));
        }
    }
    let dense = DenseSystem::new(e)?;
    let nb = dense.base_els.len();
    let nf = dense.fiber_els.len() as u64;
    let total = nf
        .checked_pow(nb as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::TooLarge(format!("{nf}^{nb} functions")))?;

    let decode = |mut k: u64| -> Vec<u32> {
        let mut f = vec![0u32; nb];
        for slot in f.iter_mut().rev() {
            *slot = (k % nf) as u32;
            k /= nf;
        }
        f
    };
    let verdicts: Vec<(u64, bool, Option<(usize, usize, usize)>)> = (0..total)
        .into_par_iter()
        .map_init(Vec::new, |counts, k| {
            let f = decode(k);
            let prop = dense.holds(e, &f);
            let defect = (0..dense.tiles.len())
                .find_map(|t| dense.graph_defect(&f, t, counts).map(|(i, c)| (t, i, c)));
            (k, prop, defect)
        })
        .filter(|(_, prop, defect)| *prop || defect.is_none())
        .collect();

    let to_elements = |k: u64| -> Vec<Element> {
        decode(k).iter().map(|&i| dense.fiber_els[i as usize].clone()).collect()
    };
    let mut property = Vec::new();
    let mut tiling = Vec::new();
    let mut discrepancies = Vec::new();
    for (k, prop, defect) in verdicts {
        let values = to_elements(k);
        if prop {
            property.push(values.clone());
        }
        if defect.is_none() {
            tiling.push(values.clone());
        }
        if prop != defect.is_none() {
            discrepancies.push(Discrepancy {
                values,
                satisfies_property: prop,
                defect: defect.map(|(t, i, c)| (t, dense.point(i), c)),
            });
        }
    }

    let group = e.group();
    let graph_tile = Tile::new(
        group.clone(),
        dense.fiber_els.iter().map(|h| e.base.zero().join(h)),
    )?;
    let mut system = vec![graph_tile];
    system.extend(e.tiles.iter().cloned());
    let forced = enumerate_tilings_of_system(&group, &system, budget)?;
    let mut graphs = Vec::new();
    let mut all_graphs = true;
    for a in &forced.tilings {
        match graph_detect(a, &e.base, &e.fiber, None) {
            Ok(g) => graphs.push(g.map.into_values().collect::<Vec<_>>()),
            Err(_) => all_graphs = false,
        }
    }
    let as_set = |v: &[Vec<Element>]| v.iter().cloned().collect::<BTreeSet<_>>();
    let system_matches = all_graphs && as_set(&graphs) == as_set(&tiling);

    let alone = enumerate_tilings_of_system(&group, &e.tiles, budget)?;
    let non_graph_tilings = alone
        .tilings
        .iter()
        .filter(|a| graph_detect(a, &e.base, &e.fiber, None).is_err())
        .cloned()
        .collect();

    Ok(EquivalenceReport {
        base: e.base.clone(),
        fiber: e.fiber.clone(),
        meaning: e.meaning.clone(),
        functions: total,
        property,
        tiling,
        discrepancies,
        system_tilings: forced.tilings.len(),
        system_all_graphs: all_graphs,
        system_matches,
        system_complete: forced.complete,
        tilings_alone: alone.tilings.len(),
        non_graph_tilings,
        tilings_alone_complete: alone.complete,
    })
}

/// Groups counterexamples by `(|a1 - b1|, |a2 - b2|)`.
pub fn counterexample_gaps(examples: &[AlignmentCounterexample]) -> BTreeMap<(u64, u64), usize> {
    let mut out = BTreeMap::new();
    for e in examples {
        let d = |(a, b): (u64, u64)| min_magnitude(e.q, a as i64 - b as i64);
        *out.entry((d(e.pairs[0]), d(e.pairs[1]))).or_insert(0) += 1;
    }
    out
}
