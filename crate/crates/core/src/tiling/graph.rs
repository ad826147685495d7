use std::collections::BTreeMap;

use crate::abelian::{Element, GroupSpec};
use crate::error::{Error, Result};

/// A function from (part of) a base group into a finite fiber group,
/// recovered from a subset of `base x fiber`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub map: BTreeMap<Element, Element>,
}

impl Graph {
    /// The set of base points the graph lives over.
    pub fn support(&self) -> Vec<Element> {
        self.map.keys().cloned().collect()
    }

    pub fn value(&self, x: &Element) -> Option<&Element> {
        self.map.get(x)
    }
}

fn fibers(
    set: &[Element],
    base: &GroupSpec,
    fiber: &GroupSpec,
    domain: Option<&[Element]>,
) -> Result<(Vec<Element>, BTreeMap<Element, Vec<Element>>)> {
    let product = base.product(fiber);
    let domain = match domain {
        Some(d) => d.to_vec(),
        None => base.elements()?,
    };
    let mut by_base: BTreeMap<Element, Vec<Element>> =
        domain.iter().map(|x| (x.clone(), Vec::new())).collect();
    for z in set {
        product.check(z)?;
        let (x, h) = z.split(base);
        if let Some(points) = by_base.get_mut(&x) {
            points.push(h);
        }
    }
    Ok((domain, by_base))
}

/// Returns `f` with `set = {(x, f(x))}` over the examined domain, i.e. the set
/// meets every fiber `{x} x H` exactly once. `domain` defaults to all of a
/// finite base.
pub fn graph_detect(
    set: &[Element],
    base: &GroupSpec,
    fiber: &GroupSpec,
    domain: Option<&[Element]>,
) -> Result<Graph> {
    let (domain, mut by_base) = fibers(set, base, fiber, domain)?;
    let mut map = BTreeMap::new();
    for x in domain {
        let points = by_base.remove(&x).unwrap_or_default();
        if points.len() != 1 {
            return Err(Error::NotAGraph {
                base: x,
                count: points.len(),
            });
        }
        map.insert(x, points.into_iter().next().unwrap());
    }
    Ok(Graph { map })
}

/// Like [`graph_detect`] but fibers may be empty: the set is a graph over the
/// base points it meets.
pub fn partial_graph(
    set: &[Element],
    base: &GroupSpec,
    fiber: &GroupSpec,
    domain: Option<&[Element]>,
) -> Result<Graph> {
    let (_, by_base) = fibers(set, base, fiber, domain)?;
    let mut map = BTreeMap::new();
    for (x, points) in by_base {
        match points.len() {
            0 => {}
            1 => {
                map.insert(x, points.into_iter().next().unwrap());
            }
            count => return Err(Error::NotAGraph { base: x, count }),
        }
    }
    Ok(Graph { map })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_graph_of_parity() {
        let base = GroupSpec::cyclic(4).unwrap();
        let fiber = GroupSpec::cyclic(2).unwrap();
        let prod = base.product(&fiber);
        let set: Vec<Element> = (0..4)
            .map(|x| prod.torsion_element(&[x, x % 2]).unwrap())
            .collect();
        let g = graph_detect(&set, &base, &fiber, None).unwrap();
        for x in 0..4 {
            let bx = base.torsion_element(&[x]).unwrap();
            assert_eq!(g.value(&bx).unwrap().torsion(), &[(x % 2) as u64]);
        }
    }

    #[test]
    fn full_product_is_not_a_graph() {
        let base = GroupSpec::cyclic(4).unwrap();
        let fiber = GroupSpec::cyclic(2).unwrap();
        let prod = base.product(&fiber);
        let set = prod.elements().unwrap();
        let err = graph_detect(&set, &base, &fiber, None).unwrap_err();
        assert_eq!(
            err,
            Error::NotAGraph {
                base: base.torsion_element(&[0]).unwrap(),
                count: 2
            }
        );
    }

    #[test]
    fn partial_graph_allows_empty_fibers() {
        let base = GroupSpec::cyclic(6).unwrap();
        let fiber = GroupSpec::cyclic(3).unwrap();
        let prod = base.product(&fiber);
        let set = vec![
            prod.torsion_element(&[0, 2]).unwrap(),
            prod.torsion_element(&[3, 1]).unwrap(),
        ];
        assert!(matches!(
            graph_detect(&set, &base, &fiber, None),
            Err(Error::NotAGraph { count: 0, .. })
        ));
        let g = partial_graph(&set, &base, &fiber, None).unwrap();
        assert_eq!(g.support().len(), 2);
    }

    #[test]
    fn window_domain_over_infinite_base() {
        let base = GroupSpec::free_abelian(1);
        let fiber = GroupSpec::cyclic(2).unwrap();
        let prod = base.product(&fiber);
        let set: Vec<Element> = (-3..=3)
            .map(|x: i64| prod.normalize(&[x], &[x.rem_euclid(2)]).unwrap())
            .collect();
        let domain: Vec<Element> = (-2..=2).map(|x| base.normalize(&[x], &[]).unwrap()).collect();
        let g = graph_detect(&set, &base, &fiber, Some(&domain)).unwrap();
        assert_eq!(g.map.len(), 5);
    }
}
