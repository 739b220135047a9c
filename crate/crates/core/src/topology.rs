//! Finite topological spaces over labelled points.
//!
//! Subsets are bitmasks over the point ordering, so at most 64 points are
//! supported. Opens are kept sorted by cardinality and then by mask, which is
//! a linear extension of inclusion.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_POINTS: usize = 64;

/// A subset of the point set, as a bitmask over the point ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpenSet(pub u64);

impl OpenSet {
    pub const EMPTY: OpenSet = OpenSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            OpenSet(u64::MAX)
        } else {
            OpenSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        OpenSet(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        OpenSet(it.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_subset_of(self, other: OpenSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: OpenSet) -> OpenSet {
        OpenSet(self.0 | other.0)
    }

    pub fn intersection(self, other: OpenSet) -> OpenSet {
        OpenSet(self.0 & other.0)
    }

    pub fn difference(self, other: OpenSet) -> OpenSet {
        OpenSet(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Member indices, ascending.
    pub fn indices(self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    fn sort_key(self) -> (u32, u64) {
        (self.0.count_ones(), self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyViolation {
    #[error("the empty set is not open")]
    MissingEmpty,
    #[error("the whole point set is not open")]
    MissingWhole,
    #[error("union of {a:?} and {b:?} is not open")]
    NotClosedUnderUnion { a: Vec<String>, b: Vec<String> },
    #[error("intersection of {a:?} and {b:?} is not open")]
    NotClosedUnderIntersection { a: Vec<String>, b: Vec<String> },
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("{0} points exceed the supported maximum of 64")]
    TooManyPoints(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTopology {
    points: Vec<String>,
    opens: Vec<OpenSet>,
}

fn check_points(points: &[String]) -> Result<(), TopologyViolation> {
    if points.len() > MAX_POINTS {
        return Err(TopologyViolation::TooManyPoints(points.len()));
    }
    let mut seen = BTreeSet::new();
    for p in points {
        if !seen.insert(p.as_str()) {
            return Err(TopologyViolation::DuplicatePoint(p.clone()));
        }
    }
    Ok(())
}

fn sorted(set: BTreeSet<OpenSet>) -> Vec<OpenSet> {
    let mut v: Vec<OpenSet> = set.into_iter().collect();
    v.sort_by_key(|s| s.sort_key());
    v
}

impl FiniteTopology {
    /// Validates a candidate family given as lists of point labels.
    pub fn validate<S: AsRef<str>>(
        points: Vec<String>,
        candidate_opens: &[Vec<S>],
    ) -> Result<Self, TopologyViolation> {
        check_points(&points)?;
        let masks = candidate_opens
            .iter()
            .map(|set| subset_mask(&points, set))
            .collect::<Result<Vec<_>, _>>()?;
        Self::validate_masks(points, masks)
    }

    pub fn validate_masks(
        points: Vec<String>,
        candidate_opens: Vec<OpenSet>,
    ) -> Result<Self, TopologyViolation> {
        check_points(&points)?;
        let whole = OpenSet::full(points.len());
        if let Some(bad) = candidate_opens.iter().find(|s| !s.is_subset_of(whole)) {
            let extra = bad.difference(whole).indices()[0];
            return Err(TopologyViolation::UnknownPoint(format!("#{extra}")));
        }
        let set: BTreeSet<OpenSet> = candidate_opens.into_iter().collect();
        let opens = sorted(set.clone());
        let t = FiniteTopology { points, opens };
        if !set.contains(&OpenSet::EMPTY) {
            return Err(TopologyViolation::MissingEmpty);
        }
        if !set.contains(&whole) {
            return Err(TopologyViolation::MissingWhole);
        }
        for (i, &a) in t.opens.iter().enumerate() {
            for &b in &t.opens[i + 1..] {
                if !set.contains(&a.union(b)) {
                    return Err(TopologyViolation::NotClosedUnderUnion {
                        a: t.labels(a),
                        b: t.labels(b),
                    });
                }
            }
        }
        for (i, &a) in t.opens.iter().enumerate() {
            for &b in &t.opens[i + 1..] {
                if !set.contains(&a.intersection(b)) {
                    return Err(TopologyViolation::NotClosedUnderIntersection {
                        a: t.labels(a),
                        b: t.labels(b),
                    });
                }
            }
        }
        Ok(t)
    }

    /// Smallest topology containing every basis set.
    pub fn generate_from_basis<S: AsRef<str>>(
        points: Vec<String>,
        basis: &[Vec<S>],
    ) -> Result<Self, TopologyViolation> {
        check_points(&points)?;
        let masks = basis
            .iter()
            .map(|set| subset_mask(&points, set))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::generate_from_masks(points, &masks))
    }

    pub fn generate_from_masks(points: Vec<String>, basis: &[OpenSet]) -> Self {
        let whole = OpenSet::full(points.len());
        let mut set: BTreeSet<OpenSet> = [OpenSet::EMPTY, whole].into_iter().collect();
        set.extend(basis.iter().map(|s| s.intersection(whole)));
        // Finite intersections first, then arbitrary unions of those.
        loop {
            let current: Vec<OpenSet> = set.iter().copied().collect();
            let before = set.len();
            for (i, &a) in current.iter().enumerate() {
                for &b in &current[i + 1..] {
                    set.insert(a.intersection(b));
                }
            }
            if set.len() == before {
                break;
            }
        }
        loop {
            let current: Vec<OpenSet> = set.iter().copied().collect();
            let before = set.len();
            for (i, &a) in current.iter().enumerate() {
                for &b in &current[i + 1..] {
                    set.insert(a.union(b));
                }
            }
            if set.len() == before {
                break;
            }
        }
        FiniteTopology {
            points,
            opens: sorted(set),
        }
    }

    pub fn discrete(points: Vec<String>) -> Self {
        let singles: Vec<OpenSet> = (0..points.len()).map(OpenSet::singleton).collect();
        Self::generate_from_masks(points, &singles)
    }

    pub fn indiscrete(points: Vec<String>) -> Self {
        Self::generate_from_masks(points, &[])
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn opens(&self) -> &[OpenSet] {
        &self.opens
    }

    pub fn whole(&self) -> OpenSet {
        OpenSet::full(self.points.len())
    }

    pub fn is_open(&self, s: OpenSet) -> bool {
        self.opens.binary_search_by_key(&s.sort_key(), |o| o.sort_key()).is_ok()
    }

    pub fn is_discrete(&self) -> bool {
        self.points.len() < 64 && self.opens.len() == 1usize << self.points.len()
    }

    pub fn point_index(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn labels(&self, s: OpenSet) -> Vec<String> {
        s.indices()
            .into_iter()
            .filter_map(|i| self.points.get(i).cloned())
            .collect()
    }

    pub fn display(&self, s: OpenSet) -> String {
        format!("{{{}}}", self.labels(s).join(","))
    }

    pub fn open_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<OpenSet, TopologyViolation> {
        subset_mask(&self.points, labels)
    }

    /// Opens containing `label`, ordered by cardinality (a linear extension of inclusion).
    pub fn neighborhoods(&self, label: &str) -> Result<Vec<OpenSet>, TopologyViolation> {
        let i = self
            .point_index(label)
            .ok_or_else(|| TopologyViolation::UnknownPoint(label.to_string()))?;
        Ok(self.opens.iter().copied().filter(|o| o.contains(i)).collect())
    }

    /// Smallest open neighbourhood of a point.
    pub fn minimal_neighborhood(&self, label: &str) -> Result<OpenSet, TopologyViolation> {
        let nbhd = self.neighborhoods(label)?;
        Ok(nbhd
            .iter()
            .copied()
            .fold(self.whole(), |acc, s| acc.intersection(s)))
    }

    pub fn to_record(&self) -> TopologyRecord {
        TopologyRecord {
            points: self.points.clone(),
            opens: self.opens.iter().map(|&o| self.labels(o)).collect(),
        }
    }
}

fn subset_mask<S: AsRef<str>>(points: &[String], labels: &[S]) -> Result<OpenSet, TopologyViolation> {
    let mut mask = 0u64;
    for l in labels {
        let l = l.as_ref();
        let i = points
            .iter()
            .position(|p| p == l)
            .ok_or_else(|| TopologyViolation::UnknownPoint(l.to_string()))?;
        mask |= 1 << i;
    }
    Ok(OpenSet(mask))
}

/// A family of opens whose union is the whole space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenCover {
    members: Vec<OpenSet>,
}

impl OpenCover {
    pub fn new(topology: &FiniteTopology, members: Vec<OpenSet>) -> Result<Self, String> {
        if let Some(bad) = members.iter().find(|m| !topology.is_open(**m)) {
            return Err(format!("{} is not open", topology.display(*bad)));
        }
        let union = members.iter().fold(OpenSet::EMPTY, |a, &b| a.union(b));
        if union != topology.whole() {
            return Err(format!(
                "cover misses {}",
                topology.display(topology.whole().difference(union))
            ));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[OpenSet] {
        &self.members
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        self.members.iter().enumerate().all(|(i, a)| {
            self.members[i + 1..]
                .iter()
                .all(|b| a.intersection(*b).is_empty())
        })
    }
}

/// Label that may be written as a JSON string or integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointLabel {
    Text(String),
    Int(i64),
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::Text(s) => f.write_str(s),
            PointLabel::Int(i) => write!(f, "{i}"),
        }
    }
}

/// On-disk topology: `{"points": [...], "opens": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub points: Vec<PointLabel>,
    pub opens: Vec<Vec<PointLabel>>,
}

impl TopologyFile {
    pub fn validate(&self) -> Result<FiniteTopology, TopologyViolation> {
        let points = self.points.iter().map(|p| p.to_string()).collect();
        let opens: Vec<Vec<String>> = self
            .opens
            .iter()
            .map(|o| o.iter().map(|p| p.to_string()).collect())
            .collect();
        FiniteTopology::validate(points, &opens)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRecord {
    pub points: Vec<String>,
    pub opens: Vec<Vec<String>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn all_subsets(n: usize) -> Vec<Vec<String>> {
        (0..1u64 << n)
            .map(|m| OpenSet(m).indices().iter().map(|i| (i + 1).to_string()).collect())
            .collect()
    }

    #[test]
    fn discrete_three_points_is_valid() {
        let t = FiniteTopology::validate(pts(3), &all_subsets(3)).unwrap();
        assert_eq!(t.opens().len(), 8);
        assert!(t.is_discrete());
    }

    #[test]
    fn missing_whole_reported() {
        let cand: Vec<Vec<&str>> = vec![vec![], vec!["1"]];
        assert_eq!(
            FiniteTopology::validate(pts(2), &cand),
            Err(TopologyViolation::MissingWhole)
        );
    }

    #[test]
    fn missing_empty_reported_first() {
        let cand: Vec<Vec<&str>> = vec![vec!["1"]];
        assert_eq!(
            FiniteTopology::validate(pts(2), &cand),
            Err(TopologyViolation::MissingEmpty)
        );
    }

    #[test]
    fn sierpinski_is_valid() {
        let cand: Vec<Vec<&str>> = vec![vec![], vec!["1"], vec!["1", "2"]];
        let t = FiniteTopology::validate(pts(2), &cand).unwrap();
        assert_eq!(t.opens().len(), 3);
    }

    #[test]
    fn union_and_intersection_witnesses() {
        let cand: Vec<Vec<&str>> = vec![vec![], vec!["1"], vec!["2"], vec!["1", "2", "3"]];
        match FiniteTopology::validate(pts(3), &cand) {
            Err(TopologyViolation::NotClosedUnderUnion { a, b }) => {
                assert_eq!((a, b), (vec!["1".to_string()], vec!["2".to_string()]));
            }
            other => panic!("unexpected {other:?}"),
        }
        let cand: Vec<Vec<&str>> = vec![vec![], vec!["1", "2"], vec!["2", "3"], vec!["1", "2", "3"]];
        assert!(matches!(
            FiniteTopology::validate(pts(3), &cand),
            Err(TopologyViolation::NotClosedUnderIntersection { .. })
        ));
    }

    #[test]
    fn unknown_point_rejected() {
        let cand: Vec<Vec<&str>> = vec![vec![], vec!["9"]];
        assert!(matches!(
            FiniteTopology::validate(pts(2), &cand),
            Err(TopologyViolation::UnknownPoint(_))
        ));
    }

    #[test]
    fn basis_generation_examples() {
        let singles: Vec<Vec<String>> = (1..=3).map(|i| vec![i.to_string()]).collect();
        assert_eq!(FiniteTopology::generate_from_basis(pts(3), &singles).unwrap().opens().len(), 8);

        let none: Vec<Vec<String>> = vec![];
        let t = FiniteTopology::generate_from_basis(pts(3), &none).unwrap();
        assert_eq!(t.opens(), &[OpenSet::EMPTY, OpenSet::full(3)]);

        let basis = vec![vec!["1"], vec!["1", "2"]];
        let t = FiniteTopology::generate_from_basis(pts(3), &basis).unwrap();
        let expected: Vec<OpenSet> = [0b000, 0b001, 0b011, 0b111].map(OpenSet).to_vec();
        assert_eq!(t.opens(), expected.as_slice());
    }

    #[test]
    fn neighborhoods_examples() {
        let t = FiniteTopology::discrete(pts(3));
        let n: Vec<Vec<String>> = t.neighborhoods("1").unwrap().iter().map(|&o| t.labels(o)).collect();
        assert_eq!(n, vec![vec!["1"], vec!["1", "2"], vec!["1", "3"], vec!["1", "2", "3"]]);

        let t = FiniteTopology::indiscrete(pts(3));
        assert_eq!(t.neighborhoods("2").unwrap(), vec![OpenSet::full(3)]);

        let cand: Vec<Vec<&str>> = vec![vec![], vec!["1"], vec!["1", "2"]];
        let t = FiniteTopology::validate(pts(2), &cand).unwrap();
        assert_eq!(t.neighborhoods("2").unwrap(), vec![OpenSet(0b11)]);
        assert!(t.neighborhoods("7").is_err());
    }

    #[test]
    fn cover_must_reach_every_point() {
        let t = FiniteTopology::discrete(pts(3));
        assert!(OpenCover::new(&t, vec![OpenSet(0b001), OpenSet(0b010)]).is_err());
        let c = OpenCover::new(&t, vec![OpenSet(0b011), OpenSet(0b110)]).unwrap();
        assert!(!c.is_pairwise_disjoint());
    }

    #[test]
    fn topology_file_accepts_integer_labels() {
        let json = r#"{"points": [1, 2], "opens": [[], [1], [1, 2]]}"#;
        let f: TopologyFile = serde_json::from_str(json).unwrap();
        assert_eq!(f.validate().unwrap().opens().len(), 3);
    }
}
