//! Discrete α-monotone paths, path products and α-homotopy grids.
//!
//! All verdicts are over finite grids. A grid row `j` is the path
//! `t ↦ F(s_j, t)`; the columns `t = 0` and `t = 1` are the two compared
//! paths `f₀`, `f₁`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlation::{von_neumann_entropy, Bipartition, Functional};
use crate::error::{Error, Result};
use crate::matcore::{HermitianOp, MatrixRecord};
use crate::states::{DensityOperator, StateRecord};

/// Slack allowed in a non-increasing scan.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Trace distance under which two state points are equal.
pub const POINT_TOL: f64 = 1e-9;
/// Spread under which a row of α values counts as constant.
pub const CONSTANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum PathPoint {
    State(DensityOperator),
    Label(String),
}

impl PathPoint {
    pub fn label(s: impl Into<String>) -> Self {
        PathPoint::Label(s.into())
    }

    /// States compare by trace distance, labels by equality.
    pub fn same_as(&self, other: &PathPoint) -> bool {
        match (self, other) {
            (PathPoint::Label(a), PathPoint::Label(b)) => a == b,
            (PathPoint::State(a), PathPoint::State(b)) => a.dim() == b.dim() && a.trace_distance(b) <= POINT_TOL,
            _ => false,
        }
    }

    fn describe(&self) -> String {
        match self {
            PathPoint::Label(l) => format!("`{l}`"),
            PathPoint::State(r) => format!("state of dimension {}", r.dim()),
        }
    }
}

/// The map `α: X → ℝ`.
#[derive(Debug, Clone)]
pub enum Alpha {
    /// `tr(ρH)`.
    Energy(HermitianOp),
    /// Von Neumann entropy.
    Entropy,
    Correlation(Functional, Bipartition),
    /// Values of labeled points.
    Table(BTreeMap<String, f64>),
}

impl Alpha {
    pub fn name(&self) -> String {
        match self {
            Alpha::Energy(_) => "energy".into(),
            Alpha::Entropy => "entropy".into(),
            Alpha::Correlation(f, _) => f.name().into(),
            Alpha::Table(_) => "table".into(),
        }
    }

    pub fn eval(&self, p: &PathPoint) -> Result<f64> {
        match (self, p) {
            (Alpha::Table(t), PathPoint::Label(l)) => t
                .get(l)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("no α value for point `{l}`"))),
            (Alpha::Energy(h), PathPoint::State(rho)) => {
                if h.dim() != rho.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: h.dim(),
                        actual: rho.dim(),
                    });
                }
                Ok(rho.expectation(h.matrix()))
            }
            (Alpha::Entropy, PathPoint::State(rho)) => Ok(von_neumann_entropy(rho)),
            (Alpha::Correlation(f, cut), PathPoint::State(rho)) => f.evaluate(rho, cut),
            (a, p) => Err(Error::Invalid(format!("α `{}` cannot evaluate a {}", a.name(), p.describe()))),
        }
    }
}

/// Points `p₀…p_m` at parameters `0 = t₀ < … < t_m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    params: Vec<f64>,
    points: Vec<PathPoint>,
}

impl DiscretePath {
    pub fn new(params: Vec<f64>, points: Vec<PathPoint>) -> Result<Self> {
        if params.len() != points.len() || params.len() < 2 {
            return Err(Error::Invalid(format!(
                "a path needs at least two points with one parameter each ({} params, {} points)",
                params.len(),
                points.len()
            )));
        }
        if params[0] != 0.0 || params[params.len() - 1] != 1.0 {
            return Err(Error::Invalid("path parameters must run from 0 to 1".into()));
        }
        if params.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
            return Err(Error::Invalid("path parameters must be strictly increasing".into()));
        }
        Ok(Self { params, points })
    }

    /// Equally spaced parameters.
    pub fn uniform(points: Vec<PathPoint>) -> Result<Self> {
        let m = points.len().saturating_sub(1).max(1) as f64;
        let params = (0..points.len()).map(|k| k as f64 / m).collect();
        Self::new(params, points)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn start(&self) -> &PathPoint {
        &self.points[0]
    }

    pub fn end(&self) -> &PathPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn alpha_values(&self, alpha: &Alpha) -> Result<Vec<f64>> {
        self.points.iter().map(|p| alpha.eval(p)).collect()
    }

    /// Traversal in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self {
            params: self.params.iter().rev().map(|t| 1.0 - t).collect(),
            points: self.points.iter().rev().cloned().collect(),
        }
    }

    /// `f` on `[0, ½]`, `g` on `[½, 1]`, with the shared junction kept once.
    pub fn concat(&self, g: &DiscretePath) -> Result<DiscretePath> {
        if !self.end().same_as(g.start()) {
            return Err(Error::EndpointMismatch(format!(
                "f(1) is {} but g(0) is {}",
                self.end().describe(),
                g.start().describe()
            )));
        }
        let mut params: Vec<f64> = self.params.iter().map(|t| t / 2.0).collect();
        let mut points = self.points.clone();
        params.extend(g.params[1..].iter().map(|t| 0.5 + t / 2.0));
        points.extend(g.points[1..].iter().cloned());
        DiscretePath::new(params, points)
    }

    /// Same point sequence, parameters ignored.
    pub fn same_trace(&self, other: &DiscretePath) -> bool {
        self.len() == other.len() && self.points.iter().zip(&other.points).all(|(a, b)| a.same_as(b))
    }
}

/// First index `k` with `values[k] > values[k−1] + slack`.
pub fn first_increase(values: &[f64]) -> Option<usize> {
    (1..values.len()).find(|&k| values[k] > values[k - 1] + MONOTONE_SLACK)
}

/// A path that passed its monotone check, or the empty image.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaPath {
    Path(DiscretePath),
    Empty,
}

impl AlphaPath {
    pub fn is_empty(&self) -> bool {
        matches!(self, AlphaPath::Empty)
    }

    pub fn path(&self) -> Option<&DiscretePath> {
        match self {
            AlphaPath::Path(p) => Some(p),
            AlphaPath::Empty => None,
        }
    }
}

/// `p` if `α` is non-increasing along it, otherwise the empty path.
pub fn tilde_path(p: &DiscretePath, alpha: &Alpha) -> Result<AlphaPath> {
    let values = p.alpha_values(alpha)?;
    Ok(match first_increase(&values) {
        None => AlphaPath::Path(p.clone()),
        Some(_) => AlphaPath::Empty,
    })
}

/// Monotone-checked concatenation. The empty path absorbs.
pub fn path_product(f: &AlphaPath, g: &AlphaPath, alpha: &Alpha) -> Result<AlphaPath> {
    let (AlphaPath::Path(f), AlphaPath::Path(g)) = (f, g) else {
        return Ok(AlphaPath::Empty);
    };
    tilde_path(&f.concat(g)?, alpha)
}

/// Product of loops at a shared basepoint.
pub fn loop_product(f: &AlphaPath, g: &AlphaPath, alpha: &Alpha) -> Result<AlphaPath> {
    for p in [f, g].into_iter().filter_map(AlphaPath::path) {
        if !p.start().same_as(p.end()) {
            return Err(Error::EndpointMismatch(format!(
                "loop starts at {} but ends at {}",
                p.start().describe(),
                p.end().describe()
            )));
        }
    }
    if let (AlphaPath::Path(a), AlphaPath::Path(b)) = (f, g) {
        if !a.start().same_as(b.start()) {
            return Err(Error::EndpointMismatch("loops have different basepoints".into()));
        }
    }
    path_product(f, g, alpha)
}

/// `F(s_j, t_k)` stored as `points[j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyGrid {
    s: Vec<f64>,
    t: Vec<f64>,
    points: Vec<Vec<PathPoint>>,
}

fn check_params(v: &[f64], name: &str) -> Result<()> {
    if v.len() < 2 || v[0] != 0.0 || v[v.len() - 1] != 1.0 || v.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
        return Err(Error::Invalid(format!("{name} grid must increase strictly from 0 to 1")));
    }
    Ok(())
}

impl HomotopyGrid {
    pub fn new(s: Vec<f64>, t: Vec<f64>, points: Vec<Vec<PathPoint>>) -> Result<Self> {
        check_params(&s, "s")?;
        check_params(&t, "t")?;
        if points.len() != s.len() || points.iter().any(|row| row.len() != t.len()) {
            return Err(Error::ShapeMismatch(format!(
                "grid needs {}x{} points",
                s.len(),
                t.len()
            )));
        }
        Ok(Self { s, t, points })
    }

    /// Equally spaced `s` and `t`.
    pub fn uniform(points: Vec<Vec<PathPoint>>) -> Result<Self> {
        let grid = |n: usize| (0..n).map(|k| k as f64 / (n.max(2) - 1) as f64).collect::<Vec<_>>();
        let s = grid(points.len());
        let t = grid(points.first().map_or(0, Vec::len));
        Self::new(s, t, points)
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn point(&self, j: usize, k: usize) -> &PathPoint {
        &self.points[j][k]
    }

    pub fn rows(&self) -> usize {
        self.s.len()
    }

    pub fn cols(&self) -> usize {
        self.t.len()
    }

    /// Column `k` as a path in `s`.
    pub fn column(&self, k: usize) -> DiscretePath {
        DiscretePath::new(self.s.clone(), self.points.iter().map(|row| row[k].clone()).collect()).expect("validated grid")
    }

    /// `f₀ = F(·, 0)`.
    pub fn source(&self) -> DiscretePath {
        self.column(0)
    }

    /// `f₁ = F(·, 1)`.
    pub fn target(&self) -> DiscretePath {
        self.column(self.cols() - 1)
    }

    /// `H(s, t) = F(s, 1 − t)`.
    pub fn time_reversed(&self) -> Self {
        Self {
            s: self.s.clone(),
            t: self.t.iter().rev().map(|t| 1.0 - t).collect(),
            points: self.points.iter().map(|row| row.iter().rev().cloned().collect()).collect(),
        }
    }

    /// `F(s, 2t)` on `[0, ½]` then `H(s, 2t − 1)`.
    pub fn stitch(&self, next: &HomotopyGrid) -> Result<Self> {
        if self.s != next.s {
            return Err(Error::ShapeMismatch("stitched grids need the same s grid".into()));
        }
        let last = self.cols() - 1;
        for j in 0..self.rows() {
            if !self.points[j][last].same_as(&next.points[j][0]) {
                return Err(Error::EndpointMismatch(format!("row {j}: F(s, 1) differs from H(s, 0)")));
            }
        }
        let mut t: Vec<f64> = self.t.iter().map(|t| t / 2.0).collect();
        t.extend(next.t[1..].iter().map(|t| 0.5 + t / 2.0));
        let points = self
            .points
            .iter()
            .zip(&next.points)
            .map(|(a, b)| a.iter().cloned().chain(b[1..].iter().cloned()).collect())
            .collect();
        Self::new(self.s.clone(), t, points)
    }

    fn alpha_values(&self, alpha: &Alpha) -> Result<Vec<Vec<f64>>> {
        self.points
            .iter()
            .map(|row| row.iter().map(|p| alpha.eval(p)).collect())
            .collect()
    }
}

/// Outcome of the per-row monotone scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyReport {
    pub is_homotopy: bool,
    /// `(j, k)`: first row `j` and step `k` where α increases.
    pub witness: Option<(usize, usize)>,
    pub max_row_spread: f64,
    pub verdict_scope: &'static str,
}

fn check_boundaries(g: &HomotopyGrid, f0: &DiscretePath, f1: &DiscretePath) -> Result<()> {
    if f0.params() != g.s() || f1.params() != g.s() {
        return Err(Error::EndpointMismatch("paths and grid use different s parameters".into()));
    }
    let last = g.cols() - 1;
    for j in 0..g.rows() {
        if !g.point(j, 0).same_as(&f0.points()[j]) {
            return Err(Error::EndpointMismatch(format!("F(s_{j}, 0) differs from f0(s_{j})")));
        }
        if !g.point(j, last).same_as(&f1.points()[j]) {
            return Err(Error::EndpointMismatch(format!("F(s_{j}, 1) differs from f1(s_{j})")));
        }
    }
    let top = g.rows() - 1;
    for k in 0..g.cols() {
        if !g.point(0, k).same_as(f0.start()) {
            return Err(Error::EndpointMismatch(format!("F(0, t_{k}) differs from f0(0)")));
        }
        if !g.point(top, k).same_as(f1.end()) {
            return Err(Error::EndpointMismatch(format!("F(1, t_{k}) differs from f1(1)")));
        }
    }
    Ok(())
}

/// Checks the boundary conditions, then that α is non-increasing in `t` on
/// every row. The witness is the lexicographically first violation.
pub fn is_alpha_homotopy(g: &HomotopyGrid, f0: &DiscretePath, f1: &DiscretePath, alpha: &Alpha) -> Result<HomotopyReport> {
    check_boundaries(g, f0, f1)?;
    let values = g.alpha_values(alpha)?;
    let witness = values
        .iter()
        .enumerate()
        .find_map(|(j, row)| first_increase(row).map(|k| (j, k)));
    let max_row_spread = values
        .iter()
        .map(|row| {
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max);
    Ok(HomotopyReport {
        is_homotopy: witness.is_none(),
        witness,
        max_row_spread,
        verdict_scope: "discrete",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    TwoWay,
    OneWayOnly,
    Neither,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equivalence::TwoWay => "two_way",
            Equivalence::OneWayOnly => "one_way_only",
            Equivalence::Neither => "neither",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub verdict: Equivalence,
    pub homotopy: HomotopyReport,
}

/// `TwoWay` when the grid is an α-homotopy with every row constant,
/// `OneWayOnly` when it is one but some row varies, `Neither` otherwise.
pub fn equivalence_check(g: &HomotopyGrid, f0: &DiscretePath, f1: &DiscretePath, alpha: &Alpha) -> Result<EquivalenceReport> {
    let homotopy = is_alpha_homotopy(g, f0, f1, alpha)?;
    let verdict = if !homotopy.is_homotopy {
        Equivalence::Neither
    } else if homotopy.max_row_spread <= CONSTANT_TOL {
        Equivalence::TwoWay
    } else {
        Equivalence::OneWayOnly
    };
    Ok(EquivalenceReport { verdict, homotopy })
}

/// Reference to a grid point in a grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Label { label: String },
    StateFile { state: String },
    Inline { density: StateRecord },
}

/// Grid file: parameters, point references and what `α` needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    #[serde(default)]
    pub s: Option<Vec<f64>>,
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    pub points: Vec<Vec<PointRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixRecord>,
}

impl GridFile {
    /// State paths resolve relative to `base`.
    pub fn to_grid(&self, base: &Path) -> Result<HomotopyGrid> {
        let points = self
            .points
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| match r {
                        PointRef::Label { label } => Ok(PathPoint::Label(label.clone())),
                        PointRef::Inline { density } => Ok(PathPoint::State(density.to_density()?)),
                        PointRef::StateFile { state } => {
                            let text = std::fs::read_to_string(base.join(state))?;
                            let rec: StateRecord = serde_json::from_str(&text)?;
                            Ok(PathPoint::State(rec.to_density()?))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        match (&self.s, &self.t) {
            (Some(s), Some(t)) => HomotopyGrid::new(s.clone(), t.clone(), points),
            (None, None) => HomotopyGrid::uniform(points),
            _ => Err(Error::Invalid("give both s and t or neither".into())),
        }
    }

    /// `energy`, `entropy`, `table` or a correlation functional across the two-qubit cut.
    pub fn alpha(&self, name: &str) -> Result<Alpha> {
        match name {
            "table" => self
                .values
                .clone()
                .map(Alpha::Table)
                .ok_or_else(|| Error::Invalid("functional `table` needs a `values` map".into())),
            "energy" => {
                let h = self
                    .hamiltonian
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("functional `energy` needs a `hamiltonian`".into()))?;
                Ok(Alpha::Energy(HermitianOp::new(h.to_matrix()?)?))
            }
            "entropy" => Ok(Alpha::Entropy),
            other => {
                let f: Functional = other.parse()?;
                Ok(Alpha::Correlation(f, Bipartition::qubits()))
            }
        }
    }
}
