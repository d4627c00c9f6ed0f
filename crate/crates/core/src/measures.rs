//! Finite discrete measures, functions on their support, pushforward
//! distributions on ℝ and quadrature approximations of continuous ones.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Tolerance on the total mass of a probability measure.
pub const PROBABILITY_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a pushforward distribution.
pub const DIST_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("point {0} appears more than once")]
    DuplicatePoint(PointId),
    #[error("weight {weight} at point {id} is not finite")]
    NonFiniteWeight { id: PointId, weight: f64 },
    #[error("negative weight {weight} at point {id} in a probability measure")]
    NegativeWeight { id: PointId, weight: f64 },
    #[error("weights sum to {0}, not 1")]
    NotProbability(f64),
    #[error("measure has no atoms")]
    Empty,
    #[error("no function value for point {0}")]
    MissingValue(PointId),
    #[error("measures live on different universes ({0} vs {1})")]
    MismatchedUniverse(String, String),
    #[error("quadrature order must be at least 2, got {0}")]
    BadOrder(usize),
    #[error("invalid distribution family parameters: {0}")]
    BadFamily(String),
    #[error("invalid point {x} with weight {weight}")]
    BadPoint { x: f64, weight: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

/// Opaque label of a point of the underlying space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointId(pub String);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PointId {
    fn from(s: &str) -> Self {
        PointId(s.to_string())
    }
}

impl From<String> for PointId {
    fn from(s: String) -> Self {
        PointId(s)
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i.to_string())
    }
}

/// A finite signed measure given by its atoms.
///
/// The universe is only a tag: two measures can be compared when they carry
/// the same tag, and only the atoms actually present are stored. Atoms keep
/// their insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    universe: String,
    atoms: Vec<(PointId, f64)>,
    index: HashMap<PointId, usize>,
}

impl DiscreteMeasure {
    /// A finite signed measure. Weights must be finite and ids distinct.
    pub fn new<I, P>(universe: &str, atoms: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (P, f64)>,
        P: Into<PointId>,
    {
        let mut out = DiscreteMeasure {
            universe: universe.to_string(),
            atoms: Vec::new(),
            index: HashMap::new(),
        };
        for (id, w) in atoms {
            let id = id.into();
            if !w.is_finite() {
                return Err(MeasureError::NonFiniteWeight { id, weight: w });
            }
            if out.index.contains_key(&id) {
                return Err(MeasureError::DuplicatePoint(id));
            }
            out.index.insert(id.clone(), out.atoms.len());
            out.atoms.push((id, w));
        }
        Ok(out)
    }

    /// A probability measure: non-negative weights summing to one.
    pub fn probability<I, P>(universe: &str, atoms: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (P, f64)>,
        P: Into<PointId>,
    {
        let m = Self::new(universe, atoms)?;
        m.validate_probability()?;
        Ok(m)
    }

    /// Probability measure on points `0..weights.len()`.
    pub fn from_weights(universe: &str, weights: &[f64]) -> Result<Self, MeasureError> {
        Self::probability(universe, weights.iter().enumerate().map(|(i, &w)| (i, w)))
    }

    pub fn validate_probability(&self) -> Result<(), MeasureError> {
        if self.atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        if let Some((id, w)) = self.atoms.iter().find(|(_, w)| *w < 0.0) {
            return Err(MeasureError::NegativeWeight {
                id: id.clone(),
                weight: *w,
            });
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(MeasureError::NotProbability(total));
        }
        Ok(())
    }

    pub fn is_probability(&self) -> bool {
        self.validate_probability().is_ok()
    }

    pub fn universe(&self) -> &str {
        &self.universe
    }

    pub fn atoms(&self) -> &[(PointId, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Weight at `id`; zero for points without an atom.
    pub fn weight(&self, id: &PointId) -> f64 {
        self.index.get(id).map_or(0.0, |&i| self.atoms[i].1)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Ids with non-zero weight.
    pub fn support(&self) -> impl Iterator<Item = &PointId> {
        self.atoms.iter().filter(|(_, w)| *w != 0.0).map(|(p, _)| p)
    }

    /// `∫ g dμ`.
    pub fn integrate(&self, g: &FunctionOnSupport) -> Result<f64, MeasureError> {
        self.atoms.iter().try_fold(0.0, |acc, (id, w)| {
            if *w == 0.0 {
                return Ok(acc);
            }
            Ok(acc + w * g.value(id)?)
        })
    }

    pub fn check_same_universe(&self, other: &Self) -> Result<(), MeasureError> {
        if self.universe != other.universe {
            return Err(MeasureError::MismatchedUniverse(
                self.universe.clone(),
                other.universe.clone(),
            ));
        }
        Ok(())
    }

    /// Image of the measure under a relabelling `b`; atoms with the same
    /// image merge. The result lives on `universe`.
    pub fn coarsen<F>(&self, universe: &str, b: F) -> Self
    where
        F: Fn(&PointId) -> PointId,
    {
        let mut merged: Vec<(PointId, f64)> = Vec::new();
        let mut index: HashMap<PointId, usize> = HashMap::new();
        for (id, w) in &self.atoms {
            let to = b(id);
            match index.get(&to) {
                Some(&i) => merged[i].1 += w,
                None => {
                    index.insert(to.clone(), merged.len());
                    merged.push((to, *w));
                }
            }
        }
        DiscreteMeasure {
            universe: universe.to_string(),
            atoms: merged,
            index,
        }
    }

    /// `θ·self + (1−θ)·other` on the union of the two supports.
    pub fn mix(&self, theta: f64, other: &Self) -> Result<Self, MeasureError> {
        self.check_same_universe(other)?;
        let mut atoms: Vec<(PointId, f64)> = self
            .atoms
            .iter()
            .map(|(p, w)| (p.clone(), theta * w + (1.0 - theta) * other.weight(p)))
            .collect();
        for (p, w) in &other.atoms {
            if !self.index.contains_key(p) {
                atoms.push((p.clone(), (1.0 - theta) * w));
            }
        }
        Self::new(&self.universe, atoms)
    }
}

/// Real values indexed by point id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionOnSupport {
    values: HashMap<PointId, f64>,
}

impl FunctionOnSupport {
    pub fn new<I, P>(values: I) -> Self
    where
        I: IntoIterator<Item = (P, f64)>,
        P: Into<PointId>,
    {
        FunctionOnSupport {
            values: values.into_iter().map(|(p, v)| (p.into(), v)).collect(),
        }
    }

    /// Values on points `0..values.len()`.
    pub fn from_values(values: &[f64]) -> Self {
        Self::new(values.iter().enumerate().map(|(i, &v)| (i, v)))
    }

    pub fn value(&self, id: &PointId) -> Result<f64, MeasureError> {
        self.values
            .get(id)
            .copied()
            .ok_or_else(|| MeasureError::MissingValue(id.clone()))
    }

    pub fn get(&self, id: &PointId) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `x ↦ −g(x)`.
    pub fn negate(&self) -> Self {
        FunctionOnSupport {
            values: self.values.iter().map(|(p, v)| (p.clone(), -v)).collect(),
        }
    }
}

/// Distribution families approximated by Gaussian quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian { mean: f64, sd: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { a: f64, b: f64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian { mean, sd } => write!(f, "gaussian({mean},{sd})"),
            Family::Gamma { shape, scale } => write!(f, "gamma({shape},{scale})"),
            Family::Uniform { a, b } => write!(f, "uniform({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistSource {
    Discrete,
    Quadrature { family: Family, order: usize },
}

/// A finitely supported probability distribution on ℝ, stored with points
/// sorted increasingly and distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct PushforwardDist {
    points: Vec<(f64, f64)>,
    source: DistSource,
}

impl PushforwardDist {
    /// Builds a distribution from `(x, weight)` pairs. Equal `x` merge
    /// (exact equality); zero weights are dropped.
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MeasureError> {
        Self::with_source(points, DistSource::Discrete)
    }

    pub fn with_source(
        points: impl IntoIterator<Item = (f64, f64)>,
        source: DistSource,
    ) -> Result<Self, MeasureError> {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (x, w) in points {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(MeasureError::BadPoint { x, weight: w });
            }
            if w > 0.0 {
                pts.push((x, w));
            }
        }
        if pts.is_empty() {
            return Err(MeasureError::Empty);
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (x, w) in pts {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        let total: f64 = merged.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > DIST_TOL {
            return Err(MeasureError::NotProbability(total));
        }
        Ok(PushforwardDist {
            points: merged,
            source,
        })
    }

    /// Uniform distribution on the given values (repeats add weight).
    pub fn uniform(xs: &[f64]) -> Result<Self, MeasureError> {
        let w = 1.0 / xs.len().max(1) as f64;
        Self::new(xs.iter().map(|&x| (x, w)))
    }

    /// Point mass at `x`.
    pub fn point(x: f64) -> Result<Self, MeasureError> {
        Self::new([(x, 1.0)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn source(&self) -> &DistSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0].0
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|(x, w)| x * w).sum()
    }

    /// Variance, computed around the mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.points.iter().map(|(x, w)| w * (x - m) * (x - m)).sum()
    }

    pub fn is_point_mass(&self) -> bool {
        self.points.len() == 1
    }

    /// Distribution of `c·X + shift`.
    pub fn affine(&self, c: f64, shift: f64) -> Result<Self, MeasureError> {
        Self::with_source(
            self.points.iter().map(|&(x, w)| (c * x + shift, w)),
            self.source.clone(),
        )
    }

    /// SHA-256 of the bit patterns of the sorted `(x, weight)` pairs, as hex.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (x, w) in &self.points {
            h.update(x.to_bits().to_le_bytes());
            h.update(w.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Distribution of `g` under `nu`.
pub fn pushforward(
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
) -> Result<PushforwardDist, MeasureError> {
    nu.validate_probability()?;
    let pts = nu
        .atoms()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(id, w)| g.value(id).map(|x| (x, *w)))
        .collect::<Result<Vec<_>, _>>()?;
    PushforwardDist::new(pts)
}

/// `⟨μ, g⟩ − ⟨ν, g⟩`.
pub fn mean_deviation(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
) -> Result<f64, MeasureError> {
    mu.check_same_universe(nu)?;
    Ok(mu.integrate(g)? - nu.integrate(g)?)
}

/// Gauss quadrature rule for `family` with `order` nodes, as a probability
/// vector. Nodes and weights come from the eigen-decomposition of the
/// Jacobi matrix of the family's orthogonal polynomials.
pub fn quadrature_dist(family: Family, order: usize) -> Result<PushforwardDist, MeasureError> {
    if order < 2 {
        return Err(MeasureError::BadOrder(order));
    }
    let bad = |msg: &str| Err(MeasureError::BadFamily(format!("{family}: {msg}")));
    let n = order;
    // Recurrence coefficients (diagonal, off-diagonal) of the monic
    // orthogonal polynomials for the reference weight.
    let (diag, off): (Vec<f64>, Vec<f64>) = match family {
        Family::Gaussian { mean, sd } => {
            if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                return bad("need finite mean and sd > 0");
            }
            (vec![0.0; n], (1..n).map(|k| (k as f64).sqrt()).collect())
        }
        Family::Gamma { shape, scale } => {
            if !(shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0) {
                return bad("need shape > 0 and scale > 0");
            }
            let a = shape - 1.0;
            (
                (0..n).map(|i| 2.0 * i as f64 + a + 1.0).collect(),
                (1..n).map(|i| (i as f64 * (i as f64 + a)).sqrt()).collect(),
            )
        }
        Family::Uniform { a, b } => {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return bad("need finite a < b");
            }
            (
                vec![0.0; n],
                (1..n)
                    .map(|i| {
                        let i = i as f64;
                        i / (4.0 * i * i - 1.0).sqrt()
                    })
                    .collect(),
            )
        }
    };
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = diag[i];
        if i + 1 < n {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    let map = |x: f64| match family {
        Family::Gaussian { mean, sd } => mean + sd * x,
        Family::Gamma { scale, .. } => scale * x,
        Family::Uniform { a, b } => 0.5 * (a + b) + 0.5 * (b - a) * x,
    };
    PushforwardDist::with_source(
        raw.into_iter().map(|(x, w)| (map(x), w / total)),
        DistSource::Quadrature { family, order },
    )
}

#[derive(Debug, Deserialize)]
struct WeightRow {
    point_id: String,
    weight: f64,
}

#[derive(Debug, Deserialize)]
struct ValueRow {
    point_id: String,
    value: f64,
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Reads a measure from CSV with columns `point_id,weight`. With
/// `probability` set the result is validated as a probability measure.
pub fn read_measure_csv<R: Read>(
    r: R,
    universe: &str,
    probability: bool,
) -> Result<DiscreteMeasure, MeasureError> {
    let mut atoms = Vec::new();
    for row in csv_reader(r).deserialize::<WeightRow>() {
        let row = row.map_err(|e| MeasureError::Csv(e.to_string()))?;
        if row.weight.is_nan() {
            return Err(MeasureError::Csv(format!(
                "NaN weight at point {}",
                row.point_id
            )));
        }
        atoms.push((PointId(row.point_id), row.weight));
    }
    if probability {
        DiscreteMeasure::probability(universe, atoms)
    } else {
        DiscreteMeasure::new(universe, atoms)
    }
}

/// Reads a function from CSV with columns `point_id,value`.
pub fn read_function_csv<R: Read>(r: R) -> Result<FunctionOnSupport, MeasureError> {
    let mut values = HashMap::new();
    for row in csv_reader(r).deserialize::<ValueRow>() {
        let row = row.map_err(|e| MeasureError::Csv(e.to_string()))?;
        if !row.value.is_finite() {
            return Err(MeasureError::Csv(format!(
                "non-finite value at point {}",
                row.point_id
            )));
        }
        let id = PointId(row.point_id);
        if values.contains_key(&id) {
            return Err(MeasureError::DuplicatePoint(id));
        }
        values.insert(id, row.value);
    }
    Ok(FunctionOnSupport { values })
}

/// Identity function on a measure whose point ids are numbers.
pub fn numeric_ids(mu: &DiscreteMeasure) -> Result<FunctionOnSupport, MeasureError> {
    let mut values = HashMap::new();
    for (id, _) in mu.atoms() {
        let x: f64 =
            id.0.parse()
                .map_err(|_| MeasureError::Csv(format!("point id {id} is not a number")))?;
        if !x.is_finite() {
            return Err(MeasureError::Csv(format!("point id {id} is not finite")));
        }
        values.insert(id.clone(), x);
    }
    Ok(FunctionOnSupport { values })
}
