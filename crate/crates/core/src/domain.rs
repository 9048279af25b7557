//! Shared value types: paired instances, weighted examples, the bridge
//! between opaque and interpretable spaces, and the proximity kernel.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LimeadeError, Result};

/// Dense vector in the learner's own feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OpaqueVec(Vec<f64>);

impl OpaqueVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LimeadeError::Value(format!(
                "opaque vector entry {i} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &OpaqueVec) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Arithmetic mean of a non-empty set of vectors of equal dimension.
    pub fn mean<'a, I>(vecs: I) -> Result<OpaqueVec>
    where
        I: IntoIterator<Item = &'a OpaqueVec>,
    {
        let mut acc: Option<Vec<f64>> = None;
        let mut n = 0usize;
        for v in vecs {
            match acc.as_mut() {
                None => acc = Some(v.0.clone()),
                Some(a) => {
                    check_dim(a.len(), v.dim())?;
                    a.iter_mut().zip(&v.0).for_each(|(s, x)| *s += x);
                }
            }
            n += 1;
        }
        let mut acc = acc.ok_or(LimeadeError::EmptyPool)?;
        let n = n as f64;
        acc.iter_mut().for_each(|s| *s /= n);
        OpaqueVec::new(acc)
    }

    /// Bit pattern of the entries, usable as an exact hash key.
    pub fn bit_key(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }
}

impl TryFrom<Vec<f64>> for OpaqueVec {
    type Error = LimeadeError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        OpaqueVec::new(v)
    }
}

impl From<OpaqueVec> for Vec<f64> {
    fn from(v: OpaqueVec) -> Self {
        v.0
    }
}

/// Sparse nonnegative activations over the interpretable vocabulary.
///
/// Only strictly positive activations are stored, in ascending index order,
/// so feature `j` is present iff it has a stored entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpVec {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl InterpVec {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(values.len());
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(LimeadeError::Value(format!(
                    "activation {j} must be finite and nonnegative, got {v}"
                )));
            }
            if v > 0.0 {
                out.indices.push(j);
                out.values.push(v);
            }
        }
        Ok(out)
    }

    /// Builds from `(index, activation)` pairs in any order. Duplicate
    /// indices are summed; zero activations are dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        let mut out = Self::zeros(dim);
        for (j, v) in pairs {
            if j >= dim {
                return Err(LimeadeError::Shape {
                    expected: dim,
                    got: j + 1,
                });
            }
            if !v.is_finite() || v < 0.0 {
                return Err(LimeadeError::Value(format!(
                    "activation {j} must be finite and nonnegative, got {v}"
                )));
            }
            if out.indices.last() == Some(&j) {
                *out.values.last_mut().unwrap() += v;
            } else if v > 0.0 {
                out.indices.push(j);
                out.values.push(v);
            }
        }
        Ok(out)
    }

    /// Binary indicator vector over the given feature set.
    pub fn indicator(dim: usize, features: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: HashSet<usize> = features.into_iter().collect();
        Self::from_pairs(dim, set.into_iter().map(|j| (j, 1.0)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize) -> f64 {
        match self.indices.binary_search(&j) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn is_present(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices of present features, ascending.
    pub fn present(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }

    pub fn dot(&self, other: &InterpVec) -> f64 {
        let (mut i, mut k, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && k < other.indices.len() {
            match self.indices[i].cmp(&other.indices[k]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => k += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[k];
                    i += 1;
                    k += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Elementwise product with a binary mask of length `dim`.
    pub fn masked(&self, mask: &[bool]) -> Result<InterpVec> {
        check_dim(self.dim, mask.len())?;
        let mut out = Self::zeros(self.dim);
        for (j, v) in self.iter() {
            if mask[j] {
                out.indices.push(j);
                out.values.push(v);
            }
        }
        Ok(out)
    }

    /// Arithmetic mean of a non-empty set of vectors.
    pub fn mean<'a, I>(vecs: I) -> Result<InterpVec>
    where
        I: IntoIterator<Item = &'a InterpVec>,
    {
        let mut dim = None;
        let mut n = 0usize;
        let mut acc: Vec<f64> = Vec::new();
        for v in vecs {
            match dim {
                None => {
                    dim = Some(v.dim);
                    acc = vec![0.0; v.dim];
                }
                Some(d) => check_dim(d, v.dim)?,
            }
            for (j, a) in v.iter() {
                acc[j] += a;
            }
            n += 1;
        }
        if n == 0 {
            return Err(LimeadeError::EmptyPool);
        }
        let n = n as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Self::from_dense(&acc)
    }
}

/// Training label / advice polarity in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Sign of a score; zero maps to `Positive`.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = LimeadeError;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(LimeadeError::Value(format!(
                "label must be -1 or +1, got {other}"
            ))),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "-1",
            Label::Positive => "+1",
        })
    }
}

/// A training triple `(x, y, w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedExample {
    pub x: OpaqueVec,
    pub y: Label,
    w: f64,
}

impl WeightedExample {
    pub fn new(x: OpaqueVec, y: Label, w: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(LimeadeError::Value(format!(
                "example weight must be positive and finite, got {w}"
            )));
        }
        Ok(Self { x, y, w })
    }

    pub fn unit(x: OpaqueVec, y: Label) -> Self {
        Self { x, y, w: 1.0 }
    }

    pub fn weight(&self) -> f64 {
        self.w
    }
}

/// One item in both representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    id: String,
    x: OpaqueVec,
    x_interp: InterpVec,
}

impl Instance {
    /// Pairs `x` with `x_interp`, rejecting the pair unless the bridge maps
    /// `x` to exactly `x_interp`.
    pub fn new(
        id: impl Into<String>,
        x: OpaqueVec,
        x_interp: InterpVec,
        bridge: &dyn DomainBridge,
    ) -> Result<Self> {
        let id = id.into();
        let mapped = bridge.h_prime(&x)?;
        if mapped != x_interp {
            return Err(LimeadeError::InvalidInstance(format!(
                "interpretable vector of {id} does not match the bridge mapping"
            )));
        }
        Ok(Self { id, x, x_interp })
    }

    /// Builds an instance whose pairing is correct by construction. Intended
    /// for bridge implementations that derive both sides from one source.
    pub fn paired(id: impl Into<String>, x: OpaqueVec, x_interp: InterpVec) -> Self {
        Self {
            id: id.into(),
            x,
            x_interp,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn x(&self) -> &OpaqueVec {
        &self.x
    }

    pub fn interp(&self) -> &InterpVec {
        &self.x_interp
    }
}

/// Labeled set plus unlabeled pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    labeled: Vec<WeightedExample>,
    pool: Vec<Instance>,
}

impl Dataset {
    pub fn new(labeled: Vec<WeightedExample>, pool: Vec<Instance>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pool.len());
        for inst in &pool {
            if !seen.insert(inst.id()) {
                return Err(LimeadeError::InvalidInstance(format!(
                    "duplicate pool id {}",
                    inst.id()
                )));
            }
        }
        Ok(Self { labeled, pool })
    }

    pub fn labeled(&self) -> &[WeightedExample] {
        &self.labeled
    }

    pub fn pool(&self) -> &[Instance] {
        &self.pool
    }

    pub fn extend_labeled(&mut self, examples: impl IntoIterator<Item = WeightedExample>) {
        self.labeled.extend(examples);
    }
}

/// Gaussian proximity kernel over interpretable distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximityKernel {
    sigma: f64,
}

impl ProximityKernel {
    pub const DEFAULT_SIGMA: f64 = 0.75;

    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(LimeadeError::Value(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for ProximityKernel {
    fn default() -> Self {
        Self {
            sigma: Self::DEFAULT_SIGMA,
        }
    }
}

/// `exp(-d^2 / sigma^2)`.
pub fn kernel_weight(d: f64, kernel: &ProximityKernel) -> f64 {
    (-(d * d) / (kernel.sigma * kernel.sigma)).exp()
}

/// Cosine distance between interpretable vectors.
///
/// Returns 1 when exactly one side is zero and fails when both are.
pub fn interp_distance(a: &InterpVec, b: &InterpVec) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let (sa, sb) = (a.dot(a), b.dot(b));
    match (sa > 0.0, sb > 0.0) {
        (false, false) => Err(LimeadeError::DegenerateDistance),
        (true, true) if a == b => Ok(0.0),
        (true, true) => Ok((1.0 - a.dot(b) / (sa * sb).sqrt()).clamp(0.0, 1.0)),
        _ => Ok(1.0),
    }
}

/// Cosine similarity of dense vectors; 0 if either is zero.
pub fn cosine_similarity(a: &OpaqueVec, b: &OpaqueVec) -> Result<f64> {
    let dot = a.dot(b)?;
    let denom = a.norm() * b.norm();
    Ok(if denom > 0.0 { dot / denom } else { 0.0 })
}

/// Connects a domain's opaque representation to its interpretable one.
pub trait DomainBridge: Send + Sync {
    /// Size of the interpretable vocabulary.
    fn interp_dim(&self) -> usize;

    /// The interpretable mapping `h'`. Must be deterministic.
    fn h_prime(&self, x: &OpaqueVec) -> Result<InterpVec>;

    /// Opaque vector of `base` with the interpretable features outside
    /// `mask` removed. The all-ones mask must reproduce `base.x()` exactly.
    fn realize(&self, base: &Instance, mask: &[bool]) -> Result<OpaqueVec>;

    fn opaque_similarity(&self, a: &OpaqueVec, b: &OpaqueVec) -> Result<f64> {
        cosine_similarity(a, b)
    }

    /// Realizes a mask and pairs the result with its interpretable vector.
    fn realize_instance(&self, base: &Instance, mask: &[bool], id: String) -> Result<Instance> {
        let x = self.realize(base, mask)?;
        let interp = self.h_prime(&x)?;
        Ok(Instance::paired(id, x, interp))
    }
}

/// Exact lookup from opaque vectors to the interpretable vectors they were
/// derived from. Backs `h'` for domains whose embedding is not invertible.
#[derive(Debug, Clone, Default)]
pub struct PairingTable {
    map: HashMap<Vec<u64>, InterpVec>,
}

impl PairingTable {
    pub fn insert(&mut self, x: &OpaqueVec, interp: InterpVec) {
        self.map.insert(x.bit_key(), interp);
    }

    pub fn lookup(&self, x: &OpaqueVec) -> Result<InterpVec> {
        self.map.get(&x.bit_key()).cloned().ok_or_else(|| {
            LimeadeError::InvalidInstance("opaque vector has no known interpretable pairing".into())
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(LimeadeError::Shape { expected, got })
    }
}
