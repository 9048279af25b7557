//! Part-based synthetic classification domain.
//!
//! Each instance is a set of "parts" out of `n_features`. Positives carry
//! every object part, and each confound part with probability `rho`;
//! negatives carry confound parts rarely. Background parts appear at a fixed
//! rate in both. The opaque vector is `tanh(P^T z + e)` for the part
//! indicator `z`, a fixed random projection `P` and per-instance noise `e`,
//! so the map from parts to embeddings is many-to-one in practice and `h'`
//! is served by a pairing table.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{DomainBridge, Instance, InterpVec, Label, OpaqueVec, PairingTable};
use crate::error::{LimeadeError, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDomainSpec {
    pub n_features: usize,
    pub object_parts: Vec<usize>,
    pub confound_parts: Vec<usize>,
    pub confound_rate: f64,
    pub negative_confound_rate: f64,
    pub background_rate: f64,
    pub opaque_dim: usize,
    pub noise_sd: f64,
    pub pool_size: usize,
    pub positive_rate: f64,
    pub test_per_class: usize,
}

impl Default for SyntheticDomainSpec {
    fn default() -> Self {
        Self {
            n_features: 40,
            object_parts: vec![0, 1, 2],
            confound_parts: vec![3, 4, 5],
            confound_rate: 0.9,
            negative_confound_rate: 0.05,
            background_rate: 0.2,
            opaque_dim: 64,
            noise_sd: 0.05,
            pool_size: 2000,
            positive_rate: 0.3,
            test_per_class: 200,
        }
    }
}

impl SyntheticDomainSpec {
    /// Default spec with object and confound parts drawn for one class.
    pub fn for_class(seed: u64, n_object: usize, n_confound: usize) -> Self {
        let mut spec = Self::default();
        let mut parts: Vec<usize> = (0..spec.n_features).collect();
        parts.shuffle(&mut seed::rng(seed));
        spec.object_parts = parts[..n_object].to_vec();
        spec.confound_parts = parts[n_object..n_object + n_confound].to_vec();
        spec.object_parts.sort_unstable();
        spec.confound_parts.sort_unstable();
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LimeadeError::Value(m));
        if self.n_features == 0 || self.opaque_dim == 0 {
            return bad("dimensions must be positive".into());
        }
        for &j in self.object_parts.iter().chain(&self.confound_parts) {
            if j >= self.n_features {
                return bad(format!("part {j} out of range"));
            }
        }
        if self.object_parts.iter().any(|j| self.confound_parts.contains(j)) {
            return bad("object and confound parts overlap".into());
        }
        if self.object_parts.is_empty() {
            return bad("object parts must be nonempty".into());
        }
        for (name, p) in [
            ("confound_rate", self.confound_rate),
            ("negative_confound_rate", self.negative_confound_rate),
            ("background_rate", self.background_rate),
            ("positive_rate", self.positive_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd must be nonnegative".into());
        }
        Ok(())
    }
}

/// Embeds part indicators; instance noise is a function of the instance id,
/// so realizing an instance with every part kept reproduces it exactly.
#[derive(Debug, Clone)]
pub struct SyntheticBridge {
    n_features: usize,
    opaque_dim: usize,
    /// Row-major `n_features x opaque_dim`.
    projection: Vec<f64>,
    noise_sd: f64,
    noise_seed: u64,
    pairing: PairingTable,
}

impl SyntheticBridge {
    pub fn new(n_features: usize, opaque_dim: usize, noise_sd: f64, seed_: u64) -> Self {
        let mut rng = seed::rng(seed::derive(seed_, &[0]));
        let normal = Normal::new(0.0, 0.5).expect("valid normal");
        let projection = (0..n_features * opaque_dim).map(|_| normal.sample(&mut rng)).collect();
        Self {
            n_features,
            opaque_dim,
            projection,
            noise_sd,
            noise_seed: seed::derive(seed_, &[1]),
            pairing: PairingTable::default(),
        }
    }

    fn noise(&self, id: &str) -> Vec<f64> {
        if self.noise_sd == 0.0 {
            return vec![0.0; self.opaque_dim];
        }
        let mut rng = seed::rng(seed::derive(self.noise_seed, &[seed::hash_str(id)]));
        let normal = Normal::new(0.0, self.noise_sd).expect("valid normal");
        (0..self.opaque_dim).map(|_| normal.sample(&mut rng)).collect()
    }

    /// `tanh(P^T z + noise(id))`.
    pub fn embed(&self, id: &str, parts: &InterpVec) -> Result<OpaqueVec> {
        crate::domain::check_dim(self.n_features, parts.dim())?;
        let mut out = self.noise(id);
        for (j, v) in parts.iter() {
            let row = &self.projection[j * self.opaque_dim..(j + 1) * self.opaque_dim];
            for (o, p) in out.iter_mut().zip(row) {
                *o += v * p;
            }
        }
        out.iter_mut().for_each(|o| *o = o.tanh());
        OpaqueVec::new(out)
    }

    pub fn register(&mut self, id: &str, parts: &InterpVec) -> Result<OpaqueVec> {
        let x = self.embed(id, parts)?;
        self.pairing.insert(&x, parts.clone());
        Ok(x)
    }
}

impl DomainBridge for SyntheticBridge {
    fn interp_dim(&self) -> usize {
        self.n_features
    }

    fn h_prime(&self, x: &OpaqueVec) -> Result<InterpVec> {
        self.pairing.lookup(x)
    }

    fn realize(&self, base: &Instance, mask: &[bool]) -> Result<OpaqueVec> {
        self.embed(base.id(), &base.interp().masked(mask)?)
    }

    fn realize_instance(&self, base: &Instance, mask: &[bool], id: String) -> Result<Instance> {
        let parts = base.interp().masked(mask)?;
        let x = self.embed(base.id(), &parts)?;
        Ok(Instance::paired(id, x, parts))
    }
}

/// Share of a linear model's part sensitivity that falls on confound parts.
///
/// Part `j` moves the pre-tanh embedding along row `P_j`; the model's
/// first-order sensitivity to it is `|w . P_j|`. Returns
/// `sum_confound |w . P_j| / sum_all |w . P_j|`.
pub fn confound_weight_share(domain: &SyntheticDomain, params: &crate::models::ModelParams) -> Result<f64> {
    let b = &domain.bridge;
    crate::domain::check_dim(b.opaque_dim, params.weights.len())?;
    let sens: Vec<f64> = (0..b.n_features)
        .map(|j| {
            let row = &b.projection[j * b.opaque_dim..(j + 1) * b.opaque_dim];
            row.iter().zip(&params.weights).map(|(p, w)| p * w).sum::<f64>().abs()
        })
        .collect();
    let total: f64 = sens.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(domain.spec.confound_parts.iter().map(|&j| sens[j]).sum::<f64>() / total)
}

#[derive(Debug, Clone)]
pub struct SyntheticDomain {
    pub spec: SyntheticDomainSpec,
    pub bridge: SyntheticBridge,
    pub pool: Vec<Instance>,
    pub pool_labels: Vec<Label>,
    pub test: Vec<Instance>,
    pub test_labels: Vec<Label>,
}

impl SyntheticDomain {
    /// Ground-truth features: the object parts for positives, none otherwise.
    pub fn truth(&self, label: Label) -> &[usize] {
        match label {
            Label::Positive => &self.spec.object_parts,
            Label::Negative => &[],
        }
    }
}

fn draw_parts(spec: &SyntheticDomainSpec, label: Label, rng: &mut seed::Rng) -> Result<InterpVec> {
    let confound_rate = match label {
        Label::Positive => spec.confound_rate,
        Label::Negative => spec.negative_confound_rate,
    };
    let mut parts = Vec::new();
    for j in 0..spec.n_features {
        let on = if spec.object_parts.contains(&j) {
            match label {
                Label::Positive => true,
                // Negatives never hold the whole object.
                Label::Negative => rng.random_bool(spec.background_rate),
            }
        } else if spec.confound_parts.contains(&j) {
            rng.random_bool(confound_rate)
        } else {
            rng.random_bool(spec.background_rate)
        };
        if on {
            parts.push(j);
        }
    }
    if label == Label::Negative && spec.object_parts.iter().all(|j| parts.contains(j)) {
        let drop = spec.object_parts[rng.random_range(0..spec.object_parts.len())];
        parts.retain(|&j| j != drop);
    }
    InterpVec::indicator(spec.n_features, parts)
}

/// Draws a pool (labels at `positive_rate`) and a balanced test set.
pub fn gen_synthetic_domain(spec: &SyntheticDomainSpec, seed_: u64) -> Result<SyntheticDomain> {
    spec.validate()?;
    let mut bridge = SyntheticBridge::new(spec.n_features, spec.opaque_dim, spec.noise_sd, seed::derive(seed_, &[0]));
    let mut rng = seed::rng(seed::derive(seed_, &[1]));
    let make = |prefix: &str, i: usize, label: Label, rng: &mut seed::Rng, bridge: &mut SyntheticBridge| {
        let id = format!("{prefix}{i:05}");
        let parts = draw_parts(spec, label, rng)?;
        let x = bridge.register(&id, &parts)?;
        Ok::<_, LimeadeError>(Instance::paired(id, x, parts))
    };
    let mut pool = Vec::with_capacity(spec.pool_size);
    let mut pool_labels = Vec::with_capacity(spec.pool_size);
    for i in 0..spec.pool_size {
        let label = if rng.random_bool(spec.positive_rate) {
            Label::Positive
        } else {
            Label::Negative
        };
        pool.push(make("p", i, label, &mut rng, &mut bridge)?);
        pool_labels.push(label);
    }
    let mut test = Vec::with_capacity(2 * spec.test_per_class);
    let mut test_labels = Vec::with_capacity(2 * spec.test_per_class);
    for i in 0..2 * spec.test_per_class {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        test.push(make("t", i, label, &mut rng, &mut bridge)?);
        test_labels.push(label);
    }
    Ok(SyntheticDomain {
        spec: spec.clone(),
        bridge,
        pool,
        pool_labels,
        test,
        test_labels,
    })
}
