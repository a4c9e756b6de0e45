//! Experiment configuration, read from JSON and validated before any run.

use std::collections::BTreeMap;
use std::path::Path;

use dyadic_core::paraproducts::ParaproductKind;
use dyadic_core::weights::WeightSpec;
use dyadic_core::{CubeId, DyadicModel, ScalarMode};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

/// Largest `n·D` accepted without `--force-large`.
pub const MAX_CELL_BITS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "float_mode")]
    pub mode: ScalarMode,
    #[serde(default)]
    pub seed: u64,
    /// Named weights; `unit` is always available.
    #[serde(default)]
    pub weights: BTreeMap<String, WeightSpec>,
    #[serde(default)]
    pub collection: CollectionSpec,
    #[serde(default)]
    pub identities: IdentitiesParams,
    #[serde(default)]
    pub bounds: BoundsParams,
    #[serde(default)]
    pub dominate: DominateParams,
    #[serde(default)]
    pub sharpness: SharpnessParams,
    #[serde(default)]
    pub norm: NormParams,
}

fn float_mode() -> ScalarMode {
    ScalarMode::Float
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_depth", alias = "D")]
    pub depth: usize,
}

fn default_n() -> usize {
    1
}

fn default_depth() -> usize {
    4
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { n: 1, depth: 4 }
    }
}

/// Which cubes to use wherever a sparse collection is needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CollectionSpec {
    Explicit {
        cubes: Vec<CubeId>,
    },
    /// Drawn from the run seed unless `seed` is given.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "two")]
        target_lambda: f64,
        #[serde(default)]
        max_level: Option<usize>,
    },
    /// `[0, 2^{-k})^n` for `k ≤ max_level`.
    Chain {
        #[serde(default)]
        max_level: Option<usize>,
    },
}

impl Default for CollectionSpec {
    fn default() -> Self {
        CollectionSpec::Random {
            seed: None,
            target_lambda: 2.0,
            max_level: None,
        }
    }
}

fn two() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

/// A step function described in the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    Cells {
        values: Vec<f64>,
    },
    /// The density of a named weight.
    Weight {
        name: String,
    },
    /// `b^w_S` of the configured collection plus uniform noise in
    /// `[-noise, noise]`.
    SparseBmo {
        #[serde(default)]
        weight: Option<String>,
        #[serde(default)]
        noise: f64,
    },
    /// Uniform values in `[-amplitude, amplitude]`, each cell zeroed with
    /// probability `zero_fraction`.
    Random {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        zero_fraction: f64,
    },
    Haar {
        cube: CubeId,
        #[serde(default)]
        signature: u8,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesParams {
    #[serde(default = "default_identity_draws")]
    pub draws: usize,
}

fn default_identity_draws() -> usize {
    50
}

impl Default for IdentitiesParams {
    fn default() -> Self {
        IdentitiesParams { draws: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    #[serde(default = "default_bound_draws")]
    pub draws: usize,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    #[serde(default = "default_max_target")]
    pub max_target_lambda: f64,
    #[serde(default = "default_log_amplitude")]
    pub log_amplitude: f64,
    /// Draws of the exact p = 2 sparse Bloom check.
    #[serde(default = "default_norm_draws")]
    pub norm_draws: usize,
    /// Add the nested-chain collections to the battery.
    #[serde(default = "yes")]
    pub chain: bool,
}

fn default_bound_draws() -> usize {
    200
}

fn default_p_values() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}

fn default_max_target() -> f64 {
    4.0
}

fn default_log_amplitude() -> f64 {
    1.5
}

fn default_norm_draws() -> usize {
    50
}

fn yes() -> bool {
    true
}

impl Default for BoundsParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominationAlgorithm {
    Pointwise,
    Bilinear,
    Oscillation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominateParams {
    #[serde(default = "default_algorithm")]
    pub algorithm: DominationAlgorithm,
    #[serde(default = "default_symbol")]
    pub b: FunctionSpec,
    /// First symbol of the bilinear form.
    #[serde(default = "default_random")]
    pub a: FunctionSpec,
    #[serde(default = "default_random")]
    pub f: FunctionSpec,
    #[serde(default = "default_random")]
    pub g: FunctionSpec,
    #[serde(default = "unit_name")]
    pub weight: String,
    /// Defaults to the unit cube.
    #[serde(default)]
    pub q0: Option<CubeId>,
    #[serde(default = "two")]
    pub lambda: f64,
    /// Also write `cell_index,lhs,rhs` for the pointwise algorithm.
    #[serde(default)]
    pub cell_csv: bool,
}

fn default_algorithm() -> DominationAlgorithm {
    DominationAlgorithm::Pointwise
}

fn default_symbol() -> FunctionSpec {
    FunctionSpec::SparseBmo {
        weight: None,
        noise: 0.1,
    }
}

fn default_random() -> FunctionSpec {
    FunctionSpec::Random {
        amplitude: 1.0,
        zero_fraction: 0.0,
    }
}

fn unit_name() -> String {
    "unit".to_string()
}

impl Default for DominateParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessParams {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Defaults to the model depth.
    #[serde(default)]
    pub depth: Option<usize>,
}

fn default_alphas() -> Vec<f64> {
    vec![-0.8, -0.6, -0.3, 0.3, 0.6, 0.8]
}

impl Default for SharpnessParams {
    fn default() -> Self {
        SharpnessParams {
            alphas: default_alphas(),
            depth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    Paraproduct {
        #[serde(default = "pi_kind")]
        paraproduct: ParaproductKind,
        symbol: FunctionSpec,
    },
    /// `𝒜^ν_S` on the configured collection.
    Sparse {
        #[serde(default)]
        nu: Option<String>,
    },
    /// The multiplier whose L² norm is the square function's `L²(w)` norm.
    SquareFunction {
        weight: String,
    },
}

fn pi_kind() -> ParaproductKind {
    ParaproductKind::Pi
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormParams {
    #[serde(default = "default_operator")]
    pub operator: OperatorSpec,
    #[serde(default = "unit_name")]
    pub mu: String,
    #[serde(default = "unit_name")]
    pub lambda: String,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_operator() -> OperatorSpec {
    OperatorSpec::Sparse { nu: None }
}

fn default_starts() -> usize {
    4
}

impl Default for NormParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

fn config_error(path: &str, msg: impl std::fmt::Display) -> LabError {
    LabError::Config(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(if path.is_empty() { "." } else { &path }, e.inner())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn dyadic_model(&self) -> Result<DyadicModel, LabError> {
        DyadicModel::new(self.model.n, self.model.depth).map_err(|e| config_error("model", e))
    }

    fn weight_names(&self) -> impl Iterator<Item = &str> {
        let mut names: Vec<&str> = Vec::new();
        let d = &self.dominate;
        names.push(&d.weight);
        for f in [&d.a, &d.b, &d.f, &d.g] {
            if let Some(n) = function_weight(f) {
                names.push(n);
            }
        }
        names.push(&self.norm.mu);
        names.push(&self.norm.lambda);
        match &self.norm.operator {
            OperatorSpec::Paraproduct { symbol, .. } => names.extend(function_weight(symbol)),
            OperatorSpec::Sparse { nu: Some(n) } => names.push(n),
            OperatorSpec::SquareFunction { weight } => names.push(weight),
            _ => {}
        }
        names.into_iter()
    }

    /// Checks everything that can be checked without running: model size,
    /// parameter ranges and weight references.
    pub fn validate(&self, force_large: bool) -> Result<(), LabError> {
        let model = self.dyadic_model()?;
        let bits = model.dim() * model.depth();
        let sharp_depth = self.sharpness.depth.unwrap_or(model.depth());
        if !force_large && (bits > MAX_CELL_BITS || model.dim() * sharp_depth > MAX_CELL_BITS) {
            return Err(config_error(
                "model",
                format!("n·D above {MAX_CELL_BITS} needs --force-large"),
            ));
        }
        DyadicModel::new(model.dim(), sharp_depth)
            .map_err(|e| config_error("sharpness.depth", e))?;
        for name in self.weight_names() {
            if name != "unit" && !self.weights.contains_key(name) {
                return Err(config_error("weights", format!("unknown weight `{name}`")));
            }
        }
        for (name, spec) in &self.weights {
            spec.build_f64(model)
                .map_err(|e| config_error(&format!("weights.{name}"), e))?;
        }
        if let CollectionSpec::Random { target_lambda, .. } = &self.collection {
            if !(*target_lambda >= 1.0) {
                return Err(config_error(
                    "collection.target_lambda",
                    "must be at least 1",
                ));
            }
        }
        if let CollectionSpec::Explicit { cubes } = &self.collection {
            for (i, q) in cubes.iter().enumerate() {
                model
                    .check(q)
                    .map_err(|e| config_error(&format!("collection.cubes[{i}]"), e))?;
            }
        }
        if !(self.dominate.lambda > 1.0) {
            return Err(config_error("dominate.lambda", "must exceed 1"));
        }
        if let Some(q) = &self.dominate.q0 {
            model.check(q).map_err(|e| config_error("dominate.q0", e))?;
        }
        if !(self.norm.p > 1.0 && self.norm.p.is_finite()) {
            return Err(config_error("norm.p", "must lie in (1, ∞)"));
        }
        for (i, p) in self.bounds.p_values.iter().enumerate() {
            if !(*p > 1.0 && p.is_finite()) {
                return Err(config_error(
                    &format!("bounds.p_values[{i}]"),
                    "must lie in (1, ∞)",
                ));
            }
        }
        if !(self.bounds.max_target_lambda > 1.0) {
            return Err(config_error("bounds.max_target_lambda", "must exceed 1"));
        }
        for (i, a) in self.sharpness.alphas.iter().enumerate() {
            if !(a.abs() < dyadic_core::norms::MAX_SWEEP_ALPHA) {
                return Err(config_error(
                    &format!("sharpness.alphas[{i}]"),
                    "must lie in (-0.95, 0.95)",
                ));
            }
        }
        Ok(())
    }
}

fn function_weight(f: &FunctionSpec) -> Option<&str> {
    match f {
        FunctionSpec::Weight { name } => Some(name),
        FunctionSpec::SparseBmo {
            weight: Some(n), ..
        } => Some(n),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(c.model, ModelConfig { n: 1, depth: 4 });
        assert_eq!(c.identities.draws, 50);
        assert_eq!(c.bounds.draws, 200);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        c.validate(false).unwrap();
    }

    #[test]
    fn error_names_the_field() {
        let e = ExperimentConfig::from_json(r#"{"dominate": {"lambda": "big"}}"#).unwrap_err();
        assert!(e.to_string().contains("dominate.lambda"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"model": {"n": 1, "depht": 3}}"#).unwrap_err();
        assert!(e.to_string().contains("model"), "{e}");
        let e =
            ExperimentConfig::from_json(r#"{"weights": {"w": {"kind": "power"}}}"#).unwrap_err();
        assert!(e.to_string().contains("weights.w"), "{e}");
    }

    #[test]
    fn validation() {
        let big = ExperimentConfig::from_json(r#"{"model": {"n": 2, "D": 13}}"#).unwrap();
        assert!(big.validate(false).is_err());
        big.validate(true).unwrap();
        let missing = ExperimentConfig::from_json(r#"{"dominate": {"weight": "w"}}"#).unwrap();
        assert!(missing
            .validate(false)
            .unwrap_err()
            .to_string()
            .contains("unknown weight"));
        let alpha = ExperimentConfig::from_json(r#"{"sharpness": {"alphas": [0.97]}}"#).unwrap();
        assert!(alpha
            .validate(false)
            .unwrap_err()
            .to_string()
            .contains("sharpness.alphas[0]"));
    }
}
