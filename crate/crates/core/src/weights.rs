//! Weights, Muckenhoupt characteristics, dyadic BMO and stopping families.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeId, CubeMap, DyadicModel, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A strictly positive step function together with its cube masses `w(Q)`
/// and averages `⟨w⟩_Q`.
#[derive(Clone, Debug)]
pub struct Weight<S> {
    density: StepFunction<S>,
    masses: CubeMap<S>,
    averages: CubeMap<S>,
}

impl<S: Scalar> Weight<S> {
    pub fn new(density: StepFunction<S>) -> Result<Self> {
        if density.values().iter().any(|v| *v <= S::zero()) {
            return Err(Error::NonPositiveWeight);
        }
        Ok(Weight {
            masses: density.integrals(),
            averages: density.averages(),
            density,
        })
    }

    pub fn unit(model: DyadicModel) -> Self {
        Weight::new(StepFunction::constant(model, S::one())).expect("one is positive")
    }

    pub fn model(&self) -> &DyadicModel {
        self.density.model()
    }

    pub fn density(&self) -> &StepFunction<S> {
        &self.density
    }

    /// `w(Q)`.
    pub fn mass(&self, cube: &CubeId) -> &S {
        self.masses.at(cube)
    }

    pub fn masses(&self) -> &CubeMap<S> {
        &self.masses
    }

    /// `⟨w⟩_Q`.
    pub fn average(&self, cube: &CubeId) -> &S {
        self.averages.at(cube)
    }

    pub fn averages(&self) -> &CubeMap<S> {
        &self.averages
    }

    pub fn to_f64(&self) -> Weight<f64> {
        Weight::new(self.density.to_f64()).expect("positivity survives rounding")
    }

    /// `w^t` cellwise.
    pub fn power(&self, t: f64) -> Weight<f64> {
        Weight::new(self.density.to_f64().map(|v| v.powf(t))).expect("positive base")
    }
}

/// Description of a weight, as read from experiment configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `Π x_i^α`, averaged exactly over each cell.
    Power {
        alpha: f64,
    },
    Cells {
        values: Vec<f64>,
    },
    /// Independent log-uniform cell values in `[e^{-A}, e^{A}]`.
    Random {
        seed: u64,
        log_amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn build_f64(&self, model: DyadicModel) -> Result<Weight<f64>> {
        let density = match self {
            WeightSpec::Constant { value } => StepFunction::constant(model, *value),
            WeightSpec::Power { alpha } => power_weight_density(model, *alpha)?,
            WeightSpec::Cells { values } => StepFunction::new(model, values.clone())?,
            WeightSpec::Random {
                seed,
                log_amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let a = log_amplitude.abs();
                StepFunction::from_fn(model, |_| {
                    if a == 0.0 {
                        1.0
                    } else {
                        rng.gen_range(-a..=a).exp()
                    }
                })
            }
        };
        if density.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonPositiveWeight);
        }
        Weight::new(density)
    }

    /// Builds the weight and converts each cell value exactly.
    pub fn build<S: Scalar>(&self, model: DyadicModel) -> Result<Weight<S>> {
        let w = self.build_f64(model)?;
        Weight::new(StepFunction::from_f64(w.density()))
    }
}

fn power_weight_density(model: DyadicModel, alpha: f64) -> Result<StepFunction<f64>> {
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(Error::Parse(format!(
            "power weight exponent {alpha} is not locally integrable"
        )));
    }
    let side = 0.5f64.powi(model.depth() as i32);
    let a1 = alpha + 1.0;
    let per_coord = |q: u32| {
        let (a, b) = (q as f64 * side, (q as f64 + 1.0) * side);
        (b.powf(a1) - a.powf(a1)) / (a1 * side)
    };
    Ok(StepFunction::from_fn(model, |c| {
        model
            .cell_cube(c)
            .pos()
            .iter()
            .map(|&q| per_coord(q))
            .product()
    }))
}

/// `[w]_{A_p}` with the cube attaining it and the dual characteristic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApCharacteristic {
    pub p: f64,
    pub value: f64,
    pub argmax: CubeId,
    /// `[w^{1-p'}]_{A_{p'}}`, computed independently.
    pub conjugate_value: f64,
    /// Relative gap between `conjugate_value` and `value^{1/(p-1)}`.
    pub duality_residual: f64,
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `σ = w^{1-p'}`, the weight dual to `w` under the Lebesgue pairing.
pub fn conjugate_weight(w: &Weight<f64>, p: f64) -> Result<Weight<f64>> {
    check_exponent(p)?;
    Ok(w.power(1.0 - conjugate_exponent(p)))
}

pub fn ap_characteristic(w: &Weight<f64>, p: f64) -> Result<ApCharacteristic> {
    check_exponent(p)?;
    let model = *w.model();
    let sigma = conjugate_weight(w, p)?;
    let pp = conjugate_exponent(p);
    let mut best = (f64::NEG_INFINITY, model.root());
    let mut conj = f64::NEG_INFINITY;
    for k in 0..=model.depth() {
        let (wa, sa) = (w.averages().level(k), sigma.averages().level(k));
        for i in 0..model.cubes_at(k) {
            let v = wa[i] * sa[i].powf(p - 1.0);
            if v > best.0 {
                best = (v, model.cube(k, i));
            }
            conj = conj.max(sa[i] * wa[i].powf(pp - 1.0));
        }
    }
    let predicted = best.0.powf(1.0 / (p - 1.0));
    Ok(ApCharacteristic {
        p,
        value: best.0,
        argmax: best.1,
        conjugate_value: conj,
        duality_residual: (conj - predicted).abs() / conj,
    })
}

/// `E^w_Q f = w(Q)^{-1} ∫_Q f w`.
pub fn weighted_average<S: Scalar>(w: &Weight<S>, f: &StepFunction<S>, cube: &CubeId) -> Result<S> {
    let fw = (f * w.density()).integrals();
    Ok(fw.at(cube).clone() / w.mass(cube))
}

/// `M^w f(x) = max_{Q ∋ x} E^w_Q |f|`.
pub fn weighted_maximal<S: Scalar>(w: &Weight<S>, f: &StepFunction<S>) -> Result<StepFunction<S>> {
    f.same_model(w.density())?;
    let model = *f.model();
    let fw = (&f.abs() * w.density()).integrals();
    let avgs = CubeMap::from_fn(model, |k, i| fw.get(k, i).clone() / w.masses().get(k, i));
    Ok(running_max_down(&model, &avgs, &model.root()))
}

/// `M_{Q_0} f(x) = max_{x ∈ Q ⊆ Q_0} ⟨|f|⟩_Q`, zero off `Q_0`.
pub fn dyadic_maximal<S: Scalar>(f: &StepFunction<S>, base: &CubeId) -> StepFunction<S> {
    let model = *f.model();
    running_max_down(&model, &f.abs().averages(), base)
}

/// Cellwise maximum of `vals` over the cubes between `base` and the cell.
pub(crate) fn running_max_down<S: Scalar>(
    model: &DyadicModel,
    vals: &CubeMap<S>,
    base: &CubeId,
) -> StepFunction<S> {
    let bl = base.level();
    let mut cur = vec![(model.index(base), vals.at(base).clone())];
    for k in bl + 1..=model.depth() {
        let mut next = Vec::with_capacity(cur.len() << model.dim());
        for (idx, m) in &cur {
            for ci in model.children_indices(k - 1, *idx) {
                next.push((ci, m.clone().max_of(vals.get(k, ci).clone())));
            }
        }
        cur = next;
    }
    let mut out = StepFunction::zero(*model);
    for (cell, m) in cur {
        out.values_mut()[cell] = m;
    }
    out
}

/// `w(Q)^{-1} ∫_Q |b - ⟨b⟩_Q| dx` for every cube; `w = None` divides by
/// `|Q|` instead.
pub fn mean_oscillations<S: Scalar>(b: &StepFunction<S>, w: Option<&Weight<S>>) -> CubeMap<S> {
    let model = *b.model();
    let d = model.depth();
    let avgs = b.averages();
    let mut osc = CubeMap::filled(model, S::zero());
    for (cell, v) in b.values().iter().enumerate() {
        for k in 0..=d {
            let a = model.ancestor_index(d, cell, k);
            *osc.get_mut(k, a) += (v.clone() - avgs.get(k, a)).abs();
        }
    }
    for k in 0..=d {
        let cells_per = S::pow2((model.dim() * (d - k)) as i32);
        let cell_vol = model.cell_volume::<S>();
        for (i, v) in osc.level_mut(k).iter_mut().enumerate() {
            *v = match w {
                Some(w) => v.clone() * &cell_vol / w.masses().get(k, i),
                None => v.clone() / &cells_per,
            };
        }
    }
    osc
}

/// `‖b‖_{BMO(w)} = max_Q w(Q)^{-1} ∫_Q |b - ⟨b⟩_Q|`.
pub fn bmo_norm<S: Scalar>(b: &StepFunction<S>, w: Option<&Weight<S>>) -> S {
    let model = *b.model();
    bmo_norm_within(b, w, &model.root())
}

/// The same supremum restricted to cubes inside `base`.
pub fn bmo_norm_within<S: Scalar>(b: &StepFunction<S>, w: Option<&Weight<S>>, base: &CubeId) -> S {
    let model = *b.model();
    let osc = mean_oscillations(b, w);
    let mut best = S::zero();
    for k in base.level()..=model.depth() {
        for i in model.indices_within(base, k) {
            best = best.max_of(osc.get(k, i).clone());
        }
    }
    best
}

/// Maximal cubes `R ⊊ base` with `⟨g⟩_R > threshold`, in level then
/// row-major order. Meaningful for `g ≥ 0` and `threshold > 0`.
pub fn stopping_cubes<S: Scalar>(base: &CubeId, g: &StepFunction<S>, threshold: &S) -> Vec<CubeId> {
    stopping_cubes_from(g.model(), &g.averages(), base, threshold)
}

pub(crate) fn stopping_cubes_from<S: Scalar>(
    model: &DyadicModel,
    avgs: &CubeMap<S>,
    base: &CubeId,
    threshold: &S,
) -> Vec<CubeId> {
    let mut out = Vec::new();
    let mut stack = vec![(base.level(), model.index(base))];
    while let Some((k, idx)) = stack.pop() {
        if k == model.depth() {
            continue;
        }
        for ci in model.children_indices(k, idx) {
            if avgs.get(k + 1, ci) > threshold {
                out.push(model.cube(k + 1, ci));
            } else {
                stack.push((k + 1, ci));
            }
        }
    }
    out.sort();
    out
}

/// Maximal cubes inside `base` all of whose cells are marked; `base` itself
/// is eligible only when `include_base` is set.
pub fn maximal_marked_cubes(
    model: &DyadicModel,
    marked: &[bool],
    base: &CubeId,
    include_base: bool,
) -> Vec<CubeId> {
    let full = marked_cube_map(model, marked);
    let mut out = Vec::new();
    let mut stack = vec![(base.level(), model.index(base))];
    while let Some((k, idx)) = stack.pop() {
        let is_base = k == base.level();
        if *full.get(k, idx) && (include_base || !is_base) {
            out.push(model.cube(k, idx));
        } else if k < model.depth() {
            stack.extend(
                model
                    .children_indices(k, idx)
                    .into_iter()
                    .map(|c| (k + 1, c)),
            );
        }
    }
    out.sort();
    out
}

/// For each cube, whether all its cells are marked.
pub(crate) fn marked_cube_map(model: &DyadicModel, marked: &[bool]) -> CubeMap<bool> {
    let d = model.depth();
    let mut levels = vec![marked.to_vec()];
    for k in (0..d).rev() {
        let below = levels.last().unwrap();
        let mut here = vec![true; model.cubes_at(k)];
        for (i, &m) in below.iter().enumerate() {
            if !m {
                here[model.parent_index(k + 1, i)] = false;
            }
        }
        levels.push(here);
    }
    levels.reverse();
    CubeMap::from_fn(*model, |k, i| levels[k][i])
}

/// Cells covered by a family of cubes.
pub fn union_mask(model: &DyadicModel, cubes: &[CubeId]) -> Vec<bool> {
    let mut mask = vec![false; model.cell_count()];
    for q in cubes {
        for c in model.cells_within(q) {
            mask[c] = true;
        }
    }
    mask
}

/// Checks that `stop` is a family of pairwise disjoint cubes inside `base`.
pub(crate) fn check_disjoint_within(
    model: &DyadicModel,
    base: &CubeId,
    stop: &[CubeId],
) -> Result<()> {
    let mut seen = HashSet::new();
    for q in stop {
        model.check(q)?;
        if !base.contains(q) || !seen.insert(*q) {
            return Err(Error::OverlappingStopCubes);
        }
    }
    for q in stop {
        let mut cur = *q;
        while let Some(p) = cur.parent() {
            if p.level() < base.level() {
                break;
            }
            if seen.contains(&p) {
                return Err(Error::OverlappingStopCubes);
            }
            cur = p;
        }
    }
    Ok(())
}

/// The part of `b` seen from `base` above a stopping family:
/// `⟨b⟩_{base} 1_{base} + Σ (b, h_Q) h_Q` over cubes `Q ⊆ base` not contained
/// in the union `E` of `stop`. Equivalently `b` on `base \ E`, replaced by its
/// average on each maximal cube of `E`, and zero off `base`.
pub fn bmo_good_function<S: Scalar>(
    b: &StepFunction<S>,
    base: &CubeId,
    stop: &[CubeId],
) -> Result<StepFunction<S>> {
    let model = *b.model();
    model.check(base)?;
    check_disjoint_within(&model, base, stop)?;
    let mask = union_mask(&model, stop);
    let avgs = b.averages();
    let mut out = StepFunction::zero(model);
    for c in model.cells_within(base) {
        if !mask[c] {
            out.values_mut()[c] = b.value(c).clone();
        }
    }
    for r in maximal_marked_cubes(&model, &mask, base, true) {
        let a = avgs.at(&r);
        for c in model.cells_within(&r) {
            out.values_mut()[c] = a.clone();
        }
    }
    Ok(out)
}

/// Weights `μ, λ ∈ A_p` and the Bloom weight `ν = μ^{1/p} λ^{-1/p}`.
#[derive(Clone, Debug)]
pub struct BloomTriple {
    pub p: f64,
    pub mu: Weight<f64>,
    pub lambda: Weight<f64>,
    pub nu: Weight<f64>,
}

impl BloomTriple {
    pub fn new(mu: Weight<f64>, lambda: Weight<f64>, p: f64) -> Result<Self> {
        check_exponent(p)?;
        let nu = mu
            .density()
            .zip_with(lambda.density(), |m, l| (m / l).powf(1.0 / p))?;
        Ok(BloomTriple {
            p,
            nu: Weight::new(nu)?,
            mu,
            lambda,
        })
    }

    /// Largest relative excess of `⟨ν⟩_Q` over `⟨μ⟩_Q^{1/p} ⟨λ^{1-p'}⟩_Q^{1/p'}`;
    /// Hölder makes this non-positive.
    pub fn holder_excess(&self) -> Result<f64> {
        let sigma = conjugate_weight(&self.lambda, self.p)?;
        let pp = conjugate_exponent(self.p);
        let model = *self.mu.model();
        let mut worst = f64::NEG_INFINITY;
        for k in 0..=model.depth() {
            for i in 0..model.cubes_at(k) {
                let nu = self.nu.averages().get(k, i);
                let rhs = self.mu.averages().get(k, i).powf(1.0 / self.p)
                    * sigma.averages().get(k, i).powf(1.0 / pp);
                worst = worst.max((nu - rhs) / rhs);
            }
        }
        Ok(worst)
    }
}
