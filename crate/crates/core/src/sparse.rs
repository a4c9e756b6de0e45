//! Sparse (Carleson) collections and the operators built from them.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeId, CubeMap, DyadicModel, HaarSpectrum, Signature, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::Weight;

/// A finite family of model cubes.
#[derive(Debug)]
pub struct SparseCollection {
    model: DyadicModel,
    cubes: Vec<CubeId>,
    members: CubeMap<bool>,
    carleson: OnceLock<f64>,
}

impl Clone for SparseCollection {
    fn clone(&self) -> Self {
        SparseCollection {
            model: self.model,
            cubes: self.cubes.clone(),
            members: self.members.clone(),
            carleson: self.carleson.clone(),
        }
    }
}

impl PartialEq for SparseCollection {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model && self.cubes == other.cubes
    }
}

impl SparseCollection {
    /// Duplicates are dropped; cubes are kept in level then row-major order.
    pub fn new(model: DyadicModel, cubes: impl IntoIterator<Item = CubeId>) -> Result<Self> {
        let mut cubes: Vec<CubeId> = cubes.into_iter().collect();
        for q in &cubes {
            model.check(q)?;
        }
        cubes.sort();
        cubes.dedup();
        let mut members = CubeMap::filled(model, false);
        for q in &cubes {
            *members.at_mut(q) = true;
        }
        Ok(SparseCollection {
            model,
            cubes,
            members,
            carleson: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &DyadicModel {
        &self.model
    }

    pub fn cubes(&self) -> &[CubeId] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn contains(&self, cube: &CubeId) -> bool {
        cube.dim() == self.model.dim()
            && cube.level() <= self.model.depth()
            && *self.members.at(cube)
    }

    pub fn is_member(&self, level: usize, idx: usize) -> bool {
        *self.members.get(level, idx)
    }

    /// The same cubes in a model of another depth that still holds them.
    pub fn with_model(&self, model: DyadicModel) -> Result<Self> {
        SparseCollection::new(model, self.cubes.iter().copied())
    }

    /// `Σ_{P ∈ S, P ⊆ Q} |P| / |Q|` for every cube `Q`.
    pub fn packing_ratios(&self) -> CubeMap<f64> {
        let model = self.model;
        let mut packing = CubeMap::filled(model, 0.0f64);
        for k in (0..=model.depth()).rev() {
            let vol = model.volume::<f64>(k);
            for i in 0..model.cubes_at(k) {
                let mut p = if self.is_member(k, i) { vol } else { 0.0 };
                if k < model.depth() {
                    p += model
                        .children_indices(k, i)
                        .into_iter()
                        .map(|c| *packing.get(k + 1, c))
                        .sum::<f64>();
                }
                *packing.get_mut(k, i) = p;
            }
        }
        for k in 0..=model.depth() {
            let inv = 1.0 / model.volume::<f64>(k);
            for v in packing.level_mut(k) {
                *v *= inv;
            }
        }
        packing
    }

    /// `max_{Q ∈ S} |Q|^{-1} Σ_{P ∈ S, P ⊆ Q} |P|`, exact: every term is a
    /// dyadic rational well inside double precision.
    pub fn carleson_constant(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyCollection);
        }
        Ok(*self.carleson.get_or_init(|| {
            let packing = self.packing_ratios();
            self.cubes
                .iter()
                .map(|q| *packing.at(q))
                .fold(f64::NEG_INFINITY, f64::max)
        }))
    }

    /// Maximal members of `S` strictly inside `cube`.
    pub fn children_of(&self, cube: &CubeId) -> Vec<CubeId> {
        let model = self.model;
        let mut out = Vec::new();
        let mut stack = vec![(cube.level(), model.index(cube))];
        while let Some((k, idx)) = stack.pop() {
            if k == model.depth() {
                continue;
            }
            for c in model.children_indices(k, idx) {
                if self.is_member(k + 1, c) {
                    out.push(model.cube(k + 1, c));
                } else {
                    stack.push((k + 1, c));
                }
            }
        }
        out.sort();
        out
    }

    /// Successive generations of S-children below `q0`.
    pub fn generations(&self, q0: &CubeId) -> Result<Generations> {
        if !self.contains(q0) {
            return Err(Error::Parse(format!(
                "{q0} is not a member of the collection"
            )));
        }
        let mut levels: Vec<Vec<CubeId>> = Vec::new();
        let mut frontier = vec![*q0];
        loop {
            let next: Vec<CubeId> = frontier.iter().flat_map(|q| self.children_of(q)).collect();
            if next.is_empty() {
                break;
            }
            levels.push(next.clone());
            frontier = next;
        }
        let measures: Vec<f64> = levels
            .iter()
            .map(|g| g.iter().map(|q| q.volume::<f64>()).sum())
            .collect();
        let nested = levels.windows(2).all(|w| {
            w[1].iter()
                .all(|q| w[0].iter().any(|p| p.contains(q) && p != q))
        });
        let weighted_sum = measures
            .iter()
            .enumerate()
            .map(|(k, m)| (k + 1) as f64 * m)
            .sum();
        let lambda = self.carleson_constant()?;
        Ok(Generations {
            bound: lambda * lambda * measures.first().copied().unwrap_or(0.0),
            generations: levels,
            measures,
            nested,
            weighted_sum,
        })
    }
}

impl Serialize for SparseCollection {
    fn serialize<Ser: serde::Serializer>(
        &self,
        s: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.cubes.serialize(s)
    }
}

/// `S_1, S_2, …` below a cube, with the summability check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generations {
    pub generations: Vec<Vec<CubeId>>,
    /// `|∪ S_k|` for each generation.
    pub measures: Vec<f64>,
    /// Whether each generation's union sits inside the previous one.
    pub nested: bool,
    /// `Σ_k k |S_k|`.
    pub weighted_sum: f64,
    /// `Λ² |S_1|`.
    pub bound: f64,
}

/// `Σ_{Q ∈ S} c_Q 1_Q` with `c_Q = 1` or `⟨w⟩_Q`.
pub fn sparse_bmo_function<S: Scalar>(
    coll: &SparseCollection,
    w: Option<&Weight<S>>,
) -> StepFunction<S> {
    let model = *coll.model();
    let consts = CubeMap::from_fn(model, |k, i| {
        if !coll.is_member(k, i) {
            S::zero()
        } else {
            match w {
                Some(w) => w.averages().get(k, i).clone(),
                None => S::one(),
            }
        }
    });
    StepFunction::from_cube_constants(&consts)
}

/// `Σ_{Q ∈ S} Σ_ε √|Q| h_Q^ε`.
pub fn sparse_haar_function<S: Scalar>(coll: &SparseCollection) -> Result<StepFunction<S>> {
    let model = *coll.model();
    let mut spec = HaarSpectrum::zeros(model);
    for q in coll.cubes() {
        let root_vol = S::pow2_half(-((model.dim() * q.level()) as i32));
        for sig in Signature::cancellative(model.dim()) {
            spec.set(q, &sig, root_vol.clone())?;
        }
    }
    Ok(spec.synthesize())
}

/// `𝒜^w_S f = Σ_{Q ∈ S} ⟨w⟩_Q ⟨f⟩_Q 1_Q`.
pub fn sparse_operator<S: Scalar>(
    coll: &SparseCollection,
    w: Option<&Weight<S>>,
    f: &StepFunction<S>,
) -> StepFunction<S> {
    let model = *coll.model();
    let favg = f.averages();
    let consts = CubeMap::from_fn(model, |k, i| {
        if !coll.is_member(k, i) {
            return S::zero();
        }
        let a = favg.get(k, i).clone();
        match w {
            Some(w) => a * w.averages().get(k, i),
            None => a,
        }
    });
    StepFunction::from_cube_constants(&consts)
}

/// `τ_J = |J|^{-1} Σ_{I ∈ S, I ⊊ J} w(I)` for every model cube.
#[derive(Clone, Debug, PartialEq)]
pub struct TauSequence<S> {
    values: CubeMap<S>,
}

impl<S: Scalar> TauSequence<S> {
    pub fn from_values(values: CubeMap<S>) -> Self {
        TauSequence { values }
    }

    pub fn values(&self) -> &CubeMap<S> {
        &self.values
    }

    pub fn at(&self, cube: &CubeId) -> &S {
        self.values.at(cube)
    }

    pub fn model(&self) -> &DyadicModel {
        self.values.model()
    }
}

pub fn tau_sequence<S: Scalar>(coll: &SparseCollection, w: Option<&Weight<S>>) -> TauSequence<S> {
    let model = *coll.model();
    let mass = |k: usize, i: usize| match w {
        Some(w) => w.masses().get(k, i).clone(),
        None => model.volume::<S>(k),
    };
    // strict[J] = Σ over members strictly below J; full[J] adds J itself
    let mut strict = CubeMap::filled(model, S::zero());
    let mut full = CubeMap::filled(model, S::zero());
    for k in (0..=model.depth()).rev() {
        for i in 0..model.cubes_at(k) {
            let mut s = S::zero();
            if k < model.depth() {
                for c in model.children_indices(k, i) {
                    s += full.get(k + 1, c);
                }
            }
            let own = if coll.is_member(k, i) {
                mass(k, i)
            } else {
                S::zero()
            };
            *full.get_mut(k, i) = s.clone() + own;
            *strict.get_mut(k, i) = s;
        }
    }
    for k in 0..=model.depth() {
        let inv = S::pow2((model.dim() * k) as i32);
        for v in strict.level_mut(k) {
            *v *= inv.clone();
        }
    }
    TauSequence { values: strict }
}

/// `T_τ f = Σ_J τ_J Σ_ε (f, h_J^ε) h_J^ε`.
pub fn martingale_transform<S: Scalar>(
    tau: &TauSequence<S>,
    f: &StepFunction<S>,
) -> StepFunction<S> {
    let mut spec = HaarSpectrum::analyze(f).scaled(|k, i, _| tau.values.get(k, i).clone());
    spec.set_mean(S::zero());
    spec.synthesize()
}

/// A collection containing the root, each other cube of level `≤ max_level`
/// drawn independently. The inclusion rate aims at an expected packing below
/// `target`; draws whose Carleson constant exceeds `target` are redrawn.
pub fn random_collection<R: Rng>(
    model: DyadicModel,
    target: f64,
    max_level: usize,
    rng: &mut R,
) -> Result<SparseCollection> {
    if !(target >= 1.0) {
        return Err(Error::InvalidSparseness(target));
    }
    let max_level = max_level.min(model.depth());
    let root_only = SparseCollection::new(model, [model.root()])?;
    if max_level == 0 || target == 1.0 {
        return Ok(root_only);
    }
    let base_rate = ((target - 1.0) / max_level as f64).min(0.9);
    for _ in 0..1000 {
        let rate = (base_rate * rng.gen_range(0.5..1.5)).min(0.95);
        let mut cubes = vec![model.root()];
        for k in 1..=max_level {
            for i in 0..model.cubes_at(k) {
                if rng.gen_bool(rate) {
                    cubes.push(model.cube(k, i));
                }
            }
        }
        let coll = SparseCollection::new(model, cubes)?;
        if coll.carleson_constant()? <= target {
            return Ok(coll);
        }
    }
    Ok(root_only)
}

/// `{[0, 2^{-k})^n : k ≤ max_level}`, the chain with the largest packing
/// at its corner.
pub fn nested_chain(model: DyadicModel, max_level: usize) -> Result<SparseCollection> {
    let zeros = vec![0u32; model.dim()];
    let cubes: Result<Vec<CubeId>> = (0..=max_level.min(model.depth()))
        .map(|k| CubeId::new(k as u32, &zeros))
        .collect();
    SparseCollection::new(model, cubes?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::haar_function;
    use crate::scalar::Exact;
    use crate::weights::{bmo_norm, WeightSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(n: usize, d: usize) -> DyadicModel {
        DyadicModel::new(n, d).unwrap()
    }

    fn c1(level: u32, p: u32) -> CubeId {
        CubeId::new(level, &[p]).unwrap()
    }

    fn ex(p: i64, q: i64) -> Exact {
        Exact::from_ratio(p, q)
    }

    fn exs(v: &[(i64, i64)]) -> Vec<Exact> {
        v.iter().map(|&(p, q)| ex(p, q)).collect()
    }

    #[test]
    fn carleson_examples() {
        let m = model(1, 2);
        let one = SparseCollection::new(m, [m.root()]).unwrap();
        assert_eq!(one.carleson_constant().unwrap(), 1.0);
        let three = SparseCollection::new(m, [m.root(), c1(1, 0), c1(1, 1)]).unwrap();
        assert_eq!(three.carleson_constant().unwrap(), 2.0);
        let two = SparseCollection::new(m, [m.root(), c1(1, 0)]).unwrap();
        assert_eq!(two.carleson_constant().unwrap(), 1.5);
        let empty = SparseCollection::new(m, []).unwrap();
        assert!(matches!(
            empty.carleson_constant(),
            Err(Error::EmptyCollection)
        ));
    }

    #[test]
    fn generation_examples() {
        let m = model(1, 3);
        let one = SparseCollection::new(m, [m.root()]).unwrap();
        assert!(one.generations(&m.root()).unwrap().generations.is_empty());
        let s = SparseCollection::new(m, [m.root(), c1(1, 0), c1(2, 0)]).unwrap();
        let g = s.generations(&m.root()).unwrap();
        assert_eq!(g.generations, vec![vec![c1(1, 0)], vec![c1(2, 0)]]);
        assert!(g.nested);
        assert_eq!(g.weighted_sum, 1.0);
        assert!((g.bound - 1.75 * 1.75 * 0.5).abs() < 1e-15);
        assert!(s.generations(&c1(1, 1)).is_err());
    }

    #[test]
    fn sparse_function_examples() {
        let m = model(1, 2);
        let s = SparseCollection::new(m, [m.root(), c1(1, 0)]).unwrap();
        let b = sparse_bmo_function::<Exact>(&s, None);
        assert_eq!(
            b.values(),
            exs(&[(2, 1), (2, 1), (1, 1), (1, 1)]).as_slice()
        );
        let bt = sparse_haar_function::<Exact>(&s).unwrap();
        assert_eq!(
            bt.values(),
            exs(&[(-2, 1), (0, 1), (1, 1), (1, 1)]).as_slice()
        );
        let f = StepFunction::new(m, exs(&[(1, 1), (0, 1), (0, 1), (0, 1)])).unwrap();
        let a = sparse_operator(&s, None, &f);
        assert_eq!(
            a.values(),
            exs(&[(3, 4), (3, 4), (1, 4), (1, 4)]).as_slice()
        );
        let deep = SparseCollection::new(m, [c1(2, 1)]).unwrap();
        assert!(sparse_haar_function::<Exact>(&deep).is_err());
    }

    #[test]
    fn tau_examples() {
        let m = model(1, 2);
        let root = SparseCollection::new(m, [m.root()]).unwrap();
        let t = tau_sequence::<Exact>(&root, None);
        assert!(m.cubes().all(|q| t.at(&q).clone() == ex(0, 1)));
        let s = SparseCollection::new(m, [m.root(), c1(1, 0)]).unwrap();
        let t = tau_sequence::<Exact>(&s, None);
        assert_eq!(*t.at(&m.root()), ex(1, 2));
        assert!(m.cubes().skip(1).all(|q| *t.at(&q) == ex(0, 1)));
        let h: StepFunction<Exact> =
            haar_function(&m, &m.root(), &Signature::new(0, 1).unwrap()).unwrap();
        assert_eq!(martingale_transform(&t, &h), h.scale(&ex(1, 2)));
    }

    #[test]
    fn nested_chain_packing() {
        let m = model(1, 6);
        let c = nested_chain(m, 5).unwrap();
        // 1 + 1/2 + … + 1/32
        assert_eq!(c.carleson_constant().unwrap(), 2.0 - 1.0 / 32.0);
    }

    #[test]
    fn random_collections_respect_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=2 {
            let m = model(n, 8 / n);
            for _ in 0..20 {
                let target = rng.gen_range(1.2..4.0);
                let s = random_collection(m, target, m.depth() - 1, &mut rng).unwrap();
                assert!(s.contains(&m.root()));
                assert!(s.carleson_constant().unwrap() <= target);
            }
        }
    }

    proptest! {
        #[test]
        fn sparse_bmo_bounded_by_carleson(seed in 0u64..10_000, n in 1usize..=2) {
            let m = model(n, 8 / n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_collection(m, rng.gen_range(1.1..5.0), m.depth(), &mut rng).unwrap();
            let lambda = s.carleson_constant().unwrap();
            let b = sparse_bmo_function::<f64>(&s, None);
            prop_assert!(bmo_norm(&b, None) <= lambda * (1.0 + 1e-12));
            let g = s.generations(&m.root()).unwrap();
            prop_assert!(g.nested);
            prop_assert!(g.weighted_sum <= g.bound * (1.0 + 1e-12));
        }

        #[test]
        fn tau_bounded(seed in 0u64..10_000) {
            let m = model(2, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_collection(m, rng.gen_range(1.1..4.0), 4, &mut rng).unwrap();
            let lambda = s.carleson_constant().unwrap();
            let t = tau_sequence::<f64>(&s, None);
            prop_assert!(m.cubes().all(|q| *t.at(&q) <= lambda));
        }

        #[test]
        fn carleson_monotone_under_inclusion(seed in 0u64..10_000) {
            let m = model(1, 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_collection(m, 3.0, 7, &mut rng).unwrap();
            let mut bigger = s.cubes().to_vec();
            for _ in 0..5 {
                let k = rng.gen_range(0..=7);
                bigger.push(m.cube(k, rng.gen_range(0..m.cubes_at(k))));
            }
            let t = SparseCollection::new(m, bigger).unwrap();
            prop_assert!(s.carleson_constant().unwrap() <= t.carleson_constant().unwrap());
        }

        #[test]
        fn sparse_operator_positive(seed in 0u64..10_000) {
            let m = model(2, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_collection(m, 2.0, 3, &mut rng).unwrap();
            let w = WeightSpec::Random { seed, log_amplitude: 1.0 }.build_f64(m).unwrap();
            let f = StepFunction::from_fn(m, |_| if rng.gen_bool(0.3) { rng.gen_range(0.0..2.0) } else { 0.0 });
            let a = sparse_operator(&s, Some(&w), &f);
            if f.values().iter().any(|&v| v > 0.0) {
                prop_assert!(a.values().iter().all(|&v| v > 0.0));
            }
        }
    }
}
