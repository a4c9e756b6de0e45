//! The dyadic paraproducts `Π_b`, `Π*_b`, `Γ_b`, their truncations, and the
//! identities tying them to pointwise products and sparse operators.

use serde::{Deserialize, Serialize};

use crate::dyadic::{inv_sqrt_volume, CubeId, CubeMap, DyadicModel, HaarSpectrum, StepFunction};
use crate::error::{Error, Result};
use crate::report::{CheckRecord, VerificationReport};
use crate::scalar::Scalar;
use crate::sparse::{
    martingale_transform, sparse_bmo_function, sparse_operator, tau_sequence, SparseCollection,
    TauSequence,
};
use crate::weights::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParaproductKind {
    /// `Σ (b, h_Q^ε) ⟨f⟩_Q h_Q^ε`
    Pi,
    /// `Σ (b, h_Q^ε) (f, h_Q^ε) 1_Q / |Q|`
    PiStar,
    /// `Σ_{ε ≠ η} (b, h_Q^ε) (f, h_Q^η) h_Q^ε h_Q^η`, only for `n ≥ 2`
    Gamma,
}

impl ParaproductKind {
    /// The kind of the adjoint under the Lebesgue pairing.
    pub fn adjoint(self) -> Self {
        match self {
            ParaproductKind::Pi => ParaproductKind::PiStar,
            ParaproductKind::PiStar => ParaproductKind::Pi,
            ParaproductKind::Gamma => ParaproductKind::Gamma,
        }
    }
}

/// A paraproduct with a fixed symbol, restricted to cubes inside `base`.
#[derive(Clone, Debug)]
pub struct Paraproduct<S> {
    kind: ParaproductKind,
    base: CubeId,
    symbol: HaarSpectrum<S>,
}

impl<S: Scalar> Paraproduct<S> {
    pub fn new(kind: ParaproductKind, b: &StepFunction<S>, base: CubeId) -> Result<Self> {
        let model = *b.model();
        model.check(&base)?;
        if kind == ParaproductKind::Gamma && model.dim() < 2 {
            return Err(Error::UnsupportedDimension(model.dim()));
        }
        Ok(Paraproduct {
            kind,
            base,
            symbol: HaarSpectrum::analyze(b),
        })
    }

    pub fn kind(&self) -> ParaproductKind {
        self.kind
    }

    pub fn base(&self) -> &CubeId {
        &self.base
    }

    pub fn model(&self) -> &DyadicModel {
        self.symbol.model()
    }

    pub fn symbol(&self) -> &HaarSpectrum<S> {
        &self.symbol
    }

    /// The adjoint operator, same symbol and base.
    pub fn adjoint(&self) -> Self {
        Paraproduct {
            kind: self.kind.adjoint(),
            base: self.base,
            symbol: self.symbol.clone(),
        }
    }

    pub fn apply(&self, f: &StepFunction<S>) -> Result<StepFunction<S>> {
        let model = *self.model();
        if *f.model() != model {
            return Err(Error::ModelMismatch);
        }
        Ok(match self.kind {
            ParaproductKind::Pi => self.apply_pi(f),
            ParaproductKind::PiStar => self.apply_pi_star(f),
            ParaproductKind::Gamma => self.apply_gamma(f),
        })
    }

    fn levels(&self) -> std::ops::Range<usize> {
        self.base.level()..self.model().depth()
    }

    fn apply_pi(&self, f: &StepFunction<S>) -> StepFunction<S> {
        let model = *self.model();
        let m = model.signatures_per_cube();
        let avg = f.averages();
        let mut out = HaarSpectrum::zeros(model);
        for k in self.levels() {
            for i in model.indices_within(&self.base, k) {
                let a = avg.get(k, i);
                for e in 0..m {
                    *out.get_mut(k, i, e) = self.symbol.get(k, i, e).clone() * a;
                }
            }
        }
        out.synthesize()
    }

    fn apply_pi_star(&self, f: &StepFunction<S>) -> StepFunction<S> {
        let model = *self.model();
        let m = model.signatures_per_cube();
        let fs = HaarSpectrum::analyze(f);
        let mut consts = CubeMap::filled(model, S::zero());
        for k in self.levels() {
            let inv_vol = S::pow2((model.dim() * k) as i32);
            for i in model.indices_within(&self.base, k) {
                let mut acc = S::zero();
                for e in 0..m {
                    acc += self.symbol.get(k, i, e).clone() * fs.get(k, i, e);
                }
                *consts.get_mut(k, i) = acc * &inv_vol;
            }
        }
        StepFunction::from_cube_constants(&consts)
    }

    fn apply_gamma(&self, f: &StepFunction<S>) -> StepFunction<S> {
        let model = *self.model();
        let n = model.dim();
        let m = model.signatures_per_cube();
        let fs = HaarSpectrum::analyze(f);
        // h^ε h^η is constant on each child of Q, with value sign·sign/|Q|
        let mut consts = CubeMap::filled(model, S::zero());
        for k in self.levels() {
            let inv_vol = S::pow2((n * k) as i32);
            for i in model.indices_within(&self.base, k) {
                for c in 0..model.children_per_cube() {
                    let mut acc = S::zero();
                    for e in 0..m {
                        let be = self.symbol.get(k, i, e);
                        if be.is_zero() {
                            continue;
                        }
                        let se = crate::dyadic::sign_on_child(e, c, n);
                        for h in (0..m).filter(|&h| h != e) {
                            let t = be.clone() * fs.get(k, i, h);
                            if se * crate::dyadic::sign_on_child(h, c, n) > 0 {
                                acc += t;
                            } else {
                                acc -= t;
                            }
                        }
                    }
                    *consts.get_mut(k + 1, model.child_index(k, i, c)) = acc * &inv_vol;
                }
            }
        }
        StepFunction::from_cube_constants(&consts)
    }
}

/// `Π_{b,base} f`, `Π*_{b,base} f` or `Γ_{b,base} f`.
pub fn paraproduct<S: Scalar>(
    kind: ParaproductKind,
    b: &StepFunction<S>,
    f: &StepFunction<S>,
    base: &CubeId,
) -> Result<StepFunction<S>> {
    Paraproduct::new(kind, b, *base)?.apply(f)
}

/// `⟨b⟩⟨f⟩ + Π_b f + Π*_b f + Π_f b (+ Γ_b f for n ≥ 2)`, which equals `bf`.
pub fn product_expansion<S: Scalar>(
    b: &StepFunction<S>,
    f: &StepFunction<S>,
) -> Result<StepFunction<S>> {
    let model = *b.model();
    let root = model.root();
    let mut out = StepFunction::constant(model, b.average(&root) * f.average(&root));
    out = &out + &paraproduct(ParaproductKind::Pi, b, f, &root)?;
    out = &out + &paraproduct(ParaproductKind::PiStar, b, f, &root)?;
    out = &out + &paraproduct(ParaproductKind::Pi, f, b, &root)?;
    if model.dim() >= 2 {
        out = &out + &paraproduct(ParaproductKind::Gamma, b, f, &root)?;
    }
    Ok(out)
}

pub fn product_decomposition_check<S: Scalar>(
    b: &StepFunction<S>,
    f: &StepFunction<S>,
) -> Result<VerificationReport> {
    b.same_model(f)?;
    let mut report = VerificationReport::new("product-decomposition", S::MODE);
    report.push(CheckRecord::identity(
        "product equals mean term plus paraproducts",
        &(b * f),
        &product_expansion(b, f)?,
        "product-decomposition",
    ));
    Ok(report)
}

/// `Π_b f + Π*_b f + T_τ f (+ Γ_b f for n ≥ 2) + ⟨b⟩⟨f⟩` for `b = b_S^w`,
/// `τ = τ_S^w`; equals `𝒜^w_S f`.
pub fn sparse_operator_expansion<S: Scalar>(
    coll: &SparseCollection,
    w: Option<&Weight<S>>,
    f: &StepFunction<S>,
) -> Result<StepFunction<S>> {
    let model = *coll.model();
    let root = model.root();
    let b = sparse_bmo_function(coll, w);
    let tau = tau_sequence(coll, w);
    let mut out = &paraproduct(ParaproductKind::Pi, &b, f, &root)?
        + &paraproduct(ParaproductKind::PiStar, &b, f, &root)?;
    out = &out + &martingale_transform(&tau, f);
    if model.dim() >= 2 {
        out = &out + &paraproduct(ParaproductKind::Gamma, &b, f, &root)?;
    }
    let correction = b.average(&root) * f.average(&root);
    Ok(out.map(|v| v.clone() + &correction))
}

pub fn spm_decomposition_check<S: Scalar>(
    coll: &SparseCollection,
    w: Option<&Weight<S>>,
    f: &StepFunction<S>,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("sparse-operator-decomposition", S::MODE);
    report.push(CheckRecord::identity(
        "sparse operator equals paraproducts plus martingale transform",
        &sparse_operator(coll, w, f),
        &sparse_operator_expansion(coll, w, f)?,
        "sparse-operator-decomposition",
    ));
    Ok(report)
}

/// The Haar multiplier `f ↦ Σ_J φ_J (f, h_J) h_J` with
/// `φ_J = (b_S^w - ⟨b_S^w⟩_J) 1_J + τ_J 1_J`.
#[derive(Clone, Debug)]
pub struct HaarMultiplier<S> {
    b: StepFunction<S>,
    b_averages: CubeMap<S>,
    tau: TauSequence<S>,
}

pub fn haar_multiplier_form<S: Scalar>(
    coll: &SparseCollection,
    w: Option<&Weight<S>>,
) -> HaarMultiplier<S> {
    let b = sparse_bmo_function(coll, w);
    HaarMultiplier {
        b_averages: b.averages(),
        tau: tau_sequence(coll, w),
        b,
    }
}

impl<S: Scalar> HaarMultiplier<S> {
    /// `φ_J` as a step function.
    pub fn symbol(&self, cube: &CubeId) -> StepFunction<S> {
        let model = *self.b.model();
        let shift = self.tau.at(cube).clone() - self.b_averages.at(cube);
        let mut out = StepFunction::zero(model);
        for c in model.cells_within(cube) {
            out.values_mut()[c] = self.b.value(c).clone() + &shift;
        }
        out
    }

    pub fn apply(&self, f: &StepFunction<S>) -> StepFunction<S> {
        let model = *self.b.model();
        haar_multiplier_apply(&model, f, |k, i, cell| {
            self.b.value(cell).clone() - self.b_averages.get(k, i) + self.tau.values().get(k, i)
        })
    }
}

/// `Σ_J (b - ⟨b⟩_J)(f, h_J) h_J`.
pub fn oscillation_multiplier<S: Scalar>(
    b: &StepFunction<S>,
    f: &StepFunction<S>,
) -> StepFunction<S> {
    let model = *b.model();
    let avg = b.averages();
    haar_multiplier_apply(&model, f, |k, i, cell| {
        b.value(cell).clone() - avg.get(k, i)
    })
}

/// `Σ_J φ_J(x) Σ_ε (f, h_J^ε) h_J^ε(x)` for a cellwise symbol `φ(level, idx, cell)`.
fn haar_multiplier_apply<S: Scalar>(
    model: &DyadicModel,
    f: &StepFunction<S>,
    phi: impl Fn(usize, usize, usize) -> S,
) -> StepFunction<S> {
    let n = model.dim();
    let d = model.depth();
    let m = model.signatures_per_cube();
    let spec = HaarSpectrum::analyze(f);
    // local[k][child] = Σ_ε (f, h_J^ε) h_J^ε on that child of the level-k cube J
    let local: Vec<Vec<S>> = (0..d)
        .map(|k| {
            let scale: S = inv_sqrt_volume(model, k);
            (0..model.cubes_at(k + 1))
                .map(|ci| {
                    let pi = model.parent_index(k + 1, ci);
                    let c = model.child_bits(k + 1, ci);
                    let mut acc = S::zero();
                    for e in 0..m {
                        if crate::dyadic::sign_on_child(e, c, n) > 0 {
                            acc += spec.get(k, pi, e);
                        } else {
                            acc -= spec.get(k, pi, e);
                        }
                    }
                    acc * &scale
                })
                .collect()
        })
        .collect();
    StepFunction::from_fn(*model, |cell| {
        let mut acc = S::zero();
        for k in 0..d {
            let ci = model.ancestor_index(d, cell, k + 1);
            let g = &local[k][ci];
            if !g.is_zero() {
                acc += phi(k, model.parent_index(k + 1, ci), cell) * g;
            }
        }
        acc
    })
}

/// `Π^▷_b f(x) = max_{x ∈ P ⊊ base} |Σ_{P ⊊ Q ⊆ base} (b, h_Q) ⟨f⟩_Q h_Q(x)|`.
pub fn maximal_truncation<S: Scalar>(
    b: &StepFunction<S>,
    f: &StepFunction<S>,
    base: &CubeId,
) -> Result<StepFunction<S>> {
    b.same_model(f)?;
    let model = *b.model();
    model.check(base)?;
    let mut out = StepFunction::zero(model);
    for (cell, _, best) in truncation_walk(&HaarSpectrum::analyze(b), &f.averages(), base) {
        out.values_mut()[cell] = best;
    }
    Ok(out)
}

/// Walks from `base` to its cells accumulating `Σ (b, h_Q) ⟨f⟩_Q h_Q(x)` over
/// `Q ⊆ base`. Yields `(cell, Π_{b,base} f(cell), Π^▷_b f(cell))`.
pub(crate) fn truncation_walk<S: Scalar>(
    spec: &HaarSpectrum<S>,
    favg: &CubeMap<S>,
    base: &CubeId,
) -> Vec<(usize, S, S)> {
    let model = *spec.model();
    let n = model.dim();
    let m = model.signatures_per_cube();
    let mut cur = vec![(model.index(base), S::zero(), S::zero())];
    for k in base.level()..model.depth() {
        let scale: S = inv_sqrt_volume(&model, k);
        let mut next = Vec::with_capacity(cur.len() << n);
        for (i, partial, best) in cur {
            let fa = favg.get(k, i);
            for c in 0..model.children_per_cube() {
                let mut t = S::zero();
                for e in 0..m {
                    let v = spec.get(k, i, e);
                    if crate::dyadic::sign_on_child(e, c, n) > 0 {
                        t += v;
                    } else {
                        t -= v;
                    }
                }
                let p = partial.clone() + t * &scale * fa;
                let b2 = best.clone().max_of(p.abs());
                next.push((model.child_index(k, i, c), p, b2));
            }
        }
        cur = next;
    }
    cur
}

/// The dyadic square function, squared pointwise, with its weighted norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareFunction<S> {
    /// `Σ_I Σ_ε (f, h_I^ε)^2 1_I / |I|`.
    pub squared: StepFunction<S>,
    /// `Σ_I Σ_ε (f, h_I^ε)^2 ⟨w⟩_I`.
    pub weighted_norm_squared: S,
}

impl<S: Scalar> SquareFunction<S> {
    pub fn pointwise(&self) -> StepFunction<f64> {
        self.squared.to_f64().map(|v| v.sqrt())
    }
}

pub fn square_function<S: Scalar>(f: &StepFunction<S>, w: Option<&Weight<S>>) -> SquareFunction<S> {
    let model = *f.model();
    let m = model.signatures_per_cube();
    let spec = HaarSpectrum::analyze(f);
    let mut consts = CubeMap::filled(model, S::zero());
    let mut norm = S::zero();
    for k in 0..model.depth() {
        let inv_vol = S::pow2((model.dim() * k) as i32);
        for i in 0..model.cubes_at(k) {
            let e: S = (0..m)
                .map(|e| spec.get(k, i, e).clone() * spec.get(k, i, e))
                .sum();
            if e.is_zero() {
                continue;
            }
            norm += match w {
                Some(w) => e.clone() * w.averages().get(k, i),
                None => e.clone(),
            };
            *consts.get_mut(k, i) = e * &inv_vol;
        }
    }
    SquareFunction {
        squared: StepFunction::from_cube_constants(&consts),
        weighted_norm_squared: norm,
    }
}

/// `Π*_a Π_b f = Σ_{Q ⊆ base} Σ_ε (a, h_Q^ε)(b, h_Q^ε) ⟨f⟩_Q 1_Q / |Q|`,
/// evaluated from the formula.
pub fn composition<S: Scalar>(
    a: &StepFunction<S>,
    b: &StepFunction<S>,
    f: &StepFunction<S>,
    base: &CubeId,
) -> Result<StepFunction<S>> {
    a.same_model(b)?;
    a.same_model(f)?;
    let model = *a.model();
    model.check(base)?;
    let m = model.signatures_per_cube();
    let (sa, sb) = (HaarSpectrum::analyze(a), HaarSpectrum::analyze(b));
    let favg = f.averages();
    let mut consts = CubeMap::filled(model, S::zero());
    for k in base.level()..model.depth() {
        let inv_vol = S::pow2((model.dim() * k) as i32);
        for i in model.indices_within(base, k) {
            let ab: S = (0..m)
                .map(|e| sa.get(k, i, e).clone() * sb.get(k, i, e))
                .sum();
            *consts.get_mut(k, i) = ab * favg.get(k, i) * &inv_vol;
        }
    }
    Ok(StepFunction::from_cube_constants(&consts))
}
