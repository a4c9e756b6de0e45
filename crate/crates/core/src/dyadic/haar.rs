use crate::dyadic::model::{sign_on_child, CubeId, DyadicModel, Signature};
use crate::dyadic::step::StepFunction;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coefficients of a step function in the normalized Haar basis, plus its mean
/// over the unit cube.
///
/// Only cubes of level `< depth` carry Haar functions; a finest cell has no
/// children to oscillate across.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarSpectrum<S> {
    model: DyadicModel,
    mean: S,
    coeffs: Vec<Vec<S>>,
}

/// `2^{nk/2} = |Q|^{-1/2}` for a cube at level `k`.
pub fn inv_sqrt_volume<S: Scalar>(model: &DyadicModel, level: usize) -> S {
    S::pow2_half((model.dim() * level) as i32)
}

/// The normalized Haar function `h_Q^ε`; the all-ones signature gives
/// `|Q|^{-1/2} 1_Q`.
pub fn haar_function<S: Scalar>(
    model: &DyadicModel,
    cube: &CubeId,
    sig: &Signature,
) -> Result<StepFunction<S>> {
    model.check(cube)?;
    if cube.level() >= model.depth() {
        return Err(Error::NoHaarFunction);
    }
    let scale: S = inv_sqrt_volume(model, cube.level());
    let mut out = StepFunction::zero(*model);
    for (c, child) in cube.children().enumerate() {
        let v = if sig.is_cancellative() {
            if sig.sign_on_child(c) > 0 {
                scale.clone()
            } else {
                -scale.clone()
            }
        } else {
            scale.clone()
        };
        for cell in model.cells_within(&child) {
            out.values_mut()[cell] = v.clone();
        }
    }
    Ok(out)
}

impl<S: Scalar> HaarSpectrum<S> {
    pub fn zeros(model: DyadicModel) -> Self {
        let m = model.signatures_per_cube();
        HaarSpectrum {
            model,
            mean: S::zero(),
            coeffs: (0..model.depth())
                .map(|k| vec![S::zero(); model.cubes_at(k) * m])
                .collect(),
        }
    }

    pub fn model(&self) -> &DyadicModel {
        &self.model
    }

    /// `∫ f` over the unit cube.
    pub fn mean(&self) -> &S {
        &self.mean
    }

    pub fn set_mean(&mut self, mean: S) {
        self.mean = mean;
    }

    fn slot(&self, cube: &CubeId, sig: &Signature) -> Result<(usize, usize)> {
        self.model.check(cube)?;
        if cube.level() >= self.model.depth() {
            return Err(Error::NoHaarFunction);
        }
        if !sig.is_cancellative() {
            return Err(Error::NonCancellative(sig.bits()));
        }
        let m = self.model.signatures_per_cube();
        Ok((
            cube.level(),
            self.model.index(cube) * m + sig.bits() as usize,
        ))
    }

    pub fn coefficient(&self, cube: &CubeId, sig: &Signature) -> Result<&S> {
        let (k, i) = self.slot(cube, sig)?;
        Ok(&self.coeffs[k][i])
    }

    pub fn set(&mut self, cube: &CubeId, sig: &Signature, value: S) -> Result<()> {
        let (k, i) = self.slot(cube, sig)?;
        self.coeffs[k][i] = value;
        Ok(())
    }

    /// Coefficient of cube `idx` at `level`, signature `bits`.
    pub fn get(&self, level: usize, idx: usize, bits: usize) -> &S {
        &self.coeffs[level][idx * self.model.signatures_per_cube() + bits]
    }

    pub fn get_mut(&mut self, level: usize, idx: usize, bits: usize) -> &mut S {
        let m = self.model.signatures_per_cube();
        &mut self.coeffs[level][idx * m + bits]
    }

    /// All coefficients of one level, `signatures_per_cube` per cube.
    pub fn level(&self, level: usize) -> &[S] {
        &self.coeffs[level]
    }

    pub fn analyze(f: &StepFunction<S>) -> Self {
        let model = *f.model();
        let n = model.dim();
        let m = model.signatures_per_cube();
        let integrals = f.integrals();
        let mut spec = HaarSpectrum::zeros(model);
        spec.mean = integrals.get(0, 0).clone();
        for k in 0..model.depth() {
            let scale: S = inv_sqrt_volume(&model, k);
            let below = integrals.level(k + 1);
            for idx in 0..model.cubes_at(k) {
                let kids = model.children_indices(k, idx);
                for eps in 0..m {
                    let mut acc = S::zero();
                    for (c, &ci) in kids.iter().enumerate() {
                        if sign_on_child(eps, c, n) > 0 {
                            acc += &below[ci];
                        } else {
                            acc -= &below[ci];
                        }
                    }
                    spec.coeffs[k][idx * m + eps] = acc * &scale;
                }
            }
        }
        spec
    }

    pub fn synthesize(&self) -> StepFunction<S> {
        let model = self.model;
        let n = model.dim();
        let m = model.signatures_per_cube();
        let mut avg = vec![self.mean.clone()];
        for k in 0..model.depth() {
            let scale: S = inv_sqrt_volume(&model, k);
            let mut next = vec![S::zero(); model.cubes_at(k + 1)];
            for (idx, a) in avg.iter().enumerate() {
                let cs = &self.coeffs[k][idx * m..(idx + 1) * m];
                for c in 0..model.children_per_cube() {
                    let mut osc = S::zero();
                    for (eps, v) in cs.iter().enumerate() {
                        if sign_on_child(eps, c, n) > 0 {
                            osc += v;
                        } else {
                            osc -= v;
                        }
                    }
                    next[model.child_index(k, idx, c)] = a.clone() + osc * &scale;
                }
            }
            avg = next;
        }
        StepFunction::new(model, avg).expect("finest level has one value per cell")
    }

    /// `Σ (f, h_Q^ε)^2`.
    pub fn energy(&self) -> S {
        self.coeffs
            .iter()
            .flat_map(|l| l.iter())
            .map(|v| v.clone() * v)
            .sum()
    }

    /// Multiplies every coefficient by `factor(level, idx, bits)`.
    pub fn scaled(&self, mut factor: impl FnMut(usize, usize, usize) -> S) -> Self {
        let m = self.model.signatures_per_cube();
        let mut out = self.clone();
        for (k, level) in out.coeffs.iter_mut().enumerate() {
            for (j, v) in level.iter_mut().enumerate() {
                *v = v.clone() * factor(k, j / m, j % m);
            }
        }
        out
    }
}
