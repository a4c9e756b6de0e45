use std::ops::{Add, Mul, Sub};

use crate::dyadic::model::{CubeId, CubeMap, DyadicModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A function constant on every finest cell of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction<S> {
    model: DyadicModel,
    values: Vec<S>,
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(model: DyadicModel, values: Vec<S>) -> Result<Self> {
        if values.len() != model.cell_count() {
            return Err(Error::LengthMismatch {
                expected: model.cell_count(),
                got: values.len(),
            });
        }
        Ok(StepFunction { model, values })
    }

    pub fn constant(model: DyadicModel, c: S) -> Self {
        StepFunction {
            model,
            values: vec![c; model.cell_count()],
        }
    }

    pub fn zero(model: DyadicModel) -> Self {
        Self::constant(model, S::zero())
    }

    pub fn indicator(model: DyadicModel, cube: &CubeId) -> Self {
        let mut f = Self::zero(model);
        for c in model.cells_within(cube) {
            f.values[c] = S::one();
        }
        f
    }

    pub fn from_fn(model: DyadicModel, mut g: impl FnMut(usize) -> S) -> Self {
        StepFunction {
            model,
            values: (0..model.cell_count()).map(&mut g).collect(),
        }
    }

    /// `Σ_Q c_Q 1_Q` for per-cube constants `c`.
    pub fn from_cube_constants(constants: &CubeMap<S>) -> Self {
        let model = *constants.model();
        let mut acc: Vec<S> = constants.level(0).to_vec();
        for k in 1..=model.depth() {
            let here = constants.level(k);
            acc = (0..model.cubes_at(k))
                .map(|i| acc[model.parent_index(k, i)].clone() + &here[i])
                .collect();
        }
        StepFunction { model, values: acc }
    }

    pub fn model(&self) -> &DyadicModel {
        &self.model
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn value(&self, cell: usize) -> &S {
        &self.values[cell]
    }

    pub fn map(&self, g: impl Fn(&S) -> S) -> Self {
        StepFunction {
            model: self.model,
            values: self.values.iter().map(g).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, g: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.same_model(other)?;
        Ok(StepFunction {
            model: self.model,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| g(a, b))
                .collect(),
        })
    }

    pub fn same_model(&self, other: &Self) -> Result<()> {
        if self.model == other.model {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|x| x.abs())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|x| x.clone() * c)
    }

    /// `f · 1_Q`.
    pub fn restrict(&self, cube: &CubeId) -> Self {
        let mut out = Self::zero(self.model);
        for c in self.model.cells_within(cube) {
            out.values[c] = self.values[c].clone();
        }
        out
    }

    pub fn integral(&self) -> S {
        self.values.iter().cloned().sum::<S>() * self.model.cell_volume::<S>()
    }

    pub fn average(&self, cube: &CubeId) -> S {
        let cells = self.model.cells_within(cube);
        let n = cells.len();
        cells.into_iter().map(|c| self.values[c].clone()).sum::<S>() / S::from_usize(n)
    }

    pub fn inner(&self, other: &Self) -> Result<S> {
        self.same_model(other)?;
        let s: S = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.clone() * b)
            .sum();
        Ok(s * self.model.cell_volume::<S>())
    }

    /// `Σ f` over the cells of each cube, i.e. `∫_Q f / |cell|`.
    pub fn cell_sums(&self) -> CubeMap<S> {
        let model = self.model;
        let d = model.depth();
        let mut levels: Vec<Vec<S>> = Vec::with_capacity(d + 1);
        levels.push(self.values.clone());
        for k in (0..d).rev() {
            let below = levels.last().unwrap();
            let mut here = vec![S::zero(); model.cubes_at(k)];
            for (i, v) in below.iter().enumerate() {
                here[model.parent_index(k + 1, i)] += v;
            }
            levels.push(here);
        }
        levels.reverse();
        CubeMap::from_levels(model, levels)
    }

    /// `∫_Q f` for every cube.
    pub fn integrals(&self) -> CubeMap<S> {
        let cell = self.model.cell_volume::<S>();
        let mut sums = self.cell_sums();
        for k in 0..=self.model.depth() {
            for v in sums.level_mut(k) {
                *v *= cell.clone();
            }
        }
        sums
    }

    /// `⟨f⟩_Q` for every cube.
    pub fn averages(&self) -> CubeMap<S> {
        let model = self.model;
        let mut sums = self.cell_sums();
        for k in 0..=model.depth() {
            let count = S::pow2(((model.depth() - k) * model.dim()) as i32);
            for v in sums.level_mut(k) {
                *v = v.clone() / &count;
            }
        }
        sums
    }

    /// The same function on a finer model.
    pub fn refine(&self, depth: usize) -> Result<Self> {
        let fine = self.model.with_depth(depth)?;
        if depth < self.model.depth() {
            return Err(Error::UnsupportedDepth(depth, self.model.depth()));
        }
        let d = self.model.depth();
        Ok(StepFunction::from_fn(fine, |c| {
            self.values[fine.ancestor_index(depth, c, d)].clone()
        }))
    }

    pub fn to_f64(&self) -> StepFunction<f64> {
        StepFunction {
            model: self.model,
            values: self.values.iter().map(|v| v.to_f64()).collect(),
        }
    }

    pub fn from_f64(f: &StepFunction<f64>) -> Self {
        StepFunction {
            model: f.model,
            values: f.values.iter().map(|&v| S::from_f64(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| m.max_of(v.abs()))
    }
}

impl StepFunction<f64> {
    /// `(∫ |f|^p w)^{1/p}`; `w = None` is Lebesgue measure.
    pub fn lp_norm(&self, p: f64, w: Option<&StepFunction<f64>>) -> f64 {
        let vol = self.model.cell_volume::<f64>();
        let s: f64 = match w {
            None => self.values.iter().map(|v| v.abs().powf(p)).sum(),
            Some(w) => self
                .values
                .iter()
                .zip(&w.values)
                .map(|(v, wv)| v.abs().powf(p) * wv)
                .sum(),
        };
        (s * vol).powf(1.0 / p)
    }
}

macro_rules! pointwise_op {
    ($Trait:ident, $method:ident) => {
        impl<'a, 'b, S: Scalar> $Trait<&'b StepFunction<S>> for &'a StepFunction<S> {
            type Output = StepFunction<S>;

            /// Panics when the two functions live on different models.
            fn $method(self, rhs: &'b StepFunction<S>) -> StepFunction<S> {
                assert_eq!(self.model, rhs.model, "functions on different models");
                StepFunction {
                    model: self.model,
                    values: self
                        .values
                        .iter()
                        .zip(&rhs.values)
                        .map(|(a, b)| a.clone().$method(b))
                        .collect(),
                }
            }
        }
    };
}

pointwise_op!(Add, add);
pointwise_op!(Sub, sub);
pointwise_op!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn model(n: usize, d: usize) -> DyadicModel {
        DyadicModel::new(n, d).unwrap()
    }

    #[test]
    fn averages_and_integrals() {
        let m = model(1, 2);
        let f = StepFunction::new(m, vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        assert_eq!(f.integral(), 3.0);
        let avg = f.averages();
        assert_eq!(*avg.get(0, 0), 3.0);
        assert_eq!(avg.level(1), &[1.5, 4.5]);
        assert_eq!(f.integrals().level(1), &[0.75, 2.25]);
        assert_eq!(f.average(&CubeId::new(1, &[1]).unwrap()), 4.5);
    }

    #[test]
    fn cube_constants_push_down() {
        let m = model(2, 2);
        let mut c = CubeMap::filled(m, Exact::from_ratio(0, 1));
        *c.get_mut(0, 0) = Exact::from_ratio(1, 1);
        *c.at_mut(&CubeId::new(1, &[1, 0]).unwrap()) = Exact::from_ratio(1, 2);
        let f = StepFunction::from_cube_constants(&c);
        let q = CubeId::new(1, &[1, 0]).unwrap();
        for cell in 0..m.cell_count() {
            let expect = if q.contains(&m.cell_cube(cell)) {
                (3, 2)
            } else {
                (1, 1)
            };
            assert_eq!(*f.value(cell), Exact::from_ratio(expect.0, expect.1));
        }
    }

    #[test]
    fn refine_preserves_averages() {
        let m = model(2, 2);
        let f = StepFunction::from_fn(m, |c| c as f64);
        let g = f.refine(4).unwrap();
        let (a, b) = (f.averages(), g.averages());
        for k in 0..=2 {
            assert_eq!(a.level(k), b.level(k));
        }
        assert!(f.refine(1).is_err());
    }

    #[test]
    fn pointwise_ops_and_norms() {
        let m = model(1, 1);
        let f = StepFunction::new(m, vec![1.0, -3.0]).unwrap();
        let g = StepFunction::new(m, vec![2.0, 2.0]).unwrap();
        assert_eq!((&f * &g).values(), &[2.0, -6.0]);
        assert_eq!((&f - &g).values(), &[-1.0, -5.0]);
        assert_eq!(f.inner(&g).unwrap(), -2.0);
        assert!((f.lp_norm(2.0, None) - 5f64.sqrt()).abs() < 1e-15);
        assert!((f.lp_norm(2.0, Some(&g)) - 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.max_abs(), 3.0);
        assert!(StepFunction::new(m, vec![1.0]).is_err());
    }
}
