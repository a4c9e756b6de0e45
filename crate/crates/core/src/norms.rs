//! Weighted operator norms on the finite model and the inequality experiments
//! built on them.
//!
//! Operators act on cell-value vectors. The transpose is taken against the
//! Euclidean pairing of cell values, which is the Lebesgue pairing up to the
//! constant cell volume, so the transpose of `Π_b` is `Π*_b`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeId, DyadicModel, HaarSpectrum, StepFunction};
use crate::error::{Error, Result};
use crate::paraproducts::{Paraproduct, ParaproductKind};
use crate::report::{CheckRecord, VerificationReport};
use crate::scalar::ScalarMode;
use crate::sparse::{sparse_operator, SparseCollection};
use crate::weights::{
    ap_characteristic, bmo_norm, conjugate_exponent, BloomTriple, Weight, WeightSpec,
};

/// Iteration cap shared by the iterative estimators.
pub const MAX_ITERATIONS: usize = 10_000;
/// Relative eigen-residual at which the p = 2 iteration stops.
pub const P2_TOLERANCE: f64 = 1e-10;
const START_SEED: u64 = 0x5eed;

/// A linear map on cell-value vectors of one model.
pub trait LinearMap: Sync {
    fn model(&self) -> &DyadicModel;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;

    fn size(&self) -> usize {
        self.model().cell_count()
    }
}

/// Dense matrix of an operator; column `j` is the image of the indicator of
/// cell `j`. Stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    model: DyadicModel,
    size: usize,
    data: Vec<f64>,
}

impl OperatorMatrix {
    pub fn from_columns(model: DyadicModel, columns: Vec<Vec<f64>>) -> Result<Self> {
        let size = model.cell_count();
        if columns.len() != size {
            return Err(Error::LengthMismatch {
                expected: size,
                got: columns.len(),
            });
        }
        let mut data = Vec::with_capacity(size * size);
        for c in columns {
            if c.len() != size {
                return Err(Error::LengthMismatch {
                    expected: size,
                    got: c.len(),
                });
            }
            data.extend(c);
        }
        Ok(OperatorMatrix { model, size, data })
    }

    /// Entry in row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.size + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.size..(j + 1) * self.size]
    }
}

impl LinearMap for OperatorMatrix {
    fn model(&self) -> &DyadicModel {
        &self.model
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, a) in y.iter_mut().zip(self.column(j)) {
                    *yi += a * xj;
                }
            }
        }
        y
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.size)
            .into_par_iter()
            .map(|j| self.column(j).iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}

type CellFn = Box<dyn Fn(&StepFunction<f64>) -> StepFunction<f64> + Send + Sync>;

/// An operator given by its action on step functions, with an optional
/// transpose action and a lazily assembled matrix.
pub struct CellOperator {
    model: DyadicModel,
    forward: CellFn,
    transpose: Option<CellFn>,
    matrix: OnceLock<OperatorMatrix>,
}

impl std::fmt::Debug for CellOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CellOperator")
            .field("model", &self.model)
            .field("assembled", &self.matrix.get().is_some())
            .finish()
    }
}

impl CellOperator {
    pub fn new(
        model: DyadicModel,
        forward: impl Fn(&StepFunction<f64>) -> StepFunction<f64> + Send + Sync + 'static,
    ) -> Self {
        CellOperator {
            model,
            forward: Box::new(forward),
            transpose: None,
            matrix: OnceLock::new(),
        }
    }

    pub fn with_transpose(
        mut self,
        transpose: impl Fn(&StepFunction<f64>) -> StepFunction<f64> + Send + Sync + 'static,
    ) -> Self {
        self.transpose = Some(Box::new(transpose));
        self
    }

    pub fn identity(model: DyadicModel) -> Self {
        CellOperator::new(model, |f| f.clone()).with_transpose(|f| f.clone())
    }

    /// `Π_{b,base}`, `Π*_{b,base}` or `Γ_{b,base}`.
    pub fn paraproduct(kind: ParaproductKind, b: &StepFunction<f64>, base: CubeId) -> Result<Self> {
        let op = Paraproduct::new(kind, b, base)?;
        let adj = op.adjoint();
        Ok(
            CellOperator::new(*b.model(), move |f| op.apply(f).expect("same model"))
                .with_transpose(move |f| adj.apply(f).expect("same model")),
        )
    }

    /// `𝒜^ν_S`, symmetric under the Lebesgue pairing.
    pub fn sparse(coll: &SparseCollection, nu: Option<&Weight<f64>>) -> Self {
        let (c1, c2) = (coll.clone(), coll.clone());
        let (n1, n2) = (nu.cloned(), nu.cloned());
        CellOperator::new(*coll.model(), move |f| sparse_operator(&c1, n1.as_ref(), f))
            .with_transpose(move |f| sparse_operator(&c2, n2.as_ref(), f))
    }

    /// `f ↦ Σ_Q ⟨w⟩_Q^{1/2} Σ_ε (f, h_Q^ε) h_Q^ε`, whose L² norm squared is
    /// `‖S f‖²_{L²(w)}`.
    pub fn square_function_multiplier(w: &Weight<f64>) -> Self {
        let root = w.averages().clone();
        let root = std::sync::Arc::new(root);
        let r2 = root.clone();
        let apply = move |f: &StepFunction<f64>, r: &crate::dyadic::CubeMap<f64>| {
            let mut s = HaarSpectrum::analyze(f).scaled(|k, i, _| r.get(k, i).sqrt());
            s.set_mean(0.0);
            s.synthesize()
        };
        CellOperator::new(*w.model(), move |f| apply(f, &root))
            .with_transpose(move |f| apply(f, &r2))
    }

    /// Column `j` is the operator applied to the indicator of cell `j`;
    /// columns are assembled in parallel on first use.
    pub fn matrix(&self) -> &OperatorMatrix {
        self.matrix.get_or_init(|| {
            let size = self.model.cell_count();
            let columns: Vec<Vec<f64>> = (0..size)
                .into_par_iter()
                .map(|j| {
                    let mut e = StepFunction::zero(self.model);
                    e.values_mut()[j] = 1.0;
                    (self.forward)(&e).into_values()
                })
                .collect();
            OperatorMatrix::from_columns(self.model, columns).expect("square by construction")
        })
    }

    pub fn is_assembled(&self) -> bool {
        self.matrix.get().is_some()
    }

    fn lift(&self, x: &[f64]) -> StepFunction<f64> {
        StepFunction::new(self.model, x.to_vec()).expect("vector sized to the model")
    }
}

impl LinearMap for CellOperator {
    fn model(&self) -> &DyadicModel {
        &self.model
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self.matrix.get() {
            Some(m) => m.apply(x),
            None => (self.forward)(&self.lift(x)).into_values(),
        }
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        match (&self.transpose, self.matrix.get()) {
            (_, Some(m)) => m.apply_transpose(y),
            (Some(t), None) => t(&self.lift(y)).into_values(),
            (None, None) => self.matrix().apply_transpose(y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ExactP2,
    NonlinearPower,
    RandomLowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub p: f64,
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    /// Relative eigen-residual for `exact_p2`; relative change of the ratio in
    /// the last step for `nonlinear_power`.
    pub residual: f64,
    /// Best ratio over random test vectors.
    pub random_lower_bound: f64,
}

fn check_weights(op: &dyn LinearMap, mu: &Weight<f64>, lambda: &Weight<f64>) -> Result<()> {
    if mu.model() != op.model() || lambda.model() != op.model() {
        Err(Error::ModelMismatch)
    } else {
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn random_vector(rng: &mut ChaCha8Rng, size: usize, nonnegative: bool) -> Vec<f64> {
    let lo = if nonnegative { 0.0 } else { -1.0 };
    (0..size).map(|_| rng.gen_range(lo..1.0)).collect()
}

/// `‖T : L²(μ) → L²(λ)‖`, the largest singular value of
/// `D_λ^{1/2} T D_μ^{-1/2}` with `D_w` the diagonal of cell masses.
pub fn operator_norm_p2(
    op: &dyn LinearMap,
    mu: &Weight<f64>,
    lambda: &Weight<f64>,
) -> Result<NormEstimate> {
    check_weights(op, mu, lambda)?;
    let size = op.size();
    let cell = op.model().cell_volume::<f64>();
    let mu_inv: Vec<f64> = mu
        .density()
        .values()
        .iter()
        .map(|m| (m * cell).sqrt().recip())
        .collect();
    let lam: Vec<f64> = lambda.density().values().iter().map(|l| l * cell).collect();
    let scaled =
        |x: &[f64], d: &[f64]| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a * b).collect() };
    let normal = |x: &[f64]| -> Vec<f64> {
        let y = op.apply(&scaled(x, &mu_inv));
        scaled(&op.apply_transpose(&scaled(&y, &lam)), &mu_inv)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let starts = [random_vector(&mut rng, size, false), vec![1.0; size]];
    let mut best: Option<(f64, usize, f64)> = None;
    let mut failure = None;
    let mut lower = 0.0f64;
    for start in starts {
        let mut x = start;
        if normalize(&mut x) == 0.0 {
            continue;
        }
        let mut done = None;
        let mut last = (0.0, f64::INFINITY);
        for it in 1..=MAX_ITERATIONS {
            let mut y = normal(&x);
            let theta = dot(&x, &y);
            lower = lower.max(theta.max(0.0).sqrt());
            let res: f64 = y
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - theta * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let rel = if theta > 0.0 { res / theta } else { res };
            last = (theta, rel);
            if rel <= P2_TOLERANCE || theta <= 0.0 && res == 0.0 {
                done = Some((theta.max(0.0).sqrt(), it, rel));
                break;
            }
            if normalize(&mut y) == 0.0 {
                done = Some((0.0, it, 0.0));
                break;
            }
            x = y;
        }
        match done {
            Some(d) => {
                if best.is_none_or(|b| d.0 > b.0) {
                    best = Some(d);
                }
            }
            None => failure = Some(last.1),
        }
    }
    match (best, failure) {
        (Some((value, iterations, residual)), None) => Ok(NormEstimate {
            p: 2.0,
            value,
            method: NormMethod::ExactP2,
            iterations,
            residual,
            random_lower_bound: lower,
        }),
        (_, Some(residual)) => Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        }),
        (None, None) => Ok(NormEstimate {
            p: 2.0,
            value: 0.0,
            method: NormMethod::ExactP2,
            iterations: 0,
            residual: 0.0,
            random_lower_bound: 0.0,
        }),
    }
}

/// Settings of the nonlinear power iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Draw only nonnegative starting vectors.
    pub nonnegative: bool,
    /// Random vectors tried for the plain lower bound.
    pub random_samples: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            starts: 4,
            seed: START_SEED,
            max_iterations: MAX_ITERATIONS,
            tolerance: 1e-13,
            nonnegative: false,
            random_samples: 32,
        }
    }
}

fn signed_pow(t: f64, e: f64) -> f64 {
    t.signum() * t.abs().powf(e)
}

struct LpProblem<'a> {
    op: &'a dyn LinearMap,
    p: f64,
    mu: Vec<f64>,
    lambda: Vec<f64>,
}

impl LpProblem<'_> {
    fn norm(&self, x: &[f64], w: &[f64]) -> f64 {
        x.iter()
            .zip(w)
            .map(|(v, m)| m * v.abs().powf(self.p))
            .sum::<f64>()
            .powf(1.0 / self.p)
    }

    fn ratio(&self, x: &[f64]) -> f64 {
        let den = self.norm(x, &self.mu);
        if den == 0.0 {
            0.0
        } else {
            self.norm(&self.op.apply(x), &self.lambda) / den
        }
    }

    /// `f ↦ φ_{p'}(T^t(λ φ_p(T f)) / μ)` with `φ_q(t) = |t|^{q-1} sgn t`.
    fn step(&self, x: &[f64]) -> Vec<f64> {
        let y = self.op.apply(x);
        let z: Vec<f64> = y
            .iter()
            .zip(&self.lambda)
            .map(|(v, l)| l * signed_pow(*v, self.p - 1.0))
            .collect();
        let pp = conjugate_exponent(self.p);
        self.op
            .apply_transpose(&z)
            .iter()
            .zip(&self.mu)
            .map(|(v, m)| signed_pow(v / m, pp - 1.0))
            .collect()
    }
}

/// Lower estimate of `‖T : L^p(μ) → L^p(λ)‖` by nonlinear power iteration
/// from several starts, cross-checked against random test vectors.
pub fn operator_norm_lp(
    op: &dyn LinearMap,
    mu: &Weight<f64>,
    lambda: &Weight<f64>,
    p: f64,
    opts: &LpOptions,
) -> Result<NormEstimate> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    check_weights(op, mu, lambda)?;
    let size = op.size();
    let cell = op.model().cell_volume::<f64>();
    let prob = LpProblem {
        op,
        p,
        mu: mu.density().values().iter().map(|m| m * cell).collect(),
        lambda: lambda.density().values().iter().map(|l| l * cell).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_lower = 0.0f64;
    for _ in 0..opts.random_samples {
        random_lower =
            random_lower.max(prob.ratio(&random_vector(&mut rng, size, opts.nonnegative)));
    }

    let mut starts = vec![vec![1.0; size]];
    for _ in 1..opts.starts.max(1) {
        starts.push(random_vector(&mut rng, size, opts.nonnegative));
    }
    let mut best = (0.0f64, 0usize, 0.0f64);
    for mut x in starts {
        let mut r = prob.ratio(&x);
        let mut residual = f64::INFINITY;
        let mut it = 0;
        while it < opts.max_iterations {
            it += 1;
            let mut next = prob.step(&x);
            let n = prob.norm(&next, &prob.mu);
            if n == 0.0 {
                residual = 0.0;
                break;
            }
            next.iter_mut().for_each(|v| *v /= n);
            let rn = prob.ratio(&next);
            residual = if rn > 0.0 { (rn - r).abs() / rn } else { 0.0 };
            x = next;
            r = r.max(rn);
            if residual <= opts.tolerance {
                break;
            }
        }
        if r > best.0 {
            best = (r, it, residual);
        }
    }
    let (value, method) = if random_lower > best.0 {
        (random_lower, NormMethod::RandomLowerBound)
    } else {
        (best.0, NormMethod::NonlinearPower)
    };
    Ok(NormEstimate {
        p,
        value,
        method,
        iterations: best.1,
        residual: best.2,
        random_lower_bound: random_lower,
    })
}

/// Exact at `p = 2`, a lower estimate otherwise.
pub fn operator_norm(
    op: &dyn LinearMap,
    mu: &Weight<f64>,
    lambda: &Weight<f64>,
    p: f64,
    opts: &LpOptions,
) -> Result<NormEstimate> {
    if p == 2.0 {
        operator_norm_p2(op, mu, lambda)
    } else {
        operator_norm_lp(op, mu, lambda, p, opts)
    }
}

/// `Λ^{p+p'-2} p p' [μ]_{A_p}^{1/(p-1)} [λ]_{A_p}`.
pub fn bloom_sparse_constant(carleson: f64, p: f64, mu_char: f64, lambda_char: f64) -> f64 {
    let pp = conjugate_exponent(p);
    carleson.powf(p + pp - 2.0) * p * pp * mu_char.powf(1.0 / (p - 1.0)) * lambda_char
}

/// Checks `‖𝒜^ν_S : L^p(μ) → L^p(λ)‖` against the explicit Bloom constant,
/// with `ν = μ^{1/p} λ^{-1/p}`. `samples` sets the random starts at `p ≠ 2`.
pub fn verify_bloom_sparse_bound(
    coll: &SparseCollection,
    mu: &Weight<f64>,
    lambda: &Weight<f64>,
    p: f64,
    samples: usize,
) -> Result<VerificationReport> {
    let triple = BloomTriple::new(mu.clone(), lambda.clone(), p)?;
    let op = CellOperator::sparse(coll, Some(&triple.nu));
    let opts = LpOptions {
        starts: samples.max(1),
        ..LpOptions::default()
    };
    let est = operator_norm(&op, mu, lambda, p, &opts)?;
    let carleson = coll.carleson_constant()?;
    let (mc, lc) = (
        ap_characteristic(mu, p)?.value,
        ap_characteristic(lambda, p)?.value,
    );
    let bound = bloom_sparse_constant(carleson, p, mc, lc);
    let mut report = VerificationReport::new("bloom-sparse", ScalarMode::Float);
    report.push(
        CheckRecord::bound_with_tol(
            "sparse operator Bloom bound",
            est.value,
            bound,
            1e-9,
            "bloom-sparse-bound",
        )
        .with_detail(format!(
            "p={p} carleson={carleson} [mu]={mc} [lambda]={lc} method={:?}",
            est.method
        )),
    );
    report.push(CheckRecord::report(
        "sparse operator Bloom slack",
        1.0 - est.value / bound,
        "bloom-sparse-bound",
    ));
    Ok(report)
}

/// Records `‖Π_b : L^p(μ) → L^p(λ)‖ / (‖b‖_{BMO(ν)} [μ]^{1/(p-1)} [λ])`.
pub fn verify_paraproduct_bloom_bound(
    b: &StepFunction<f64>,
    mu: &Weight<f64>,
    lambda: &Weight<f64>,
    p: f64,
) -> Result<VerificationReport> {
    let triple = BloomTriple::new(mu.clone(), lambda.clone(), p)?;
    let b_norm = bmo_norm(b, Some(&triple.nu));
    if b_norm == 0.0 {
        return Err(Error::ZeroBmoNorm);
    }
    let model = *b.model();
    let op = CellOperator::paraproduct(ParaproductKind::Pi, b, model.root())?;
    let est = operator_norm(&op, mu, lambda, p, &LpOptions::default())?;
    let (mc, lc) = (
        ap_characteristic(mu, p)?.value,
        ap_characteristic(lambda, p)?.value,
    );
    let ratio = est.value / (b_norm * mc.powf(1.0 / (p - 1.0)) * lc);
    let mut report = VerificationReport::new("bloom-paraproduct", ScalarMode::Float);
    report.push(
        CheckRecord::exact(
            "paraproduct Bloom ratio finite",
            ratio.is_finite(),
            ratio,
            "bloom-paraproduct-bound",
        )
        .with_detail(format!(
            "norm={} bmo_nu={b_norm} [mu]={mc} [lambda]={lc}",
            est.value
        )),
    );
    Ok(report)
}

/// One power weight of the sharpness experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub ap_char: f64,
    /// `‖Π_w : L²(w) → L²(w^{-1})‖`.
    pub norm_pi: f64,
    /// `‖S : L²(w) → L²(w)‖`.
    pub norm_square: f64,
    /// `‖w‖_{BMO(w)}`.
    pub bmo_w: f64,
    pub bounds_ok: bool,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "alpha,ap_char,norm_pi,norm_square,bmo_w,bounds_ok";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.alpha, self.ap_char, self.norm_pi, self.norm_square, self.bmo_w, self.bounds_ok
        )
    }

    /// `‖w‖_{BMO(w)} ≤ 2`.
    pub fn bmo_ok(&self) -> bool {
        self.bmo_w <= 2.0 * (1.0 + 1e-12)
    }

    /// `‖w‖_{BMO(w)} ≤ 2 ‖Π_w‖`.
    pub fn lower_ok(&self) -> bool {
        self.bmo_w <= 2.0 * self.norm_pi * (1.0 + 1e-12)
    }

    /// `‖S‖² ≤ (1 + 2 ‖Π_w‖)(1 + 10^{-8})`.
    pub fn square_ok(&self) -> bool {
        self.norm_square.powi(2) <= (1.0 + 2.0 * self.norm_pi) * (1.0 + 1e-8)
    }
}

pub const MAX_SWEEP_ALPHA: f64 = 0.95;

pub fn sweep_row(alpha: f64, model: DyadicModel) -> Result<SweepRow> {
    if !(alpha.abs() < MAX_SWEEP_ALPHA) {
        return Err(Error::InvalidExponent(alpha));
    }
    let w = WeightSpec::Power { alpha }.build_f64(model)?;
    let w_inv = w.power(-1.0);
    let ap_char = ap_characteristic(&w, 2.0)?.value;
    let pi = CellOperator::paraproduct(ParaproductKind::Pi, w.density(), model.root())?;
    let norm_pi = operator_norm_p2(&pi, &w, &w_inv)?.value;
    let sq = CellOperator::square_function_multiplier(&w);
    let norm_square = operator_norm_p2(&sq, &w, &Weight::unit(model))?.value;
    let bmo_w = bmo_norm(w.density(), Some(&w));
    let mut row = SweepRow {
        alpha,
        ap_char,
        norm_pi,
        norm_square,
        bmo_w,
        bounds_ok: false,
    };
    row.bounds_ok = row.bmo_ok() && row.lower_ok() && row.square_ok();
    Ok(row)
}

/// Power weights `x^α` (product over coordinates) at the given model; rows
/// are computed in parallel and returned in input order.
pub fn sharpness_sweep(alphas: &[f64], model: DyadicModel) -> Result<Vec<SweepRow>> {
    alphas.par_iter().map(|&a| sweep_row(a, model)).collect()
}

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Root-mean-square residual in log space.
    pub rms_residual: f64,
    pub points: usize,
}

pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::EmptyCollection);
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Parse(
            "log-log fit needs two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LogLogFit {
        slope,
        intercept,
        slope_stderr,
        rms_residual: (sse / nf).sqrt(),
        points: n,
    })
}
