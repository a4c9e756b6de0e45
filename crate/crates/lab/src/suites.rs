//! The verification suites behind each subcommand.

use std::collections::BTreeMap;
use std::str::FromStr;

use dyadic_core::domination::{
    dominate_bilinear, dominate_paraproduct, oscillation_domination, DominationResult,
};
use dyadic_core::norms::{
    log_log_fit, operator_norm, operator_norm_p2, sharpness_sweep, verify_bloom_sparse_bound,
    CellOperator, LogLogFit, LpOptions, NormEstimate, SweepRow,
};
use dyadic_core::paraproducts::{
    composition, paraproduct, product_decomposition_check, product_expansion,
    spm_decomposition_check, square_function, ParaproductKind,
};
use dyadic_core::report::{CheckRecord, VerificationReport};
use dyadic_core::sparse::{
    nested_chain, random_collection, sparse_bmo_function, sparse_haar_function, sparse_operator,
    tau_sequence, SparseCollection,
};
use dyadic_core::weights::{
    ap_characteristic, bmo_norm, conjugate_exponent, weighted_maximal, BloomTriple, Weight,
    WeightSpec,
};
use dyadic_core::{
    haar_function, CubeId, DyadicModel, HaarSpectrum, Scalar, ScalarMode, Signature, StepFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    CollectionSpec, DominationAlgorithm, ExperimentConfig, FunctionSpec, OperatorSpec,
};
use crate::error::LabError;

/// Relative tolerance of every explicit-constant bound.
pub const BOUND_TOL: f64 = 1e-9;

/// Independent random streams derived from the run seed.
mod stream {
    pub const COLLECTION: u64 = 1;
    pub const FUNCTIONS: u64 = 2;
    pub const IDENTITIES: u64 = 3;
    pub const BOUNDS: u64 = 4;
    pub const NORM: u64 = 5;
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A finished run: its report and the files it produced, by file name.
#[derive(Debug)]
pub struct Outcome {
    pub report: VerificationReport,
    pub files: Vec<(String, Vec<u8>)>,
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, LabError> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

impl Outcome {
    fn new(report: VerificationReport) -> Result<Self, LabError> {
        let name = format!("{}_report.json", report.suite);
        let bytes = json_bytes(&report)?;
        Ok(Outcome {
            report,
            files: vec![(name, bytes)],
        })
    }
}

/// Weights, collection and functions materialized from a configuration.
pub struct Inputs {
    pub model: DyadicModel,
    pub weights: BTreeMap<String, Weight<f64>>,
    pub collection: SparseCollection,
    seed: u64,
}

impl Inputs {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, LabError> {
        let model = cfg.dyadic_model()?;
        let mut weights = BTreeMap::new();
        weights.insert("unit".to_string(), Weight::unit(model));
        for (name, spec) in &cfg.weights {
            weights.insert(name.clone(), spec.build_f64(model)?);
        }
        let collection = match &cfg.collection {
            CollectionSpec::Explicit { cubes } => {
                SparseCollection::new(model, cubes.iter().copied())?
            }
            CollectionSpec::Random {
                seed,
                target_lambda,
                max_level,
            } => {
                let mut rng = match seed {
                    Some(s) => ChaCha8Rng::seed_from_u64(*s),
                    None => rng_for(cfg.seed, stream::COLLECTION),
                };
                random_collection(
                    model,
                    *target_lambda,
                    max_level.unwrap_or(model.depth()),
                    &mut rng,
                )?
            }
            CollectionSpec::Chain { max_level } => {
                nested_chain(model, max_level.unwrap_or(model.depth()))?
            }
        };
        Ok(Inputs {
            model,
            weights,
            collection,
            seed: cfg.seed,
        })
    }

    pub fn weight(&self, name: &str) -> Result<&Weight<f64>, LabError> {
        self.weights
            .get(name)
            .ok_or_else(|| LabError::Config(format!("weights: unknown weight `{name}`")))
    }

    pub fn function(
        &self,
        spec: &FunctionSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<StepFunction<f64>, LabError> {
        let m = self.model;
        Ok(match spec {
            FunctionSpec::Constant { value } => StepFunction::constant(m, *value),
            FunctionSpec::Cells { values } => StepFunction::new(m, values.clone())?,
            FunctionSpec::Weight { name } => self.weight(name)?.density().clone(),
            FunctionSpec::SparseBmo { weight, noise } => {
                let w = weight.as_deref().map(|n| self.weight(n)).transpose()?;
                let b = sparse_bmo_function(&self.collection, w);
                let a = noise.abs();
                let eta =
                    StepFunction::from_fn(m, |_| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 });
                &b + &eta
            }
            FunctionSpec::Random {
                amplitude,
                zero_fraction,
            } => {
                let a = amplitude.abs();
                let z = zero_fraction.clamp(0.0, 1.0);
                StepFunction::from_fn(m, |_| {
                    if rng.gen_bool(z) || a == 0.0 {
                        0.0
                    } else {
                        rng.gen_range(-a..=a)
                    }
                })
            }
            FunctionSpec::Haar { cube, signature } => {
                haar_function(&m, cube, &Signature::new(*signature, m.dim())?)?
            }
        })
    }

    fn function_rng(&self) -> ChaCha8Rng {
        rng_for(self.seed, stream::FUNCTIONS)
    }
}

// ---------------------------------------------------------------------------
// identities

fn random_scalar<S: Scalar>(rng: &mut ChaCha8Rng) -> S {
    S::from_ratio(rng.gen_range(-24..=24), rng.gen_range(1..=8))
}

fn random_weight<S: Scalar>(m: DyadicModel, rng: &mut ChaCha8Rng) -> Result<Weight<S>, LabError> {
    Ok(Weight::new(StepFunction::from_fn(m, |_| {
        S::from_ratio(rng.gen_range(1..=16), 4)
    }))?)
}

fn random_cube(m: DyadicModel, rng: &mut ChaCha8Rng, max_level: usize) -> CubeId {
    let k = rng.gen_range(0..=max_level.min(m.depth()));
    m.cube(k, rng.gen_range(0..m.cubes_at(k)))
}

/// One random draw of every exact identity.
pub fn identity_draw<S: Scalar>(
    m: DyadicModel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CheckRecord>, LabError> {
    let b = StepFunction::from_fn(m, |_| random_scalar::<S>(rng));
    let f = StepFunction::from_fn(m, |_| random_scalar::<S>(rng));
    let w = random_weight::<S>(m, rng)?;
    let coll = random_collection(m, rng.gen_range(1.2..3.0), m.depth() - 1, rng)?;
    let root = m.root();
    let mut out = Vec::new();

    out.push(CheckRecord::identity(
        "Haar analysis and synthesis round trip",
        &HaarSpectrum::analyze(&f).synthesize(),
        &f,
        "haar-round-trip",
    ));
    out.extend(product_decomposition_check(&b, &f)?.checks);
    if m.dim() >= 2 {
        // Γ_b f is exactly what the other terms leave of the product
        let rest = &(&b * &f) - &product_expansion(&b, &f)?;
        let gamma = paraproduct(ParaproductKind::Gamma, &b, &f, &root)?;
        out.push(CheckRecord::identity(
            "mixed-signature term closes the product",
            &(&rest + &gamma),
            &gamma,
            "mixed-signature-term",
        ));
    }
    out.extend(spm_decomposition_check(&coll, Some(&w), &f)?.checks);

    let bt = sparse_haar_function::<S>(&coll)?;
    let inv = S::from_ratio(1, m.signatures_per_cube() as i64);
    out.push(CheckRecord::identity(
        "sparse operator as a paraproduct composition",
        &sparse_operator(&coll, None, &f),
        &composition(&bt, &bt, &f, &root)?.scale(&inv),
        "sparse-operator-composition",
    ));

    let sq = square_function(&f, Some(&w));
    let lhs = (&sq.squared * w.density()).integral();
    out.push(CheckRecord::identity(
        "weighted square function norm as a Haar sum",
        &StepFunction::constant(m, lhs),
        &StepFunction::constant(m, sq.weighted_norm_squared.clone()),
        "square-function-identity",
    ));

    let q = random_cube(m, rng, m.depth());
    let ind = StepFunction::indicator(m, &q);
    let bq = b.average(&q);
    let osc = b.map(|v| v.clone() - &bq).restrict(&q);
    let pi = paraproduct(ParaproductKind::Pi, &b, &ind, &root)?;
    let pis = paraproduct(ParaproductKind::PiStar, &b, &ind, &root)?;
    out.push(CheckRecord::identity(
        "oscillation from the paraproduct and its adjoint",
        &osc,
        &(&pi - &pis).restrict(&q),
        "oscillation-identity",
    ));

    let q0 = random_cube(m, rng, m.depth());
    let b0 = b.average(&q0);
    out.push(CheckRecord::identity(
        "local paraproduct of one is the local oscillation",
        &paraproduct(
            ParaproductKind::Pi,
            &b,
            &StepFunction::constant(m, S::one()),
            &q0,
        )?,
        &b.map(|v| v.clone() - &b0).restrict(&q0),
        "local-paraproduct-identity",
    ));
    Ok(out)
}

pub fn identities_report<S: Scalar>(
    m: DyadicModel,
    draws: usize,
    seed: u64,
) -> Result<VerificationReport, LabError> {
    let mut rng = rng_for(seed, stream::IDENTITIES);
    let mut report = VerificationReport::new("identities", S::MODE).with_seed(seed);
    for _ in 0..draws {
        for c in identity_draw::<S>(m, &mut rng)? {
            report.push(c);
        }
    }
    Ok(report)
}

pub fn run_identities(cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    let m = cfg.dyadic_model()?;
    let report = match cfg.mode {
        ScalarMode::Rational => {
            identities_report::<dyadic_core::Exact>(m, cfg.identities.draws, cfg.seed)?
        }
        ScalarMode::Float => identities_report::<f64>(m, cfg.identities.draws, cfg.seed)?,
    };
    Outcome::new(report)
}

// ---------------------------------------------------------------------------
// bounds

/// Worst case and slack statistics of one inequality over a battery.
#[derive(Clone, Debug)]
pub struct BoundFamily {
    name: &'static str,
    citation: &'static str,
    worst: Option<(f64, f64)>,
    count: usize,
    violations: usize,
    slack_sum: f64,
    min_slack: f64,
}

impl BoundFamily {
    pub fn new(name: &'static str, citation: &'static str) -> Self {
        BoundFamily {
            name,
            citation,
            worst: None,
            count: 0,
            violations: 0,
            slack_sum: 0.0,
            min_slack: f64::INFINITY,
        }
    }

    pub fn record(&mut self, measured: f64, bound: f64) {
        let ratio = measured / bound;
        if self
            .worst
            .is_none_or(|(m, b)| ratio > m / b || ratio.is_nan())
        {
            self.worst = Some((measured, bound));
        }
        self.count += 1;
        if !(measured <= bound * (1.0 + BOUND_TOL)) {
            self.violations += 1;
        }
        let slack = (bound - measured) / bound;
        self.slack_sum += slack;
        self.min_slack = self.min_slack.min(slack);
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        let Some((m, b)) = self.worst else {
            return Vec::new();
        };
        let detail = format!(
            "{} samples, {} violations, min slack {:.3e}, mean slack {:.3e}",
            self.count,
            self.violations,
            self.min_slack,
            self.slack_sum / self.count as f64
        );
        let mut worst = CheckRecord::bound_with_tol(self.name, m, b, BOUND_TOL, self.citation)
            .with_detail(detail);
        if self.violations > 0 {
            worst.status = dyadic_core::report::CheckStatus::Fail;
        }
        vec![
            worst,
            CheckRecord::report(
                format!("{} mean slack", self.name),
                self.slack_sum / self.count as f64,
                self.citation,
            ),
        ]
    }
}

fn draw_weight(
    m: DyadicModel,
    rng: &mut ChaCha8Rng,
    log_amplitude: f64,
) -> Result<Weight<f64>, LabError> {
    let spec = if rng.gen_bool(0.5) {
        WeightSpec::Random {
            seed: rng.gen(),
            log_amplitude: rng.gen_range(0.1..=log_amplitude.max(0.1)),
        }
    } else {
        WeightSpec::Power {
            alpha: rng.gen_range(-0.9..0.9),
        }
    };
    Ok(spec.build_f64(m)?)
}

/// The battery of explicit-constant inequalities, in floating point.
pub fn bounds_report(cfg: &ExperimentConfig) -> Result<VerificationReport, LabError> {
    let m = cfg.dyadic_model()?;
    let params = &cfg.bounds;
    let mut rng = rng_for(cfg.seed, stream::BOUNDS);
    let n = m.dim();

    let mut sparse_bmo = BoundFamily::new(
        "sparse BMO function norm at most the Carleson constant",
        "sparse-bmo-bound",
    );
    let mut weighted_bmo = BoundFamily::new(
        "weighted sparse BMO function at most 2 [w]_Ap carleson^p",
        "weighted-sparse-bmo-bound",
    );
    let mut haar_bmo = BoundFamily::new(
        "Haar sparse function norm at most sqrt((2^n - 1) carleson)",
        "haar-sparse-bmo-bound",
    );
    let mut tau = BoundFamily::new(
        "martingale coefficients at most [w]_Ap carleson^p <w>_J",
        "tau-bound",
    );
    let mut maximal = BoundFamily::new(
        "weighted maximal function at most q' on L^q(w)",
        "weighted-maximal-bound",
    );
    let mut own_bmo = BoundFamily::new(
        "weight in its own BMO with norm at most 2",
        "weight-bmo-bound",
    );
    let mut holder = BoundFamily::new(
        "Bloom weight average below the Holder product",
        "bloom-holder",
    );
    let mut bloom = BoundFamily::new("sparse operator Bloom bound at p = 2", "bloom-sparse-bound");
    let mut osc_para = BoundFamily::new(
        "weighted BMO at most twice the paraproduct norm",
        "oscillation-paraproduct-bound",
    );

    for draw in 0..params.draws {
        let w = draw_weight(m, &mut rng, params.log_amplitude)?;
        let coll = if params.chain && draw % 8 == 0 {
            nested_chain(m, rng.gen_range(1..=m.depth()))?
        } else {
            random_collection(
                m,
                rng.gen_range(1.1..params.max_target_lambda),
                m.depth(),
                &mut rng,
            )?
        };
        let lam = coll.carleson_constant()?;

        sparse_bmo.record(
            bmo_norm(&sparse_bmo_function::<f64>(&coll, None), None),
            lam,
        );

        let bsw = sparse_bmo_function(&coll, Some(&w));
        let bsw_norm = bmo_norm(&bsw, Some(&w));
        let taus = tau_sequence(&coll, Some(&w));
        let tau_ratio = m
            .cubes()
            .map(|q| taus.at(&q) / w.average(&q))
            .fold(0.0f64, f64::max);
        for &p in &params.p_values {
            let ap = ap_characteristic(&w, p)?.value;
            weighted_bmo.record(bsw_norm, 2.0 * ap * lam.powf(p));
            tau.record(tau_ratio, ap * lam.powf(p));
        }

        let haar_coll = SparseCollection::new(
            m,
            coll.cubes()
                .iter()
                .copied()
                .filter(|q| q.level() < m.depth()),
        )?;
        if !haar_coll.is_empty() {
            let lam_h = haar_coll.carleson_constant()?;
            let bt = sparse_haar_function::<f64>(&haar_coll)?;
            haar_bmo.record(
                bmo_norm(&bt, None),
                (((1usize << n) - 1) as f64 * lam_h).sqrt(),
            );
        }

        let f = StepFunction::from_fn(m, |_| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(-2.0..2.0)
            }
        });
        let mw = weighted_maximal(&w, &f)?;
        for &q in &params.p_values {
            let rhs = f.lp_norm(q, Some(w.density()));
            if rhs > 0.0 {
                maximal.record(
                    mw.lp_norm(q, Some(w.density())),
                    conjugate_exponent(q) * rhs,
                );
            }
        }

        own_bmo.record(bmo_norm(w.density(), Some(&w)), 2.0);

        let mu = draw_weight(m, &mut rng, params.log_amplitude)?;
        let p = params.p_values[draw % params.p_values.len()];
        holder.record(
            1.0 + BloomTriple::new(mu.clone(), w.clone(), p)?.holder_excess()?,
            1.0,
        );

        if draw < params.norm_draws {
            // every other draw uses the pair (w, w^{-1}), whose ν is w itself
            let (bm, bl) = if draw % 2 == 0 {
                (w.clone(), w.power(-1.0))
            } else {
                (mu.clone(), w.clone())
            };
            let r = verify_bloom_sparse_bound(&coll, &bm, &bl, 2.0, 1)?;
            let c = &r.checks[0];
            bloom.record(c.measured, c.bound.expect("bound check"));
        }
        if draw < params.norm_draws / 5 {
            let b = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
            let pi = CellOperator::paraproduct(ParaproductKind::Pi, &b, m.root())?;
            let norm = operator_norm_p2(&pi, &w, &w.power(-1.0))?.value;
            osc_para.record(bmo_norm(&b, Some(&w)), 2.0 * norm);
        }
    }

    let mut report = VerificationReport::new("bounds", ScalarMode::Float).with_seed(cfg.seed);
    for fam in [
        &sparse_bmo,
        &weighted_bmo,
        &haar_bmo,
        &tau,
        &maximal,
        &own_bmo,
        &holder,
        &bloom,
        &osc_para,
    ] {
        for c in fam.records() {
            report.push(c);
        }
    }
    Ok(report)
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    Outcome::new(bounds_report(cfg)?)
}

// ---------------------------------------------------------------------------
// domination

#[derive(Serialize)]
struct DominationDump<'a> {
    algorithm: DominationAlgorithm,
    seed: u64,
    collection: &'a SparseCollection,
    base: CubeId,
    target_lambda: f64,
    measured_carleson: f64,
    empirical_constant: f64,
    recursion_depth: usize,
    nodes: &'a [dyadic_core::domination::NodeDiagnostics],
    bilinear: &'a Option<dyadic_core::domination::BilinearComparison>,
}

pub fn domination_result(
    cfg: &ExperimentConfig,
    inputs: &Inputs,
) -> Result<DominationResult, LabError> {
    let d = &cfg.dominate;
    let mut rng = inputs.function_rng();
    let w = inputs.weight(&d.weight)?;
    let q0 = d.q0.unwrap_or(inputs.model.root());
    let b = inputs.function(&d.b, &mut rng)?;
    Ok(match d.algorithm {
        DominationAlgorithm::Pointwise => {
            let f = inputs.function(&d.f, &mut rng)?;
            dominate_paraproduct(&b, w, &f, &q0, d.lambda)?
        }
        DominationAlgorithm::Oscillation => oscillation_domination(&b, w, &q0, d.lambda)?,
        DominationAlgorithm::Bilinear => {
            let a = inputs.function(&d.a, &mut rng)?;
            let f = inputs.function(&d.f, &mut rng)?;
            let g = inputs.function(&d.g, &mut rng)?;
            dominate_bilinear(&a, &b, w, &f, &g, &q0, d.lambda)?
        }
    })
}

pub fn run_dominate(cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    let inputs = Inputs::build(cfg)?;
    let res = domination_result(cfg, &inputs)?;
    let mut report = res.report.clone().with_seed(cfg.seed);
    report.push(CheckRecord::report(
        "empirical domination constant",
        res.empirical_constant,
        "empirical-constant",
    ));
    report.push(CheckRecord::report(
        "sparse collection size",
        res.collection.len() as f64,
        "sparse-collection",
    ));
    let dump = DominationDump {
        algorithm: cfg.dominate.algorithm,
        seed: cfg.seed,
        collection: &res.collection,
        base: res.base,
        target_lambda: res.target_lambda,
        measured_carleson: res.measured_carleson,
        empirical_constant: res.empirical_constant,
        recursion_depth: res.recursion_depth,
        nodes: &res.nodes,
        bilinear: &res.bilinear,
    };
    let mut out = Outcome::new(report)?;
    out.files
        .push(("domination.json".into(), json_bytes(&dump)?));
    if cfg.dominate.cell_csv {
        if let Some(pw) = &res.pointwise {
            let mut csv = String::from("cell_index,lhs,rhs\n");
            for (i, (l, r)) in pw.lhs.iter().zip(&pw.rhs).enumerate() {
                csv.push_str(&format!("{i},{l},{r}\n"));
            }
            out.files
                .push(("domination_cells.csv".into(), csv.into_bytes()));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// sharpness

#[derive(Clone, Debug, Serialize)]
pub struct SharpnessSummary {
    pub depth: usize,
    pub rows: Vec<SweepRow>,
    /// Least-squares fit of `log ‖Π_w‖` against `log [w]_{A_2}`; report-only.
    pub fit: Option<LogLogFit>,
    /// `max [w]_{A_2} / min [w]_{A_2}` over the rows.
    pub ap_char_span: f64,
}

pub fn sharpness_summary(alphas: &[f64], model: DyadicModel) -> Result<SharpnessSummary, LabError> {
    let rows = sharpness_sweep(alphas, model)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.ap_char).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.norm_pi).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(0.0, f64::max);
    Ok(SharpnessSummary {
        depth: model.depth(),
        fit: log_log_fit(&xs, &ys).ok(),
        ap_char_span: if lo > 0.0 { hi / lo } else { f64::NAN },
        rows,
    })
}

/// `[w]_{A_2}` strictly increasing in `|α|` among rows of the same sign.
pub fn characteristic_monotone(rows: &[SweepRow]) -> bool {
    let mut by_side: BTreeMap<bool, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.alpha != 0.0) {
        by_side
            .entry(r.alpha > 0.0)
            .or_default()
            .push((r.alpha.abs(), r.ap_char));
    }
    by_side.values_mut().all(|v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.windows(2).all(|p| p[0].0 == p[1].0 || p[1].1 > p[0].1)
    })
}

pub fn sharpness_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SweepRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

pub fn run_sharpness(cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    let m = cfg.dyadic_model()?;
    let model = DyadicModel::new(m.dim(), cfg.sharpness.depth.unwrap_or(m.depth()))?;
    let summary = sharpness_summary(&cfg.sharpness.alphas, model)?;
    let mut report = VerificationReport::new("sharpness", ScalarMode::Float).with_seed(cfg.seed);
    for r in &summary.rows {
        let a = r.alpha;
        report.push(CheckRecord::bound_with_tol(
            format!("alpha {a}: weight BMO at most 2"),
            r.bmo_w,
            2.0,
            1e-12,
            "weight-bmo-bound",
        ));
        report.push(CheckRecord::bound_with_tol(
            format!("alpha {a}: weight BMO at most twice the paraproduct norm"),
            r.bmo_w,
            2.0 * r.norm_pi,
            1e-12,
            "oscillation-paraproduct-bound",
        ));
        report.push(CheckRecord::bound_with_tol(
            format!("alpha {a}: square function squared at most 1 + 2 paraproduct norm"),
            r.norm_square.powi(2),
            1.0 + 2.0 * r.norm_pi,
            1e-8,
            "square-function-chain",
        ));
    }
    report.push(CheckRecord::exact(
        "A2 characteristic increases with |alpha|",
        characteristic_monotone(&summary.rows),
        summary.ap_char_span,
        "power-weight-monotone",
    ));
    if let Some(fit) = &summary.fit {
        report.push(
            CheckRecord::report(
                "paraproduct norm growth exponent",
                fit.slope,
                "sharpness-fit",
            )
            .with_detail(format!(
                "stderr {:.3e}, rms residual {:.3e}, {} points",
                fit.slope_stderr, fit.rms_residual, fit.points
            )),
        );
    }
    report.push(CheckRecord::report(
        "A2 characteristic span",
        summary.ap_char_span,
        "sharpness-span",
    ));
    let mut out = Outcome::new(report)?;
    out.files.push((
        "sharpness.csv".into(),
        sharpness_csv(&summary.rows).into_bytes(),
    ));
    out.files
        .push(("sharpness_summary.json".into(), json_bytes(&summary)?));
    Ok(out)
}

// ---------------------------------------------------------------------------
// norm

#[derive(Serialize)]
struct NormDump<'a> {
    operator: &'a OperatorSpec,
    mu: &'a str,
    lambda: &'a str,
    estimate: &'a NormEstimate,
}

pub fn run_norm(cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    let inputs = Inputs::build(cfg)?;
    let m = inputs.model;
    let params = &cfg.norm;
    let mut rng = rng_for(cfg.seed, stream::NORM);
    let op = match &params.operator {
        OperatorSpec::Identity => CellOperator::identity(m),
        OperatorSpec::Paraproduct {
            paraproduct,
            symbol,
        } => {
            let b = inputs.function(symbol, &mut rng)?;
            CellOperator::paraproduct(*paraproduct, &b, m.root())?
        }
        OperatorSpec::Sparse { nu } => {
            let nu = nu.as_deref().map(|n| inputs.weight(n)).transpose()?;
            CellOperator::sparse(&inputs.collection, nu)
        }
        OperatorSpec::SquareFunction { weight } => {
            CellOperator::square_function_multiplier(inputs.weight(weight)?)
        }
    };
    let (mu, lambda) = (inputs.weight(&params.mu)?, inputs.weight(&params.lambda)?);
    let opts = LpOptions {
        starts: params.starts,
        seed: rng.gen(),
        ..LpOptions::default()
    };
    let est = operator_norm(&op, mu, lambda, params.p, &opts)?;
    let mut report = VerificationReport::new("norm", ScalarMode::Float).with_seed(cfg.seed);
    report.push(
        CheckRecord::report("operator norm", est.value, "operator-norm").with_detail(format!(
            "{:?}, {} iterations, residual {:.3e}",
            est.method, est.iterations, est.residual
        )),
    );
    report.push(CheckRecord::bound_with_tol(
        "random test vectors stay below the estimate",
        est.random_lower_bound,
        est.value,
        BOUND_TOL,
        "operator-norm",
    ));
    let dump = NormDump {
        operator: &params.operator,
        mu: &params.mu,
        lambda: &params.lambda,
        estimate: &est,
    };
    let mut out = Outcome::new(report)?;
    out.files.push(("norm.json".into(), json_bytes(&dump)?));
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Bounds,
    Dominate,
    Sharpness,
    Norm,
}

impl FromStr for Suite {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        Ok(match s {
            "identities" => Suite::Identities,
            "bounds" => Suite::Bounds,
            "dominate" => Suite::Dominate,
            "sharpness" => Suite::Sharpness,
            "norm" => Suite::Norm,
            other => return Err(LabError::Config(format!("unknown suite `{other}`"))),
        })
    }
}

pub fn run_suite(suite: Suite, cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    match suite {
        Suite::Identities => run_identities(cfg),
        Suite::Bounds => run_bounds(cfg),
        Suite::Dominate => run_dominate(cfg),
        Suite::Sharpness => run_sharpness(cfg),
        Suite::Norm => run_norm(cfg),
    }
}
