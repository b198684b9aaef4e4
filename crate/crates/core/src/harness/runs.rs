//! End-to-end runs: build the model from a [`RunConfig`], stream inputs,
//! record a trace, metrics at geometric checkpoints, and a summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{default_kappa, dyadic_reduce, CovarianceModel, ScaleDecomposition};
use crate::error::{Error, Result};
use crate::harness::baselines::{l2_greedy_sign, linf};
use crate::harness::config::{Algorithm, RunConfig, Seeds, Setting};
use crate::harness::inputs::{InputSampler, InputSpec};
use crate::harness::metrics::{geometric_checkpoints, slope_fit, SlopeFit};
use crate::harness::trace::{write_metrics_csv, write_trace, StepRecord};
use crate::linalg::{axpy, dot, norm2};
use crate::multicolor::{build_tree, LInf, MulticolorBalancer, TreeReport};
use crate::potential::{default_lambda, AtomSet, DenseAtoms, PotentialState, Sign, TestDistribution};
use crate::rng::{stream_rng, Stream};
use crate::testsets::{
    banaszczyk_mixture, basis_testset, build_body, build_chaining_net, eigen_testset, knorm,
    komlos_mixture, load_or_build, BodyKind, BodyOptions, ChainingNet, ConvexBodyRep, NetOptions,
    DEFAULT_SHARE_FLOOR,
};
use crate::tusnady::{run_tusnady, PointDistribution, TusnadyAlgorithm, TusnadyConfig, TusnadyReport};

/// Env var capping the worker count of [`run_batch`].
pub const THREADS_ENV: &str = "BALANCER_THREADS";

/// Everything the vector settings share: the reduced covariance, the
/// potential's atoms, and what the metrics need.
#[derive(Debug, Clone)]
pub struct VectorSetup {
    pub n: usize,
    pub horizon: usize,
    pub spec: InputSpec,
    pub dec: Arc<ScaleDecomposition>,
    pub kappa: usize,
    pub lambda: f64,
    /// `None` for baselines, which need no potential.
    pub atoms: Option<Arc<DenseAtoms>>,
    /// Test directions, unmapped.
    pub tests: Vec<Vec<f64>>,
    pub body: Option<ConvexBodyRep>,
    pub net: Option<ChainingNet>,
    pub warnings: Vec<String>,
}

fn random_unit_vectors(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, Stream::Tests);
    (0..m)
        .map(|_| InputSpec::Sphere.sample(n, &mut rng))
        .collect()
}

impl VectorSetup {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        Self::with_spec(cfg, InputSpec::parse(&cfg.dist, cfg.n)?)
    }

    /// Like [`Self::build`] with the input distribution given directly;
    /// `cfg.dist` is ignored.
    pub fn with_spec(cfg: &RunConfig, spec: InputSpec) -> Result<Self> {
        let n = cfg.n;
        let model = CovarianceModel::from_matrix(spec.covariance(n))?;
        let kappa = cfg.kappa.unwrap_or_else(|| default_kappa(n, cfg.horizon));
        let dec = Arc::new(dyadic_reduce(&model, kappa)?);
        let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(kappa, n, cfg.horizon));
        let mut warnings = Vec::new();
        let tests = match cfg.setting {
            Setting::Testset => random_unit_vectors(n, cfg.tests.max(1), cfg.seeds.pool),
            _ => basis_testset(n)?.atoms().iter().map(|a| a.vector.clone()).collect(),
        };
        let (body, net) = if cfg.setting == Setting::Banaszczyk {
            if matches!(cfg.body, BodyKind::CustomPolarCloud) {
                return Err(Error::Config("custom bodies are only available through the library".into()));
            }
            let opts = BodyOptions { cloud_size: cfg.cloud, seed: cfg.seeds.pool, ..Default::default() };
            let body = build_body(cfg.body, n, &opts)?;
            let net = if cfg.algorithm == Algorithm::Potential {
                let net_opts = NetOptions::for_run(n, cfg.horizon, cfg.seeds.pool);
                let net = match &cfg.net_cache {
                    Some(dir) => load_or_build(dir, &body, &dec, lambda, &net_opts)?.0,
                    None => build_chaining_net(&body, &dec, lambda, &net_opts)?,
                };
                warnings.extend(net.warnings());
                Some(net)
            } else {
                None
            };
            (Some(body), net)
        } else {
            (None, None)
        };
        let atoms = if cfg.algorithm == Algorithm::Potential {
            let pool = spec.pool(n, cfg.pool, cfg.seeds.pool)?.map_vectors(|v| dec.rescale(v))?;
            let dist = match (&cfg.setting, &net) {
                (Setting::Banaszczyk, Some(net)) => {
                    let eigen = eigen_testset(&dec)?.map_vectors(|z| dec.map_test(z))?;
                    let chaining = net.distribution(&dec, DEFAULT_SHARE_FLOOR)?;
                    banaszczyk_mixture(&pool, &eigen, &chaining)?
                }
                _ => {
                    let tests = TestDistribution::uniform(
                        tests.iter().map(|z| dec.map_test(z)).collect(),
                        crate::potential::AtomTag::TestVector,
                    )?;
                    komlos_mixture(&pool, &tests)?
                }
            };
            Some(Arc::new(DenseAtoms::new(&dec, &dist)?))
        } else {
            None
        };
        Ok(Self { n, horizon: cfg.horizon, spec, dec, kappa, lambda, atoms, tests, body, net, warnings })
    }

    pub fn metric_names(&self, setting: Setting) -> Vec<&'static str> {
        match setting {
            Setting::Banaszczyk => vec!["linf", "l2", "knorm", "phi"],
            Setting::Testset => vec!["linf", "l2", "testmax", "phi"],
            _ => vec!["linf", "l2", "phi"],
        }
    }

    fn metrics(&self, setting: Setting, d: &[f64], phi: f64) -> Vec<f64> {
        let mut out = vec![linf(d), norm2(d)];
        match setting {
            Setting::Banaszczyk => {
                out.push(self.body.as_ref().map_or(f64::NAN, |b| b.norm(d)));
            }
            Setting::Testset => {
                out.push(self.tests.iter().map(|z| dot(z, d).abs()).fold(0.0, f64::max));
            }
            _ => {}
        }
        out.push(phi);
        out
    }
}

/// Online signing of a vector stream, one step at a time.
#[derive(Debug, Clone)]
pub struct VectorRunner {
    setup: Arc<VectorSetup>,
    algorithm: Algorithm,
    state: Option<PotentialState<DenseAtoms>>,
    d: Vec<f64>,
    sampler: InputSampler,
    sign_rng: ChaCha8Rng,
    probe_seed: u64,
    t: usize,
}

impl VectorRunner {
    pub fn new(setup: Arc<VectorSetup>, cfg: &RunConfig) -> Result<Self> {
        let state = match (&setup.atoms, cfg.algorithm) {
            (Some(a), Algorithm::Potential) => Some(PotentialState::new(a.clone(), setup.lambda, cfg.variant)?),
            (None, Algorithm::Potential) => {
                return Err(Error::Config("setup was built without a potential".into()))
            }
            _ => None,
        };
        Ok(Self {
            d: vec![0.0; setup.n],
            sampler: InputSampler::new(setup.spec.clone(), setup.n, cfg.seeds.input),
            sign_rng: stream_rng(cfg.seeds.algorithm, Stream::Algorithm),
            probe_seed: cfg.seeds.algorithm,
            algorithm: cfg.algorithm,
            setup,
            state,
            t: 0,
        })
    }

    pub fn setup(&self) -> &VectorSetup {
        &self.setup
    }

    pub fn state(&self) -> Option<&PotentialState<DenseAtoms>> {
        self.state.as_ref()
    }

    /// Discrepancy vector in input coordinates.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Draws the next input and signs it.
    pub fn step(&mut self) -> Result<StepRecord> {
        let v = self.sampler.next_vector();
        self.step_with(&v)
    }

    /// Signs a given input.
    pub fn step_with(&mut self, v: &[f64]) -> Result<StepRecord> {
        let (sign, phi, delta) = match self.algorithm {
            Algorithm::Potential => {
                let st = self.state.as_mut().expect("potential runs carry a state");
                let mv = self.setup.dec.rescale(v);
                let proj = st.project(&mv);
                let pair = st.delta_pair(&proj, 1.0)?;
                let s = pair.best();
                st.apply_projected(&mv, &proj, s.value())?;
                (s, st.phi(), pair.for_sign(s))
            }
            Algorithm::Random => {
                (if self.sign_rng.random::<bool>() { Sign::Plus } else { Sign::Minus }, f64::NAN, f64::NAN)
            }
            Algorithm::L2greedy => (l2_greedy_sign(&self.d, v), f64::NAN, f64::NAN),
        };
        axpy(&mut self.d, sign.value(), v);
        self.t += 1;
        Ok(StepRecord::new(self.t, sign, phi, delta))
    }

    /// A sampler for probes, independent of the input stream.
    pub fn probe_sampler(&self, index: u64) -> InputSampler {
        let rng = crate::rng::child_rng(self.probe_seed, Stream::Probe, index);
        InputSampler::with_rng(self.setup.spec.clone(), self.setup.n, rng)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub setting: Setting,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub seeds: Seeds,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub lambda: f64,
    pub kappa: usize,
    pub phi_max: Option<f64>,
    pub atoms: Option<usize>,
    pub final_metrics: BTreeMap<String, f64>,
    pub max_metrics: BTreeMap<String, f64>,
    pub slopes: BTreeMap<String, SlopeFit>,
    pub warnings: Vec<String>,
    pub extra: serde_json::Value,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub trace: Vec<StepRecord>,
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<f64>)>,
    pub summary: Summary,
    pub tusnady: Option<TusnadyReport>,
}

impl RunOutput {
    /// Column `name` as `(t, value)` pairs.
    pub fn series(&self, name: &str) -> Vec<(f64, f64)> {
        match self.columns.iter().position(|c| c == name) {
            Some(i) => self.rows.iter().map(|(t, r)| (*t as f64, r[i])).collect(),
            None => Vec::new(),
        }
    }

    pub fn slope(&self, name: &str) -> Option<SlopeFit> {
        self.summary.slopes.get(name).copied()
    }

    /// Writes `trace.jsonl`, `metrics.csv` and `summary.json` (plus
    /// `boxes.csv` for point runs) into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_trace(&dir.join("trace.jsonl"), &self.trace)?;
        let cols: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        write_metrics_csv(&dir.join("metrics.csv"), &cols, &self.rows)?;
        let f = std::io::BufWriter::new(std::fs::File::create(dir.join("summary.json"))?);
        serde_json::to_writer_pretty(f, &self.summary)?;
        if let Some(rep) = &self.tusnady {
            rep.write_box_csv(&dir.join("boxes.csv"))?;
        }
        Ok(())
    }
}

fn fit_window(horizon: usize) -> (f64, f64) {
    (horizon as f64 / 100.0, horizon as f64)
}

fn summarize(
    cfg: &RunConfig,
    columns: &[String],
    rows: &[(usize, Vec<f64>)],
    lambda: f64,
    kappa: usize,
    atoms: Option<usize>,
) -> Summary {
    let (lo, hi) = fit_window(cfg.horizon);
    let mut final_metrics = BTreeMap::new();
    let mut max_metrics = BTreeMap::new();
    let mut slopes = BTreeMap::new();
    for (i, name) in columns.iter().enumerate() {
        let series: Vec<(f64, f64)> = rows.iter().map(|(t, r)| (*t as f64, r[i])).collect();
        if let Some(&(_, last)) = series.last() {
            if last.is_finite() {
                final_metrics.insert(name.clone(), last);
            }
        }
        let max = series.iter().map(|p| p.1).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if max.is_finite() {
            max_metrics.insert(name.clone(), max);
        }
        if name != "phi" && name != "psi" {
            if let Some(fit) = slope_fit(&series, lo, hi) {
                slopes.insert(name.clone(), fit);
            }
        }
    }
    let phi_max = max_metrics.get("phi").or_else(|| max_metrics.get("psi")).copied();
    Summary {
        setting: cfg.setting,
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        seeds: cfg.seeds,
        n: cfg.n,
        horizon: cfg.horizon,
        lambda,
        kappa,
        phi_max,
        atoms,
        final_metrics,
        max_metrics,
        slopes,
        warnings: Vec::new(),
        extra: serde_json::Value::Null,
        wall_seconds: 0.0,
    }
}

fn attach_metrics(rec: &mut StepRecord, columns: &[String], values: &[f64]) {
    rec.metrics = columns.iter().cloned().zip(values.iter().copied()).collect();
}

/// Runs a `komlos`, `testset` or `banaszczyk` configuration.
pub fn run_vector(cfg: &RunConfig) -> Result<RunOutput> {
    let setup = Arc::new(VectorSetup::build(cfg)?);
    run_vector_with(cfg, setup)
}

/// Like [`run_vector`] with a prebuilt setup (shared across seeds).
pub fn run_vector_with(cfg: &RunConfig, setup: Arc<VectorSetup>) -> Result<RunOutput> {
    let started = Instant::now();
    let mut runner = VectorRunner::new(setup.clone(), cfg)?;
    let columns: Vec<String> = setup.metric_names(cfg.setting).into_iter().map(String::from).collect();
    let checkpoints = geometric_checkpoints(cfg.horizon, cfg.checkpoint_ratio);
    let mut next = 0;
    let mut trace = Vec::with_capacity(cfg.horizon);
    let mut rows = Vec::with_capacity(checkpoints.len());
    for _ in 0..cfg.horizon {
        let mut rec = runner.step()?;
        if next < checkpoints.len() && checkpoints[next] == rec.t {
            next += 1;
            let values = setup.metrics(cfg.setting, runner.d(), rec.phi);
            attach_metrics(&mut rec, &columns, &values);
            rows.push((rec.t, values));
        }
        trace.push(rec);
    }
    let mut summary = summarize(
        cfg,
        &columns,
        &rows,
        setup.lambda,
        setup.kappa,
        setup.atoms.as_ref().map(|a| a.table().atom_count()),
    );
    summary.warnings = setup.warnings.clone();
    if let (Some(body), Some(net)) = (&setup.body, &setup.net) {
        let k = knorm(body, net, &setup.dec, runner.d())?;
        summary.extra = serde_json::json!({ "knorm_net": k.net_value, "knorm_closed_form": k.closed_form });
    }
    summary.wall_seconds = started.elapsed().as_secs_f64();
    Ok(RunOutput { config: cfg.clone(), trace, columns, rows, summary, tusnady: None })
}

/// Runs a `multicolor` configuration.
pub fn run_multicolor(cfg: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    if cfg.algorithm != Algorithm::Potential {
        return Err(Error::Config("multicolor runs support only the potential algorithm".into()));
    }
    let mut vcfg = cfg.clone();
    vcfg.setting = Setting::Komlos;
    let setup = VectorSetup::build(&vcfg)?;
    let eta = cfg.eta.unwrap_or_else(|| cfg.weights.iter().copied().fold(1.0, f64::max));
    let mut tree = build_tree(&cfg.weights, eta)?;
    if let Some(beta) = cfg.beta {
        tree.set_beta(beta);
    }
    let report: TreeReport = tree.verify();
    let atoms = setup.atoms.clone().expect("potential setup has atoms");
    let mut bal = MulticolorBalancer::new(tree, setup.dec.clone(), atoms.clone(), setup.lambda)?;
    let mut sampler = InputSampler::new(setup.spec.clone(), setup.n, cfg.seeds.input);
    let columns: Vec<String> = ["maxdisc", "psi"].iter().map(|s| s.to_string()).collect();
    let checkpoints = geometric_checkpoints(cfg.horizon, cfg.checkpoint_ratio);
    let mut next = 0;
    let mut trace = Vec::with_capacity(cfg.horizon);
    let mut rows = Vec::new();
    for t in 1..=cfg.horizon {
        let a = bal.assign(&sampler.next_vector())?;
        let mut rec = StepRecord::colored(t, a.color, a.slot, bal.psi(), a.delta_psi);
        if next < checkpoints.len() && checkpoints[next] == t {
            next += 1;
            let values = vec![bal.max_disc(&LInf), bal.psi()];
            attach_metrics(&mut rec, &columns, &values);
            rows.push((t, values));
        }
        trace.push(rec);
    }
    let mut summary = summarize(cfg, &columns, &rows, setup.lambda, setup.kappa, Some(atoms.table().atom_count()));
    let chain = bal.discrepancy_chain(&setup.tests);
    summary.extra = serde_json::json!({
        "height": bal.tree().height(),
        "beta": bal.tree().beta(),
        "tree": report,
        "chain": chain,
        "conservation_error": bal.conservation_error(),
        "dminus_error": bal.dminus_consistency_error(),
    });
    summary.wall_seconds = started.elapsed().as_secs_f64();
    Ok(RunOutput { config: cfg.clone(), trace, columns, rows, summary, tusnady: None })
}

/// Runs a `tusnady` configuration.
pub fn run_points(cfg: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let algorithm = match cfg.algorithm {
        Algorithm::Potential => TusnadyAlgorithm::Potential,
        Algorithm::Random => TusnadyAlgorithm::Random,
        Algorithm::L2greedy => return Err(Error::Config("tusnady runs support potential or random".into())),
    };
    let mut tc = TusnadyConfig::new(
        cfg.horizon as u64,
        cfg.d,
        PointDistribution::parse(&cfg.dist).map_err(|e| Error::Config(e.to_string()))?,
        cfg.seed,
    );
    tc.algorithm = algorithm;
    tc.budget = cfg.budget;
    tc.pool_size = cfg.pool;
    tc.kappa = cfg.kappa;
    tc.lambda = cfg.lambda;
    let report = run_tusnady(&tc).map_err(|e| match e {
        Error::InvalidInput(m) => Error::Config(m),
        other => other,
    })?;
    let columns: Vec<String> = ["maxbox", "stripe_count", "stripe_disc", "phi", "recount_ok"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<(usize, Vec<f64>)> = report
        .checkpoints
        .iter()
        .map(|c| {
            (
                c.t,
                vec![
                    c.max_box_disc as f64,
                    c.max_stripe_count as f64,
                    c.max_stripe_disc as f64,
                    c.phi,
                    if c.recount_ok { 1.0 } else { 0.0 },
                ],
            )
        })
        .collect();
    let mut trace = report.steps.clone();
    for (t, values) in &rows {
        attach_metrics(&mut trace[t - 1], &columns, values);
    }
    let mut summary = summarize(cfg, &columns, &rows, report.lambda, report.kappa, None);
    summary.slopes.retain(|k, _| k == "maxbox" || k == "stripe_disc");
    summary.extra = serde_json::json!({
        "d": cfg.d,
        "boxes": report.boxes.len(),
        "recount_ok": report.recount_ok,
        "max_box_disc": report.max_box_disc,
    });
    summary.wall_seconds = started.elapsed().as_secs_f64();
    Ok(RunOutput { config: cfg.clone(), trace, columns, rows, summary, tusnady: Some(report) })
}

/// Dispatches on the setting.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.setting {
        Setting::Komlos | Setting::Testset | Setting::Banaszczyk => run_vector(cfg),
        Setting::Multicolor => run_multicolor(cfg),
        Setting::Tusnady => run_points(cfg),
    }
}

/// Worker count: `BALANCER_THREADS` if set and positive, else rayon's default.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs independent configurations in parallel, one per worker, keeping
/// input order.
pub fn run_batch(configs: &[RunConfig]) -> Vec<Result<RunOutput>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build();
    match pool {
        Ok(pool) => pool.install(|| configs.par_iter().map(run).collect()),
        Err(_) => configs.iter().map(run).collect(),
    }
}

/// `<root>/<setting>-<algorithm>-seed<seed>`.
pub fn default_run_dir(root: &Path, cfg: &RunConfig) -> PathBuf {
    root.join(format!("{}-{}-seed{}", cfg.setting.name(), cfg.algorithm.name(), cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn komlos(algorithm: &str, horizon: usize, seed: u64) -> RunConfig {
        RunConfig::parse(&format!(
            "setting = komlos\nn = 8\nT = {horizon}\ndist = sparse:2\nseed = {seed}\nalgorithm = {algorithm}\npool = 64"
        ))
        .unwrap()
    }

    #[test]
    fn traces_are_reproducible() {
        let a = run(&komlos("potential", 500, 3)).unwrap();
        let b = run(&komlos("potential", 500, 3)).unwrap();
        assert_eq!(a.trace, b.trace);
        let c = run(&komlos("potential", 500, 4)).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn checkpoint_metrics_match_the_action_log() {
        let cfg = komlos("potential", 300, 5);
        let out = run(&cfg).unwrap();
        let mut sampler = InputSampler::new(InputSpec::parse(&cfg.dist, cfg.n).unwrap(), cfg.n, cfg.seeds.input);
        let mut d = vec![0.0; cfg.n];
        let mut rows = out.rows.iter();
        for rec in &out.trace {
            axpy(&mut d, rec.sign as f64, &sampler.next_vector());
            if !rec.metrics.is_empty() {
                let (t, values) = rows.next().unwrap();
                assert_eq!(*t, rec.t);
                assert!((values[0] - linf(&d)).abs() < 1e-12);
            }
        }
        assert!(out.trace.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn baselines_share_the_input_stream() {
        let g = run(&komlos("l2greedy", 200, 1)).unwrap();
        let r = run(&komlos("random", 200, 1)).unwrap();
        assert!(g.summary.phi_max.is_none());
        assert_eq!(g.trace.len(), r.trace.len());
    }

    #[test]
    fn other_settings_run() {
        let ts = RunConfig::parse("setting = testset\nn = 4\nT = 200\ndist = sphere\ntests = 5\npool = 32").unwrap();
        let out = run(&ts).unwrap();
        assert!(out.columns.contains(&"testmax".to_string()));
        let mc = RunConfig::parse("setting = multicolor\nn = 4\nT = 200\ndist = sparse:2\nweights = 1,2,1.5\npool = 32")
            .unwrap();
        let out = run(&mc).unwrap();
        assert!(out.trace.iter().all(|r| r.color.is_some()));
        let tu = RunConfig::parse("setting = tusnady\nd = 2\nT = 64\nbudget = 64\npool = 32").unwrap();
        let out = run(&tu).unwrap();
        assert_eq!(out.summary.extra["recount_ok"], true);
        let bad = RunConfig::parse("setting = tusnady\nd = 2\nT = 100").unwrap();
        assert_eq!(run(&bad).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn batch_keeps_order() {
        let cfgs: Vec<RunConfig> = (0..4).map(|s| komlos("random", 100, s)).collect();
        let outs = run_batch(&cfgs);
        for (cfg, out) in cfgs.iter().zip(outs) {
            assert_eq!(out.unwrap().summary.seed, cfg.seed);
        }
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&komlos("potential", 100, 2)).unwrap();
        out.write(dir.path()).unwrap();
        for f in ["trace.jsonl", "metrics.csv", "summary.json"] {
            assert!(dir.path().join(f).exists());
        }
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["seeds"]["input"], 2);
    }
}
