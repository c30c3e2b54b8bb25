//! Random instances, head-to-head runs, and the metrics used to compare
//! suite sizes across methods.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ConstraintSet, FactorSystem, PartialAssignment, Pick, TestSuite};
use crate::interactions::{build_universe, suite_coverage, CoverageState, Extender, InteractionUniverse};
use crate::pipeline::{self, PipelineConfig, PipelineError};
use crate::sequential::greedy_generate;

/// Pair count above which an instance is refused unless large runs are allowed.
pub const LARGE_PAIR_THRESHOLD: usize = 20_000;

const RESAMPLE_BUDGET: usize = 1_000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error("instance {0}: no constraint sample admitted a valid case within the resampling budget")]
    OverConstrained(usize),
    #[error("instance {index} has {pairs} pairs; pass the large flag to run it")]
    TooLarge { index: usize, pairs: usize },
    #[error("suite does not cover every achievable pair")]
    NotCovering,
    #[error("no external suite for instance {0}")]
    MissingExternal(usize),
    #[error("instance {index}: {source}")]
    Pipeline { index: usize, source: PipelineError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("spec file: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Shape of a batch of random instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceSpec {
    pub count: usize,
    pub n_factors: usize,
    /// Inclusive range of levels per factor.
    pub levels: (usize, usize),
    pub num_avoid: usize,
    pub avoid_arity: (usize, usize),
    pub num_must: usize,
    pub must_arity: (usize, usize),
    pub seed: u64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec::desk()
    }
}

impl InstanceSpec {
    /// Ten unconstrained instances with 10 factors of 2 to 6 levels.
    pub fn desk() -> Self {
        InstanceSpec {
            count: 10,
            n_factors: 10,
            levels: (2, 6),
            num_avoid: 0,
            avoid_arity: (2, 2),
            num_must: 0,
            must_arity: (1, 2),
            seed: 0,
        }
    }

    /// 30 factors with 2 to 30 levels each.
    pub fn wide(count: usize, seed: u64) -> Self {
        InstanceSpec {
            count,
            n_factors: 30,
            levels: (2, 30),
            seed,
            ..InstanceSpec::desk()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let spec: InstanceSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidSpec(m.to_string()));
        if self.n_factors == 0 {
            return bad("n_factors must be at least 1");
        }
        if self.levels.0 == 0 || self.levels.0 > self.levels.1 {
            return bad("levels must be a non-empty range of positive counts");
        }
        for (name, (lo, hi), used) in [
            ("avoid_arity", self.avoid_arity, self.num_avoid > 0),
            ("must_arity", self.must_arity, self.num_must > 0),
        ] {
            if used && (lo == 0 || lo > hi || hi > self.n_factors) {
                return Err(BenchError::InvalidSpec(format!("{name} must lie within 1..=n_factors")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub system: Arc<FactorSystem>,
    pub constraints: ConstraintSet,
}

impl Instance {
    pub fn pair_count(&self) -> usize {
        let l = self.system.level_counts();
        (0..l.len())
            .flat_map(|i| (i + 1..l.len()).map(move |j| (i, j)))
            .map(|(i, j)| l[i] * l[j])
            .sum()
    }
}

fn random_tuple(rng: &mut ChaCha8Rng, levels: &[usize], arity: (usize, usize)) -> PartialAssignment {
    let k = rng.gen_range(arity.0..=arity.1);
    let picks = sample(rng, levels.len(), k)
        .into_iter()
        .map(|f| Pick::new(f, rng.gen_range(0..levels[f])))
        .collect::<Vec<_>>();
    PartialAssignment::new(picks).expect("distinct factors")
}

/// Deterministic per `spec.seed`. Constraint samples are redrawn until the
/// instance has a valid case and every must tuple extends to one.
pub fn gen_instances(spec: &InstanceSpec) -> Result<Vec<Instance>, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for index in 0..spec.count {
        let levels: Vec<usize> = (0..spec.n_factors).map(|_| rng.gen_range(spec.levels.0..=spec.levels.1)).collect();
        let sys = FactorSystem::from_level_counts(&levels).expect("positive level counts");
        let mut accepted = None;
        for _ in 0..RESAMPLE_BUDGET {
            let avoid: Vec<_> = (0..spec.num_avoid)
                .map(|_| random_tuple(&mut rng, &levels, spec.avoid_arity))
                .collect();
            let must: Vec<_> = (0..spec.num_must)
                .map(|_| random_tuple(&mut rng, &levels, spec.must_arity))
                .collect();
            let ext = Extender::over(&sys, &avoid);
            if ext.is_extendable(&PartialAssignment::empty()) && must.iter().all(|m| ext.is_extendable(m)) {
                accepted = Some(ConstraintSet::new(&sys, must, avoid).expect("indices drawn in range"));
                break;
            }
        }
        let constraints = accepted.ok_or(BenchError::OverConstrained(index))?;
        out.push(Instance {
            system: Arc::new(sys),
            constraints,
        });
    }
    Ok(out)
}

/// Cumulative coverage per case and the share of cases spent from the case
/// that crosses 90% coverage onward.
pub fn coverage_curve_analysis(ts: &TestSuite, universe: &InteractionUniverse) -> Result<(Vec<(usize, f64)>, f64), BenchError> {
    if !suite_coverage(ts, universe).is_complete() {
        return Err(BenchError::NotCovering);
    }
    let total = universe.len();
    let mut st = CoverageState::new(universe);
    let mut curve = Vec::with_capacity(ts.len());
    let mut below = 0;
    for (k, tc) in ts.cases().iter().enumerate() {
        st.add_case(tc);
        curve.push((k, st.ratio()));
        if st.covered_count() * 10 < total * 9 {
            below += 1;
        }
    }
    let tail = if ts.is_empty() {
        0.0
    } else {
        (ts.len() - below) as f64 / ts.len() as f64
    };
    Ok((curve, tail))
}

/// Suite sizes, one row per instance and one column per method.
pub type SizeTable = [Vec<usize>];

/// For each method, `(tau, fraction of instances with size <= tau * best)`.
pub fn performance_profile(sizes: &SizeTable, taus: &[f64]) -> Vec<Vec<(f64, f64)>> {
    let methods = sizes.first().map_or(0, Vec::len);
    let n = sizes.len() as f64;
    (0..methods)
        .map(|m| {
            taus.iter()
                .map(|&tau| {
                    let hits = sizes
                        .iter()
                        .filter(|row| {
                            let best = *row.iter().min().expect("at least one method") as f64;
                            row[m] as f64 <= tau * best + 1e-9
                        })
                        .count();
                    (tau, hits as f64 / n)
                })
                .collect()
        })
        .collect()
}

/// Taus from 1 up to the largest observed ratio, in `steps` equal increments.
/// A table without any ratio above 1 yields the single tau 1.
pub fn profile_taus(sizes: &SizeTable, steps: usize) -> Vec<f64> {
    let worst = sizes
        .iter()
        .flat_map(|row| {
            let best = *row.iter().min().unwrap_or(&1) as f64;
            row.iter().map(move |&s| if best > 0.0 { s as f64 / best } else { 1.0 })
        })
        .fold(1.0, f64::max);
    let steps = if worst > 1.0 { steps.max(1) } else { 0 };
    (0..=steps).map(|k| 1.0 + (worst - 1.0) * k as f64 / steps as f64).collect()
}

/// `hist[m][r]` counts the instances where method `m` placed `r + 1`-th.
/// Tied methods share the best rank among them.
pub fn rank_distribution(sizes: &SizeTable) -> Vec<Vec<usize>> {
    let methods = sizes.first().map_or(0, Vec::len);
    let mut hist = vec![vec![0; methods]; methods];
    for row in sizes {
        for m in 0..methods {
            let rank = row.iter().filter(|&&s| s < row[m]).count();
            hist[m][rank] += 1;
        }
    }
    hist
}

/// `(baseline - method) / baseline * 100`.
pub fn reduction_pct(baseline: usize, method: usize) -> f64 {
    if baseline == 0 {
        0.0
    } else {
        (baseline as f64 - method as f64) / baseline as f64 * 100.0
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Default)]
pub struct BenchConfig {
    pub pipeline: PipelineConfig,
    /// Also run the pipeline with unit weights.
    pub unweighted: bool,
    /// Warm-start the pipeline from the greedy suite with this alpha.
    pub warm_alpha: Option<f64>,
    pub allow_large: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Suites from an external tool, one per instance, compared by size.
    pub external: Option<(String, Vec<TestSuite>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub index: usize,
    pub factors: usize,
    pub pairs: usize,
    /// Sizes in the order of [`BenchResult::methods`].
    pub sizes: Vec<usize>,
    pub wall_ms: Vec<f64>,
    /// Tail fraction of the greedy suite.
    pub greedy_tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub methods: Vec<String>,
    pub instances: Vec<InstanceResult>,
}

fn run_one(index: usize, inst: &Instance, cfg: &BenchConfig) -> Result<InstanceResult, BenchError> {
    let pairs = inst.pair_count();
    if pairs > LARGE_PAIR_THRESHOLD && !cfg.allow_large {
        return Err(BenchError::TooLarge { index, pairs });
    }
    let (sys, cs) = (&inst.system, &inst.constraints);
    let wrap = |source| BenchError::Pipeline { index, source };
    let mut sizes = Vec::new();
    let mut wall_ms = Vec::new();

    let t = Instant::now();
    let universe = build_universe(sys, cs, true);
    let greedy = greedy_generate(sys, &universe, cs, cfg.pipeline.seed);
    let greedy_ms = t.elapsed().as_secs_f64() * 1e3;
    let (_, greedy_tail) = coverage_curve_analysis(&greedy, &universe)?;

    let t = Instant::now();
    let warm = cfg.warm_alpha.map(|alpha| PipelineConfig {
        alpha,
        ..cfg.pipeline.clone()
    });
    let seq = match &warm {
        Some(wcfg) => pipeline::run(sys, cs, wcfg, Some(&greedy)),
        None => pipeline::run(sys, cs, &cfg.pipeline, None),
    }
    .map_err(wrap)?;
    sizes.push(seq.final_suite.len());
    wall_ms.push(t.elapsed().as_secs_f64() * 1e3);

    if cfg.unweighted {
        let t = Instant::now();
        let nw = PipelineConfig {
            weighted: false,
            ..cfg.pipeline.clone()
        };
        let r = pipeline::run(sys, cs, &nw, None).map_err(wrap)?;
        sizes.push(r.final_suite.len());
        wall_ms.push(t.elapsed().as_secs_f64() * 1e3);
    }
    sizes.push(greedy.len());
    wall_ms.push(greedy_ms);
    if let Some((_, suites)) = &cfg.external {
        let ext = suites.get(index).ok_or(BenchError::MissingExternal(index))?;
        if !pipeline::check_soundness(ext, &build_universe(sys, cs, true), &cs.avoid_only()).is_sound() {
            return Err(BenchError::NotCovering);
        }
        sizes.push(ext.len());
        wall_ms.push(0.0);
    }
    Ok(InstanceResult {
        index,
        factors: sys.factor_count(),
        pairs,
        sizes,
        wall_ms,
        greedy_tail,
    })
}

/// Runs every method on every instance, fanning instances out over a
/// thread pool.
pub fn run_bench(instances: &[Instance], cfg: &BenchConfig) -> Result<BenchResult, BenchError> {
    let mut methods = vec!["seqtg".to_string()];
    if cfg.unweighted {
        methods.push("seqtg_nw".into());
    }
    methods.push("greedy".into());
    if let Some((name, _)) = &cfg.external {
        methods.push(name.clone());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let results: Result<Vec<_>, _> = pool.install(|| instances.par_iter().enumerate().map(|(i, inst)| run_one(i, inst, cfg)).collect());
    Ok(BenchResult {
        methods,
        instances: results?,
    })
}

impl BenchResult {
    pub fn size_table(&self) -> Vec<Vec<usize>> {
        self.instances.iter().map(|r| r.sizes.clone()).collect()
    }

    fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }

    pub fn instances_csv(&self) -> String {
        let mut out = String::from("instance,factors,pairs");
        for m in &self.methods {
            let _ = write!(out, ",{m}_size,{m}_ms");
        }
        out.push_str(",greedy_tail\n");
        for r in &self.instances {
            let _ = write!(out, "{},{},{}", r.index, r.factors, r.pairs);
            for (s, t) in r.sizes.iter().zip(&r.wall_ms) {
                let _ = write!(out, ",{s},{t:.3}");
            }
            let _ = writeln!(out, ",{:.4}", r.greedy_tail);
        }
        out
    }

    /// Mean and sd of sizes per method, plus mean reduction of the first
    /// method against each other one.
    pub fn summary_csv(&self) -> String {
        let table = self.size_table();
        let mut out = String::from("method,mean_size,sd_size,first_method_reduction_pct_mean,first_method_reduction_pct_sd\n");
        for (m, name) in self.methods.iter().enumerate() {
            let sizes: Vec<f64> = table.iter().map(|r| r[m] as f64).collect();
            let (mean, sd) = mean_sd(&sizes);
            let red: Vec<f64> = table.iter().map(|r| reduction_pct(r[m], r[0])).collect();
            let (rm, rsd) = mean_sd(&red);
            let _ = writeln!(out, "{name},{mean:.3},{sd:.3},{rm:.3},{rsd:.3}");
        }
        out
    }

    pub fn profile_csv(&self, steps: usize) -> String {
        let table = self.size_table();
        let taus = profile_taus(&table, steps);
        let prof = performance_profile(&table, &taus);
        let mut out = String::from("tau");
        for m in &self.methods {
            let _ = write!(out, ",{m}");
        }
        out.push('\n');
        for (k, tau) in taus.iter().enumerate() {
            let _ = write!(out, "{tau:.4}");
            for p in &prof {
                let _ = write!(out, ",{:.4}", p[k].1);
            }
            out.push('\n');
        }
        out
    }

    pub fn ranks_csv(&self) -> String {
        let hist = rank_distribution(&self.size_table());
        let mut out = String::from("method");
        for r in 1..=self.methods.len() {
            let _ = write!(out, ",rank{r}");
        }
        out.push('\n');
        for (m, row) in hist.iter().enumerate() {
            out.push_str(&self.methods[m]);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    /// Mean reduction of `method` against `baseline`, in percent.
    pub fn mean_reduction(&self, method: &str, baseline: &str) -> Option<f64> {
        let (m, b) = (self.method_index(method)?, self.method_index(baseline)?);
        let red: Vec<f64> = self.instances.iter().map(|r| reduction_pct(r.sizes[b], r.sizes[m])).collect();
        Some(mean_sd(&red).0)
    }

    /// Writes `instances.csv`, `summary.csv`, `profile.csv` and `ranks.csv`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("instances.csv"), self.instances_csv())?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        std::fs::write(dir.join("profile.csv"), self.profile_csv(20))?;
        std::fs::write(dir.join("ranks.csv"), self.ranks_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TestCase;
    use proptest::prelude::*;

    #[test]
    fn instances_are_reproducible() {
        let spec = InstanceSpec {
            count: 3,
            n_factors: 5,
            levels: (2, 4),
            seed: 7,
            ..InstanceSpec::desk()
        };
        let a = gen_instances(&spec).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, gen_instances(&spec).unwrap());
        for inst in &a {
            let u = build_universe(&inst.system, &inst.constraints, true);
            assert_eq!(u.len(), inst.pair_count());
        }
    }

    #[test]
    fn wide_pair_counts() {
        let inst = gen_instances(&InstanceSpec::wide(2, 1)).unwrap();
        for i in &inst {
            let l = i.system.level_counts();
            assert_eq!(l.len(), 30);
            assert!(l.iter().all(|&x| (2..=30).contains(&x)));
            let total: usize = l.iter().sum();
            let squares: usize = l.iter().map(|x| x * x).sum();
            assert_eq!(i.pair_count(), (total * total - squares) / 2);
        }
    }

    #[test]
    fn constrained_instances_stay_satisfiable() {
        let spec = InstanceSpec {
            count: 5,
            n_factors: 6,
            levels: (2, 3),
            num_avoid: 4,
            avoid_arity: (2, 3),
            num_must: 2,
            must_arity: (1, 2),
            seed: 3,
        };
        for inst in gen_instances(&spec).unwrap() {
            let ext = Extender::new(&inst.system, &inst.constraints);
            assert!(ext.is_extendable(&PartialAssignment::empty()));
            assert!(inst.constraints.must().iter().all(|m| ext.is_extendable(m)));
        }
    }

    #[test]
    fn over_constrained_spec_errors() {
        let spec = InstanceSpec {
            count: 1,
            n_factors: 1,
            levels: (1, 1),
            num_avoid: 1,
            avoid_arity: (1, 1),
            ..InstanceSpec::desk()
        };
        assert!(matches!(gen_instances(&spec), Err(BenchError::OverConstrained(0))));
        let bad = InstanceSpec {
            levels: (3, 2),
            ..InstanceSpec::desk()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_from_toml() {
        let s = InstanceSpec::from_toml("count = 4\nn_factors = 6\nlevels = [2, 3]\nseed = 9\n").unwrap();
        assert_eq!((s.count, s.n_factors, s.levels, s.seed), (4, 6, (2, 3), 9));
        assert_eq!(s.num_avoid, 0);
        assert!(InstanceSpec::from_toml("levels = [0, 3]").is_err());
    }

    #[test]
    fn tail_fraction_examples() {
        let sys = Arc::new(FactorSystem::from_level_counts(&[2, 2]).unwrap());
        let u = build_universe(&sys, &ConstraintSet::empty(), true);
        let rows = [[0, 0], [0, 1], [1, 0], [1, 1]];
        let ts = TestSuite::new(
            Arc::clone(&sys),
            rows.iter().map(|r| TestCase::new(&sys, r.to_vec()).unwrap()).collect(),
        )
        .unwrap();
        let (curve, tail) = coverage_curve_analysis(&ts, &u).unwrap();
        assert_eq!(curve.iter().map(|c| c.1).collect::<Vec<_>>(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(tail, 0.25);

        // 100 pairs between two 10-level factors, one fresh pair per case
        let sys = Arc::new(FactorSystem::from_level_counts(&[10, 10]).unwrap());
        let u = build_universe(&sys, &ConstraintSet::empty(), true);
        let cases = (0..100).map(|k| TestCase::new(&sys, vec![k / 10, k % 10]).unwrap()).collect();
        let ts = TestSuite::new(Arc::clone(&sys), cases).unwrap();
        let (_, tail) = coverage_curve_analysis(&ts, &u).unwrap();
        assert!((tail - 0.10).abs() <= 0.011, "{tail}");

        let partial = TestSuite::new(Arc::clone(&sys), vec![TestCase::new(&sys, vec![0, 0]).unwrap()]).unwrap();
        assert!(coverage_curve_analysis(&partial, &u).is_err());
    }

    #[test]
    fn profiles_and_ranks() {
        let single = vec![vec![5], vec![7]];
        assert!(performance_profile(&single, &[1.0, 2.0]).iter().flatten().all(|p| p.1 == 1.0));
        let tied = vec![vec![4, 4], vec![9, 9]];
        let p = performance_profile(&tied, &[1.0]);
        assert_eq!((p[0][0].1, p[1][0].1), (1.0, 1.0));
        assert_eq!(rank_distribution(&tied), vec![vec![2, 0], vec![2, 0]]);

        let t = vec![vec![10, 12, 10], vec![8, 6, 9]];
        assert_eq!(rank_distribution(&t), vec![vec![1, 1, 0], vec![1, 0, 1], vec![1, 0, 1]]);
        assert_eq!(reduction_pct(10, 10), 0.0);
        assert_eq!(reduction_pct(20, 15), 25.0);
        let (m, sd) = mean_sd(&[2.0, 4.0, 6.0]);
        assert_eq!((m, sd), (4.0, 2.0));
    }

    proptest! {
        #[test]
        fn profile_laws(table in prop::collection::vec(prop::collection::vec(1usize..50, 3), 1..12)) {
            let taus = profile_taus(&table, 10);
            let prof = performance_profile(&table, &taus);
            let ranks = rank_distribution(&table);
            for (m, p) in prof.iter().enumerate() {
                prop_assert!(p.windows(2).all(|w| w[0].1 <= w[1].1));
                prop_assert_eq!(p.last().unwrap().1, 1.0);
                prop_assert_eq!(p[0].1, ranks[m][0] as f64 / table.len() as f64);
            }
        }
    }

    #[test]
    fn small_bench_runs() {
        let spec = InstanceSpec {
            count: 2,
            n_factors: 4,
            levels: (2, 3),
            seed: 1,
            ..InstanceSpec::desk()
        };
        let inst = gen_instances(&spec).unwrap();
        let cfg = BenchConfig {
            unweighted: true,
            threads: 2,
            ..BenchConfig::default()
        };
        let r = run_bench(&inst, &cfg).unwrap();
        assert_eq!(r.methods, vec!["seqtg", "seqtg_nw", "greedy"]);
        assert_eq!(r.instances.len(), 2);
        assert!(r.instances_csv().starts_with("instance,factors,pairs,seqtg_size"));
        assert_eq!(r.ranks_csv().lines().count(), 4);
        let dir = tempfile::tempdir().unwrap();
        r.write_outputs(dir.path()).unwrap();
        assert!(dir.path().join("profile.csv").exists());
    }

    #[test]
    fn large_instances_are_gated() {
        let inst = gen_instances(&InstanceSpec::wide(1, 2)).unwrap();
        assert!(matches!(
            run_bench(&inst, &BenchConfig::default()),
            Err(BenchError::TooLarge { .. })
        ));
    }
}
