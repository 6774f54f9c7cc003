//! Monte Carlo experiment driver: per-trial pipelines, sweep summaries,
//! exact expectations, the one-simplex-at-a-time hitting-time experiment and
//! the d = 1 acyclicity check.
//!
//! Trial `t` of every grid point uses the seed `derive_trial_seed(master, t)`,
//! so grid points share random numbers and results do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::collapse::{core, find_boundaries};
use crate::complex::{binomial, Complex, Incidence};
use crate::homology::{betti_many, counts_from_incidence, FieldPrime, HomologySummary};
use crate::sampler::{derive_trial_seed, sample_complex, sample_stream, SampleError, SampleParams};
use crate::treeproc::{rho_trial, RhoEstimate};
use crate::constants::rho_recursion;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub d: usize,
    pub n_list: Vec<u32>,
    pub c_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub primes: Vec<FieldPrime>,
    pub skip_homology: bool,
    pub skip_collapse: bool,
}

impl SweepConfig {
    pub fn new(d: usize, n_list: Vec<u32>, c_grid: Vec<f64>, trials: u64, seed: u64) -> Self {
        SweepConfig {
            d,
            n_list,
            c_grid,
            trials,
            seed,
            primes: FieldPrime::defaults(),
            skip_homology: false,
            skip_collapse: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_list.is_empty() || self.c_grid.is_empty() {
            return bad("empty n list or c grid".into());
        }
        for &c in &self.c_grid {
            if !(c >= 0.0 && c.is_finite()) {
                return bad(format!("c = {c} must be a nonnegative number"));
            }
        }
        for &n in &self.n_list {
            if (n as usize) <= self.d {
                return bad(format!("n = {n} must exceed d = {}", self.d));
            }
            for &c in &self.c_grid {
                SampleParams::with_c(n, self.d, c, 0).check()?;
            }
        }
        Ok(())
    }

    /// Grid points in output order: `n` outer, `c` inner.
    pub fn points(&self) -> Vec<(u32, f64)> {
        self.n_list
            .iter()
            .flat_map(|&n| self.c_grid.iter().map(move |&c| (n, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub n: u32,
    pub d: usize,
    pub c: f64,
    pub f_d: u64,
    pub in_f: bool,
    /// `None` when collapse was skipped.
    pub collapsible: Option<bool>,
    pub rounds: Option<usize>,
    pub core_size: Option<usize>,
    pub num_boundaries: u64,
    /// One entry per computed prime; empty when homology was skipped.
    pub homology: Vec<HomologySummary>,
    pub u: i64,
    pub v: i64,
}

impl TrialRecord {
    pub fn summary(&self, p: u32) -> Option<&HomologySummary> {
        self.homology.iter().find(|h| h.p == p)
    }

    pub fn h_d(&self, p: u32) -> Option<u64> {
        self.summary(p).map(|h| h.h_d)
    }

    pub fn h_d_minus_1(&self, p: u32) -> Option<u64> {
        self.summary(p).map(|h| h.h_d_minus_1)
    }

    pub fn to_row(&self) -> TrialRow {
        TrialRow {
            trial: self.trial,
            seed: self.seed,
            n: self.n,
            d: self.d,
            c: self.c,
            f_d: self.f_d,
            in_f: self.in_f,
            collapsible: self.collapsible,
            rounds: self.rounds,
            core_size: self.core_size,
            num_boundaries: self.num_boundaries,
            h_d_p2: self.h_d(2),
            h_d_p3: self.h_d(3),
            h_d_p5: self.h_d(5),
            h_dm1_p2: self.h_d_minus_1(2),
            u: self.u,
            v: self.v,
        }
    }

    /// The CSV row as a JSON object, plus `h_d_p*`/`h_dm1_p*` for any further primes.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self.to_row()).expect("plain data");
        let map = value.as_object_mut().expect("struct serializes to an object");
        for h in &self.homology {
            map.entry(format!("h_d_p{}", h.p)).or_insert(h.h_d.into());
            if h.p != 2 {
                map.insert(format!("h_dm1_p{}", h.p), h.h_d_minus_1.into());
            }
        }
        value
    }
}

/// One line of the per-trial CSV; empty cells mean "not computed".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub n: u32,
    pub d: usize,
    pub c: f64,
    pub f_d: u64,
    #[serde(rename = "in_F")]
    pub in_f: bool,
    pub collapsible: Option<bool>,
    pub rounds: Option<usize>,
    pub core_size: Option<usize>,
    pub num_boundaries: u64,
    pub h_d_p2: Option<u64>,
    pub h_d_p3: Option<u64>,
    pub h_d_p5: Option<u64>,
    pub h_dm1_p2: Option<u64>,
    pub u: i64,
    pub v: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub skip_homology: bool,
    pub skip_collapse: bool,
}

/// Collapse, boundaries, homology and cocycle bounds of one complex.
pub fn analyze_complex(y: &Complex, primes: &[FieldPrime], opts: PipelineOptions) -> Analysis {
    let inc = Incidence::build(y);
    let counts = counts_from_incidence(y, &inc);
    let boundaries = find_boundaries(y);
    let core = (!opts.skip_collapse).then(|| core(y));
    let homology = if opts.skip_homology {
        Vec::new()
    } else {
        betti_many(y, primes)
    };
    Analysis {
        f_d: y.f_d() as u64,
        num_boundaries: boundaries.len() as u64,
        boundaries: boundaries.as_slice().to_vec(),
        collapsible: core.as_ref().map(|c| c.collapsible),
        rounds: core.as_ref().map(|c| c.rounds),
        core_size: core.as_ref().map(|c| c.r),
        homology,
        a: counts.a,
        alpha: counts.alpha,
        u: counts.u,
        v: counts.v,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub f_d: u64,
    pub num_boundaries: u64,
    pub boundaries: Vec<Vec<u32>>,
    pub collapsible: Option<bool>,
    pub rounds: Option<usize>,
    pub core_size: Option<usize>,
    pub homology: Vec<HomologySummary>,
    pub a: u64,
    pub alpha: Vec<u64>,
    pub u: i64,
    pub v: i64,
}

/// Trial `trial` at grid point `(n, c)`.
pub fn run_trial(config: &SweepConfig, n: u32, c: f64, trial: u64) -> Result<TrialRecord, HarnessError> {
    let seed = derive_trial_seed(config.seed, trial);
    let y = sample_complex(&SampleParams::with_c(n, config.d, c, seed))?;
    let opts = PipelineOptions {
        skip_homology: config.skip_homology,
        skip_collapse: config.skip_collapse,
    };
    let a = analyze_complex(&y, &config.primes, opts);
    Ok(TrialRecord {
        trial,
        seed,
        n,
        d: config.d,
        c,
        f_d: a.f_d,
        in_f: a.num_boundaries == 0,
        collapsible: a.collapsible,
        rounds: a.rounds,
        core_size: a.core_size,
        num_boundaries: a.num_boundaries,
        homology: a.homology,
        u: a.u,
        v: a.v,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, HarnessError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

/// Default worker count: the available parallelism.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// All trials of one grid point, in trial order.
pub fn run_point(config: &SweepConfig, n: u32, c: f64, jobs: usize) -> Result<Vec<TrialRecord>, HarnessError> {
    config.validate()?;
    pool(jobs)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, n, c, t))
            .collect()
    })
}

/// Every trial of the sweep: grid points in [`SweepConfig::points`] order, trials in order.
pub fn run_trials(config: &SweepConfig, jobs: usize) -> Result<Vec<TrialRecord>, HarnessError> {
    config.validate()?;
    let pool = pool(jobs)?;
    let mut out = Vec::with_capacity(config.points().len() * config.trials as usize);
    for (n, c) in config.points() {
        let batch: Result<Vec<_>, _> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| run_trial(config, n, c, t))
                .collect()
        });
        out.extend(batch?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedCounts {
    pub f_d: f64,
    pub a: f64,
    pub alpha: Vec<f64>,
}

/// Exact finite-n expectations of `f_d`, `a` and `α_0..α_d` in `Y_d(n, p)`.
pub fn expected_counts(n: u32, d: usize, p: f64) -> ExpectedCounts {
    let (nn, dd) = (n as u64, d as u64);
    let simplices = binomial(nn, dd + 1) as f64;
    let q = 1.0 - p;
    let miss = q.powi((n as usize - d - 1) as i32);
    let alpha = (0..=d)
        .map(|j| {
            simplices
                * binomial(dd + 1, j as u64) as f64
                * p
                * miss.powi((d + 1 - j) as i32)
                * (1.0 - miss).powi(j as i32)
        })
        .collect();
    ExpectedCounts {
        f_d: simplices * p,
        a: binomial(nn, dd) as f64 * q.powi((n as usize - d) as i32),
        alpha,
    }
}

/// `exp(-c^{d+2} / (d+2)!)`.
pub fn pr_f_limit(d: usize, c: f64) -> f64 {
    let fact: f64 = (1..=d + 2).map(|i| i as f64).product();
    (-c.powi(d as i32 + 2) / fact).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub estimate: f64,
    pub se: f64,
    pub count: u64,
}

impl Proportion {
    pub fn new(hits: u64, count: u64) -> Option<Self> {
        (count > 0).then(|| {
            let estimate = hits as f64 / count as f64;
            Proportion {
                estimate,
                se: (estimate * (1.0 - estimate) / count as f64).sqrt(),
                count,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeRate {
    pub p: u32,
    pub rate: Proportion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub d: usize,
    pub c: f64,
    pub trials: u64,
    pub pr_f: Proportion,
    pub pr_f_limit: f64,
    /// Absent when no trial landed in `F`, or collapse was skipped.
    pub pr_collapse_given_f: Option<Proportion>,
    pub pr_hd_nonzero: Vec<PrimeRate>,
    pub mean_v: f64,
}

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: u32,
    pub c: f64,
    pub trials: u64,
    #[serde(rename = "pr_F")]
    pub pr_f: f64,
    #[serde(rename = "se_F")]
    pub se_f: f64,
    #[serde(rename = "pr_F_limit")]
    pub pr_f_limit: f64,
    #[serde(rename = "pr_collapse_given_F")]
    pub pr_collapse_given_f: Option<f64>,
    #[serde(rename = "se_cgF")]
    pub se_cgf: Option<f64>,
    pub pr_hd_nonzero_p2: Option<f64>,
    pub se_hd: Option<f64>,
    pub mean_v: f64,
}

impl SweepRow {
    pub fn hd_nonzero(&self, p: u32) -> Option<Proportion> {
        self.pr_hd_nonzero.iter().find(|r| r.p == p).map(|r| r.rate)
    }

    pub fn to_row(&self) -> SummaryRow {
        let hd = self.hd_nonzero(2);
        SummaryRow {
            n: self.n,
            c: self.c,
            trials: self.trials,
            pr_f: self.pr_f.estimate,
            se_f: self.pr_f.se,
            pr_f_limit: self.pr_f_limit,
            pr_collapse_given_f: self.pr_collapse_given_f.map(|p| p.estimate),
            se_cgf: self.pr_collapse_given_f.map(|p| p.se),
            pr_hd_nonzero_p2: hd.map(|p| p.estimate),
            se_hd: hd.map(|p| p.se),
            mean_v: self.mean_v,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self.to_row()).expect("plain data");
        let map = value.as_object_mut().expect("struct serializes to an object");
        for r in self.pr_hd_nonzero.iter().filter(|r| r.p != 2) {
            map.insert(format!("pr_hd_nonzero_p{}", r.p), r.rate.estimate.into());
            map.insert(format!("se_hd_p{}", r.p), r.rate.se.into());
        }
        value
    }
}

/// Summary of records sharing one `(n, d, c)`.
pub fn aggregate(records: &[TrialRecord], d: usize, c: f64) -> SweepRow {
    assert!(!records.is_empty(), "nothing to aggregate");
    let n = records[0].n;
    debug_assert!(records.iter().all(|r| r.n == n && r.d == d && r.c == c));
    let trials = records.len() as u64;
    let in_f: Vec<&TrialRecord> = records.iter().filter(|r| r.in_f).collect();
    let pr_collapse_given_f = if records.iter().any(|r| r.collapsible.is_none()) {
        None
    } else {
        let hits = in_f.iter().filter(|r| r.collapsible == Some(true)).count() as u64;
        Proportion::new(hits, in_f.len() as u64)
    };
    let pr_hd_nonzero = records[0]
        .homology
        .iter()
        .map(|h| {
            let hits = records.iter().filter(|r| r.h_d(h.p).is_some_and(|x| x > 0)).count();
            PrimeRate {
                p: h.p,
                rate: Proportion::new(hits as u64, trials).expect("trials > 0"),
            }
        })
        .collect();
    SweepRow {
        n,
        d,
        c,
        trials,
        pr_f: Proportion::new(in_f.len() as u64, trials).expect("trials > 0"),
        pr_f_limit: pr_f_limit(d, c),
        pr_collapse_given_f,
        pr_hd_nonzero,
        mean_v: records.iter().map(|r| r.v as f64).sum::<f64>() / trials as f64,
    }
}

/// Summaries for each grid point of a finished sweep.
pub fn summarize(config: &SweepConfig, records: &[TrialRecord]) -> Vec<SweepRow> {
    records
        .chunks(config.trials as usize)
        .map(|chunk| aggregate(chunk, config.d, chunk[0].c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingTimeRecord {
    pub n: u32,
    pub d: usize,
    pub seed: u64,
    /// Least `M` whose prefix has a nonempty core.
    #[serde(rename = "M_first_core")]
    pub m_first_core: usize,
    pub core_size_at_first: usize,
    pub num_boundaries_at_first: usize,
    pub core_covered_by_boundaries: bool,
    /// Least `M` whose core has at least `jump_threshold · C(n, d+1)` simplices.
    #[serde(rename = "M_jump")]
    pub m_jump: usize,
    pub core_size_at_jump: usize,
}

/// Least `m` in `(lo, hi]` with `pred(m)`, given `pred` monotone, false at `lo`, true at `hi`.
fn first_true(mut lo: usize, mut hi: usize, mut pred: impl FnMut(usize) -> bool) -> usize {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The first-core and giant-core stages of the one-simplex-at-a-time process.
///
/// Core size is nondecreasing along the process (the core of a subcomplex
/// lies inside the core of the larger complex), so both stages are found by
/// bisection over prefixes. `jump_threshold` is a heuristic proxy for the
/// giant-core scale.
pub fn hitting_time(n: u32, d: usize, seed: u64, jump_threshold: f64) -> Result<HittingTimeRecord, HarnessError> {
    if d == 0 || (n as usize) < d + 2 {
        return Err(HarnessError::InvalidConfig(format!("need d >= 1 and n >= d + 2, got n = {n}, d = {d}")));
    }
    if !(jump_threshold > 0.0 && jump_threshold <= 1.0) {
        return Err(HarnessError::InvalidConfig(format!("jump threshold {jump_threshold} not in (0, 1]")));
    }
    let stream = sample_stream(n, d, seed);
    let total = stream.len();
    let core_size = |m: usize| core(&stream.prefix(m)).r;

    let m_first_core = first_true(0, total, |m| core_size(m) > 0);
    let y = stream.prefix(m_first_core);
    let first = core(&y);
    let boundaries = find_boundaries(&y);
    let covered = first.core.iter().all(|s| boundaries.covers(s));

    let target = ((jump_threshold * total as f64).ceil() as usize).max(1);
    let m_jump = if first.r >= target {
        m_first_core
    } else {
        first_true(m_first_core, total, |m| core_size(m) >= target)
    };
    Ok(HittingTimeRecord {
        n,
        d,
        seed,
        m_first_core,
        core_size_at_first: first.r,
        num_boundaries_at_first: boundaries.len(),
        core_covered_by_boundaries: covered,
        m_jump,
        core_size_at_jump: core_size(m_jump),
    })
}

/// `runs` hitting-time experiments; run `i` uses `derive_trial_seed(seed, i)`.
pub fn hitting_runs(
    n: u32,
    d: usize,
    runs: u64,
    seed: u64,
    jump_threshold: f64,
    jobs: usize,
) -> Result<Vec<HittingTimeRecord>, HarnessError> {
    pool(jobs)?.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| hitting_time(n, d, derive_trial_seed(seed, i), jump_threshold))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcyclicCheck {
    pub n: u32,
    pub c: f64,
    pub trials: u64,
    pub estimate: f64,
    pub se: f64,
    /// `sqrt(1 - c) · exp(c/2 + c²/4)`.
    pub reference: f64,
}

pub fn acyclic_reference(c: f64) -> f64 {
    (1.0 - c).sqrt() * (c / 2.0 + c * c / 4.0).exp()
}

/// Fraction of `G(n, c/n)` samples that are forests, i.e. 1-collapsible.
pub fn acyclic_probability_check(n: u32, c: f64, trials: u64, seed: u64, jobs: usize) -> Result<AcyclicCheck, HarnessError> {
    if !(0.0..1.0).contains(&c) {
        return Err(HarnessError::InvalidConfig(format!("c = {c} must lie in [0, 1)")));
    }
    if trials == 0 {
        return Err(HarnessError::InvalidConfig("trials must be at least 1".into()));
    }
    let hits: Result<u64, HarnessError> = pool(jobs)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let g = sample_complex(&SampleParams::with_c(n, 1, c, derive_trial_seed(seed, t)))?;
                Ok(core(&g).collapsible as u64)
            })
            .sum()
    });
    let rate = Proportion::new(hits?, trials).expect("trials > 0");
    Ok(AcyclicCheck {
        n,
        c,
        trials,
        estimate: rate.estimate,
        se: rate.se,
        reference: acyclic_reference(c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoRow {
    pub k: usize,
    pub estimate: f64,
    pub se: f64,
    pub analytic: f64,
}

/// Monte Carlo `ρ_d(k', γ)` for `k' = 0..=k` next to the recursion values.
pub fn rho_table(d: usize, k: usize, gamma: f64, trials: u64, seed: u64, jobs: usize) -> Result<Vec<RhoRow>, HarnessError> {
    if d == 0 || trials == 0 || !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(HarnessError::InvalidConfig("need d >= 1, trials >= 1 and gamma >= 0".into()));
    }
    let analytic = rho_recursion(d, gamma, k).values;
    let pool = pool(jobs)?;
    Ok((0..=k)
        .map(|kk| {
            let hits: u64 = pool.install(|| {
                (0..trials)
                    .into_par_iter()
                    .map(|t| rho_trial(d, kk, gamma, seed, t) as u64)
                    .sum()
            });
            let est = RhoEstimate::from_counts(hits, trials);
            RhoRow {
                k: kk,
                estimate: est.estimate,
                se: est.standard_error,
                analytic: analytic[kk],
            }
        })
        .collect())
}
