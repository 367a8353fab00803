//! Tolerance sweeps over `S(ε)` / `S_p(δ, ε)`, trend statistics and
//! well-posedness verdicts.
//!
//! A sweep scans one fixed region at every tolerance of a decreasing
//! schedule and records the member count, diameter, Kuratowski surrogate and
//! Hausdorff distance to the last (smallest-tolerance) cloud. The verdict
//! reads those columns: a shrinking diameter with a single final cluster is
//! evidence of Levitin-Polyak well-posedness, a shrinking surrogate with at
//! least one cluster is evidence of the generalized form. Neither is a proof,
//! since the underlying characterizations are limits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{diameter, hausdorff, kuratowski_est, MetricError};
use crate::model::SplitProblem;
use crate::residual::{Evaluator, GridSpec, ResidualError};
use crate::scalar::{self, Scalar};
use crate::scan::{default_gap, scan_eps_set, solution_clusters, Cluster, EpsScan, ScanError, ScanRegion};
use crate::specfile;
use crate::TAU0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnoseError {
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Residual(#[from] ResidualError),
}

/// Inputs of a sweep. `region`, `grid` and `gap` default from the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<T> {
    pub schedule: Vec<T>,
    /// Paired with `schedule` entry by entry; parametric sweeps only.
    pub delta_schedule: Option<Vec<T>>,
    pub param: Option<Vec<T>>,
    pub step: T,
    pub region: Option<ScanRegion<T>>,
    pub grid: Option<GridSpec>,
    /// Cluster budget of the Kuratowski surrogate.
    pub k: usize,
    pub gap: Option<T>,
    pub allow_large: bool,
}

impl<T: Scalar> SweepConfig<T> {
    pub fn new(schedule: Vec<T>) -> Self {
        SweepConfig {
            schedule,
            delta_schedule: None,
            param: None,
            step: T::lit(0.01),
            region: None,
            grid: None,
            k: 4,
            gap: None,
            allow_large: false,
        }
    }

    pub fn default_schedule() -> Vec<T> {
        [0.2, 0.1, 0.05, 0.02].into_iter().map(T::lit).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub eps: T,
    pub delta: Option<T>,
    pub count: usize,
    /// `None` when the scan is empty.
    pub diam: Option<T>,
    pub mu_hat: Option<T>,
    pub hausdorff_to_final: Option<T>,
    pub clusters: Vec<Cluster<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrend<T> {
    pub rows: Vec<SweepRow<T>>,
    /// The scanned clouds, one per row.
    pub scans: Vec<EpsScan<T>>,
    pub k: usize,
    pub gap: T,
    pub region: ScanRegion<T>,
    pub grid: GridSpec,
    pub param: Option<Vec<T>>,
}

fn check_schedule<T: Scalar>(cfg: &SweepConfig<T>) -> Result<(), DiagnoseError> {
    let s = &cfg.schedule;
    if s.is_empty() {
        return Err(DiagnoseError::Schedule("schedule is empty".into()));
    }
    if s.iter().any(|e| !(*e > T::zero()) || !e.is_finite()) {
        return Err(DiagnoseError::Schedule("tolerances must be positive".into()));
    }
    if s.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(DiagnoseError::Schedule("tolerances must be strictly decreasing".into()));
    }
    if let Some(d) = &cfg.delta_schedule {
        if d.len() != s.len() {
            return Err(DiagnoseError::Schedule(format!(
                "{} deltas for {} tolerances",
                d.len(),
                s.len()
            )));
        }
        if d.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(DiagnoseError::Schedule("deltas must be >= 0".into()));
        }
        if d.windows(2).any(|w| w[1] > w[0]) {
            return Err(DiagnoseError::Schedule("deltas must be nonincreasing".into()));
        }
        if cfg.param.is_none() {
            return Err(DiagnoseError::Param("a delta schedule needs a parameter p".into()));
        }
    }
    if cfg.k == 0 {
        return Err(MetricError::ZeroBudget.into());
    }
    Ok(())
}

fn optional<T>(r: Result<T, MetricError>) -> Result<Option<T>, MetricError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(MetricError::Empty) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scans every schedule entry over one region (sized for the largest
/// tolerance) and collects the trend columns.
pub fn sweep<T: Scalar>(p: &SplitProblem<T>, cfg: &SweepConfig<T>) -> Result<SweepTrend<T>, DiagnoseError> {
    check_schedule(cfg)?;
    if p.k > 0 && cfg.param.is_none() {
        return Err(DiagnoseError::Param(format!("problem has {} parameters; give p", p.k)));
    }
    let grid = cfg.grid.unwrap_or_else(|| GridSpec::for_problem(p));
    let mut region = match &cfg.region {
        Some(r) => r.clone(),
        None => ScanRegion::around(p, cfg.schedule[0], cfg.step)?,
    };
    region.allow_large |= cfg.allow_large;
    let gap = cfg.gap.unwrap_or_else(|| default_gap(p));
    if !(gap > T::zero()) {
        return Err(ScanError::Gap.into());
    }

    let mut scans = Vec::with_capacity(cfg.schedule.len());
    for (i, &eps) in cfg.schedule.iter().enumerate() {
        let delta = cfg.delta_schedule.as_ref().map(|d| d[i]);
        scans.push(scan_eps_set(p, eps, &region, grid, cfg.param.as_deref(), delta)?);
    }
    let last = scans.last().expect("nonempty schedule");
    let mut rows = Vec::with_capacity(scans.len());
    for s in &scans {
        let h = if s.cloud.is_empty() || last.cloud.is_empty() {
            None
        } else {
            Some(hausdorff(&s.cloud, &last.cloud)?)
        };
        rows.push(SweepRow {
            eps: s.eps,
            delta: s.delta,
            count: s.cloud.len(),
            diam: optional(diameter(&s.cloud))?,
            mu_hat: optional(kuratowski_est(&s.cloud, cfg.k))?,
            hausdorff_to_final: h,
            clusters: solution_clusters(&s.cloud, gap, Some(&s.levels))?,
        });
    }
    Ok(SweepTrend {
        rows,
        scans,
        k: cfg.k,
        gap,
        region,
        grid,
        param: cfg.param.clone(),
    })
}

/// Hausdorff distances from each row's cloud to the final cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport<T> {
    pub hausdorff_to_final: Vec<Option<T>>,
    pub nonincreasing: bool,
}

/// Sweep of `S_p(δ_i, ε_i)` along paired schedules.
pub fn parametric_sweep<T: Scalar>(
    p: &SplitProblem<T>,
    param: &[T],
    eps_schedule: &[T],
    delta_schedule: &[T],
    base: &SweepConfig<T>,
) -> Result<(SweepTrend<T>, IntersectionReport<T>), DiagnoseError> {
    if p.k == 0 {
        return Err(DiagnoseError::Param("problem has no parameters".into()));
    }
    let mut cfg = base.clone();
    cfg.schedule = eps_schedule.to_vec();
    cfg.delta_schedule = Some(delta_schedule.to_vec());
    cfg.param = Some(param.to_vec());
    let trend = sweep(p, &cfg)?;
    let h: Vec<Option<T>> = trend.rows.iter().map(|r| r.hausdorff_to_final).collect();
    let nonincreasing = h.iter().all(Option::is_some) && h.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        trend,
        IntersectionReport {
            hausdorff_to_final: h,
            nonincreasing,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictTag {
    EvidenceLPWellPosed,
    EvidenceGeneralizedLPWellPosed,
    InconclusiveEmptyAtResolution,
    InconclusiveNonDecreasing,
}

impl std::fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    pub diam_final: T,
    pub mu_final: T,
    pub min_rows: usize,
}

/// How [`Thresholds`] are chosen: explicit values win; otherwise the final
/// value must have shrunk to `shrink` times the first row's value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy<T> {
    pub diam_final: Option<T>,
    pub mu_final: Option<T>,
    pub min_rows: usize,
    pub shrink: T,
}

impl<T: Scalar> Default for ThresholdPolicy<T> {
    fn default() -> Self {
        ThresholdPolicy {
            diam_final: None,
            mu_final: None,
            min_rows: 3,
            shrink: T::lit(0.5),
        }
    }
}

impl<T: Scalar> ThresholdPolicy<T> {
    pub fn resolve(&self, trend: &SweepTrend<T>) -> Thresholds<T> {
        let first = trend.rows.first();
        let rel = |v: Option<T>| v.map_or(T::zero(), |x| x * self.shrink);
        Thresholds {
            diam_final: self.diam_final.unwrap_or_else(|| rel(first.and_then(|r| r.diam))),
            mu_final: self.mu_final.unwrap_or_else(|| rel(first.and_then(|r| r.mu_hat))),
            min_rows: self.min_rows,
        }
    }

    /// Human-readable origin of each threshold, for reports.
    pub fn describe(&self) -> (String, String) {
        let s = self.shrink.as_f64();
        let d = match self.diam_final {
            Some(_) => "user".to_string(),
            None => format!("default: {s} x first-row diameter"),
        };
        let m = match self.mu_final {
            Some(_) => "user".to_string(),
            None => format!("default: {s} x first-row mu_hat"),
        };
        (d, m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T> {
    pub tag: VerdictTag,
    pub final_diam: Option<T>,
    pub final_mu: Option<T>,
    pub clusters: usize,
    pub thresholds: Thresholds<T>,
}

fn nonincreasing<T: Scalar>(col: &[Option<T>]) -> bool {
    col.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b <= a,
        _ => false,
    })
}

/// Total, deterministic classification of a trend.
pub fn verdict<T: Scalar>(trend: &SweepTrend<T>, th: &Thresholds<T>) -> Verdict<T> {
    let last = trend.rows.last();
    let final_diam = last.and_then(|r| r.diam);
    let final_mu = last.and_then(|r| r.mu_hat);
    let clusters = last.map_or(0, |r| r.clusters.len());
    let tag = if trend.rows.is_empty() || trend.rows.iter().any(|r| r.count == 0) {
        VerdictTag::InconclusiveEmptyAtResolution
    } else if trend.rows.len() < th.min_rows {
        VerdictTag::InconclusiveNonDecreasing
    } else {
        let diams: Vec<Option<T>> = trend.rows.iter().map(|r| r.diam).collect();
        let mus: Vec<Option<T>> = trend.rows.iter().map(|r| r.mu_hat).collect();
        let below = |v: Option<T>, t: T| v.is_some_and(|x| x <= t);
        if nonincreasing(&diams) && below(final_diam, th.diam_final) && clusters == 1 {
            VerdictTag::EvidenceLPWellPosed
        } else if nonincreasing(&mus) && below(final_mu, th.mu_final) && clusters >= 1 {
            VerdictTag::EvidenceGeneralizedLPWellPosed
        } else {
            VerdictTag::InconclusiveNonDecreasing
        }
    };
    Verdict {
        tag,
        final_diam,
        final_mu,
        clusters,
        thresholds: *th,
    }
}

/// Settings of [`closedness_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig<T> {
    /// Tolerance of the scan that supplies the solution cloud (floored at τ₀).
    pub eps: T,
    /// Extra tolerance allowed when a limit is rechecked on the refined grid.
    pub slack: T,
    pub step: T,
    pub region: Option<ScanRegion<T>>,
    pub grid: Option<GridSpec>,
    pub gap: Option<T>,
    pub param: Option<Vec<T>>,
    pub delta: Option<T>,
    /// Terms per generated sequence.
    pub terms: usize,
}

impl<T: Scalar> Default for ProbeConfig<T> {
    fn default() -> Self {
        ProbeConfig {
            eps: T::zero(),
            slack: T::lit(1e-6),
            step: T::lit(0.01),
            region: None,
            grid: None,
            gap: None,
            param: None,
            delta: None,
            terms: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport<T> {
    pub trials: usize,
    pub members_found: usize,
    pub clusters: usize,
    pub passed: usize,
    pub limits: Vec<Vec<T>>,
    pub failures: Vec<Vec<T>>,
    /// `None` when no solution was found at the scan resolution.
    pub pass_rate: Option<T>,
    pub note: Option<String>,
}

/// Builds sequences of scanned members that converge (in finitely many
/// steps) to support points of their cluster, and rechecks each limit with a
/// refined grid at `eps + slack`.
pub fn closedness_probe<T: Scalar>(
    p: &SplitProblem<T>,
    trials: usize,
    seed: u64,
    cfg: &ProbeConfig<T>,
) -> Result<ProbeReport<T>, DiagnoseError> {
    if trials == 0 {
        return Err(DiagnoseError::Schedule("trials must be >= 1".into()));
    }
    let grid = cfg.grid.unwrap_or_else(|| GridSpec::for_problem(p));
    let region = match &cfg.region {
        Some(r) => r.clone(),
        None => ScanRegion::around(p, cfg.eps, cfg.step)?,
    };
    let scan = scan_eps_set(p, cfg.eps, &region, grid, cfg.param.as_deref(), cfg.delta)?;
    let gap = cfg.gap.unwrap_or_else(|| default_gap(p));
    let clusters = solution_clusters(&scan.cloud, gap, Some(&scan.levels))?;
    let mut report = ProbeReport {
        trials,
        members_found: scan.cloud.len(),
        clusters: clusters.len(),
        passed: 0,
        limits: Vec::new(),
        failures: Vec::new(),
        pass_rate: None,
        note: None,
    };
    if clusters.is_empty() {
        report.note = Some("no solutions found at this resolution".into());
        return Ok(report);
    }

    let fine = Evaluator::new(p, grid.refined());
    let pts = scan.cloud.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let cluster = clusters.choose(&mut rng).expect("nonempty");
        let dir: Vec<T> = (0..scan.cloud.dim()).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        // support point of the cluster in a random direction
        let mut limit = cluster.members[0];
        for &i in &cluster.members[1..] {
            if scalar::dot(&dir, &pts[i]) > scalar::dot(&dir, &pts[limit]) {
                limit = i;
            }
        }
        let mut seq: Vec<usize> = cluster.members.clone();
        seq.sort_by(|&a, &b| {
            let (da, db) = (scalar::dist(&pts[a], &pts[limit]), scalar::dist(&pts[b], &pts[limit]));
            db.partial_cmp(&da).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let seq = &seq[seq.len().saturating_sub(cfg.terms)..];
        debug_assert_eq!(seq.last(), Some(&limit));
        let x = &pts[limit];
        let m = fine.is_member(&x[..p.n], &x[p.n..], cfg.eps.max(T::lit(TAU0)) + cfg.slack, cfg.param.as_deref(), cfg.delta)?;
        report.limits.push(x.clone());
        if m.member {
            report.passed += 1;
        } else {
            report.failures.push(x.clone());
        }
    }
    report.pass_rate = Some(T::from_usize(report.passed).expect("count") / T::from_usize(trials).expect("count"));
    Ok(report)
}

#[derive(Serialize)]
struct ReportRow {
    eps: f64,
    delta: Option<f64>,
    count: usize,
    diam: Option<f64>,
    mu_hat: Option<f64>,
    hausdorff_to_final: Option<f64>,
    clusters: Vec<ReportCluster>,
}

#[derive(Serialize)]
struct ReportCluster {
    representative: Vec<f64>,
    centroid: Vec<f64>,
    radius: f64,
    size: usize,
}

#[derive(Serialize)]
struct ReportThresholds {
    diam_final: f64,
    diam_final_source: String,
    mu_final: f64,
    mu_final_source: String,
    min_rows: usize,
    note: &'static str,
}

#[derive(Serialize)]
struct ReportGrid {
    scan_step: f64,
    region: String,
    c_level: u32,
    q_level: u32,
    c_points_per_axis: usize,
    q_points_per_axis: usize,
    param_per_axis: usize,
    k: usize,
    gap: f64,
    tau0: f64,
}

#[derive(Serialize)]
struct ReportProblem {
    n: usize,
    m: usize,
    params: usize,
    spec: String,
}

#[derive(Serialize)]
struct ReportVerdict {
    final_diam: Option<f64>,
    final_mu_hat: Option<f64>,
    clusters: usize,
}

#[derive(Serialize)]
struct Report {
    tool: &'static str,
    version: &'static str,
    problem: ReportProblem,
    p: Option<Vec<f64>>,
    schedule: Vec<f64>,
    delta_schedule: Option<Vec<f64>>,
    grid: ReportGrid,
    thresholds: ReportThresholds,
    rows: Vec<ReportRow>,
    verdict: VerdictTag,
    verdict_detail: ReportVerdict,
}

fn f<T: Scalar>(v: T) -> f64 {
    v.as_f64()
}

fn fv<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

/// The sweep report as pretty-printed JSON. Identical inputs give identical bytes.
pub fn report_json<T: Scalar>(
    p: &SplitProblem<T>,
    trend: &SweepTrend<T>,
    policy: &ThresholdPolicy<T>,
    v: &Verdict<T>,
) -> String {
    let (d_src, m_src) = policy.describe();
    let report = Report {
        tool: "smvi",
        version: env!("CARGO_PKG_VERSION"),
        problem: ReportProblem {
            n: p.n,
            m: p.m,
            params: p.k,
            spec: specfile::render(p, "", None),
        },
        p: trend.param.as_deref().map(fv),
        schedule: trend.rows.iter().map(|r| f(r.eps)).collect(),
        delta_schedule: trend
            .rows
            .iter()
            .map(|r| r.delta.map(f))
            .collect::<Option<Vec<f64>>>(),
        grid: ReportGrid {
            scan_step: f(trend.region.step),
            region: trend.region.to_string(),
            c_level: trend.grid.c_level,
            q_level: trend.grid.q_level,
            c_points_per_axis: GridSpec::points_per_axis(trend.grid.c_level),
            q_points_per_axis: GridSpec::points_per_axis(trend.grid.q_level),
            param_per_axis: trend.grid.param_per_axis,
            k: trend.k,
            gap: f(trend.gap),
            tau0: TAU0,
        },
        thresholds: ReportThresholds {
            diam_final: f(v.thresholds.diam_final),
            diam_final_source: d_src,
            mu_final: f(v.thresholds.mu_final),
            mu_final_source: m_src,
            min_rows: v.thresholds.min_rows,
            note: "final-value thresholds are a reporting policy; the theory fixes no rate",
        },
        rows: trend
            .rows
            .iter()
            .map(|r| ReportRow {
                eps: f(r.eps),
                delta: r.delta.map(f),
                count: r.count,
                diam: r.diam.map(f),
                mu_hat: r.mu_hat.map(f),
                hausdorff_to_final: r.hausdorff_to_final.map(f),
                clusters: r
                    .clusters
                    .iter()
                    .map(|c| ReportCluster {
                        representative: fv(&c.representative),
                        centroid: fv(&c.centroid),
                        radius: f(c.radius),
                        size: c.size,
                    })
                    .collect(),
            })
            .collect(),
        verdict: v.tag,
        verdict_detail: ReportVerdict {
            final_diam: v.final_diam.map(f),
            final_mu_hat: v.final_mu.map(f),
            clusters: v.clusters,
        },
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}
