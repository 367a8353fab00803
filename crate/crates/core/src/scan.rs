//! Grid scans of `S(ε)` and `S_p(δ, ε)` and single-linkage clustering of the
//! resulting clouds.
//!
//! A scan visits every pair `(z, w)` of a product lattice and keeps the pairs
//! that pass the same membership test as [`Evaluator::is_member`]. Per-point
//! quantities (`d(z, C)`, the first defect, and their `w` counterparts) are
//! computed once per axis point, so the pair loop only evaluates `‖w - Az‖`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::metrics::PointCloud;
use crate::model::SplitProblem;
use crate::residual::{param_ball_samples, threshold, tensor, Evaluator, GridSpec, ResidualError};
use crate::scalar::{self, Scalar};

/// Largest `n + m` scanned without `allow_large`.
pub const MAX_SCAN_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("scan region: {0}")]
    Region(String),
    #[error("scanning {0} dimensions exceeds the cap of {MAX_SCAN_DIM}; pass the override to proceed")]
    TooLarge(usize),
    #[error("cluster gap must be > 0")]
    Gap,
    #[error(transparent)]
    Residual(#[from] ResidualError),
}

/// Product lattice over which pairs `(z, w)` are scanned.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRegion<T> {
    pub z_lower: Vec<T>,
    pub z_upper: Vec<T>,
    pub w_lower: Vec<T>,
    pub w_upper: Vec<T>,
    pub step: T,
    /// Lifts the `n + m <= 4` cap.
    pub allow_large: bool,
}

impl<T: Scalar> ScanRegion<T> {
    pub fn new(z: (Vec<T>, Vec<T>), w: (Vec<T>, Vec<T>), step: T) -> Result<Self, ScanError> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(ScanError::Region(format!("step must be > 0, got {step}")));
        }
        for (lo, hi) in [(&z.0, &z.1), (&w.0, &w.1)] {
            if lo.len() != hi.len() {
                return Err(ScanError::Region("lower and upper bounds differ in length".into()));
            }
            if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                return Err(ScanError::Region("each lower bound must be <= its upper bound".into()));
            }
        }
        Ok(ScanRegion {
            z_lower: z.0,
            z_upper: z.1,
            w_lower: w.0,
            w_upper: w.1,
            step,
            allow_large: false,
        })
    }

    /// The same interval `[lo, hi]` on every axis of both spaces.
    pub fn cube(lo: T, hi: T, n: usize, m: usize, step: T) -> Result<Self, ScanError> {
        Self::new((vec![lo; n], vec![hi; n]), (vec![lo; m], vec![hi; m]), step)
    }

    /// Bounding boxes of `C` and `Q` inflated by `eps` plus two steps.
    pub fn around(p: &SplitProblem<T>, eps: T, step: T) -> Result<Self, ScanError> {
        let margin = eps + step + step;
        let inflate = |(lo, hi): (Vec<T>, Vec<T>)| {
            (
                lo.into_iter().map(|v| v - margin).collect(),
                hi.into_iter().map(|v| v + margin).collect(),
            )
        };
        Self::new(inflate(p.c.bounding_box()), inflate(p.q.bounding_box()), step)
    }

    /// Lattice coordinates along one axis. When `1/step` is an integer `N`
    /// the coordinates are `i / N`, so lattice points such as 0, 1 and -1 are
    /// hit exactly.
    pub fn axis(&self, lo: T, hi: T) -> Vec<T> {
        let inv = T::one() / self.step;
        let n = inv.round();
        let exact = (inv - n).abs() <= T::lit(1e-9) * n.max(T::one());
        let tol = T::lit(1e-9);
        let (scale, coord): (T, Box<dyn Fn(T) -> T>) = if exact {
            (n, Box::new(move |i: T| i / n))
        } else {
            let s = self.step;
            (inv, Box::new(move |i: T| i * s))
        };
        let first = (lo * scale - tol).ceil();
        let last = (hi * scale + tol).floor();
        let mut out = Vec::new();
        let mut i = first;
        while i <= last {
            out.push(coord(i));
            i = i + T::one();
        }
        out
    }

    pub fn z_axes(&self) -> Vec<Vec<T>> {
        self.z_lower.iter().zip(&self.z_upper).map(|(&l, &h)| self.axis(l, h)).collect()
    }

    pub fn w_axes(&self) -> Vec<Vec<T>> {
        self.w_lower.iter().zip(&self.w_upper).map(|(&l, &h)| self.axis(l, h)).collect()
    }

    /// Checks dimensions, the two-points-per-axis minimum, and that the
    /// region covers the ε-inflation of `C` and `Q`.
    pub fn validate(&self, p: &SplitProblem<T>, eps: T) -> Result<(), ScanError> {
        if self.z_lower.len() != p.n || self.w_lower.len() != p.m {
            return Err(ScanError::Region(format!(
                "region has dimensions {} x {}, problem has {} x {}",
                self.z_lower.len(),
                self.w_lower.len(),
                p.n,
                p.m
            )));
        }
        if !self.allow_large && p.n + p.m > MAX_SCAN_DIM {
            return Err(ScanError::TooLarge(p.n + p.m));
        }
        if self.z_axes().iter().chain(&self.w_axes()).any(|a| a.len() < 2) {
            return Err(ScanError::Region("resolution must give at least 2 points per axis".into()));
        }
        let tol = T::lit(1e-12);
        for (name, set, lo, hi) in [
            ("C", &p.c, &self.z_lower, &self.z_upper),
            ("Q", &p.q, &self.w_lower, &self.w_upper),
        ] {
            let (blo, bhi) = set.bounding_box();
            for i in 0..blo.len() {
                if lo[i] > blo[i] - eps + tol || hi[i] < bhi[i] + eps - tol {
                    return Err(ScanError::Region(format!(
                        "axis {} of the region [{}, {}] does not contain the eps-inflation [{}, {}] of {name}",
                        i + 1,
                        lo[i],
                        hi[i],
                        blo[i] - eps,
                        bhi[i] + eps
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for ScanRegion<T> {
    /// Axis intervals, `z` axes first: `[-0.5,1.5]x[-0.5,1.5]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lows = self.z_lower.iter().chain(&self.w_lower);
        let highs = self.z_upper.iter().chain(&self.w_upper);
        let parts: Vec<String> = lows
            .zip(highs)
            .map(|(l, h)| format!("[{},{}]", l.as_f64(), h.as_f64()))
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Result of one scan: member pairs stored as `(z, w)` concatenated, with
/// the smallest profile level seen for each.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsScan<T> {
    pub cloud: PointCloud<T>,
    pub levels: Vec<T>,
    pub eps: T,
    pub delta: Option<T>,
    pub param: Option<Vec<T>>,
    pub region: ScanRegion<T>,
    pub grid: GridSpec,
    /// Number of pairs visited.
    pub visited: usize,
}

impl<T: Scalar> EpsScan<T> {
    /// The CSV sidecar line, without the leading `#`.
    pub fn sidecar(&self) -> String {
        let delta = self.delta.map_or("none".to_string(), |d| d.as_f64().to_string());
        let mut s = format!(
            "eps={}, delta={}, res={}, region={}",
            self.eps.as_f64(),
            delta,
            self.step().as_f64(),
            self.region
        );
        if let Some(p) = &self.param {
            let p: Vec<String> = p.iter().map(|v| v.as_f64().to_string()).collect();
            s.push_str(&format!(", p={}", p.join(";")));
        }
        s
    }

    pub fn step(&self) -> T {
        self.region.step
    }

    pub fn to_csv(&self) -> String {
        self.cloud.to_csv(Some(&self.sidecar()))
    }
}

fn worker_count(jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var("SMVI_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

/// Runs `f` over `0..len` in contiguous chunks and concatenates the results
/// in index order.
fn par_chunks<R: Send, E: Send>(
    len: usize,
    f: impl Fn(std::ops::Range<usize>) -> Result<Vec<R>, E> + Sync,
) -> Result<Vec<R>, E> {
    let workers = worker_count(len);
    if workers <= 1 {
        return f(0..len);
    }
    let chunk = len.div_ceil(workers);
    let parts: Vec<Result<Vec<R>, E>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|t| {
                let f = &f;
                let range = (t * chunk).min(len)..((t + 1) * chunk).min(len);
                s.spawn(move || f(range))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(len);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Per-axis-point data: distance to the set and one defect per parameter sample.
struct SideData<T> {
    point: Vec<T>,
    feas: T,
    defects: Vec<T>,
}

/// Every lattice pair of `region` that lies in `S(ε)` (or `S_p(δ, ε)` when a
/// parameter is given), in row-major order with `z` outermost.
pub fn scan_eps_set<T: Scalar>(
    p: &SplitProblem<T>,
    eps: T,
    region: &ScanRegion<T>,
    grid: GridSpec,
    param: Option<&[T]>,
    delta: Option<T>,
) -> Result<EpsScan<T>, ScanError> {
    if !(eps >= T::zero()) {
        return Err(ResidualError::NegativeEps(eps.as_f64()).into());
    }
    if let Some(d) = delta {
        if !(d >= T::zero()) {
            return Err(ResidualError::NegativeDelta(d.as_f64()).into());
        }
    }
    region.validate(p, eps)?;
    let ev = Evaluator::new(p, grid);
    ev.check_param(param)?;
    let samples = match param {
        Some(q) if !q.is_empty() => param_ball_samples(q, delta.unwrap_or(T::zero()), grid.param_per_axis),
        _ => vec![Vec::new()],
    };
    let tables = samples
        .iter()
        .map(|q| ev.tables(q))
        .collect::<Result<Vec<_>, _>>()?;

    let zs = tensor(&region.z_axes());
    let ws = tensor(&region.w_axes());
    let z_data = par_chunks(zs.len(), |range| {
        range
            .map(|i| {
                let z = &zs[i];
                let defects = tables
                    .iter()
                    .map(|t| ev.side1(t, z).map(|s| s.defect))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SideData {
                    point: z.clone(),
                    feas: p.c.distance(z),
                    defects,
                })
            })
            .collect::<Result<Vec<_>, ResidualError>>()
    })?;
    let w_data = par_chunks(ws.len(), |range| {
        range
            .map(|i| {
                let w = &ws[i];
                let defects = tables
                    .iter()
                    .map(|t| ev.side2(t, w).map(|s| s.defect))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SideData {
                    point: w.clone(),
                    feas: p.q.distance(w),
                    defects,
                })
            })
            .collect::<Result<Vec<_>, ResidualError>>()
    })?;

    let thr = threshold(eps);
    let members = par_chunks(z_data.len(), |range| {
        let mut out = Vec::new();
        for zd in &z_data[range] {
            if zd.feas > thr || zd.defects.iter().all(|&d| d > thr) {
                continue;
            }
            let az = p.a.apply(&zd.point).map_err(ResidualError::from)?;
            for wd in &w_data {
                let base = zd.feas.max(wd.feas).max(scalar::dist(&wd.point, &az));
                if base > thr {
                    continue;
                }
                let level = zd
                    .defects
                    .iter()
                    .zip(&wd.defects)
                    .map(|(&d1, &d2)| base.max(d1).max(d2))
                    .fold(T::infinity(), T::min);
                if level <= thr {
                    let pair: Vec<T> = zd.point.iter().chain(&wd.point).copied().collect();
                    out.push((pair, level));
                }
            }
        }
        Ok::<_, ResidualError>(out)
    })?;

    let (points, levels): (Vec<_>, Vec<_>) = members.into_iter().unzip();
    let cloud = PointCloud::new(p.n + p.m, points).expect("lattice points are finite");
    Ok(EpsScan {
        cloud,
        levels,
        eps,
        delta: param.and(delta),
        param: param.filter(|q| !q.is_empty()).map(<[T]>::to_vec),
        region: region.clone(),
        grid,
        visited: zs.len() * ws.len(),
    })
}

/// One single-linkage component of a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    /// Member with the smallest membership level (the centroid when no levels are given).
    pub representative: Vec<T>,
    pub centroid: Vec<T>,
    /// Largest distance from the representative to a member.
    pub radius: T,
    pub size: usize,
    /// Indices into the cloud, ascending.
    pub members: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Single-linkage components at threshold `gap`: two points are linked when
/// their distance is at most `gap`. Components are ordered by their smallest
/// member index.
pub fn solution_clusters<T: Scalar>(
    cloud: &PointCloud<T>,
    gap: T,
    levels: Option<&[T]>,
) -> Result<Vec<Cluster<T>>, ScanError> {
    if !(gap > T::zero()) {
        return Err(ScanError::Gap);
    }
    let pts = cloud.points();
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();

    // bucket points into cells of side `gap`; linked pairs sit in neighbouring cells
    let cell = |p: &[T]| -> Vec<i64> {
        p.iter()
            .map(|v| (*v / gap).floor().to_i64().unwrap_or(i64::MAX))
            .collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        buckets.entry(cell(p)).or_default().push(i);
    }
    let dim = cloud.dim();
    let offsets: Vec<Vec<i64>> = tensor(&vec![vec![-1.0f64, 0.0, 1.0]; dim])
        .into_iter()
        .map(|o| o.into_iter().map(|v| v as i64).collect())
        .collect();
    for (i, p) in pts.iter().enumerate() {
        let c = cell(p);
        for off in &offsets {
            let key: Vec<i64> = c.iter().zip(off).map(|(a, b)| a.saturating_add(*b)).collect();
            if let Some(others) = buckets.get(&key) {
                for &j in others {
                    if j > i && scalar::dist(p, &pts[j]) <= gap {
                        union(&mut parent, i, j);
                    }
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }

    Ok(groups
        .into_iter()
        .map(|members| {
            let size = members.len();
            let count = T::from_usize(size).expect("cluster size fits scalar");
            let mut centroid = vec![T::zero(); dim];
            for &i in &members {
                for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                    *c = *c + *v;
                }
            }
            for c in &mut centroid {
                *c = *c / count;
            }
            let representative = match levels {
                Some(lv) if lv.len() == n => {
                    let mut best = members[0];
                    for &i in &members[1..] {
                        if lv[i] < lv[best] {
                            best = i;
                        }
                    }
                    pts[best].clone()
                }
                _ => centroid.clone(),
            };
            let radius = members
                .iter()
                .map(|&i| scalar::dist(&pts[i], &representative))
                .fold(T::zero(), T::max);
            Cluster {
                representative,
                centroid,
                radius,
                size,
                members,
            }
        })
        .collect())
}

/// Default linkage gap: a quarter of the diameter of `C`'s bounding box.
pub fn default_gap<T: Scalar>(p: &SplitProblem<T>) -> T {
    let (lo, hi) = p.c.bounding_box();
    scalar::dist(&lo, &hi) * T::lit(0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::problem_from_str;
    use crate::residual::is_member;
    use crate::residual::tests::example;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_region(step: f64) -> ScanRegion<f64> {
        ScanRegion::cube(-0.5, 1.5, 1, 1, step).unwrap()
    }

    #[test]
    fn lattice_hits_integers_exactly() {
        let r = unit_region(0.01);
        let axis = r.axis(-0.5, 1.5);
        assert_eq!(axis.len(), 201);
        assert!(axis.contains(&0.0) && axis.contains(&1.0) && axis.contains(&-0.5));
        let axis = r.axis(-1.07, 1.07);
        assert_eq!((axis[0], *axis.last().unwrap()), (-1.07, 1.07));
    }

    #[test]
    fn region_must_cover_inflation() {
        let p = example(1);
        let tight = ScanRegion::cube(0.0, 1.0, 1, 1, 0.01).unwrap();
        assert!(matches!(tight.validate(&p, 0.05), Err(ScanError::Region(_))));
        assert!(tight.validate(&p, 0.0).is_ok());
        let r = ScanRegion::around(&p, 0.2, 0.01).unwrap();
        assert!(r.validate(&p, 0.2).is_ok());
        assert!(r.validate(&p, 0.3).is_err());
        let coarse = ScanRegion::cube(-0.5, 1.5, 1, 1, 5.0).unwrap();
        assert!(coarse.validate(&p, 0.1).is_err());
    }

    #[test]
    fn example1_scan_stays_in_the_inflated_box() {
        let p = example(1);
        let g = GridSpec::for_problem(&p);
        let s = scan_eps_set(&p, 0.05, &unit_region(0.01), g, None, None).unwrap();
        assert!(!s.cloud.is_empty());
        for q in s.cloud.points() {
            assert!(q.iter().all(|&v| (-0.05..=1.05).contains(&v)), "{q:?}");
        }
    }

    #[test]
    fn example1_scan_at_zero_is_near_origin() {
        let p = example(1);
        let g = GridSpec::for_problem(&p);
        let s = scan_eps_set(&p, 0.0, &unit_region(0.01), g, None, None).unwrap();
        assert!(s.cloud.points().contains(&vec![0.0, 0.0]));
        for q in s.cloud.points() {
            assert!(scalar::dist(q, &[0.0, 0.0]) <= 0.02);
        }
    }

    #[test]
    fn every_scanned_point_repasses_membership() {
        for (ex, eps, param, delta) in [(1, 0.05, None, None), (2, 0.05, None, None), (3, 0.05, Some(0.5), Some(0.05))] {
            let p = example(ex);
            let g = GridSpec::for_problem(&p);
            let region = ScanRegion::cube(-1.3, 1.3, 1, 1, 0.02).unwrap();
            let pv = param.map(|v| vec![v]);
            let s = scan_eps_set(&p, eps, &region, g, pv.as_deref(), delta).unwrap();
            assert!(!s.cloud.is_empty());
            let ev = Evaluator::new(&p, g);
            let zs = tensor(&region.z_axes());
            let ws = tensor(&region.w_axes());
            let mut expected = Vec::new();
            for z in &zs {
                for w in &ws {
                    if ev.is_member(z, w, eps, pv.as_deref(), delta).unwrap().member {
                        expected.push(vec![z[0], w[0]]);
                    }
                }
            }
            assert_eq!(s.cloud.points(), expected.as_slice(), "example {ex}");
        }
    }

    #[test]
    fn scans_are_nested_in_eps() {
        let p = example(2);
        let g = GridSpec::for_problem(&p);
        let region = ScanRegion::cube(-1.5, 1.5, 1, 1, 0.01).unwrap();
        let small = scan_eps_set(&p, 0.02, &region, g, None, None).unwrap();
        let large = scan_eps_set(&p, 0.1, &region, g, None, None).unwrap();
        assert!(small.cloud.is_subset_of(&large.cloud, 0.0));
        assert!(small.cloud.len() < large.cloud.len());
    }

    #[test]
    fn sfp_scan_is_the_feasibility_filter() {
        let text = "[space]\nn = 1\nm = 1\nreduction = sfp\n[set.C]\nkind = box\nlower = 0\nupper = 1\n[set.Q]\nkind = box\nlower = 0\nupper = 1\n[operator.A]\nrows = 1\n";
        let p: SplitProblem<f64> = problem_from_str(text).unwrap();
        let region = unit_region(0.05);
        let s = scan_eps_set(&p, 0.1, &region, GridSpec::for_problem(&p), None, None).unwrap();
        let gap = |v: f64| (0.0 - v).max(v - 1.0).max(0.0);
        let mut expected = Vec::new();
        for z in region.axis(-0.5, 1.5) {
            for w in region.axis(-0.5, 1.5) {
                if gap(z) <= 0.1 && gap(w) <= 0.1 && (w - z).abs() <= 0.1 {
                    expected.push(vec![z, w]);
                }
            }
        }
        assert_eq!(s.cloud.points(), expected.as_slice());
    }

    #[test]
    fn scan_rejects_bad_input() {
        let p = example(1);
        let g = GridSpec::for_problem(&p);
        assert!(scan_eps_set(&p, -0.1, &unit_region(0.01), g, None, None).is_err());
        let wide = ScanRegion::cube(-0.5, 1.5, 3, 2, 0.5).unwrap();
        let text = "[space]\nn = 3\nm = 2\nreduction = sfp\n[set.C]\nkind = box\nlower = 0,0,0\nupper = 1,1,1\n[set.Q]\nkind = box\nlower = 0,0\nupper = 1,1\n[operator.A]\nrows = 1,0,0; 0,1,0\n";
        let big: SplitProblem<f64> = problem_from_str(text).unwrap();
        let gb = GridSpec::for_problem(&big);
        assert!(matches!(scan_eps_set(&big, 0.1, &wide, gb, None, None), Err(ScanError::TooLarge(5))));
        let mut allowed = wide.clone();
        allowed.allow_large = true;
        assert!(scan_eps_set(&big, 0.1, &allowed, gb, None, None).is_ok());
    }

    #[test]
    fn sidecar_line() {
        let p = example(1);
        let s = scan_eps_set(&p, 0.1, &unit_region(0.01), GridSpec::for_problem(&p), None, None).unwrap();
        assert_eq!(s.sidecar(), "eps=0.1, delta=none, res=0.01, region=[-0.5,1.5]x[-0.5,1.5]");
        assert!(s.to_csv().starts_with("# eps=0.1, delta=none"));
    }

    #[test]
    fn cluster_examples() {
        let one = PointCloud::new(2, vec![vec![0.2, 0.3]]).unwrap();
        let c = solution_clusters(&one, 0.5, None).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].radius, c[0].size), (0.0, 1));
        assert!(solution_clusters(&PointCloud::<f64>::empty(2), 0.5, None).unwrap().is_empty());
        assert!(solution_clusters(&one, 0.0, None).is_err());

        for (ex, expected) in [(1, vec![vec![0.0, 0.0]]), (2, vec![vec![-1.0, -1.0], vec![1.0, 1.0]])] {
            let p = example(ex);
            let region = ScanRegion::cube(-1.5, 1.5, 1, 1, 0.01).unwrap();
            let s = scan_eps_set(&p, 0.01, &region, GridSpec::for_problem(&p), None, None).unwrap();
            let c = solution_clusters(&s.cloud, 0.5, Some(&s.levels)).unwrap();
            assert_eq!(c.len(), expected.len(), "example {ex}");
            for (cl, e) in c.iter().zip(&expected) {
                assert!(scalar::dist(&cl.representative, e) <= 0.03, "{:?}", cl.representative);
            }
        }
    }

    #[test]
    fn cluster_count_ignores_point_order() {
        let p = example(2);
        let region = ScanRegion::cube(-1.5, 1.5, 1, 1, 0.02).unwrap();
        let s = scan_eps_set(&p, 0.1, &region, GridSpec::for_problem(&p), None, None).unwrap();
        let base = solution_clusters(&s.cloud, 0.3, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let mut pts = s.cloud.points().to_vec();
            pts.shuffle(&mut rng);
            let shuffled = PointCloud::new(2, pts).unwrap();
            let c = solution_clusters(&shuffled, 0.3, None).unwrap();
            assert_eq!(c.len(), base.len());
            let mut a: Vec<usize> = c.iter().map(|c| c.size).collect();
            let mut b: Vec<usize> = base.iter().map(|c| c.size).collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn thread_count_does_not_change_the_cloud() {
        let p = example(2);
        let region = ScanRegion::cube(-1.5, 1.5, 1, 1, 0.01).unwrap();
        let g = GridSpec::for_problem(&p);
        let serial = par_chunks(1000, |r| Ok::<_, ()>(r.collect::<Vec<usize>>())).unwrap();
        assert_eq!(serial, (0..1000).collect::<Vec<_>>());
        let a = scan_eps_set(&p, 0.05, &region, g, None, None).unwrap();
        let b = scan_eps_set(&p, 0.05, &region, g, None, None).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn brute_force_linkage_agrees(pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..60), gap in 0.05f64..1.0) {
            let cloud = PointCloud::new(2, pts.clone()).unwrap();
            let got = solution_clusters(&cloud, gap, None).unwrap();
            let mut parent: Vec<usize> = (0..pts.len()).collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if scalar::dist(&pts[i], &pts[j]) <= gap {
                        union(&mut parent, i, j);
                    }
                }
            }
            let mut roots: Vec<usize> = (0..pts.len()).map(|i| find(&mut parent, i)).collect();
            roots.sort_unstable();
            roots.dedup();
            prop_assert_eq!(got.len(), roots.len());
            prop_assert_eq!(got.iter().map(|c| c.size).sum::<usize>(), pts.len());
        }
    }

    #[test]
    fn independent_membership_spot_check() {
        let p = example(1);
        let g = GridSpec::for_problem(&p);
        let s = scan_eps_set(&p, 0.1, &unit_region(0.05), g, None, None).unwrap();
        for q in s.cloud.points() {
            assert!(is_member(&p, &q[..1], &q[1..], 0.1, None, None, g).unwrap().member);
        }
    }
}
