//! Exact metric quantities on finite point sets: diameter, one-sided excess,
//! Hausdorff distance, and a greedy surrogate for the Kuratowski measure of
//! noncompactness.

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

use crate::exprlang::EvalError;
use crate::model::MultiMap;
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("point cloud is empty")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cluster budget must be at least 1")]
    ZeroBudget,
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Finite sample of a set, all points of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    dim: usize,
    points: Vec<Vec<T>>,
    pub tag: Option<String>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(dim: usize, points: Vec<Vec<T>>) -> Result<Self, MetricError> {
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(MetricError::Dimension(format!(
                "point {} has {} coordinates, expected {dim}",
                i + 1,
                p.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MetricError::Dimension("coordinates must be finite".into()));
        }
        Ok(PointCloud {
            dim,
            points,
            tag: None,
        })
    }

    pub fn empty(dim: usize) -> Self {
        PointCloud {
            dim,
            points: Vec::new(),
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn push(&mut self, p: Vec<T>) {
        assert_eq!(p.len(), self.dim, "point dimension");
        self.points.push(p);
    }

    /// Whether every point of `self` coincides (to `tol`) with some point of `other`.
    pub fn is_subset_of(&self, other: &PointCloud<T>, tol: T) -> bool {
        self.points
            .iter()
            .all(|p| other.points.iter().any(|q| scalar::dist(p, q) <= tol))
    }

    /// CSV text: `dim,<d>` header, then one point per line.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "dim,{}", self.dim);
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{}", v.as_f64())).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Parses the CSV written by [`PointCloud::to_csv`]; `#` lines are ignored.
    pub fn from_csv(text: &str) -> Result<Self, MetricError> {
        let mut dim = None;
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| MetricError::Csv {
                line: i + 1,
                message,
            };
            match dim {
                None => {
                    let d = line
                        .strip_prefix("dim,")
                        .and_then(|d| d.trim().parse::<usize>().ok())
                        .ok_or_else(|| err(format!("expected header 'dim,<d>', found '{line}'")))?;
                    dim = Some(d);
                }
                Some(d) => {
                    let p = line
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<f64>()
                                .ok()
                                .filter(|x| x.is_finite())
                                .map(T::lit)
                                .ok_or_else(|| err(format!("bad number '{}'", v.trim())))
                        })
                        .collect::<Result<Vec<T>, _>>()?;
                    if p.len() != d {
                        return Err(err(format!("{} values, expected {d}", p.len())));
                    }
                    points.push(p);
                }
            }
        }
        let dim = dim.ok_or(MetricError::Csv {
            line: 0,
            message: "missing 'dim,<d>' header".into(),
        })?;
        PointCloud::new(dim, points)
    }
}

fn nonempty<T>(p: &PointCloud<T>) -> Result<(), MetricError> {
    if p.points.is_empty() {
        Err(MetricError::Empty)
    } else {
        Ok(())
    }
}

fn same_dim<T>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<(), MetricError> {
    nonempty(p)?;
    nonempty(q)?;
    if p.dim != q.dim {
        return Err(MetricError::Dimension(format!("{} vs {}", p.dim, q.dim)));
    }
    Ok(())
}

fn max_pairwise<T: Scalar>(pts: &[&[T]]) -> T {
    let mut best = T::zero();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max(scalar::dist(a, b));
        }
    }
    best
}

/// Largest pairwise distance.
pub fn diameter<T: Scalar>(p: &PointCloud<T>) -> Result<T, MetricError> {
    nonempty(p)?;
    let refs: Vec<&[T]> = p.points.iter().map(Vec::as_slice).collect();
    Ok(max_pairwise(&refs))
}

/// Distance from `a` to the nearest point of `set`.
pub fn point_to_set<T: Scalar>(a: &[T], set: &[Vec<T>]) -> T {
    set.iter()
        .map(|b| scalar::dist(a, b))
        .fold(T::infinity(), T::min)
}

/// One-sided excess `sup_{a ∈ P} d(a, Q)`.
pub fn excess<T: Scalar>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<T, MetricError> {
    same_dim(p, q)?;
    Ok(p.points
        .iter()
        .map(|a| point_to_set(a, &q.points))
        .fold(T::zero(), T::max))
}

pub fn hausdorff<T: Scalar>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<T, MetricError> {
    Ok(excess(p, q)?.max(excess(q, p)?))
}

/// Hausdorff distance between two finite sets given as plain vectors.
pub fn hausdorff_sets<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    let d_ab = a.iter().map(|x| point_to_set(x, b)).fold(T::zero(), T::max);
    let d_ba = b.iter().map(|x| point_to_set(x, a)).fold(T::zero(), T::max);
    d_ab.max(d_ba)
}

fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Farthest-point traversal: the first center is the lexicographically
/// smallest point, each next one the point farthest from those chosen
/// (first index on ties). Returns at most `k` indices.
pub fn farthest_point_centers<T: Scalar>(p: &PointCloud<T>, k: usize) -> Vec<usize> {
    if p.points.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut start = 0;
    for i in 1..p.points.len() {
        if lex_cmp(&p.points[i], &p.points[start]) == Ordering::Less {
            start = i;
        }
    }
    let mut centers = vec![start];
    let mut nearest: Vec<T> = p
        .points
        .iter()
        .map(|x| scalar::dist(x, &p.points[start]))
        .collect();
    while centers.len() < k.min(p.points.len()) {
        let mut far = 0;
        for i in 1..nearest.len() {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        centers.push(far);
        for (i, x) in p.points.iter().enumerate() {
            nearest[i] = nearest[i].min(scalar::dist(x, &p.points[far]));
        }
    }
    centers
}

/// Largest cell diameter when each point joins its nearest center.
fn cover_width<T: Scalar>(p: &PointCloud<T>, centers: &[usize]) -> T {
    let mut cells: Vec<Vec<&[T]>> = vec![Vec::new(); centers.len()];
    for x in &p.points {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (j, &c) in centers.iter().enumerate() {
            let d = scalar::dist(x, &p.points[c]);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        cells[best].push(x);
    }
    cells
        .iter()
        .map(|c| max_pairwise(c))
        .fold(T::zero(), T::max)
}

/// Kuratowski-measure surrogate: the narrowest of the greedy covers by
/// `1..=k` cells built from the farthest-point prefix, measured as the
/// largest cell diameter.
///
/// Equals the diameter for `k = 1`, never exceeds it, is nonincreasing in
/// `k`, and is 0 once `k` reaches the number of distinct points.
pub fn kuratowski_est<T: Scalar>(p: &PointCloud<T>, k: usize) -> Result<T, MetricError> {
    nonempty(p)?;
    if k == 0 {
        return Err(MetricError::ZeroBudget);
    }
    let centers = farthest_point_centers(p, k);
    let mut best = T::infinity();
    for j in 1..=centers.len() {
        best = best.min(cover_width(p, &centers[..j]));
        if best == T::zero() {
            break;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuLemmaReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub violated: bool,
}

/// Both sides of `μ(P) <= 2 H(P, Q) + μ(Q)` with the surrogate in place of `μ`.
/// A violation is only flagged, since the surrogate is not the true measure.
pub fn mu_lemma_report<T: Scalar>(
    p: &PointCloud<T>,
    q: &PointCloud<T>,
    k: usize,
    tol: T,
) -> Result<MuLemmaReport<T>, MetricError> {
    let lhs = kuratowski_est(p, k)?;
    let h = hausdorff(p, q)?;
    let rhs = (h + h) + kuratowski_est(q, k)?;
    Ok(MuLemmaReport {
        lhs,
        rhs,
        violated: lhs > rhs + tol,
    })
}

/// Pair of arguments for [`hcont_ratio`]; `p` and `q` are empty for
/// non-parametric maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgPair<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub p: Vec<T>,
    pub q: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HContReport<T> {
    pub ratio: T,
    pub used: usize,
    pub excluded: usize,
}

/// Largest `H(B(x, p), B(y, q)) / (‖x - y‖ + ‖p - q‖)` over the pairs.
/// Coincident pairs are skipped and counted in `excluded`.
pub fn hcont_ratio<T: Scalar>(b: &MultiMap, pairs: &[ArgPair<T>]) -> Result<HContReport<T>, MetricError> {
    let mut report = HContReport {
        ratio: T::zero(),
        used: 0,
        excluded: 0,
    };
    for pair in pairs {
        let denom = scalar::dist(&pair.x, &pair.y) + scalar::dist(&pair.p, &pair.q);
        if denom == T::zero() {
            report.excluded += 1;
            continue;
        }
        let bx = b.eval(&pair.x, &pair.p)?;
        let by = b.eval(&pair.y, &pair.q)?;
        report.ratio = report.ratio.max(hausdorff_sets(&bx, &by) / denom);
        report.used += 1;
    }
    Ok(report)
}
