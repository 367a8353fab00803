//! Residual quantities of the relaxed problem and ε-membership in `S(ε)` and
//! `S_p(δ, ε)`.
//!
//! A pair `(z, w)` belongs to `S(ε)` when
//!
//! ```text
//! d(z, C) <= ε,  d(w, Q) <= ε,  ‖w - Az‖ <= ε,
//! min_{u ∈ B1(z)} sup_{x ∈ C} <u, z - x> + f(z) - f(x) <= ε,
//! min_{v ∈ B2(w)} sup_{y ∈ Q} <v, w - y> + g(w) - g(y) <= ε.
//! ```
//!
//! The suprema are taken over a dyadic grid of the constraint set, so the
//! computed defect never exceeds the true one. Membership can therefore only
//! err towards acceptance, by at most the variation of the integrand between
//! neighbouring grid points.

use thiserror::Error;

use crate::exprlang::{Bindings, EvalError, Expr, VarSpace};
use crate::model::{ConstraintSet, ModelError, SplitProblem};
use crate::scalar::{self, Scalar};
use crate::TAU0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("eps must be >= 0, got {0}")]
    NegativeEps(f64),
    #[error("delta must be >= 0, got {0}")]
    NegativeDelta(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parameter: {0}")]
    Param(String),
    #[error("schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Membership threshold actually applied for a requested ε.
pub fn threshold<T: Scalar>(eps: T) -> T {
    eps.max(T::lit(TAU0))
}

pub fn dist_to_set<T: Scalar>(x: &[T], set: &ConstraintSet<T>) -> T {
    set.distance(x)
}

pub fn project<T: Scalar>(x: &[T], set: &ConstraintSet<T>) -> Vec<T> {
    set.project(x)
}

/// Sampling density for the suprema over `C` and `Q` and for the parameter ball.
///
/// A set at level `r` is sampled with `2^r + 1` points per axis of its bounding
/// box, so the level `r + 1` grid contains the level `r` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub c_level: u32,
    pub q_level: u32,
    /// Points per axis across the bounding box of the parameter ball; odd so the center is a grid point.
    pub param_per_axis: usize,
}

impl GridSpec {
    pub fn default_level(dim: usize) -> u32 {
        match dim {
            0 | 1 => 10,
            2 => 7,
            3 => 4,
            _ => 3,
        }
    }

    pub fn for_problem<T>(p: &SplitProblem<T>) -> Self {
        GridSpec {
            c_level: Self::default_level(p.n),
            q_level: Self::default_level(p.m),
            param_per_axis: 9,
        }
    }

    pub fn refined(&self) -> Self {
        GridSpec {
            c_level: self.c_level + 1,
            q_level: self.q_level + 1,
            param_per_axis: self.param_per_axis * 2 - 1,
        }
    }

    pub fn points_per_axis(level: u32) -> usize {
        (1usize << level) + 1
    }
}

/// `i`-th of `count` equally spaced points from `lo` to `hi`, computed so that
/// dyadic refinements reproduce the coarse points bit for bit.
pub fn lerp_index<T: Scalar>(lo: T, hi: T, i: usize, count: usize) -> T {
    if count <= 1 {
        return lo;
    }
    let n = T::from_usize(count - 1).expect("grid size fits scalar");
    let i_t = T::from_usize(i).expect("grid index fits scalar");
    (lo * (n - i_t) + hi * i_t) / n
}

/// Cartesian product of per-axis coordinate lists, first axis outermost.
pub fn tensor<T: Scalar>(axes: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Grid sample of a constraint set at the given dyadic level.
pub fn set_grid<T: Scalar>(set: &ConstraintSet<T>, level: u32) -> Vec<Vec<T>> {
    let count = GridSpec::points_per_axis(level);
    let (lo, hi) = set.bounding_box();
    let axes: Vec<Vec<T>> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| (0..count).map(|i| lerp_index(l, h, i, count)).collect())
        .collect();
    let pts = tensor(&axes);
    match set {
        ConstraintSet::Box { .. } => pts,
        ConstraintSet::Ball { center, radius } => {
            let slack = T::one() + T::lit(1e-12);
            pts.into_iter()
                .filter(|p| scalar::dist(p, center) <= *radius * slack)
                .collect()
        }
    }
}

/// Sample of the closed ball `B(p, δ)`: the center first, then the remaining
/// grid points of its bounding box that lie in the ball, in row-major order.
pub fn param_ball_samples<T: Scalar>(p: &[T], delta: T, per_axis: usize) -> Vec<Vec<T>> {
    let mut out = vec![p.to_vec()];
    if delta == T::zero() || p.is_empty() {
        return out;
    }
    let count = per_axis.max(3) | 1;
    let axes: Vec<Vec<T>> = p
        .iter()
        .map(|&c| (0..count).map(|i| lerp_index(c - delta, c + delta, i, count)).collect())
        .collect();
    let slack = T::one() + T::lit(1e-12);
    for q in tensor(&axes) {
        if q.as_slice() != p && scalar::dist(&q, p) <= delta * slack {
            out.push(q);
        }
    }
    out
}

/// The supremum includes `x = z` whenever `z` lies in the set, where the integrand is 0.
fn floor_at_member<T: Scalar>(d: T, set: &ConstraintSet<T>, z: &[T]) -> T {
    if set.contains(z) {
        d.max(T::zero())
    } else {
        d
    }
}

fn bindings<'a, T: Scalar>(space: VarSpace, point: &'a [T], param: &'a [T]) -> Bindings<'a, T> {
    match space {
        VarSpace::X => Bindings { x: point, y: &[], p: param },
        _ => Bindings { x: &[], y: point, p: param },
    }
}

/// Grid supremum of `<u, z - x> + φ(z) - φ(x)` over `x` in `set`, where `φ`
/// lives in `space` (`X` for f, `Y` for g).
pub fn vi_defect<T: Scalar>(
    z: &[T],
    u: &[T],
    phi: &Expr,
    space: VarSpace,
    set: &ConstraintSet<T>,
    param: Option<&[T]>,
    level: u32,
) -> Result<T, ResidualError> {
    if z.len() != set.dim() || u.len() != set.dim() {
        return Err(ResidualError::Dimension(format!(
            "point and selection must have dimension {}",
            set.dim()
        )));
    }
    let param = param.unwrap_or(&[]);
    let table = SideTable::new(phi, space, set, level, param)?;
    let phi_z = phi.eval(&bindings(space, z, param))?;
    Ok(floor_at_member(table.defect(z, phi_z, u), set, z))
}

/// `φ` tabulated on one set's grid for one parameter value.
#[derive(Debug, Clone)]
pub struct SideTable<T> {
    points: Vec<Vec<T>>,
    values: Vec<T>,
}

impl<T: Scalar> SideTable<T> {
    pub fn new(
        phi: &Expr,
        space: VarSpace,
        set: &ConstraintSet<T>,
        level: u32,
        param: &[T],
    ) -> Result<Self, EvalError> {
        Self::from_points(phi, space, set_grid(set, level), param)
    }

    fn from_points(phi: &Expr, space: VarSpace, points: Vec<Vec<T>>, param: &[T]) -> Result<Self, EvalError> {
        let values = points
            .iter()
            .map(|x| phi.eval(&bindings(space, x, param)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SideTable { points, values })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn defect(&self, z: &[T], phi_z: T, u: &[T]) -> T {
        let uz = scalar::dot(u, z);
        self.points
            .iter()
            .zip(&self.values)
            .map(|(x, &fx)| uz - scalar::dot(u, x) + phi_z - fx)
            .fold(T::neg_infinity(), T::max)
    }
}

/// Both sides' tables for one parameter value.
#[derive(Debug, Clone)]
pub struct ParamTables<T> {
    pub param: Vec<T>,
    pub c: SideTable<T>,
    pub q: SideTable<T>,
}

/// One side of a profile: best selection and its defect.
#[derive(Debug, Clone, PartialEq)]
pub struct SideDefect<T> {
    pub defect: T,
    pub index: usize,
    pub selection: Vec<T>,
}

/// Every quantity compared against ε for one candidate `(z, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfile<T> {
    pub feas_c: T,
    pub feas_q: T,
    pub link: T,
    pub defect1: T,
    pub defect2: T,
    /// Index and value of the minimizing selections `u* ∈ B1(z)`, `v* ∈ B2(w)`.
    pub u_index: usize,
    pub u: Vec<T>,
    pub v_index: usize,
    pub v: Vec<T>,
    /// Parameter the profile was evaluated at (empty for non-parametric problems).
    pub param: Vec<T>,
    pub grid: GridSpec,
}

impl<T: Scalar> ResidualProfile<T> {
    /// Smallest ε at which this profile passes every test (before the τ₀ floor).
    pub fn level(&self) -> T {
        self.feas_c
            .max(self.feas_q)
            .max(self.link)
            .max(self.defect1)
            .max(self.defect2)
    }

    pub fn passes(&self, eps: T) -> bool {
        self.level() <= threshold(eps)
    }
}

/// Evaluation context for one problem at one grid resolution; the constraint
/// set grids are built once.
#[derive(Debug, Clone)]
pub struct Evaluator<'p, T> {
    problem: &'p SplitProblem<T>,
    grid: GridSpec,
    c_points: Vec<Vec<T>>,
    q_points: Vec<Vec<T>>,
}

impl<'p, T: Scalar> Evaluator<'p, T> {
    pub fn new(problem: &'p SplitProblem<T>, grid: GridSpec) -> Self {
        Evaluator {
            problem,
            grid,
            c_points: set_grid(&problem.c, grid.c_level),
            q_points: set_grid(&problem.q, grid.q_level),
        }
    }

    pub fn problem(&self) -> &'p SplitProblem<T> {
        self.problem
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn tables(&self, param: &[T]) -> Result<ParamTables<T>, ResidualError> {
        self.check_param(Some(param))?;
        Ok(ParamTables {
            param: param.to_vec(),
            c: SideTable::from_points(&self.problem.f, VarSpace::X, self.c_points.clone(), param)?,
            q: SideTable::from_points(&self.problem.g, VarSpace::Y, self.q_points.clone(), param)?,
        })
    }

    pub fn check_param(&self, param: Option<&[T]>) -> Result<(), ResidualError> {
        let k = self.problem.k;
        match param {
            None | Some([]) if k == 0 => Ok(()),
            None | Some([]) => Err(ResidualError::Param(format!(
                "problem has {k} parameters but none were given"
            ))),
            Some(p) if k == 0 => Err(ResidualError::Param(format!(
                "problem is not parametric but {} parameter values were given",
                p.len()
            ))),
            Some(p) if p.len() != k => Err(ResidualError::Dimension(format!(
                "parameter has length {}, expected {k}",
                p.len()
            ))),
            Some(_) => Ok(()),
        }
    }

    fn best_selection(
        selections: Vec<Vec<T>>,
        mut defect: impl FnMut(&[T]) -> T,
    ) -> SideDefect<T> {
        let mut best: Option<SideDefect<T>> = None;
        for (i, u) in selections.into_iter().enumerate() {
            let d = defect(&u);
            // first index wins ties
            if best.as_ref().is_none_or(|b| d < b.defect) {
                best = Some(SideDefect {
                    defect: d,
                    index: i,
                    selection: u,
                });
            }
        }
        best.expect("multimaps have at least one selection")
    }

    /// Defect of the first inequality at `z`.
    pub fn side1(&self, tables: &ParamTables<T>, z: &[T]) -> Result<SideDefect<T>, ResidualError> {
        let p = self.problem;
        let fz = p.eval_f(z, &tables.param)?;
        let sels = p.b1.eval(z, &tables.param)?;
        Ok(Self::best_selection(sels, |u| floor_at_member(tables.c.defect(z, fz, u), &p.c, z)))
    }

    /// Defect of the second inequality at `w`.
    pub fn side2(&self, tables: &ParamTables<T>, w: &[T]) -> Result<SideDefect<T>, ResidualError> {
        let p = self.problem;
        let gw = p.eval_g(w, &tables.param)?;
        let sels = p.b2.eval(w, &tables.param)?;
        Ok(Self::best_selection(sels, |v| floor_at_member(tables.q.defect(w, gw, v), &p.q, w)))
    }

    fn check_point(&self, z: &[T], w: &[T]) -> Result<(), ResidualError> {
        let p = self.problem;
        if z.len() != p.n || w.len() != p.m {
            return Err(ResidualError::Dimension(format!(
                "z has length {} and w {}, expected {} and {}",
                z.len(),
                w.len(),
                p.n,
                p.m
            )));
        }
        Ok(())
    }

    pub fn profile_with(
        &self,
        tables: &ParamTables<T>,
        z: &[T],
        w: &[T],
    ) -> Result<ResidualProfile<T>, ResidualError> {
        self.check_point(z, w)?;
        let p = self.problem;
        let az = p.a.apply(z)?;
        let s1 = self.side1(tables, z)?;
        let s2 = self.side2(tables, w)?;
        Ok(ResidualProfile {
            feas_c: p.c.distance(z),
            feas_q: p.q.distance(w),
            link: scalar::dist(w, &az),
            defect1: s1.defect,
            defect2: s2.defect,
            u_index: s1.index,
            u: s1.selection,
            v_index: s2.index,
            v: s2.selection,
            param: tables.param.clone(),
            grid: self.grid,
        })
    }

    pub fn profile(&self, z: &[T], w: &[T], param: Option<&[T]>) -> Result<ResidualProfile<T>, ResidualError> {
        self.check_param(param)?;
        let tables = self.tables(param.unwrap_or(&[]))?;
        self.profile_with(&tables, z, w)
    }

    /// Membership in `S(ε)`, or in `S_p(δ, ε)` when `param = p` and `delta` are given.
    pub fn is_member(
        &self,
        z: &[T],
        w: &[T],
        eps: T,
        param: Option<&[T]>,
        delta: Option<T>,
    ) -> Result<Membership<T>, ResidualError> {
        if !(eps >= T::zero()) {
            return Err(ResidualError::NegativeEps(eps.as_f64()));
        }
        if let Some(d) = delta {
            if !(d >= T::zero()) {
                return Err(ResidualError::NegativeDelta(d.as_f64()));
            }
        }
        self.check_param(param)?;
        self.check_point(z, w)?;
        let samples = match (param, delta) {
            (Some(p), Some(d)) if !p.is_empty() => {
                param_ball_samples(p, d, self.grid.param_per_axis)
            }
            (Some(p), _) => vec![p.to_vec()],
            (None, _) => vec![Vec::new()],
        };
        let mut best: Option<ResidualProfile<T>> = None;
        for q in &samples {
            let tables = self.tables(q)?;
            let profile = self.profile_with(&tables, z, w)?;
            if profile.passes(eps) {
                return Ok(Membership {
                    member: true,
                    profile,
                });
            }
            if best.as_ref().is_none_or(|b| profile.level() < b.level()) {
                best = Some(profile);
            }
        }
        Ok(Membership {
            member: false,
            profile: best.expect("at least one parameter sample"),
        })
    }
}

/// Outcome of a membership query. For parametric queries `profile` is the
/// witnessing parameter's profile, or the closest miss when there is none.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership<T> {
    pub member: bool,
    pub profile: ResidualProfile<T>,
}

pub fn smvi_profile<T: Scalar>(
    p: &SplitProblem<T>,
    z: &[T],
    w: &[T],
    param: Option<&[T]>,
    grid: GridSpec,
) -> Result<ResidualProfile<T>, ResidualError> {
    Evaluator::new(p, grid).profile(z, w, param)
}

pub fn is_member<T: Scalar>(
    p: &SplitProblem<T>,
    z: &[T],
    w: &[T],
    eps: T,
    param: Option<&[T]>,
    delta: Option<T>,
    grid: GridSpec,
) -> Result<Membership<T>, ResidualError> {
    Evaluator::new(p, grid).is_member(z, w, eps, param, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceMode {
    /// Iterates must lie in `C` and `Q` exactly.
    Strict,
    /// Iterates may lie up to `ε_n` away from `C` and `Q`.
    Generalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermCheck<T> {
    pub eps: T,
    pub passed: bool,
    pub profile: ResidualProfile<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport<T> {
    pub terms: Vec<TermCheck<T>>,
    /// Index of the first failing term, if any.
    pub first_failure: Option<usize>,
    /// Diameter of the second half of the sequence.
    pub tail_spread: T,
    pub cauchy: bool,
    /// Last term, taken as the limit estimate (`z` followed by `w`).
    pub limit: Vec<T>,
    /// Distance from the limit estimate to the nearest reference solution point.
    pub distance_to_solutions: Option<T>,
}

/// Checks that each `(z_n, w_n)` satisfies the approximating-sequence
/// conditions at its `ε_n`, and summarizes where the sequence goes.
#[allow(clippy::too_many_arguments)]
pub fn check_sequence<T: Scalar>(
    p: &SplitProblem<T>,
    seq: &[(Vec<T>, Vec<T>)],
    schedule: &[T],
    mode: SequenceMode,
    param: Option<&[T]>,
    grid: GridSpec,
    cauchy_tol: T,
    solutions: Option<&[Vec<T>]>,
) -> Result<SequenceReport<T>, ResidualError> {
    if seq.is_empty() || seq.len() != schedule.len() {
        return Err(ResidualError::Schedule(format!(
            "{} terms but {} tolerances",
            seq.len(),
            schedule.len()
        )));
    }
    if schedule.iter().any(|e| !(*e > T::zero())) {
        return Err(ResidualError::Schedule("tolerances must be positive".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(ResidualError::Schedule("tolerances must be strictly decreasing".into()));
    }
    let ev = Evaluator::new(p, grid);
    ev.check_param(param)?;
    let tables = ev.tables(param.unwrap_or(&[]))?;
    let mut terms = Vec::with_capacity(seq.len());
    for ((z, w), &eps) in seq.iter().zip(schedule) {
        let profile = ev.profile_with(&tables, z, w)?;
        let feasible = match mode {
            SequenceMode::Strict => profile.feas_c == T::zero() && profile.feas_q == T::zero(),
            SequenceMode::Generalized => true,
        };
        terms.push(TermCheck {
            eps,
            passed: feasible && profile.passes(eps),
            profile,
        });
    }
    let joined: Vec<Vec<T>> = seq
        .iter()
        .map(|(z, w)| z.iter().chain(w).copied().collect())
        .collect();
    let tail = &joined[joined.len() / 2..];
    let mut spread = T::zero();
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            spread = spread.max(scalar::dist(a, b));
        }
    }
    let limit = joined.last().cloned().expect("nonempty");
    let distance_to_solutions = solutions.and_then(|sols| {
        sols.iter()
            .map(|s| scalar::dist(s, &limit))
            .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
    });
    Ok(SequenceReport {
        first_failure: terms.iter().position(|t| !t.passed),
        terms,
        tail_spread: spread,
        cauchy: spread <= cauchy_tol,
        limit,
        distance_to_solutions,
    })
}
