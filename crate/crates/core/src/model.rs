//! Problem data: constraint sets, the coupling operator, multimaps and the
//! validated [`SplitProblem`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::exprlang::{self, Bindings, EvalError, Expr, ParseError, VarSpace};
use crate::scalar::{self, Scalar};
use crate::specfile::{Entry, Section, SpecFile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable out of context: {var} may not appear in {context}")]
    VariableOutOfContext { var: String, context: String },
    #[error("empty selection list in {0}")]
    EmptySelections(String),
    #[error("malformed set bounds: {0}")]
    SetBounds(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

/// Error raised while turning a parsed spec file into a problem; carries the
/// position of the offending entry when there is one.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("line {line}: missing key '{key}' in [{section}]")]
    MissingKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("line {line}, column {col}: unknown key '{key}' in [{section}]")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
        col: usize,
    },
    #[error("line {line}, column {col}: {message}")]
    Value {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}, column {col}: {source}")]
    Expr {
        line: usize,
        col: usize,
        source: ParseError,
    },
    #[error("line {line}: {source}")]
    Model { line: usize, source: ModelError },
}

/// Closed convex set: an axis-aligned box or a closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet<T> {
    Box { lower: Vec<T>, upper: Vec<T> },
    Ball { center: Vec<T>, radius: T },
}

impl<T: Scalar> ConstraintSet<T> {
    pub fn new_box(lower: Vec<T>, upper: Vec<T>) -> Result<Self, ModelError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(ModelError::SetBounds(format!(
                "box needs equally many lower and upper bounds (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(ModelError::SetBounds(format!("bound {} is not finite", i + 1)));
            }
            if l > u {
                return Err(ModelError::SetBounds(format!(
                    "lower bound {l} exceeds upper bound {u} on axis {}",
                    i + 1
                )));
            }
        }
        Ok(ConstraintSet::Box { lower, upper })
    }

    pub fn new_ball(center: Vec<T>, radius: T) -> Result<Self, ModelError> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::SetBounds("ball center must be a finite vector".into()));
        }
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(ModelError::SetBounds(format!("ball radius {radius} must be finite and >= 0")));
        }
        Ok(ConstraintSet::Ball { center, radius })
    }

    /// `[lo, hi]` on every axis; shorthand for the boxes used throughout the examples.
    pub fn interval(lo: f64, hi: f64, dim: usize) -> Self {
        Self::new_box(vec![T::lit(lo); dim], vec![T::lit(hi); dim]).expect("lo <= hi")
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Box { lower, .. } => lower.len(),
            ConstraintSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            ConstraintSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            ConstraintSet::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
        }
    }

    /// Nearest point of the set.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        match self {
            ConstraintSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&l, &u))| v.max(l).min(u))
                .collect(),
            ConstraintSet::Ball { center, radius } => {
                let d = scalar::dist(x, center);
                if d <= *radius {
                    x.to_vec()
                } else {
                    let s = *radius / d;
                    x.iter()
                        .zip(center)
                        .map(|(&v, &c)| c + (v - c) * s)
                        .collect()
                }
            }
        }
    }

    /// Euclidean distance to the set, in closed form.
    pub fn distance(&self, x: &[T]) -> T {
        match self {
            ConstraintSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .fold(T::zero(), |acc, (&v, (&l, &u))| {
                    let gap = (l - v).max(v - u).max(T::zero());
                    acc + gap * gap
                })
                .sqrt(),
            ConstraintSet::Ball { center, radius } => {
                (scalar::dist(x, center) - *radius).max(T::zero())
            }
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.distance(x) == T::zero()
    }
}

/// Dense `rows x cols` matrix mapping the first space into the second.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> LinearOperator<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, ModelError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(ModelError::Dimension("operator needs at least one row and column".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(ModelError::Dimension(format!(
                "operator row {} has {} entries, expected {cols}",
                i + 1,
                r.len()
            )));
        }
        let data: Vec<T> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("operator entry".into()));
        }
        Ok(LinearOperator {
            rows: data.len() / cols,
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Self::from_rows(rows).expect("identity is well formed")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        if x.len() != self.cols {
            return Err(ModelError::Dimension(format!(
                "operator expects a vector of length {}, got {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|r| scalar::dot(self.row(r), x)).collect())
    }
}

pub fn apply_linear<T: Scalar>(a: &LinearOperator<T>, x: &[T]) -> Result<Vec<T>, ModelError> {
    a.apply(x)
}

/// Multivalued map given by finitely many selections; each value is a finite
/// (hence compact) nonempty set.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiMap {
    space: VarSpace,
    dim: usize,
    selections: Vec<Vec<Expr>>,
}

impl MultiMap {
    /// `space` is the space the map acts on: `X` for B1, `Y` for B2.
    pub fn new(space: VarSpace, dim: usize, selections: Vec<Vec<Expr>>) -> Result<Self, ModelError> {
        let name = match space {
            VarSpace::X => "B1",
            _ => "B2",
        };
        if selections.is_empty() {
            return Err(ModelError::EmptySelections(name.into()));
        }
        for (i, sel) in selections.iter().enumerate() {
            if sel.len() != dim {
                return Err(ModelError::Dimension(format!(
                    "{name} selection {} has {} components, expected {dim}",
                    i + 1,
                    sel.len()
                )));
            }
        }
        Ok(MultiMap {
            space,
            dim,
            selections,
        })
    }

    /// The map `{0}`.
    pub fn zero(space: VarSpace, dim: usize) -> Self {
        Self::new(space, dim, vec![vec![Expr::zero(); dim]]).expect("nonempty")
    }

    pub fn single(space: VarSpace, sel: Vec<Expr>) -> Result<Self, ModelError> {
        let dim = sel.len();
        Self::new(space, dim, vec![sel])
    }

    pub fn space(&self) -> VarSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn selections(&self) -> &[Vec<Expr>] {
        &self.selections
    }

    pub fn len(&self) -> usize {
        self.selections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selections.is_empty()
    }

    /// Evaluates every selection at `(point, param)`; duplicates are kept.
    pub fn eval<T: Scalar>(&self, point: &[T], param: &[T]) -> Result<Vec<Vec<T>>, EvalError> {
        let env = match self.space {
            VarSpace::X => Bindings { x: point, y: &[], p: param },
            _ => Bindings { x: &[], y: point, p: param },
        };
        self.selections
            .iter()
            .map(|sel| sel.iter().map(|e| e.eval(&env)).collect())
            .collect()
    }
}

pub fn selections<T: Scalar>(
    b: &MultiMap,
    point: &[T],
    param: Option<&[T]>,
) -> Result<Vec<Vec<T>>, EvalError> {
    b.eval(point, param.unwrap_or(&[]))
}

/// Which special case a problem was built as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sfp,
    Svip,
    Smvip,
    Smp,
}

impl FromStr for Reduction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sfp" => Ok(Reduction::Sfp),
            "svip" => Ok(Reduction::Svip),
            "smvip" => Ok(Reduction::Smvip),
            "smp" => Ok(Reduction::Smp),
            other => Err(format!("unknown reduction '{other}' (expected sfp, svip, smvip or smp)")),
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reduction::Sfp => "sfp",
            Reduction::Svip => "svip",
            Reduction::Smvip => "smvip",
            Reduction::Smp => "smp",
        })
    }
}

/// A validated problem instance. With `k > 0` the functions and maps may
/// also depend on a parameter `p ∈ R^k` (the parametric problem, where `f`
/// and `g` play the roles of the parametric functions).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProblem<T> {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub c: ConstraintSet<T>,
    pub q: ConstraintSet<T>,
    pub f: Expr,
    pub g: Expr,
    pub b1: MultiMap,
    pub b2: MultiMap,
    pub a: LinearOperator<T>,
}

fn check_context(e: &Expr, own: VarSpace, dim: usize, k: usize, context: &str) -> Result<(), ModelError> {
    for v in e.free_vars() {
        let ok = match v.space {
            VarSpace::P => v.index < k,
            s if s == own => v.index < dim,
            _ => false,
        };
        if !ok {
            return Err(ModelError::VariableOutOfContext {
                var: v.to_string(),
                context: context.into(),
            });
        }
    }
    Ok(())
}

impl<T: Scalar> SplitProblem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: usize,
        c: ConstraintSet<T>,
        q: ConstraintSet<T>,
        a: LinearOperator<T>,
        f: Expr,
        g: Expr,
        b1: MultiMap,
        b2: MultiMap,
    ) -> Result<Self, ModelError> {
        let p = SplitProblem {
            n: c.dim(),
            m: q.dim(),
            k,
            c,
            q,
            f,
            g,
            b1,
            b2,
            a,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.c.dim() != self.n || self.q.dim() != self.m {
            return Err(ModelError::Dimension(format!(
                "C has dimension {}, Q has {}; expected {} and {}",
                self.c.dim(),
                self.q.dim(),
                self.n,
                self.m
            )));
        }
        if self.a.rows() != self.m || self.a.cols() != self.n {
            return Err(ModelError::Dimension(format!(
                "A is {}x{}, expected {}x{}",
                self.a.rows(),
                self.a.cols(),
                self.m,
                self.n
            )));
        }
        if self.b1.dim() != self.n || self.b1.space() != VarSpace::X {
            return Err(ModelError::Dimension(format!("B1 must map R^{} into itself", self.n)));
        }
        if self.b2.dim() != self.m || self.b2.space() != VarSpace::Y {
            return Err(ModelError::Dimension(format!("B2 must map R^{} into itself", self.m)));
        }
        if self.b1.is_empty() {
            return Err(ModelError::EmptySelections("B1".into()));
        }
        if self.b2.is_empty() {
            return Err(ModelError::EmptySelections("B2".into()));
        }
        check_context(&self.f, VarSpace::X, self.n, self.k, "f")?;
        check_context(&self.g, VarSpace::Y, self.m, self.k, "g")?;
        for sel in self.b1.selections() {
            for e in sel {
                check_context(e, VarSpace::X, self.n, self.k, "B1")?;
            }
        }
        for sel in self.b2.selections() {
            for e in sel {
                check_context(e, VarSpace::Y, self.m, self.k, "B2")?;
            }
        }
        Ok(())
    }

    pub fn is_parametric(&self) -> bool {
        self.k > 0
    }

    pub fn eval_f(&self, x: &[T], p: &[T]) -> Result<T, EvalError> {
        self.f.eval(&Bindings { x, y: &[], p })
    }

    pub fn eval_g(&self, y: &[T], p: &[T]) -> Result<T, EvalError> {
        self.g.eval(&Bindings { x: &[], y, p })
    }

    /// Same data viewed as a problem over `k` parameters; expressions are unchanged.
    pub fn with_params(&self, k: usize) -> Result<Self, ModelError> {
        let mut out = self.clone();
        out.k = k;
        out.validate()?;
        Ok(out)
    }
}

fn negate_all(sel: Vec<Expr>) -> Vec<Expr> {
    sel.into_iter().map(Expr::neg).collect()
}

/// Split feasibility: `B1 = {0}`, `B2 = {0}`, `f = g = 0`.
pub fn reduce_sfp<T: Scalar>(
    c: ConstraintSet<T>,
    q: ConstraintSet<T>,
    a: LinearOperator<T>,
) -> Result<SplitProblem<T>, ModelError> {
    let (n, m) = (c.dim(), q.dim());
    SplitProblem::new(
        0,
        c,
        q,
        a,
        Expr::zero(),
        Expr::zero(),
        MultiMap::zero(VarSpace::X, n),
        MultiMap::zero(VarSpace::Y, m),
    )
}

/// Split variational inequality `<F1(x), x' - x> >= 0`, `<F2(y), y' - y> >= 0`.
///
/// The selections are stored negated so the general membership test, which is
/// written as `<u, x - x'> + f(x) - f(x') <= 0`, decides the same inequality.
pub fn reduce_svip<T: Scalar>(
    c: ConstraintSet<T>,
    q: ConstraintSet<T>,
    a: LinearOperator<T>,
    f1: Vec<Expr>,
    f2: Vec<Expr>,
) -> Result<SplitProblem<T>, ModelError> {
    reduce_smvip(c, q, a, f1, f2, Expr::zero(), Expr::zero())
}

/// Split mixed variational inequality with single-valued `F1`, `F2` (stored negated).
pub fn reduce_smvip<T: Scalar>(
    c: ConstraintSet<T>,
    q: ConstraintSet<T>,
    a: LinearOperator<T>,
    f1: Vec<Expr>,
    f2: Vec<Expr>,
    f: Expr,
    g: Expr,
) -> Result<SplitProblem<T>, ModelError> {
    if f1.len() != c.dim() || f2.len() != q.dim() {
        return Err(ModelError::Dimension(format!(
            "F1 has {} components and F2 {}, expected {} and {}",
            f1.len(),
            f2.len(),
            c.dim(),
            q.dim()
        )));
    }
    SplitProblem::new(
        0,
        c,
        q,
        a,
        f,
        g,
        MultiMap::single(VarSpace::X, negate_all(f1))?,
        MultiMap::single(VarSpace::Y, negate_all(f2))?,
    )
}

/// Split minimization: `B1 = {0}`, `B2 = {0}`.
pub fn reduce_smp<T: Scalar>(
    c: ConstraintSet<T>,
    q: ConstraintSet<T>,
    a: LinearOperator<T>,
    f: Expr,
    g: Expr,
) -> Result<SplitProblem<T>, ModelError> {
    let (n, m) = (c.dim(), q.dim());
    SplitProblem::new(
        0,
        c,
        q,
        a,
        f,
        g,
        MultiMap::zero(VarSpace::X, n),
        MultiMap::zero(VarSpace::Y, m),
    )
}

fn value_err(e: &Entry, message: impl Into<String>) -> BuildError {
    BuildError::Value {
        line: e.line,
        col: e.col,
        message: message.into(),
    }
}

fn require<'a>(spec: &'a SpecFile, name: &str) -> Result<&'a Section, BuildError> {
    spec.section(name)
        .ok_or_else(|| BuildError::MissingSection(name.into()))
}

fn key<'a>(s: &'a Section, key: &str) -> Result<&'a Entry, BuildError> {
    s.get(key).ok_or_else(|| BuildError::MissingKey {
        section: s.name.clone(),
        key: key.into(),
        line: s.line,
    })
}

fn only_keys(s: &Section, allowed: &[&str]) -> Result<(), BuildError> {
    for e in &s.entries {
        if !allowed.contains(&e.key.as_str()) {
            return Err(BuildError::UnknownKey {
                section: s.name.clone(),
                key: e.key.clone(),
                line: e.line,
                col: e.col,
            });
        }
    }
    let repeatable = s.name.starts_with("map.");
    if !repeatable {
        for (i, e) in s.entries.iter().enumerate() {
            if s.entries[..i].iter().any(|o| o.key == e.key) {
                return Err(value_err(e, format!("key '{}' given twice", e.key)));
            }
        }
    }
    Ok(())
}

fn parse_usize(e: &Entry) -> Result<usize, BuildError> {
    e.value
        .parse()
        .map_err(|_| value_err(e, format!("expected a nonnegative integer, found '{}'", e.value)))
}

fn parse_reals<T: Scalar>(e: &Entry, text: &str) -> Result<Vec<T>, BuildError> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| value_err(e, format!("expected a real number, found '{part}'")))
        })
        .collect()
}

fn parse_expr(e: &Entry, text: &str, offset: usize) -> Result<Expr, BuildError> {
    exprlang::parse(text).map_err(|source| BuildError::Expr {
        line: e.line,
        col: e.col + offset + source.col().map_or(0, |c| c - 1),
        source,
    })
}

fn build_set<T: Scalar>(s: &Section) -> Result<ConstraintSet<T>, BuildError> {
    let kind = key(s, "kind")?;
    let model = |source| BuildError::Model { line: kind.line, source };
    match kind.value.as_str() {
        "box" => {
            only_keys(s, &["kind", "lower", "upper"])?;
            let lo = key(s, "lower")?;
            let hi = key(s, "upper")?;
            ConstraintSet::new_box(parse_reals(lo, &lo.value)?, parse_reals(hi, &hi.value)?).map_err(model)
        }
        "ball" => {
            only_keys(s, &["kind", "center", "radius"])?;
            let c = key(s, "center")?;
            let r = key(s, "radius")?;
            let radius = parse_reals::<T>(r, &r.value)?;
            if radius.len() != 1 {
                return Err(value_err(r, "radius must be a single number"));
            }
            ConstraintSet::new_ball(parse_reals(c, &c.value)?, radius[0]).map_err(model)
        }
        other => Err(value_err(kind, format!("unknown set kind '{other}' (expected box or ball)"))),
    }
}

fn build_fn(spec: &SpecFile, name: &str, optional: bool) -> Result<Expr, BuildError> {
    match spec.section(name) {
        None if optional => Ok(Expr::zero()),
        None => Err(BuildError::MissingSection(name.into())),
        Some(s) => {
            only_keys(s, &["expr"])?;
            let e = key(s, "expr")?;
            parse_expr(e, &e.value, 0)
        }
    }
}

fn build_map(
    spec: &SpecFile,
    name: &str,
    space: VarSpace,
    dim: usize,
    optional: bool,
) -> Result<MultiMap, BuildError> {
    let s = match spec.section(name) {
        None if optional => return Ok(MultiMap::zero(space, dim)),
        None => return Err(BuildError::MissingSection(name.into())),
        Some(s) => s,
    };
    only_keys(s, &["selection"])?;
    let mut sels = Vec::new();
    for e in s.all("selection") {
        let mut offset = 0;
        let mut comps = Vec::new();
        for part in e.value.split(',') {
            let lead = part.len() - part.trim_start().len();
            comps.push(parse_expr(e, part.trim(), offset + lead)?);
            offset += part.len() + 1;
        }
        sels.push(comps);
    }
    MultiMap::new(space, dim, sels).map_err(|source| BuildError::Model { line: s.line, source })
}

/// Interprets a parsed spec file, enforcing every problem invariant.
pub fn build_problem<T: Scalar>(spec: &SpecFile) -> Result<SplitProblem<T>, BuildError> {
    let space = require(spec, "space")?;
    only_keys(space, &["n", "m", "params", "reduction"])?;
    let n = parse_usize(key(space, "n")?)?;
    let m = parse_usize(key(space, "m")?)?;
    let k = match space.get("params") {
        Some(e) => parse_usize(e)?,
        None => 0,
    };
    let reduction = match space.get("reduction") {
        Some(e) => Some(e.value.parse::<Reduction>().map_err(|msg| value_err(e, msg))?),
        None => None,
    };
    if n == 0 || m == 0 {
        return Err(BuildError::Model {
            line: space.line,
            source: ModelError::Dimension("n and m must be positive".into()),
        });
    }
    let fns_optional = matches!(reduction, Some(Reduction::Sfp | Reduction::Svip));
    let maps_optional = matches!(reduction, Some(Reduction::Sfp | Reduction::Smp));

    let c_sec = require(spec, "set.C")?;
    let q_sec = require(spec, "set.Q")?;
    let a_sec = require(spec, "operator.A")?;
    let c = build_set::<T>(c_sec)?;
    let q = build_set::<T>(q_sec)?;
    for (sec, set, want) in [(c_sec, &c, n), (q_sec, &q, m)] {
        if set.dim() != want {
            return Err(BuildError::Model {
                line: sec.line,
                source: ModelError::Dimension(format!(
                    "[{}] has dimension {}, expected {want}",
                    sec.name,
                    set.dim()
                )),
            });
        }
    }
    only_keys(a_sec, &["rows"])?;
    let rows_entry = key(a_sec, "rows")?;
    let rows = rows_entry
        .value
        .split(';')
        .map(|r| parse_reals::<T>(rows_entry, r))
        .collect::<Result<Vec<_>, _>>()?;
    let a = LinearOperator::from_rows(rows).map_err(|source| BuildError::Model {
        line: rows_entry.line,
        source,
    })?;

    let f = build_fn(spec, "fn.f", fns_optional)?;
    let g = build_fn(spec, "fn.g", fns_optional)?;
    let b1 = build_map(spec, "map.B1", VarSpace::X, n, maps_optional)?;
    let b2 = build_map(spec, "map.B2", VarSpace::Y, m, maps_optional)?;

    let problem = SplitProblem {
        n,
        m,
        k,
        c,
        q,
        f,
        g,
        b1,
        b2,
        a,
    };
    problem.validate().map_err(|source| {
        let line = match &source {
            ModelError::VariableOutOfContext { context, .. } => match context.as_str() {
                "f" => spec.section("fn.f").map_or(0, |s| s.line),
                "g" => spec.section("fn.g").map_or(0, |s| s.line),
                "B1" => spec.section("map.B1").map_or(0, |s| s.line),
                _ => spec.section("map.B2").map_or(0, |s| s.line),
            },
            ModelError::Dimension(_) => a_sec.line,
            _ => space.line,
        };
        BuildError::Model { line, source }
    })?;
    Ok(problem)
}

/// Parses and builds in one step.
pub fn problem_from_str<T: Scalar>(text: &str) -> Result<SplitProblem<T>, String> {
    let spec = SpecFile::parse(text).map_err(|e| e.to_string())?;
    build_problem(&spec).map_err(|e| e.to_string())
}
