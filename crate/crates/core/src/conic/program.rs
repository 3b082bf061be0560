//! Hermitian semi-definite programs over named matrix variables.

use std::fmt;

use nalgebra::DMatrix;

use super::embed::{compress_symmetric, embed_hermitian, hermitian_basis, hermitian_from_coords, EMBED_INNER_SCALE};
use super::ipm::{InteriorPoint, LmiBlock, LmiProblem, SdpBackend, SolverOptions, SparseSym};
use super::SolverStatus;
use crate::error::{Error, Result};
use crate::opalg::{partial_transpose, tensor, BipartiteOp, HermitianOp, Subsystem};

/// Handle to a registered Hermitian variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Real-linear maps applied to a variable inside an affine expression.
#[derive(Clone, Debug)]
pub enum LinearMap {
    Identity,
    /// Partial transpose of a `d_A x d_B` operator.
    PartialTranspose { da: usize, db: usize, sys: Subsystem },
    /// `X -> K (x) X`.
    KronLeft(HermitianOp<f64>),
    /// `X -> X (x) L`.
    KronRight(HermitianOp<f64>),
}

impl LinearMap {
    fn output_dim(&self, d: usize) -> usize {
        match self {
            LinearMap::Identity | LinearMap::PartialTranspose { .. } => d,
            LinearMap::KronLeft(k) => k.dim() * d,
            LinearMap::KronRight(l) => d * l.dim(),
        }
    }

    fn apply(&self, x: &HermitianOp<f64>) -> HermitianOp<f64> {
        match self {
            LinearMap::Identity => x.clone(),
            LinearMap::PartialTranspose { da, db, sys } => {
                let b = BipartiteOp::new(x.clone(), *da, *db).expect("dims checked on insertion");
                partial_transpose(&b, *sys).into_op()
            }
            LinearMap::KronLeft(k) => tensor(k, x).into_op(),
            LinearMap::KronRight(l) => tensor(x, l).into_op(),
        }
    }

    fn describe(&self) -> String {
        match self {
            LinearMap::Identity => "id".into(),
            LinearMap::PartialTranspose { da, db, sys } => format!("T_{sys:?}[{da}x{db}]"),
            LinearMap::KronLeft(k) => format!("K({})(x)", k.dim()),
            LinearMap::KronRight(l) => format!("(x)K({})", l.dim()),
        }
    }
}

#[derive(Clone, Debug)]
struct Term {
    var: VarId,
    map: LinearMap,
    coeff: f64,
}

/// `constant + sum_t coeff_t map_t(X_t)`, a Hermitian matrix expression.
#[derive(Clone, Debug)]
pub struct AffineExpr {
    dim: usize,
    terms: Vec<Term>,
    constant: HermitianOp<f64>,
}

impl AffineExpr {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            constant: HermitianOp::zeros(dim),
        }
    }

    pub fn term(mut self, var: VarId, map: LinearMap, coeff: f64) -> Self {
        self.terms.push(Term { var, map, coeff });
        self
    }

    pub fn constant(mut self, c: &HermitianOp<f64>) -> Self {
        self.constant = &self.constant + c;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, values: &[HermitianOp<f64>]) -> HermitianOp<f64> {
        self.terms.iter().fold(self.constant.clone(), |acc, t| {
            &acc + &t.map.apply(&values[t.var.0]).scaled(t.coeff)
        })
    }
}

/// `constant + sum_v <C_v, X_v>`, real for Hermitian `C_v`.
#[derive(Clone, Debug, Default)]
pub struct ScalarExpr {
    terms: Vec<(VarId, HermitianOp<f64>)>,
    constant: f64,
}

impl ScalarExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `<coeff, X_var>`.
    pub fn inner(mut self, var: VarId, coeff: HermitianOp<f64>) -> Self {
        self.terms.push((var, coeff));
        self
    }

    /// Adds `k Tr[X_var]`; `dim` must be the variable's dimension.
    pub fn trace(self, var: VarId, dim: usize, k: f64) -> Self {
        self.inner(var, HermitianOp::identity(dim).scaled(k))
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.1 = t.1.scaled(k);
        }
        self.constant *= k;
        self
    }

    pub fn evaluate(&self, values: &[HermitianOp<f64>]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c.inner(&values[v.0])).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `expr >= 0`
    NonNegative,
    /// `expr = 0`
    Zero,
}

#[derive(Clone, Debug)]
struct VarInfo {
    name: String,
    dim: usize,
}

#[derive(Clone, Debug)]
pub struct ConicProgram {
    vars: Vec<VarInfo>,
    objective: ScalarExpr,
    psd: Vec<(String, AffineExpr)>,
    linear: Vec<(String, ScalarExpr, Relation)>,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Residuals {
    /// Largest negative eigenvalue over the PSD constraints at the primal point.
    pub max_eig_violation: f64,
    pub linear_violation: f64,
    pub duality_gap: f64,
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    pub status: SolverStatus,
    pub objective_value: f64,
    pub primal: Vec<HermitianOp<f64>>,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub backend: &'static str,
    /// Hermitian multiplier of each PSD constraint, in insertion order.
    pub multipliers: Vec<HermitianOp<f64>>,
}

impl SolverReport {
    pub fn value(&self, v: VarId) -> &HermitianOp<f64> {
        &self.primal[v.0]
    }
}

impl Default for ConicProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProgram {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            objective: ScalarExpr::new(),
            psd: Vec::new(),
            linear: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: &str, dim: usize) -> VarId {
        assert!(dim >= 1);
        self.vars.push(VarInfo {
            name: name.to_string(),
            dim,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn var_dim(&self, v: VarId) -> usize {
        self.vars[v.0].dim
    }

    /// Minimize the given expression.
    pub fn minimize(&mut self, objective: ScalarExpr) -> Result<()> {
        for (v, c) in &objective.terms {
            self.check_scalar_term(*v, c)?;
        }
        self.objective = objective;
        Ok(())
    }

    fn check_var(&self, v: VarId) -> Result<usize> {
        self.vars
            .get(v.0)
            .map(|i| i.dim)
            .ok_or_else(|| Error::DimensionMismatch(format!("unknown variable {}", v.0)))
    }

    fn check_scalar_term(&self, v: VarId, c: &HermitianOp<f64>) -> Result<()> {
        let d = self.check_var(v)?;
        if c.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "coefficient of dim {} for variable '{}' of dim {d}",
                c.dim(),
                self.vars[v.0].name
            )));
        }
        Ok(())
    }

    /// Require `expr >= 0` in the Loewner order.
    pub fn add_psd(&mut self, name: &str, expr: AffineExpr) -> Result<()> {
        if expr.constant.dim() != expr.dim {
            return Err(Error::DimensionMismatch(format!("constant of '{name}' has wrong dim")));
        }
        for t in &expr.terms {
            let d = self.check_var(t.var)?;
            if let LinearMap::PartialTranspose { da, db, .. } = t.map {
                if da * db != d {
                    return Err(Error::DimensionMismatch(format!(
                        "partial transpose {da}x{db} on variable of dim {d} in '{name}'"
                    )));
                }
            }
            if t.map.output_dim(d) != expr.dim {
                return Err(Error::DimensionMismatch(format!(
                    "term on '{}' maps to dim {} inside '{name}' of dim {}",
                    self.vars[t.var.0].name,
                    t.map.output_dim(d),
                    expr.dim
                )));
            }
        }
        self.psd.push((name.to_string(), expr));
        Ok(())
    }

    pub fn add_linear(&mut self, name: &str, expr: ScalarExpr, rel: Relation) -> Result<()> {
        for (v, c) in &expr.terms {
            self.check_scalar_term(*v, c)?;
        }
        self.linear.push((name.to_string(), expr, rel));
        Ok(())
    }

    fn offsets(&self) -> (Vec<usize>, usize) {
        let mut off = Vec::with_capacity(self.vars.len());
        let mut n = 0;
        for v in &self.vars {
            off.push(n);
            n += v.dim * v.dim;
        }
        (off, n)
    }

    /// Lower to real LMI form with one embedded block per PSD constraint
    /// and a 1x1 block per linear inequality (two per equality).
    pub fn to_lmi(&self) -> LmiProblem {
        let (off, n) = self.offsets();
        let bases: Vec<Vec<HermitianOp<f64>>> = self.vars.iter().map(|v| hermitian_basis(v.dim)).collect();

        let scalar_coeffs = |e: &ScalarExpr| -> Vec<(usize, f64)> {
            let mut acc = vec![0.0; n];
            for (v, c) in &e.terms {
                for (k, b) in bases[v.0].iter().enumerate() {
                    acc[off[v.0] + k] += c.inner(b);
                }
            }
            acc.into_iter().enumerate().filter(|(_, x)| *x != 0.0).collect()
        };

        let mut c = vec![0.0; n];
        for (i, v) in scalar_coeffs(&self.objective) {
            c[i] = v;
        }

        let mut blocks = Vec::new();
        for (_, expr) in &self.psd {
            let mut dense: Vec<Option<DMatrix<f64>>> = vec![None; n];
            for t in &expr.terms {
                for (k, b) in bases[t.var.0].iter().enumerate() {
                    let img = embed_hermitian(&t.map.apply(b).scaled(t.coeff));
                    let slot = &mut dense[off[t.var.0] + k];
                    match slot {
                        Some(m) => *m += img,
                        None => *slot = Some(img),
                    }
                }
            }
            let terms = dense
                .into_iter()
                .enumerate()
                .filter_map(|(i, m)| m.map(|m| (i, SparseSym::from_dense(&m))))
                .filter(|(_, s)| !s.is_empty())
                .collect();
            blocks.push(LmiBlock {
                dim: 2 * expr.dim,
                f0: embed_hermitian(&expr.constant),
                terms,
            });
        }
        for (_, expr, rel) in &self.linear {
            let coeffs = scalar_coeffs(expr);
            let signs: &[f64] = match rel {
                Relation::NonNegative => &[1.0],
                Relation::Zero => &[1.0, -1.0],
            };
            for &s in signs {
                blocks.push(LmiBlock {
                    dim: 1,
                    f0: DMatrix::from_element(1, 1, s * expr.constant),
                    terms: coeffs
                        .iter()
                        .map(|&(i, v)| {
                            (
                                i,
                                SparseSym {
                                    entries: vec![(0, 0, s * v)],
                                },
                            )
                        })
                        .collect(),
                });
            }
        }
        LmiProblem { c, blocks }
    }

    pub fn solve(&self, opts: &SolverOptions) -> SolverReport {
        self.solve_with(&InteriorPoint, opts)
    }

    pub fn solve_with(&self, backend: &dyn SdpBackend, opts: &SolverOptions) -> SolverReport {
        if opts.dump {
            eprintln!("{self}");
        }
        let lmi = self.to_lmi();
        let raw = backend.solve(&lmi, opts);
        let (off, _) = self.offsets();
        let primal: Vec<HermitianOp<f64>> = self
            .vars
            .iter()
            .zip(&off)
            .map(|(v, &o)| hermitian_from_coords(v.dim, &raw.y[o..o + v.dim * v.dim]))
            .collect();
        // <embed A, W> = Re Tr[A compress(W)] / EMBED_INNER_SCALE
        let multipliers = raw
            .w
            .iter()
            .take(self.psd.len())
            .map(|w| compress_symmetric(w).scaled(1.0 / EMBED_INNER_SCALE))
            .collect();

        let obj_const = self.objective.constant;
        let objective_value = raw.primal_objective + obj_const;
        let dual_objective = raw.dual_objective + obj_const;

        let mut scale = 1.0f64;
        let mut max_eig_violation = 0.0f64;
        for (_, e) in &self.psd {
            let val = e.evaluate(&primal);
            scale = scale.max(e.constant.max_abs());
            max_eig_violation = max_eig_violation.max(-val.min_eigenvalue());
        }
        for p in &primal {
            scale = scale.max(p.max_abs());
        }
        let mut linear_violation = 0.0f64;
        for (_, e, rel) in &self.linear {
            let v = e.evaluate(&primal);
            let viol = match rel {
                Relation::NonNegative => (-v).max(0.0),
                Relation::Zero => v.abs(),
            };
            linear_violation = linear_violation.max(viol);
        }
        let residuals = Residuals {
            max_eig_violation,
            linear_violation,
            duality_gap: (objective_value - dual_objective).abs(),
        };

        let mut status = raw.status;
        if status == SolverStatus::Optimal
            && (residuals.max_eig_violation > 1e-7 * scale
                || residuals.linear_violation > 1e-7 * scale
                || residuals.duality_gap > 1e-6 * (1.0 + objective_value.abs()))
        {
            status = SolverStatus::NumericalTrouble;
        }
        SolverReport {
            status,
            objective_value,
            primal,
            dual_objective,
            residuals,
            iterations: raw.iterations,
            backend: backend.name(),
            multipliers,
        }
    }
}

impl fmt::Display for ConicProgram {
    /// Plain-text dump: one line per variable, the objective, then one line
    /// per constraint.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variables:")?;
        for (i, v) in self.vars.iter().enumerate() {
            writeln!(f, "  x{i} {} hermitian {}x{}", v.name, v.dim, v.dim)?;
        }
        let scalar = |e: &ScalarExpr| {
            let mut s: Vec<String> = e
                .terms
                .iter()
                .map(|(v, c)| format!("<C[{}], x{}>", c.dim(), v.0))
                .collect();
            s.push(format!("{}", e.constant));
            s.join(" + ")
        };
        writeln!(f, "minimize: {}", scalar(&self.objective))?;
        writeln!(f, "psd constraints:")?;
        for (name, e) in &self.psd {
            let terms: Vec<String> = e
                .terms
                .iter()
                .map(|t| format!("{}*{}(x{})", t.coeff, t.map.describe(), t.var.0))
                .collect();
            writeln!(
                f,
                "  {name} dim {}: {} + const(|max| {:.3e}) >= 0",
                e.dim,
                terms.join(" + "),
                e.constant.max_abs()
            )?;
        }
        writeln!(f, "linear constraints:")?;
        for (name, e, rel) in &self.linear {
            let op = match rel {
                Relation::NonNegative => ">=",
                Relation::Zero => "==",
            };
            writeln!(f, "  {name}: {} {op} 0", scalar(e))?;
        }
        Ok(())
    }
}
