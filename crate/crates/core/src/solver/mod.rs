//! Convex quadratic programming by a primal-dual interior-point method.
//!
//! Problems have the form
//!
//! ```text
//! minimize    ½ xᵀ P x + qᵀ x + constant
//! subject to  A_eq x  = b_eq      (multipliers λ)
//!             A_in x <= b_in      (multipliers ν >= 0)
//! ```
//!
//! and the reported multipliers satisfy the stationarity condition
//! `P x + q + A_eqᵀ λ + A_inᵀ ν = 0`. Under this convention `-λ_i` is the
//! sensitivity of the optimal value to `b_eq[i]`.
//!
//! The method is Mehrotra's predictor-corrector applied to the Ruiz-equilibrated
//! problem. Each iteration factors the quasi-definite augmented system with a
//! sparse LDLᵀ ([`ldl`]) and refines the solution iteratively against the
//! unregularized matrix.

mod csc;
mod ldl;
mod scaling;

use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};
use csc::{dot, inf_norm, Csc};
use ldl::{sym_upper_mul, LdlFactor};
use scaling::equilibrate;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub kkt_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    /// Tolerance on normalized infeasibility certificates.
    pub infeasibility_tolerance: f64,
    pub equilibration_passes: usize,
    pub static_regularization: f64,
    pub refinement_steps: usize,
    /// When the iteration fails, solve auxiliary feasibility problems to tell
    /// infeasible and unbounded programs apart from numerical trouble.
    pub classify_failures: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            kkt_tolerance: 1e-8,
            feasibility_tolerance: 1e-8,
            max_iterations: 200,
            infeasibility_tolerance: 1e-8,
            equilibration_passes: 15,
            static_regularization: 1e-9,
            refinement_steps: 10,
            classify_failures: true,
        }
    }
}

/// Environment variable overriding both default tolerances.
pub const TOLERANCE_ENV: &str = "CVAR_OPF_KKT_TOL";

impl SolverSettings {
    /// Defaults, with tolerances taken from `CVAR_OPF_KKT_TOL` when it parses
    /// as a positive number.
    pub fn from_env() -> Self {
        let mut s = SolverSettings::default();
        if let Some(tol) = std::env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|t| *t > 0.0)
        {
            s.kkt_tolerance = tol;
            s.feasibility_tolerance = tol;
        }
        s
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kkt_tolerance", self.kkt_tolerance),
            ("feasibility_tolerance", self.feasibility_tolerance),
            ("infeasibility_tolerance", self.infeasibility_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation("solver settings", name, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    PrimalInfeasible,
    /// Dual infeasible: the objective is unbounded below.
    Unbounded,
    MaxIterations,
    NumericalError,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::PrimalInfeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iter",
            SolveStatus::NumericalError => "numerical-error",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub primal: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    /// Inequality slacks `b_in - A_in x` maintained by the method.
    pub slacks: Vec<f64>,
    pub objective: f64,
    /// max(‖A_eq x − b_eq‖∞ / (1 + ‖b_eq‖∞), ‖(A_in x − b_in)⁺‖∞ / (1 + ‖b_in‖∞))
    pub primal_residual: f64,
    /// ‖P x + q + A_eqᵀ λ + A_inᵀ ν‖∞ / (1 + ‖q‖∞)
    pub dual_residual: f64,
    /// max(sᵀν, |νᵀ(b_in − A_in x)|) / (1 + |objective|)
    pub complementarity_gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    pub fn kkt_residual(&self) -> f64 {
        self.primal_residual
            .max(self.dual_residual)
            .max(self.complementarity_gap)
    }
}

/// A convex QP in standard form. `hessian` holds the full symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub hessian: CscMatrix<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub eq_matrix: CscMatrix<f64>,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: CscMatrix<f64>,
    pub ineq_rhs: Vec<f64>,
}

impl QuadraticProgram {
    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let p = Csc::from_nalgebra(&self.hessian);
        let mut px = vec![0.0; x.len()];
        p.mul_add(x, &mut px);
        0.5 * dot(x, &px) + dot(&self.linear, x) + self.constant
    }

    /// Check dimensions, finiteness, symmetry and positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let shape = |what: &str, m: &CscMatrix<f64>, rows: usize| -> Result<()> {
            if m.ncols() != n {
                return Err(Error::dimension(format!("{what} columns"), n, m.ncols()));
            }
            if m.nrows() != rows {
                return Err(Error::dimension(format!("{what} rows"), rows, m.nrows()));
            }
            if m.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("program", what, "non-finite coefficient"));
            }
            Ok(())
        };
        shape("hessian", &self.hessian, n)?;
        shape("eq_matrix", &self.eq_matrix, self.n_eq())?;
        shape("ineq_matrix", &self.ineq_matrix, self.n_ineq())?;
        for (what, v) in [
            ("linear", &self.linear),
            ("eq_rhs", &self.eq_rhs),
            ("ineq_rhs", &self.ineq_rhs),
        ] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation("program", what, "non-finite entry"));
            }
        }
        let p = Csc::from_nalgebra(&self.hessian);
        let pt = p.transpose();
        let scale = inf_norm(&p.vals).max(1.0);
        // compare as dense column maps; P is small or very sparse in practice
        for j in 0..n {
            let mut a: Vec<(usize, f64)> = p.col(j).filter(|e| e.1 != 0.0).collect();
            let mut b: Vec<(usize, f64)> = pt.col(j).filter(|e| e.1 != 0.0).collect();
            a.sort_by_key(|e| e.0);
            b.sort_by_key(|e| e.0);
            let same = a.len() == b.len()
                && a.iter()
                    .zip(&b)
                    .all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= 1e-12 * scale);
            if !same {
                return Err(Error::validation("program", "hessian", "matrix is not symmetric"));
            }
        }
        if !is_psd(&p) {
            return Err(Error::validation(
                "program",
                "hessian",
                "matrix is not positive semidefinite",
            ));
        }
        Ok(())
    }
}

fn upper_with_diag(p: &Csc) -> Csc {
    let n = p.ncols;
    let mut colptr = vec![0];
    let mut rowind = Vec::new();
    let mut vals = Vec::new();
    for j in 0..n {
        let mut diag = 0.0;
        for (i, v) in p.col(j) {
            if i < j {
                rowind.push(i);
                vals.push(v);
            } else if i == j {
                diag += v;
            }
        }
        rowind.push(j);
        vals.push(diag);
        colptr.push(rowind.len());
    }
    Csc {
        nrows: n,
        ncols: n,
        colptr,
        rowind,
        vals,
    }
}

fn is_psd(p: &Csc) -> bool {
    let n = p.ncols;
    if n == 0 {
        return true;
    }
    let upper = upper_with_diag(p);
    let shift = 1e-9 * inf_norm(&upper.vals).max(1e-300);
    let mut f = LdlFactor::analyze(&upper);
    // no dynamic regularization: a non-positive pivot means indefinite
    f.factor(&upper, &vec![shift; n], &vec![1.0; n], f64::NEG_INFINITY, 0.0);
    f.pivots().iter().all(|&d| d > 0.0)
}

/// Incremental construction of a [`QuadraticProgram`].
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    n: usize,
    hessian: Vec<(usize, usize, f64)>,
    linear: Vec<f64>,
    constant: f64,
    eq: Vec<(usize, usize, f64)>,
    eq_rhs: Vec<f64>,
    ineq: Vec<(usize, usize, f64)>,
    ineq_rhs: Vec<f64>,
}

impl ProgramBuilder {
    pub fn new(n: usize) -> Self {
        ProgramBuilder {
            n,
            hessian: Vec::new(),
            linear: vec![0.0; n],
            constant: 0.0,
            eq: Vec::new(),
            eq_rhs: Vec::new(),
            ineq: Vec::new(),
            ineq_rhs: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    /// Adds `v` to P[i, j] and P[j, i] (once when i == j).
    pub fn add_hessian(&mut self, i: usize, j: usize, v: f64) -> &mut Self {
        self.hessian.push((i, j, v));
        if i != j {
            self.hessian.push((j, i, v));
        }
        self
    }

    pub fn add_linear(&mut self, j: usize, v: f64) -> &mut Self {
        self.linear[j] += v;
        self
    }

    pub fn add_constant(&mut self, v: f64) -> &mut Self {
        self.constant += v;
        self
    }

    /// Appends `Σ coef x = rhs`, returning the row index.
    pub fn add_eq(&mut self, coefs: &[(usize, f64)], rhs: f64) -> usize {
        let r = self.eq_rhs.len();
        self.eq.extend(coefs.iter().map(|&(j, v)| (r, j, v)));
        self.eq_rhs.push(rhs);
        r
    }

    /// Appends `Σ coef x <= rhs`, returning the row index.
    pub fn add_ineq(&mut self, coefs: &[(usize, f64)], rhs: f64) -> usize {
        let r = self.ineq_rhs.len();
        self.ineq.extend(coefs.iter().map(|&(j, v)| (r, j, v)));
        self.ineq_rhs.push(rhs);
        r
    }

    pub fn n_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn build(self) -> Result<QuadraticProgram> {
        fn csc(rows: usize, cols: usize, t: &[(usize, usize, f64)]) -> Result<CscMatrix<f64>> {
            let (ri, ci, v): (Vec<_>, Vec<_>, Vec<_>) = t.iter().fold(
                (Vec::new(), Vec::new(), Vec::new()),
                |(mut a, mut b, mut c), &(i, j, x)| {
                    a.push(i);
                    b.push(j);
                    c.push(x);
                    (a, b, c)
                },
            );
            let coo = CooMatrix::try_from_triplets(rows, cols, ri, ci, v)
                .map_err(|e| Error::validation("program", "triplets", e.to_string()))?;
            Ok(CscMatrix::from(&coo))
        }
        let program = QuadraticProgram {
            hessian: csc(self.n, self.n, &self.hessian)?,
            linear: self.linear,
            constant: self.constant,
            eq_matrix: csc(self.eq_rhs.len(), self.n, &self.eq)?,
            eq_rhs: self.eq_rhs,
            ineq_matrix: csc(self.ineq_rhs.len(), self.n, &self.ineq)?,
            ineq_rhs: self.ineq_rhs,
        };
        Ok(program)
    }
}

/// Augmented system
/// `[P + ρI, Aᵀ, Gᵀ; A, −δI, 0; G, 0, −W − δI]`, stored as its upper triangle.
struct Kkt {
    n: usize,
    p: usize,
    upper: Csc,
    diag_slot: Vec<usize>,
    p_diag: Vec<f64>,
    signs: Vec<f64>,
    reg: Vec<f64>,
    factor: LdlFactor,
}

impl Kkt {
    fn new(pm: &Csc, a: &Csc, g: &Csc, rho: f64) -> Self {
        let (n, p, m) = (pm.ncols, a.nrows, g.nrows);
        let dim = n + p + m;
        let pu = upper_with_diag(pm);
        let at = a.transpose();
        let gt = g.transpose();
        let mut colptr = vec![0];
        let mut rowind = Vec::new();
        let mut vals = Vec::new();
        let mut diag_slot = Vec::with_capacity(dim);
        let mut p_diag = vec![0.0; n];
        for j in 0..n {
            for (i, v) in pu.col(j) {
                if i == j {
                    diag_slot.push(rowind.len());
                    p_diag[j] = v;
                }
                rowind.push(i);
                vals.push(v);
            }
            colptr.push(rowind.len());
        }
        for (block, offset) in [(&at, n), (&gt, n + p)] {
            for c in 0..block.ncols {
                for (i, v) in block.col(c) {
                    rowind.push(i);
                    vals.push(v);
                }
                diag_slot.push(rowind.len());
                rowind.push(offset + c);
                vals.push(0.0);
                colptr.push(rowind.len());
            }
        }
        let upper = Csc {
            nrows: dim,
            ncols: dim,
            colptr,
            rowind,
            vals,
        };
        let factor = LdlFactor::analyze(&upper);
        let signs = (0..dim).map(|k| if k < n { 1.0 } else { -1.0 }).collect();
        let reg = (0..dim).map(|k| if k < n { rho } else { -rho }).collect();
        Kkt {
            n,
            p,
            upper,
            diag_slot,
            p_diag,
            signs,
            reg,
            factor,
        }
    }

    /// Set the inequality block to `-w` and refactor.
    fn refactor(&mut self, w: &[f64]) {
        for j in 0..self.n {
            self.upper.vals[self.diag_slot[j]] = self.p_diag[j];
        }
        for (i, wi) in w.iter().enumerate() {
            self.upper.vals[self.diag_slot[self.n + self.p + i]] = -wi;
        }
        self.factor
            .factor(&self.upper, &self.reg, &self.signs, 1e-13, 1e-7);
    }

    /// Solve the unregularized system, refining against the stored matrix.
    fn solve(&self, rhs: &[f64], steps: usize) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.factor.solve(&mut x);
        let mut kx = vec![0.0; rhs.len()];
        let bnorm = inf_norm(rhs).max(1.0);
        let mut last = f64::INFINITY;
        for _ in 0..steps {
            sym_upper_mul(&self.upper, &x, &mut kx);
            let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, k)| b - k).collect();
            let rn = inf_norm(&r);
            if rn <= 1e-14 * bnorm || rn >= 0.5 * last {
                break;
            }
            last = rn;
            self.factor.solve(&mut r);
            x.iter_mut().zip(&r).for_each(|(xi, ri)| *xi += ri);
        }
        x
    }
}

/// Largest step in (0, 1] keeping `v + α dv` strictly positive.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

struct Problem {
    p: Csc,
    q: Vec<f64>,
    a: Csc,
    b: Vec<f64>,
    g: Csc,
    h: Vec<f64>,
}

struct Metrics {
    objective: f64,
    primal: f64,
    dual: f64,
    gap: f64,
    primal_infeasible: bool,
    unbounded: bool,
}

impl Problem {
    fn metrics(
        &self,
        x: &[f64],
        y: &[f64],
        z: &[f64],
        s: &[f64],
        inf_tol: f64,
    ) -> Metrics {
        let n = x.len();
        let mut px = vec![0.0; n];
        self.p.mul_add(x, &mut px);
        let objective = 0.5 * dot(x, &px) + dot(&self.q, x);

        let mut ax: Vec<f64> = self.b.iter().map(|v| -v).collect();
        self.a.mul_add(x, &mut ax);
        let mut gx: Vec<f64> = self.h.iter().map(|v| -v).collect();
        self.g.mul_add(x, &mut gx);
        let viol = gx.iter().fold(0.0_f64, |m, v| m.max(*v));
        let primal = (inf_norm(&ax) / (1.0 + inf_norm(&self.b)))
            .max(viol / (1.0 + inf_norm(&self.h)));

        let mut aty = vec![0.0; n];
        self.a.tmul_add(y, &mut aty);
        self.g.tmul_add(z, &mut aty);
        let stat: Vec<f64> = (0..n).map(|j| px[j] + self.q[j] + aty[j]).collect();
        let dual = inf_norm(&stat) / (1.0 + inf_norm(&self.q));

        let comp = dot(s, z).max(dot(z, &gx).abs());
        let gap = comp / (1.0 + objective.abs());

        // certificates
        let cert_p = -(dot(&self.b, y) + dot(&self.h, z));
        let primal_infeasible = cert_p > 0.0 && inf_norm(&aty) <= inf_tol * cert_p;
        let cert_d = -dot(&self.q, x);
        let unbounded = cert_d > 0.0 && {
            let mut ax0 = vec![0.0; self.b.len()];
            self.a.mul_add(x, &mut ax0);
            let mut gx0 = vec![0.0; self.h.len()];
            self.g.mul_add(x, &mut gx0);
            let gpos = gx0.iter().fold(0.0_f64, |m, v| m.max(*v));
            inf_norm(&px).max(inf_norm(&ax0)).max(gpos) <= inf_tol * cert_d
        };
        Metrics {
            objective,
            primal,
            dual,
            gap,
            primal_infeasible,
            unbounded,
        }
    }
}

/// Solve a convex QP. Validation failures are errors; solver outcomes
/// (including infeasibility) are reported through [`SolveReport::status`].
pub fn solve_qp(program: &QuadraticProgram, settings: &SolverSettings) -> Result<SolveReport> {
    settings.validate()?;
    program.validate()?;
    let mut report = run_ipm(program, settings);
    if settings.classify_failures
        && matches!(report.status, SolveStatus::MaxIterations | SolveStatus::NumericalError)
    {
        if let Some(status) = classify_failure(program, settings) {
            report.status = status;
        }
    }
    Ok(report)
}

fn triplets(m: &CscMatrix<f64>) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    m.triplet_iter().map(|(i, j, v)| (i, j, *v))
}

/// Decide between infeasible and unbounded after a failed solve.
///
/// Phase one minimizes the total constraint violation `Σ t` (with a tiny
/// proximal term on `x` so the optimal face is bounded); a clearly positive
/// optimum means no feasible point exists. Otherwise the LP
/// `min qᵀd : Pd = 0, Ad = 0, Gd ≤ 0, -1 ≤ d ≤ 1` looks for a descent ray.
fn classify_failure(program: &QuadraticProgram, settings: &SolverSettings) -> Option<SolveStatus> {
    let (n, p, m) = (program.n_vars(), program.n_eq(), program.n_ineq());
    let inner = SolverSettings {
        classify_failures: false,
        max_iterations: settings.max_iterations.max(100),
        ..settings.clone()
    };

    let mut b = ProgramBuilder::new(n + 2 * p + m);
    for j in 0..n {
        b.add_hessian(j, j, 1e-9);
    }
    for k in n..n + 2 * p + m {
        b.add_linear(k, 1.0);
        b.add_ineq(&[(k, -1.0)], 0.0);
    }
    let mut eq_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for (i, j, v) in triplets(&program.eq_matrix) {
        eq_rows[i].push((j, v));
    }
    for (i, mut row) in eq_rows.into_iter().enumerate() {
        row.push((n + i, 1.0));
        row.push((n + p + i, -1.0));
        b.add_eq(&row, program.eq_rhs[i]);
    }
    let mut in_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (i, j, v) in triplets(&program.ineq_matrix) {
        in_rows[i].push((j, v));
    }
    for (i, mut row) in in_rows.into_iter().enumerate() {
        row.push((n + 2 * p + i, -1.0));
        b.add_ineq(&row, program.ineq_rhs[i]);
    }
    let phase1 = b.build().ok()?;
    let r1 = run_ipm(&phase1, &inner);
    if !r1.is_solved() {
        return None;
    }
    let violation: f64 = r1.primal[n..].iter().sum();
    let scale = 1.0 + inf_norm(&program.eq_rhs).max(inf_norm(&program.ineq_rhs));
    if violation > 1e-6 * scale {
        return Some(SolveStatus::PrimalInfeasible);
    }

    let mut d = ProgramBuilder::new(n);
    for j in 0..n {
        d.add_linear(j, program.linear[j]);
        d.add_ineq(&[(j, 1.0)], 1.0);
        d.add_ineq(&[(j, -1.0)], 1.0);
    }
    let mut p_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, v) in triplets(&program.hessian) {
        p_rows[i].push((j, v));
    }
    for row in p_rows.into_iter().filter(|r| !r.is_empty()) {
        d.add_eq(&row, 0.0);
    }
    let mut eq_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for (i, j, v) in triplets(&program.eq_matrix) {
        eq_rows[i].push((j, v));
    }
    for row in eq_rows.into_iter().filter(|r| !r.is_empty()) {
        d.add_eq(&row, 0.0);
    }
    let mut in_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (i, j, v) in triplets(&program.ineq_matrix) {
        in_rows[i].push((j, v));
    }
    for row in in_rows.into_iter().filter(|r| !r.is_empty()) {
        d.add_ineq(&row, 0.0);
    }
    let ray = d.build().ok()?;
    let r2 = run_ipm(&ray, &inner);
    if r2.is_solved() && r2.objective < -1e-6 * (1.0 + inf_norm(&program.linear)) {
        return Some(SolveStatus::Unbounded);
    }
    None
}

fn run_ipm(program: &QuadraticProgram, settings: &SolverSettings) -> SolveReport {
    let original = Problem {
        p: Csc::from_nalgebra(&program.hessian),
        q: program.linear.clone(),
        a: Csc::from_nalgebra(&program.eq_matrix),
        b: program.eq_rhs.clone(),
        g: Csc::from_nalgebra(&program.ineq_matrix),
        h: program.ineq_rhs.clone(),
    };
    let mut sc = Problem {
        p: original.p.clone(),
        q: original.q.clone(),
        a: original.a.clone(),
        b: original.b.clone(),
        g: original.g.clone(),
        h: original.h.clone(),
    };
    let scaling = equilibrate(
        &mut sc.p,
        &mut sc.q,
        &mut sc.a,
        &mut sc.b,
        &mut sc.g,
        &mut sc.h,
        settings.equilibration_passes,
    );
    let (n, p, m) = (sc.q.len(), sc.b.len(), sc.h.len());
    let dim = n + p + m;
    let mut kkt = Kkt::new(&sc.p, &sc.a, &sc.g, settings.static_regularization);

    let unscale = |xs: &[f64], ys: &[f64], zs: &[f64], ss: &[f64]| {
        let x: Vec<f64> = xs.iter().zip(&scaling.d).map(|(v, d)| v * d).collect();
        let y: Vec<f64> = ys
            .iter()
            .zip(&scaling.e_eq)
            .map(|(v, e)| v * e / scaling.cost)
            .collect();
        let z: Vec<f64> = zs
            .iter()
            .zip(&scaling.e_in)
            .map(|(v, e)| v * e / scaling.cost)
            .collect();
        let s: Vec<f64> = ss.iter().zip(&scaling.e_in).map(|(v, e)| v / e).collect();
        (x, y, z, s)
    };

    // initial point from the system with W = I
    kkt.refactor(&vec![1.0; m]);
    let mut rhs = vec![0.0; dim];
    for j in 0..n {
        rhs[j] = -sc.q[j];
    }
    rhs[n..n + p].copy_from_slice(&sc.b);
    rhs[n + p..].copy_from_slice(&sc.h);
    let sol = kkt.solve(&rhs, settings.refinement_steps);
    let mut x = sol[..n].to_vec();
    let mut y = sol[n..n + p].to_vec();
    let zt = &sol[n + p..];
    let mut s: Vec<f64> = zt.iter().map(|v| -v).collect();
    let mut z: Vec<f64> = zt.to_vec();
    for v in [&mut s, &mut z] {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        if lo <= 1e-8 {
            let shift = 1.0 - lo.min(0.0);
            v.iter_mut().for_each(|e| *e += shift);
        }
    }

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    for iter in 0..=settings.max_iterations {
        iterations = iter;
        let (xo, yo, zo, so) = unscale(&x, &y, &z, &s);
        let met = original.metrics(&xo, &yo, &zo, &so, settings.infeasibility_tolerance);
        let score = met.primal.max(met.dual).max(met.gap);
        let finite = [met.primal, met.dual, met.gap].iter().all(|v| v.is_finite())
            && x.iter().chain(&y).chain(&z).chain(&s).all(|v| v.is_finite());
        if !finite {
            status = SolveStatus::NumericalError;
            break;
        }
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), y.clone(), z.clone(), s.clone()));
        }
        if met.primal <= settings.feasibility_tolerance
            && met.dual <= settings.kkt_tolerance
            && met.gap <= settings.kkt_tolerance
        {
            status = SolveStatus::Solved;
            break;
        }
        if iter >= 3 && met.primal > settings.feasibility_tolerance && met.primal_infeasible {
            status = SolveStatus::PrimalInfeasible;
            break;
        }
        if iter >= 3 && met.dual > settings.kkt_tolerance && met.unbounded {
            status = SolveStatus::Unbounded;
            break;
        }
        if iter == settings.max_iterations {
            break;
        }
        let _ = met.objective;

        // residuals of the scaled problem
        let mut rd = sc.q.clone();
        sc.p.mul_add(&x, &mut rd);
        sc.a.tmul_add(&y, &mut rd);
        sc.g.tmul_add(&z, &mut rd);
        let mut rp: Vec<f64> = sc.b.iter().map(|v| -v).collect();
        sc.a.mul_add(&x, &mut rp);
        let mut rg: Vec<f64> = sc.h.iter().map(|v| -v).collect();
        sc.g.mul_add(&x, &mut rg);
        for i in 0..m {
            rg[i] += s[i];
        }
        let mu = if m > 0 { dot(&s, &z) / m as f64 } else { 0.0 };

        let w: Vec<f64> = s.iter().zip(&z).map(|(si, zi)| si / zi).collect();
        kkt.refactor(&w);

        let newton = |rc: &[f64]| {
            let mut rhs = vec![0.0; dim];
            for j in 0..n {
                rhs[j] = -rd[j];
            }
            for i in 0..p {
                rhs[n + i] = -rp[i];
            }
            for i in 0..m {
                rhs[n + p + i] = -rg[i] + rc[i] / z[i];
            }
            let d = kkt.solve(&rhs, settings.refinement_steps);
            let dz = d[n + p..].to_vec();
            let ds: Vec<f64> = (0..m).map(|i| (-rc[i] - s[i] * dz[i]) / z[i]).collect();
            (d[..n].to_vec(), d[n..n + p].to_vec(), dz, ds)
        };

        // predictor
        let rc_aff: Vec<f64> = s.iter().zip(&z).map(|(a, b)| a * b).collect();
        let (_, _, dz_a, ds_a) = newton(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let sigma = if m > 0 && mu > 0.0 {
            let mu_aff = (0..m)
                .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
                .sum::<f64>()
                / m as f64;
            (mu_aff / mu).powi(3).clamp(0.0, 1.0)
        } else {
            0.0
        };

        // corrector
        let rc: Vec<f64> = (0..m)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let (dx, dy, dz, ds) = newton(&rc);
        let alpha = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for i in 0..p {
            y[i] += alpha * dy[i];
        }
        for i in 0..m {
            z[i] += alpha * dz[i];
            s[i] += alpha * ds[i];
        }
    }

    if matches!(status, SolveStatus::MaxIterations | SolveStatus::NumericalError) {
        if let Some((_, bx, by, bz, bs)) = best {
            x = bx;
            y = by;
            z = bz;
            s = bs;
        }
    }
    let (xo, yo, zo, so) = unscale(&x, &y, &z, &s);
    let met = original.metrics(&xo, &yo, &zo, &so, settings.infeasibility_tolerance);
    SolveReport {
        objective: met.objective + program.constant,
        primal: xo,
        eq_duals: yo,
        ineq_duals: zo,
        slacks: so,
        primal_residual: met.primal,
        dual_residual: met.dual,
        complementarity_gap: met.gap,
        iterations,
        status,
    }
}
