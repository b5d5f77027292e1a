//! Canonical conic programs and the solver behind them.
//!
//! Complex beamformers are lifted to interleaved real variables; the inner
//! convex delivery subproblem is assembled here in a canonical form (linear
//! objective over linear equalities/inequalities and second-order cones)
//! and handed to an interior-point backend. The canonical form, the
//! solution statuses, and the independently re-checked residuals are the
//! stable boundary; the backend is replaceable.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use num_complex::Complex64;

use crate::model::{CacheAllocation, ChannelBlock, Clustering, RequestSlot, SystemConfig};
use crate::{Error, Result};

/// Interleaves a complex vector as `(Re, Im, Re, Im, ...)`.
///
/// The lift preserves the Euclidean norm and maps `Re{a^H z}` to the real
/// inner product of the lifted vectors.
pub fn lift_complex(z: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * z.len());
    for c in z {
        out.push(c.re);
        out.push(c.im);
    }
    out
}

/// Sparse affine expression `sum coeff_j * x_j + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn term(index: usize, coeff: f64) -> Self {
        AffineExpr {
            terms: vec![(index, coeff)],
            constant: 0.0,
        }
    }

    pub fn push(&mut self, index: usize, coeff: f64) {
        if coeff != 0.0 {
            self.terms.push((index, coeff));
        }
    }

    /// Adds `scale` times another expression.
    pub fn add_scaled(&mut self, other: &AffineExpr, scale: f64) {
        for &(idx, c) in &other.terms {
            self.push(idx, scale * c);
        }
        self.constant += scale * other.constant;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() + self.constant
    }

    fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(j, _)| j).max()
    }
}

/// Second-order cone membership `|| args(x) || <= bound(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderCone {
    pub args: Vec<AffineExpr>,
    pub bound: AffineExpr,
}

/// Variable layout of an assembled delivery subproblem: which slices hold
/// the lifted beamformers, the clustering entries, the binarization slacks,
/// and the edge-power epigraph auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryLayout {
    pub requested_files: Vec<usize>,
    pub num_sbs: usize,
    pub num_antennas: usize,
}

impl DeliveryLayout {
    fn pairs(&self) -> usize {
        self.requested_files.len() * self.num_sbs
    }

    pub fn num_vars(&self) -> usize {
        self.pairs() * (2 * self.num_antennas + 3)
    }

    /// First lifted component of beamformer block (fi, b); the slice spans
    /// `2 * num_antennas` variables.
    pub fn v_start(&self, fi: usize, sbs: usize) -> usize {
        (fi * self.num_sbs + sbs) * 2 * self.num_antennas
    }

    /// Lifted index of antenna `m`'s real (`im = false`) or imaginary part.
    pub fn v_index(&self, fi: usize, sbs: usize, antenna: usize, im: bool) -> usize {
        self.v_start(fi, sbs) + 2 * antenna + im as usize
    }

    pub fn e_index(&self, fi: usize, sbs: usize) -> usize {
        self.pairs() * 2 * self.num_antennas + fi * self.num_sbs + sbs
    }

    pub fn slack_index(&self, fi: usize, sbs: usize) -> usize {
        self.e_index(fi, sbs) + self.pairs()
    }

    pub fn epigraph_index(&self, fi: usize, sbs: usize) -> usize {
        self.e_index(fi, sbs) + 2 * self.pairs()
    }
}

/// Canonical convex subproblem: linear objective, affine constraints, and
/// second-order cone memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub num_vars: usize,
    /// Linear objective coefficients, minimized.
    pub objective: Vec<f64>,
    /// Each expression constrained to equal zero.
    pub equalities: Vec<AffineExpr>,
    /// Each expression constrained to be at most zero.
    pub inequalities: Vec<AffineExpr>,
    pub cones: Vec<SecondOrderCone>,
    /// Present when the program is an assembled delivery subproblem.
    pub layout: Option<DeliveryLayout>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        ConicProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            equalities: Vec::new(),
            inequalities: Vec::new(),
            cones: Vec::new(),
            layout: None,
        }
    }

    /// Verifies index ranges and, when a layout is attached, that it tiles
    /// the variable vector exactly.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::SolveFailed(format!("malformed program: {what}")));
        if self.objective.len() != self.num_vars {
            return bad("objective length");
        }
        let exprs = self
            .equalities
            .iter()
            .chain(&self.inequalities)
            .chain(self.cones.iter().flat_map(|c| c.args.iter().chain(std::iter::once(&c.bound))));
        for e in exprs {
            if let Some(max) = e.max_index() {
                if max >= self.num_vars {
                    return bad("variable index out of range");
                }
            }
        }
        if let Some(layout) = &self.layout {
            if layout.num_vars() != self.num_vars {
                return bad("layout does not tile the variable vector");
            }
        }
        Ok(())
    }

    /// Plain-text canonical dump, for solver cross-validation fixtures.
    pub fn dump(&self) -> String {
        fn expr(e: &AffineExpr) -> String {
            let mut parts: Vec<String> = Vec::new();
            if e.constant != 0.0 || e.terms.is_empty() {
                parts.push(format!("{}", e.constant));
            }
            for &(j, c) in &e.terms {
                parts.push(format!("{c}*x{j}"));
            }
            parts.join(" + ")
        }
        let mut out = format!("conic-program vars={}\n", self.num_vars);
        out.push_str("minimize ");
        out.push_str(&expr(&AffineExpr {
            terms: self
                .objective
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(j, &c)| (j, c))
                .collect(),
            constant: 0.0,
        }));
        out.push('\n');
        for e in &self.equalities {
            out.push_str(&format!("eq: {} = 0\n", expr(e)));
        }
        for e in &self.inequalities {
            out.push_str(&format!("ineq: {} <= 0\n", expr(e)));
        }
        for c in &self.cones {
            let args: Vec<String> = c.args.iter().map(|a| expr(a)).collect();
            out.push_str(&format!("soc: ||{}|| <= {}\n", args.join("; "), expr(&c.bound)));
        }
        out
    }
}

/// Terminal status of a conic solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatusKind {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

impl std::fmt::Display for SolveStatusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatusKind::Optimal => "optimal",
            SolveStatusKind::Infeasible => "infeasible",
            SolveStatusKind::Unbounded => "unbounded",
            SolveStatusKind::NumericalLimit => "numerical-limit",
        };
        f.write_str(s)
    }
}

/// Feasibility residuals of a primal point, re-checked independently of
/// the backend's own reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// max |equality expression|
    pub equality: f64,
    /// max positive part of inequality expressions
    pub inequality: f64,
    /// max positive part of (||args|| - bound) over cones
    pub cone: f64,
}

impl Residuals {
    pub fn worst(&self) -> f64 {
        self.equality.max(self.inequality).max(self.cone)
    }
}

/// Primal solution of a [`ConicProgram`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub primal: Vec<f64>,
    /// Objective value recomputed from the primal point.
    pub objective: f64,
    pub status: SolveStatusKind,
    pub residuals: Residuals,
    pub iterations: u32,
}

/// Evaluates all constraint residuals of `x` against the program.
pub fn check_residuals(program: &ConicProgram, x: &[f64]) -> Residuals {
    let equality = program
        .equalities
        .iter()
        .map(|e| e.eval(x).abs())
        .fold(0.0, f64::max);
    let inequality = program
        .inequalities
        .iter()
        .map(|e| e.eval(x).max(0.0))
        .fold(0.0, f64::max);
    let cone = program
        .cones
        .iter()
        .map(|c| {
            let norm = c.args.iter().map(|a| a.eval(x).powi(2)).sum::<f64>().sqrt();
            (norm - c.bound.eval(x)).max(0.0)
        })
        .fold(0.0, f64::max);
    Residuals {
        equality,
        inequality,
        cone,
    }
}

/// Solves the program with the interior-point backend.
///
/// Infeasibility and unboundedness surface as statuses, never as silent
/// failures; `Err` is reserved for malformed programs. Deterministic for a
/// fixed program.
pub fn solve(program: &ConicProgram, tolerance: f64) -> Result<ConicSolution> {
    program.validate()?;
    let n = program.num_vars;

    // Rows: equalities, then inequalities, then cone blocks in order.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut rhs: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    let push_row = |expr: &AffineExpr, cols: &mut Vec<Vec<(usize, f64)>>, rhs: &mut Vec<f64>| {
        let row = rhs.len();
        for &(j, c) in &expr.terms {
            cols[j].push((row, c));
        }
        rhs.push(-expr.constant);
    };

    for e in &program.equalities {
        push_row(e, &mut cols, &mut rhs);
    }
    if !program.equalities.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(program.equalities.len()));
    }
    for e in &program.inequalities {
        // expr <= 0  =>  s = -expr >= 0, i.e. row holds expr with rhs -const.
        push_row(e, &mut cols, &mut rhs);
    }
    if !program.inequalities.is_empty() {
        cones.push(SupportedConeT::NonnegativeConeT(program.inequalities.len()));
    }
    for cone in &program.cones {
        // s0 = bound(x), s_i = args_i(x); rows carry the negated linear part.
        let neg = |expr: &AffineExpr, cols: &mut Vec<Vec<(usize, f64)>>, rhs: &mut Vec<f64>| {
            let row = rhs.len();
            for &(j, c) in &expr.terms {
                cols[j].push((row, -c));
            }
            rhs.push(expr.constant);
        };
        neg(&cone.bound, &mut cols, &mut rhs);
        for a in &cone.args {
            neg(a, &mut cols, &mut rhs);
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.args.len() + 1));
    }

    // CSC assembly with duplicate merging and sorted row indices.
    let m = rhs.len();
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    for col in cols.iter_mut() {
        colptr.push(rowval.len());
        col.sort_by_key(|&(r, _)| r);
        let mut i = 0;
        while i < col.len() {
            let (row, mut val) = col[i];
            let mut j = i + 1;
            while j < col.len() && col[j].0 == row {
                val += col[j].1;
                j += 1;
            }
            if val != 0.0 {
                rowval.push(row);
                nzval.push(val);
            }
            i = j;
        }
    }
    colptr.push(rowval.len());
    let a_mat = CscMatrix::new(m, n, colptr, rowval, nzval);
    let p_mat = CscMatrix::new(n, n, vec![0; n + 1], Vec::new(), Vec::new());

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_feas(tolerance)
        .tol_gap_abs(tolerance)
        .tol_gap_rel(tolerance)
        .build()
        .map_err(|e| Error::SolveFailed(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p_mat, &program.objective, &a_mat, &rhs, &cones, settings)
        .map_err(|e| Error::SolveFailed(format!("setup: {e:?}")))?;
    solver.solve();

    let status = match solver.solution.status {
        SolverStatus::Solved => SolveStatusKind::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatusKind::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            SolveStatusKind::Unbounded
        }
        _ => SolveStatusKind::NumericalLimit,
    };
    let primal = solver.solution.x.clone();
    let objective = program
        .objective
        .iter()
        .zip(&primal)
        .map(|(c, x)| c * x)
        .sum();
    let residuals = check_residuals(program, &primal);
    Ok(ConicSolution {
        primal,
        objective,
        status,
        residuals,
        iterations: solver.solution.iterations,
    })
}

/// `Re{h^H v}` as an affine expression over lifted beamformer variables.
///
/// `index_of(component, im)` resolves the lifted variable for the given
/// stacked component, or `None` when that block is pinned to zero.
pub fn inner_re_expr<F>(h: &[Complex64], index_of: F) -> AffineExpr
where
    F: Fn(usize, bool) -> Option<usize>,
{
    let mut e = AffineExpr::zero();
    for (j, hj) in h.iter().enumerate() {
        if let Some(re_idx) = index_of(j, false) {
            e.push(re_idx, hj.re);
        }
        if let Some(im_idx) = index_of(j, true) {
            e.push(im_idx, hj.im);
        }
    }
    e
}

/// `Im{h^H v}` counterpart of [`inner_re_expr`].
pub fn inner_im_expr<F>(h: &[Complex64], index_of: F) -> AffineExpr
where
    F: Fn(usize, bool) -> Option<usize>,
{
    let mut e = AffineExpr::zero();
    for (j, hj) in h.iter().enumerate() {
        if let Some(im_idx) = index_of(j, true) {
            e.push(im_idx, hj.re);
        }
        if let Some(re_idx) = index_of(j, false) {
            e.push(re_idx, -hj.im);
        }
    }
    e
}

/// Quadratic epigraph `||x_slice||^2 <= t` as a standard cone
/// `||(2 x_slice, t - 1)|| <= t + 1`.
pub fn quad_epigraph_cone(components: &[usize], t_index: usize) -> SecondOrderCone {
    let mut args: Vec<AffineExpr> = components
        .iter()
        .map(|&j| AffineExpr::term(j, 2.0))
        .collect();
    let mut tm1 = AffineExpr::term(t_index, 1.0);
    tm1.constant = -1.0;
    args.push(tm1);
    let mut tp1 = AffineExpr::term(t_index, 1.0);
    tp1.constant = 1.0;
    SecondOrderCone {
        args,
        bound: tp1,
    }
}

/// QoS constraint with the concave signal term replaced by its first-order
/// expansion at `c0 = h^H v_f^(i)`:
/// `gamma * (sum |h^H v_f'|^2 + sigma^2) <= 2 Re{c0* h^H v_f} - |c0|^2`.
pub fn linearized_qos_cone(
    gamma: f64,
    sigma2: f64,
    c0: Complex64,
    interference: &[AffineExpr],
    signal_re: &AffineExpr,
    signal_im: &AffineExpr,
) -> SecondOrderCone {
    let g = gamma.sqrt();
    let mut rhs = AffineExpr::constant(-c0.norm_sqr());
    rhs.add_scaled(signal_re, 2.0 * c0.re);
    rhs.add_scaled(signal_im, 2.0 * c0.im);

    let mut args: Vec<AffineExpr> = Vec::with_capacity(interference.len() + 2);
    for it in interference {
        let mut a = AffineExpr::zero();
        a.add_scaled(it, 2.0 * g);
        args.push(a);
    }
    args.push(AffineExpr::constant(2.0 * g * sigma2.sqrt()));
    let mut rm1 = rhs.clone();
    rm1.constant -= 1.0;
    args.push(rm1);
    let mut rp1 = rhs;
    rp1.constant += 1.0;
    SecondOrderCone {
        args,
        bound: rp1,
    }
}

/// Exact QoS cone for a phase-aligned user:
/// `sqrt(gamma) * ||(interference, sigma)|| <= Re{h^H v_f}`.
pub fn exact_qos_cone(
    gamma: f64,
    sigma2: f64,
    interference: &[AffineExpr],
    signal_re: &AffineExpr,
) -> SecondOrderCone {
    let g = gamma.sqrt();
    let mut args: Vec<AffineExpr> = Vec::with_capacity(interference.len() + 1);
    for it in interference {
        let mut a = AffineExpr::zero();
        a.add_scaled(it, g);
        args.push(a);
    }
    args.push(AffineExpr::constant(g * sigma2.sqrt()));
    SecondOrderCone {
        args,
        bound: signal_re.clone(),
    }
}

/// Local linearization point of the penalty iteration.
#[derive(Debug, Clone)]
pub struct LocalPoint {
    pub beamformers: crate::model::BeamformerSet,
    pub clustering: Clustering,
}

/// Assembles the convex inner subproblem of the penalty iteration at the
/// given local point.
///
/// Emits, per requested file `f` and SBS `b`: the edge-power epigraph cone,
/// the linear fronthaul + penalty objective terms, the per-SBS power cap
/// cone, the clustering-beamformer coupling cone
/// `||v_fb|| <= e_fb sqrt(P_b)`, the linearized binarization-slack
/// inequality, the `[0, 1]` box on `e`, nonnegative slacks, and per-user
/// linearized QoS cones.
pub fn assemble_subproblem(
    cache: &CacheAllocation,
    requests: &RequestSlot,
    channels: &ChannelBlock,
    slot: usize,
    local: &LocalPoint,
    lambda: f64,
    config: &SystemConfig,
) -> Result<ConicProgram> {
    if !(lambda > 0.0) {
        return Err(Error::DegenerateLinearization(format!(
            "penalty weight must be positive, got {lambda}"
        )));
    }
    let layout = DeliveryLayout {
        requested_files: requests.requested_files().to_vec(),
        num_sbs: config.num_sbs,
        num_antennas: config.num_antennas,
    };
    let nf = requests.num_requested();
    let b_n = config.num_sbs;
    let m_n = config.num_antennas;
    let mut prog = ConicProgram::new(layout.num_vars());

    // Objective: edge power epigraphs, fronthaul cost on e, penalty on slacks.
    for (fi, &file) in requests.requested_files().iter().enumerate() {
        let rate = config.rate(file);
        for b in 0..b_n {
            prog.objective[layout.epigraph_index(fi, b)] = config.edge_slope[b];
            prog.objective[layout.e_index(fi, b)] =
                config.fronthaul_efficiency * (1.0 - cache.get(file, b)) * rate;
            prog.objective[layout.slack_index(fi, b)] = lambda;
        }
    }

    // Linear constraints per (file, SBS) pair.
    for fi in 0..nf {
        for b in 0..b_n {
            let e_idx = layout.e_index(fi, b);
            let w_idx = layout.slack_index(fi, b);
            let e0 = local.clustering.get(fi, b);

            // e <= 1
            let mut upper = AffineExpr::term(e_idx, 1.0);
            upper.constant = -1.0;
            prog.inequalities.push(upper);
            // -e <= 0
            prog.inequalities.push(AffineExpr::term(e_idx, -1.0));
            // -w <= 0
            prog.inequalities.push(AffineExpr::term(w_idx, -1.0));
            // (e0)^2 + (1 - 2 e0) e - w <= 0
            let mut slack = AffineExpr::constant(e0 * e0);
            slack.push(e_idx, 1.0 - 2.0 * e0);
            slack.push(w_idx, -1.0);
            prog.inequalities.push(slack);
        }
    }

    // Per-SBS transmit power caps.
    for b in 0..b_n {
        let mut components = Vec::with_capacity(nf * 2 * m_n);
        for fi in 0..nf {
            for m in 0..m_n {
                components.push(layout.v_index(fi, b, m, false));
                components.push(layout.v_index(fi, b, m, true));
            }
        }
        let args = components
            .into_iter()
            .map(|j| AffineExpr::term(j, 1.0))
            .collect();
        prog.cones.push(SecondOrderCone {
            args,
            bound: AffineExpr::constant(config.max_power[b].sqrt()),
        });
    }

    // Coupling cones ||v_fb|| <= e_fb sqrt(P_b) and edge-power epigraphs.
    for fi in 0..nf {
        for b in 0..b_n {
            let comps: Vec<usize> = (0..m_n)
                .flat_map(|m| {
                    [
                        layout.v_index(fi, b, m, false),
                        layout.v_index(fi, b, m, true),
                    ]
                })
                .collect();
            let args = comps.iter().map(|&j| AffineExpr::term(j, 1.0)).collect();
            prog.cones.push(SecondOrderCone {
                args,
                bound: AffineExpr::term(layout.e_index(fi, b), config.max_power[b].sqrt()),
            });
            prog.cones
                .push(quad_epigraph_cone(&comps, layout.epigraph_index(fi, b)));
        }
    }

    // Linearized QoS cone per user of each group.
    for (fi, &file) in requests.requested_files().iter().enumerate() {
        let gamma = config.sinr_target[file];
        if gamma <= 0.0 {
            continue;
        }
        for &k in requests.group(fi) {
            // Normalizing by the user's noise amplitude keeps the QoS cone
            // at O(1) scale; the constraint set is unchanged.
            let scale = 1.0 / config.noise_power[k].sqrt();
            let h: Vec<Complex64> = channels
                .integrated(slot, k)
                .iter()
                .map(|c| c * scale)
                .collect();
            let c0 = crate::physics::inner(&h, local.beamformers.vector(fi));
            if !(c0.norm_sqr() > 0.0) || !c0.is_finite() {
                return Err(Error::DegenerateLinearization(format!(
                    "QoS right side vanishes at the local point for user {k}, file {file}"
                )));
            }
            let index_for = |fj: usize| {
                move |comp: usize, im: bool| -> Option<usize> {
                    let b = comp / m_n;
                    let m = comp % m_n;
                    Some((fj * b_n + b) * 2 * m_n + 2 * m + im as usize)
                }
            };
            let mut interference = Vec::with_capacity(2 * (nf - 1));
            for fj in 0..nf {
                if fj == fi {
                    continue;
                }
                interference.push(inner_re_expr(&h, index_for(fj)));
                interference.push(inner_im_expr(&h, index_for(fj)));
            }
            let sig_re = inner_re_expr(&h, index_for(fi));
            let sig_im = inner_im_expr(&h, index_for(fi));
            prog.cones.push(linearized_qos_cone(
                gamma,
                1.0,
                c0,
                &interference,
                &sig_re,
                &sig_im,
            ));
        }
    }

    prog.layout = Some(layout);
    prog.validate()?;
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_config, BeamformerSet};
    use crate::scenario::{build_popularity, place_nodes, sample_channels, sample_requests, Substreams};
    use approx::assert_relative_eq;

    #[test]
    fn lift_preserves_norm_and_real_inner_products() {
        let z = vec![Complex64::new(1.0, 2.0)];
        let lifted = lift_complex(&z);
        assert_eq!(lifted, vec![1.0, 2.0]);
        let norm: f64 = lifted.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_relative_eq!(norm, 5f64.sqrt(), max_relative = 1e-15);

        assert_eq!(lift_complex(&[Complex64::new(0.0, 0.0)]), vec![0.0, 0.0]);

        // Re{(1-i)^H (1+i)} = 0 equals the lifted dot product.
        let a = vec![Complex64::new(1.0, -1.0)];
        let b = vec![Complex64::new(1.0, 1.0)];
        let dot: f64 = lift_complex(&a)
            .iter()
            .zip(lift_complex(&b))
            .map(|(x, y)| x * y)
            .sum();
        let re = (a[0].conj() * b[0]).re;
        assert_eq!(dot, re);
        assert_eq!(dot, 0.0);
    }

    #[test]
    fn one_dimensional_lp() {
        // min x s.t. x >= 3
        let mut p = ConicProgram::new(1);
        p.objective[0] = 1.0;
        let mut c = AffineExpr::term(0, -1.0);
        c.constant = 3.0;
        p.inequalities.push(c);
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, SolveStatusKind::Optimal);
        assert_relative_eq!(sol.primal[0], 3.0, max_relative = 1e-6);
    }

    #[test]
    fn norm_projection_onto_hyperplane() {
        // min ||x|| s.t. x0 = 1 -> x = (1, 0), objective 1.
        let mut p = ConicProgram::new(3); // x0, x1, t
        p.objective[2] = 1.0;
        let mut eq = AffineExpr::term(0, 1.0);
        eq.constant = -1.0;
        p.equalities.push(eq);
        p.cones.push(SecondOrderCone {
            args: vec![AffineExpr::term(0, 1.0), AffineExpr::term(1, 1.0)],
            bound: AffineExpr::term(2, 1.0),
        });
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, SolveStatusKind::Optimal);
        assert_relative_eq!(sol.objective, 1.0, max_relative = 1e-6);
        assert_relative_eq!(sol.primal[0], 1.0, max_relative = 1e-6);
        assert!(sol.primal[1].abs() < 1e-6);
    }

    #[test]
    fn single_user_beamforming_matched_filter() {
        // min ||v||^2 s.t. Re{h^H v} >= sqrt(gamma sigma^2), h = (1, 0):
        // optimum power is gamma sigma^2 = 4.
        let mut p = ConicProgram::new(3); // v_re, v_im, t
        p.objective[2] = 1.0;
        p.cones.push(quad_epigraph_cone(&[0, 1], 2));
        let mut qos = AffineExpr::term(0, -1.0);
        qos.constant = 2.0; // -v_re + 2 <= 0
        p.inequalities.push(qos);
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, SolveStatusKind::Optimal);
        assert_relative_eq!(sol.objective, 4.0, max_relative = 1e-6);
        // Independent residual check within 10x requested tolerance.
        assert!(sol.residuals.worst() <= 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded_surface_as_statuses() {
        let mut p = ConicProgram::new(1);
        p.objective[0] = 1.0;
        let mut lo = AffineExpr::term(0, -1.0);
        lo.constant = 3.0; // x >= 3
        let mut hi = AffineExpr::term(0, 1.0);
        hi.constant = -1.0; // x <= 1
        p.inequalities.push(lo);
        p.inequalities.push(hi);
        assert_eq!(solve(&p, 1e-8).unwrap().status, SolveStatusKind::Infeasible);

        let mut p = ConicProgram::new(1);
        p.objective[0] = 1.0;
        p.inequalities.push(AffineExpr::term(0, 1.0)); // x <= 0, min x unbounded
        assert_eq!(solve(&p, 1e-8).unwrap().status, SolveStatusKind::Unbounded);
    }

    fn slot_fixture() -> (SystemConfig, ChannelBlock, RequestSlot) {
        let cfg = load_config(
            "num_sbs = 2\nnum_antennas = 2\nnum_users = 3\nnum_files = 4\n\
             fractional_capacity = 0.3\npatterns = 1\nblock_length = 2\nseed = 5",
        )
        .unwrap();
        let streams = Substreams::new(cfg.seed);
        let geo = place_nodes(&cfg, &streams).unwrap();
        let profile = build_popularity(&cfg, &streams);
        let requests = sample_requests(&profile, 0, 0, &streams);
        let channels = sample_channels(&geo, &cfg, 0, &streams);
        (cfg, channels, requests)
    }

    fn local_fixture(cfg: &SystemConfig, requests: &RequestSlot) -> LocalPoint {
        let mut beams = BeamformerSet::zeros(
            requests.requested_files().to_vec(),
            cfg.num_sbs,
            cfg.num_antennas,
        );
        for fi in 0..requests.num_requested() {
            for (i, v) in beams.vector_mut(fi).iter_mut().enumerate() {
                *v = Complex64::new(0.1 + 0.01 * (fi + i) as f64, 0.05 * i as f64);
            }
        }
        let clustering = Clustering::filled(requests.requested_files().to_vec(), cfg.num_sbs, 0.1);
        LocalPoint {
            beamformers: beams,
            clustering,
        }
    }

    #[test]
    fn slack_linearization_coefficients() {
        // At e0 = 0.5 the subproblem must contain 0.25 <= w; at e0 = 0 it is
        // e <= w; at e0 = 1 it is 1 - e <= w.
        let (cfg, channels, requests) = slot_fixture();
        let cache = CacheAllocation::uniform(cfg.num_files, cfg.num_sbs, cfg.fractional_capacity);
        for (e0, want_const, want_e_coeff) in [(0.5, 0.25, 0.0), (0.0, 0.0, 1.0), (1.0, 1.0, -1.0)] {
            let mut local = local_fixture(&cfg, &requests);
            for fi in 0..requests.num_requested() {
                for b in 0..cfg.num_sbs {
                    local.clustering.set(fi, b, e0);
                }
            }
            let prog =
                assemble_subproblem(&cache, &requests, &channels, 0, &local, 1.0, &cfg).unwrap();
            let layout = prog.layout.as_ref().unwrap();
            let e_idx = layout.e_index(0, 0);
            let w_idx = layout.slack_index(0, 0);
            let slack = prog
                .inequalities
                .iter()
                .find(|ineq| {
                    ineq.terms.iter().any(|&(j, c)| j == w_idx && c == -1.0)
                        && (ineq.constant != 0.0 || ineq.terms.iter().any(|&(j, _)| j == e_idx))
                })
                .expect("slack linearization present");
            assert_relative_eq!(slack.constant, want_const, max_relative = 1e-15);
            let e_coeff = slack
                .terms
                .iter()
                .find(|&&(j, _)| j == e_idx)
                .map(|&(_, c)| c)
                .unwrap_or(0.0);
            assert_relative_eq!(e_coeff, want_e_coeff, max_relative = 1e-15);
        }
    }

    #[test]
    fn assembly_is_bit_identical_across_calls() {
        let (cfg, channels, requests) = slot_fixture();
        let cache = CacheAllocation::uniform(cfg.num_files, cfg.num_sbs, cfg.fractional_capacity);
        let local = local_fixture(&cfg, &requests);
        let a = assemble_subproblem(&cache, &requests, &channels, 0, &local, 5.0, &cfg).unwrap();
        let b = assemble_subproblem(&cache, &requests, &channels, 0, &local, 5.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_local_point_reported() {
        let (cfg, channels, requests) = slot_fixture();
        let cache = CacheAllocation::uniform(cfg.num_files, cfg.num_sbs, cfg.fractional_capacity);
        let mut local = local_fixture(&cfg, &requests);
        for fi in 0..requests.num_requested() {
            for v in local.beamformers.vector_mut(fi).iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let err = assemble_subproblem(&cache, &requests, &channels, 0, &local, 1.0, &cfg);
        assert!(matches!(err, Err(Error::DegenerateLinearization(_))));
    }

    #[test]
    fn assembled_subproblem_solves_and_respects_residual_contract() {
        let (cfg, channels, requests) = slot_fixture();
        let cache = CacheAllocation::uniform(cfg.num_files, cfg.num_sbs, cfg.fractional_capacity);
        let local = local_fixture(&cfg, &requests);
        let prog = assemble_subproblem(&cache, &requests, &channels, 0, &local, 1.0, &cfg).unwrap();
        let sol = solve(&prog, cfg.solver_tol).unwrap();
        assert_eq!(sol.status, SolveStatusKind::Optimal);
        // Solutions satisfy every emitted constraint within 10x tolerance.
        assert!(
            sol.residuals.worst() <= 10.0 * cfg.solver_tol,
            "residuals {:?}",
            sol.residuals
        );
    }

    #[test]
    fn dump_round_trips_key_facts() {
        let mut p = ConicProgram::new(2);
        p.objective[0] = 1.5;
        let mut eq = AffineExpr::term(1, 2.0);
        eq.constant = -4.0;
        p.equalities.push(eq);
        p.cones.push(SecondOrderCone {
            args: vec![AffineExpr::term(0, 1.0)],
            bound: AffineExpr::constant(3.0),
        });
        let text = p.dump();
        assert!(text.contains("vars=2"));
        assert!(text.contains("eq: -4 + 2*x1 = 0"));
        assert!(text.contains("soc: ||1*x0|| <= 3"));
    }
}
