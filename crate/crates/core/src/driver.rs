//! End-to-end DIBM solves and the h-, ε- and locally refined convergence
//! studies.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;

use crate::assembly::{self, ScalarField};
use crate::cases::{AnalyticCase, CircleInterfaceCase, OuterCondition};
use crate::dual::{build_dual, DualMesh};
use crate::error_analysis::{self, eoc, ErrorRegion, ErrorReport};
use crate::linalg::{self, SolveReport, SparseMatrix};
use crate::mesh::{generate_uniform, refine_near_interface, TriMesh};
use crate::region::{classify, RegionMap};
use crate::{vtk, Error, Result};

/// Right-hand side used with the box stiffness matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LoadKind {
    /// `(f, χ_{b_v})`: the box method.
    #[default]
    Box,
    /// `(f, φ_v)`: the P1 Galerkin method.
    Fem,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    /// Defaults to `20·√n`.
    pub maxit: Option<usize>,
    pub region: ErrorRegion,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: linalg::DEFAULT_TOLERANCE,
            maxit: None,
            region: ErrorRegion::InsideD,
        }
    }
}

/// Everything about a discretization that does not depend on `ε`.
pub struct Discretization<'a> {
    pub mesh: &'a TriMesh,
    pub dual: DualMesh,
    pub stiffness: SparseMatrix,
    pub load: Vec<f64>,
    pub g_tilde_h: ScalarField,
    pub outer: Vec<f64>,
}

impl<'a> Discretization<'a> {
    pub fn new(mesh: &'a TriMesh, case: &dyn AnalyticCase) -> Result<Self> {
        Self::with_load(mesh, case, LoadKind::Box)
    }

    pub fn with_load(mesh: &'a TriMesh, case: &dyn AnalyticCase, kind: LoadKind) -> Result<Self> {
        let dual = build_dual(mesh);
        let stiffness = assembly::assemble_stiffness_box(mesh, &dual)?;
        let f = |p| case.source_f(p);
        let load = match kind {
            LoadKind::Box => assembly::assemble_load_box(mesh, &dual, f),
            LoadKind::Fem => assembly::assemble_load_fem(mesh, f),
        };
        let g_tilde_h = assembly::interpolate(|p| case.extension_g_tilde(p), mesh);
        let outer = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, &p)| if mesh.is_boundary_vertex(v) { case.outer_value(p) } else { f64::NAN })
            .collect();
        Ok(Discretization {
            mesh,
            dual,
            stiffness,
            load,
            g_tilde_h,
            outer,
        })
    }

    /// Classifies for `eps`, eliminates the constrained vertices, solves, and
    /// measures the error. Constrained vertices keep their prescribed values,
    /// so the tube carries `g̃_h`.
    pub fn solve(&self, case: &dyn AnalyticCase, eps: f64, opts: SolveOptions) -> Result<DibmSolution> {
        let region_map = classify(self.mesh, case.domain(), eps);
        let system = assembly::apply_constraints(
            &self.stiffness,
            &self.load,
            &region_map,
            self.g_tilde_h.values(),
            &self.outer,
        )?;
        let maxit = opts
            .maxit
            .unwrap_or_else(|| linalg::default_max_iterations(system.matrix.dim()));
        let (x, solve) = system.solve(opts.tol, maxit)?;
        if !solve.converged {
            return Err(Error::NotConverged {
                iterations: solve.iterations,
                residual: solve.relative_residual,
            });
        }
        let field = ScalarField::new(self.mesh, x)?;
        let report = error_analysis::compute_errors(self.mesh, &field, case, opts.region, &region_map)?;
        Ok(DibmSolution {
            field,
            region_map,
            report,
            solve,
        })
    }
}

#[derive(Clone, Debug)]
pub struct DibmSolution {
    pub field: ScalarField,
    pub region_map: RegionMap,
    pub report: ErrorReport,
    pub solve: SolveReport,
}

/// Full pipeline on a given mesh.
pub fn solve_dibm(mesh: &TriMesh, case: &dyn AnalyticCase, eps: f64, opts: SolveOptions) -> Result<DibmSolution> {
    Discretization::new(mesh, case)?.solve(case, eps, opts)
}

/// Full pipeline on the uniform `n × n` mesh.
pub fn solve_dibm_uniform(n: usize, case: &dyn AnalyticCase, eps: f64, opts: SolveOptions) -> Result<DibmSolution> {
    solve_dibm(&generate_uniform(n)?, case, eps, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    H,
    Eps,
    Refined,
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub kind: StudyKind,
    /// Grid resolutions for the h- and refined studies (increasing).
    pub n_list: Vec<usize>,
    /// Interface widths for the ε-study (decreasing).
    pub eps_list: Vec<f64>,
    /// Fixed ε of the h- and refined studies.
    pub eps: f64,
    /// Fixed resolution of the ε-study.
    pub n: usize,
    /// Refinement band half-width; `None` means `ε + (2/n)²`.
    pub band: Option<f64>,
    pub tol: f64,
    pub region: ErrorRegion,
    pub outer: OuterCondition,
    /// Rates in the ε-study are only reported between widths `>= eoc_min_eps`.
    pub eoc_min_eps: f64,
    pub vtk_out: Option<PathBuf>,
    pub single_thread: bool,
}

impl StudyConfig {
    pub fn h_study() -> Self {
        StudyConfig {
            kind: StudyKind::H,
            n_list: vec![36, 72, 144, 288],
            eps_list: Vec::new(),
            eps: 2f64.powi(-20),
            n: 288,
            band: None,
            tol: linalg::DEFAULT_TOLERANCE,
            region: ErrorRegion::InsideD,
            outer: OuterCondition::ExactTrace,
            eoc_min_eps: 2f64.powi(-6),
            vtk_out: None,
            single_thread: false,
        }
    }

    pub fn eps_study() -> Self {
        StudyConfig {
            kind: StudyKind::Eps,
            eps_list: (1..=20).map(|i| 2f64.powi(-i)).collect(),
            ..Self::h_study()
        }
    }

    pub fn refined_study() -> Self {
        StudyConfig {
            kind: StudyKind::Refined,
            n_list: vec![36, 72, 144],
            ..Self::h_study()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        match self.kind {
            StudyKind::H | StudyKind::Refined => {
                if self.n_list.is_empty() {
                    return bad("n list is empty");
                }
                if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("n list must be strictly increasing");
                }
            }
            StudyKind::Eps => {
                if self.eps_list.is_empty() {
                    return bad("eps list is empty");
                }
                if self.eps_list.windows(2).any(|w| w[1] >= w[0]) || self.eps_list.iter().any(|e| !(*e >= 0.0)) {
                    return bad("eps list must be non-negative and strictly decreasing");
                }
            }
        }
        if !(self.tol > 0.0) {
            return bad("solver tolerance must be positive");
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            maxit: None,
            region: self.region,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    /// `h = 2/n` for the h- and refined studies, `ε` for the ε-study.
    pub param: f64,
    pub l2: f64,
    pub eoc_l2: Option<f64>,
    pub h1: f64,
    pub eoc_h1: Option<f64>,
    pub delta: f64,
    pub kappa: f64,
    pub dofs: usize,
    pub iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyTable {
    pub kind: StudyKind,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn header(&self) -> [&'static str; 9] {
        let p = if self.kind == StudyKind::Eps { "eps" } else { "h" };
        [p, "l2", "eoc_l2", "h1", "eoc_h1", "delta", "kappa", "dofs", "iters"]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        let sci = |v: f64| format!("{v:.11e}");
        let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                sci(r.param),
                sci(r.l2),
                opt(r.eoc_l2),
                sci(r.h1),
                opt(r.eoc_h1),
                sci(r.delta),
                sci(r.kappa),
                r.dofs.to_string(),
                r.iters.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Runs `f` over `items`, in parallel unless `single_thread`; results keep input order.
fn map_rows<T, R, F>(items: &[T], single_thread: bool, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync + Send,
{
    if single_thread {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    } else {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

fn fill_eoc(rows: &mut [StudyRow], eligible: impl Fn(&StudyRow) -> bool) -> Result<()> {
    for k in 1..rows.len() {
        if !(eligible(&rows[k - 1]) && eligible(&rows[k])) {
            continue;
        }
        let (a, b) = (&rows[k - 1], &rows[k]);
        let l2 = eoc(&[(a.param, a.l2), (b.param, b.l2)])?[0];
        let h1 = eoc(&[(a.param, a.h1), (b.param, b.h1)])?[0];
        rows[k].eoc_l2 = Some(l2);
        rows[k].eoc_h1 = Some(h1);
    }
    Ok(())
}

fn row_from(param: f64, sol: &DibmSolution) -> StudyRow {
    StudyRow {
        param,
        l2: sol.report.l2,
        eoc_l2: None,
        h1: sol.report.h1_semi,
        eoc_h1: None,
        delta: sol.region_map.delta,
        kappa: sol.region_map.kappa,
        dofs: sol.region_map.n_free_vertices(),
        iters: sol.solve.iterations,
    }
}

fn dump_vtk(config: &StudyConfig, tag: &str, mesh: &TriMesh, case: &dyn AnalyticCase, sol: &DibmSolution) -> Result<()> {
    let Some(dir) = &config.vtk_out else {
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    let exact: Vec<f64> = mesh.vertices().iter().map(|&p| case.exact_u(p)).collect();
    let uh = sol.field.values();
    let err: Vec<f64> = uh.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let vtag: Vec<f64> = sol.region_map.vertex_tag.iter().map(|t| t.code() as f64).collect();
    let ttag: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| if sol.region_map.is_tube(t) { 1.0 } else { 0.0 })
        .collect();
    let file = BufWriter::new(File::create(dir.join(format!("{tag}.vtk")))?);
    vtk::write_mesh(
        file,
        tag,
        mesh,
        &[("u_h", uh), ("u_exact", &exact), ("error", &err), ("vertex_tag", &vtag)],
        &[("tube", &ttag)],
    )
}

pub fn run_study(config: &StudyConfig) -> Result<StudyTable> {
    match config.kind {
        StudyKind::H => run_h_study(config),
        StudyKind::Eps => run_eps_study(config),
        StudyKind::Refined => run_refined_study(config),
    }
}

/// DIBM on uniform meshes `n ∈ n_list` at fixed `ε`.
pub fn run_h_study(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let case = CircleInterfaceCase::new(config.outer);
    let mut rows = map_rows(&config.n_list, config.single_thread, |i, &n| {
        let mesh = generate_uniform(n)?;
        let sol = solve_dibm(&mesh, &case, config.eps, config.solve_options())?;
        dump_vtk(config, &format!("h_study_{i:02}_n{n}"), &mesh, &case, &sol)?;
        Ok(row_from(2.0 / n as f64, &sol))
    })?;
    fill_eoc(&mut rows, |_| true)?;
    Ok(StudyTable {
        kind: StudyKind::H,
        rows,
    })
}

/// DIBM on the fixed uniform `n` mesh for every `ε ∈ eps_list`.
pub fn run_eps_study(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let case = CircleInterfaceCase::new(config.outer);
    let mesh = generate_uniform(config.n)?;
    let disc = Discretization::new(&mesh, &case)?;
    let mut rows = map_rows(&config.eps_list, config.single_thread, |i, &eps| {
        let sol = disc.solve(&case, eps, config.solve_options())?;
        dump_vtk(config, &format!("eps_study_{i:02}"), &mesh, &case, &sol)?;
        Ok(row_from(eps, &sol))
    })?;
    let min_eps = config.eoc_min_eps;
    fill_eoc(&mut rows, |r| r.param >= min_eps)?;
    Ok(StudyTable {
        kind: StudyKind::Eps,
        rows,
    })
}

/// The uniform `n` mesh refined around `Γ` until triangles within the band
/// have diameter at most `(2/n)²`.
pub fn refined_mesh(n: usize, dom: &crate::geometry::ImplicitDomain, eps: f64, band: Option<f64>) -> Result<TriMesh> {
    let base = generate_uniform(n)?;
    let target = (2.0 / n as f64).powi(2);
    let band = band.unwrap_or(eps + target);
    refine_near_interface(&base, dom, band, target)
}

/// DIBM on locally refined meshes so that `δ ≃ κ ≃ h²` near the interface.
pub fn run_refined_study(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let case = CircleInterfaceCase::new(config.outer);
    let mut rows = map_rows(&config.n_list, config.single_thread, |i, &n| {
        let mesh = refined_mesh(n, case.domain(), config.eps, config.band)?;
        let sol = solve_dibm(&mesh, &case, config.eps, config.solve_options())?;
        dump_vtk(config, &format!("refined_study_{i:02}_n{n}"), &mesh, &case, &sol)?;
        Ok(row_from(2.0 / n as f64, &sol))
    })?;
    fill_eoc(&mut rows, |_| true)?;
    Ok(StudyTable {
        kind: StudyKind::Refined,
        rows,
    })
}
