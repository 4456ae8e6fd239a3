//! Python bindings: operators, spectra, basic solutions, kernels, the operator T,
//! the second-order operator P and the planar normalizer.

use dclab_core::basic::{self, BasicSolution as CoreBasic};
use dclab_core::cylinder::solve_t;
use dclab_core::expr::{parse_expression, Vars};
use dclab_core::grid::CylinderFunction;
use dclab_core::kernels::{kernel_decomposed, KernelContext, KernelMode, DEFAULT_ETA};
use dclab_core::normalizer::{normalize, NormalizeOptions, PlaneOperator};
use dclab_core::operator::OperatorSpec;
use dclab_core::second_order::{build_p, hypothesis_h_check, HVerdict};
use dclab_core::spectrum::{find_spectral_values, Branch};
use dclab_core::{DcError, PeriodicFunction, C64};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dclab, InvalidInputError, PyValueError);
create_exception!(dclab, NumericError, PyArithmeticError);
create_exception!(dclab, InvariantError, PyRuntimeError);

fn py_err(e: DcError) -> PyErr {
    match e {
        DcError::InvalidInput(m) => InvalidInputError::new_err(m),
        DcError::Numeric(m) => NumericError::new_err(m),
        DcError::Invariant(m) => InvariantError::new_err(m),
    }
}

fn branch(s: &str) -> PyResult<Branch> {
    match s {
        "+" | "plus" => Ok(Branch::Plus),
        "-" | "minus" => Ok(Branch::Minus),
        _ => Err(InvalidInputError::new_err(format!("branch must be '+' or '-', got {s:?}"))),
    }
}

/// A periodic coefficient from an expression in `t` or a list of `(k, coefficient)` modes.
fn periodic(py_src: &Bound<'_, PyAny>, m: usize) -> PyResult<PeriodicFunction> {
    if let Ok(src) = py_src.extract::<String>() {
        let e = parse_expression(&src).map_err(py_err)?;
        return PeriodicFunction::from_fn(m, |t| e.eval(&Vars::cylinder(1.0, t))).map_err(py_err);
    }
    let modes: Vec<(i64, Complex64)> = py_src.extract()?;
    let band = modes.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
    PeriodicFunction::from_modes(m.max(2 * band + 1) | 1, &modes).map_err(py_err)
}

/// `ℒ_ε u = λ_ε u_t − ir u_r + iλ_ε ν u − c ū` with `λ_ε = a + ibε`.
#[pyclass(module = "dclab", name = "Operator", frozen)]
struct Operator {
    spec: OperatorSpec,
}

#[pymethods]
impl Operator {
    #[new]
    #[pyo3(signature = (a, b=0.0, nu=0.0, eps=1.0, c=None, m=129))]
    fn new(a: f64, b: f64, nu: f64, eps: f64, c: Option<&Bound<'_, PyAny>>, m: usize) -> PyResult<Self> {
        let c = match c {
            Some(src) => periodic(src, m | 1)?,
            None => PeriodicFunction::zero(3).map_err(py_err)?,
        };
        Ok(Self { spec: OperatorSpec::new(a, b, nu, eps, c).map_err(py_err)? })
    }

    #[getter]
    fn lambda_(&self) -> C64 {
        self.spec.lambda()
    }

    fn c(&self, t: f64) -> C64 {
        self.spec.c_at(t)
    }

    /// Spectral values for `j_min ≤ j ≤ j_max` as dicts.
    #[pyo3(signature = (j_min, j_max, tol=1e-8))]
    fn spectrum<'py>(&self, py: Python<'py>, j_min: i64, j_max: i64, tol: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let window = find_spectral_values(&self.spec, j_min, j_max, tol).map_err(py_err)?;
        if let Some(g) = window.gaps.first() {
            return Err(NumericError::new_err(format!("spectral window is incomplete at j = {} ({})", g.j, g.reason)));
        }
        window
            .values
            .iter()
            .map(|v| {
                let d = PyDict::new(py);
                d.set_item("j", v.j)?;
                d.set_item("branch", v.branch.sign())?;
                d.set_item("sigma", v.sigma)?;
                d.set_item("multiplicity", v.multiplicity)?;
                d.set_item("residual", v.residual)?;
                d.set_item("real", v.is_real)?;
                Ok(d)
            })
            .collect()
    }

    /// The basic solution at index `j` on `branch` (`'+'` or `'-'`).
    fn basic_solution(&self, j: i64, branch_sign: &str) -> PyResult<BasicSolution> {
        let b = branch(branch_sign)?;
        let window = find_spectral_values(&self.spec, j, j, 1e-8).map_err(py_err)?;
        let sv = window
            .get(j, b)
            .ok_or_else(|| NumericError::new_err(format!("no spectral value at j = {j}, branch {branch_sign}")))?;
        let w = basic::basic_solution(&self.spec, sv, b).map_err(py_err)?;
        Ok(BasicSolution { spec: self.spec.clone(), w })
    }

    /// `ℒu` for samples `u[i][k]` at `radii[i]` and `t_k = 2πk/m`.
    fn apply(&self, radii: Vec<f64>, values: Vec<Vec<C64>>) -> PyResult<Vec<Vec<C64>>> {
        let u = grid(radii, values)?;
        Ok(rows(&self.spec.apply(&u)))
    }
}

fn grid(radii: Vec<f64>, values: Vec<Vec<C64>>) -> PyResult<CylinderFunction> {
    let m = values.first().map_or(0, Vec::len);
    if values.len() != radii.len() || values.iter().any(|r| r.len() != m) || m == 0 {
        return Err(InvalidInputError::new_err("values must be a len(radii) × m array"));
    }
    let f = CylinderFunction { radii, m, values: values.concat(), origin: None };
    f.validate().map_err(py_err)?;
    Ok(f)
}

fn rows(f: &CylinderFunction) -> Vec<Vec<C64>> {
    (0..f.p()).map(|i| f.row(i).to_vec()).collect()
}

/// `w = r^σφ(t) + conj(r^σψ(t))`.
#[pyclass(module = "dclab", name = "BasicSolution", frozen)]
struct BasicSolution {
    spec: OperatorSpec,
    w: CoreBasic,
}

#[pymethods]
impl BasicSolution {
    #[getter]
    fn sigma(&self) -> C64 {
        self.w.sigma
    }

    /// `(σ or σ̄, winding number)`.
    fn character(&self) -> PyResult<(C64, i64)> {
        basic::character(&self.w).map_err(py_err)
    }

    fn adjoint_character(&self) -> PyResult<(C64, i64)> {
        let adj = basic::adjoint_basic_solution(&self.spec, &self.w).map_err(py_err)?;
        basic::character(&adj).map_err(py_err)
    }

    fn eval(&self, r: f64, t: f64) -> C64 {
        self.w.eval(r, t)
    }

    /// `(φ(t), ψ(t))`.
    fn components(&self, t: f64) -> (C64, C64) {
        self.w.components_at(t)
    }

    /// Residual of the periodic system at the solution.
    fn residual(&self) -> f64 {
        basic::system_residual(&self.spec, &self.w)
    }
}

/// Kernels and the operator T of one operator, truncated at `|j| ≤ order`.
#[pyclass(module = "dclab", name = "Kernels", frozen)]
struct Kernels {
    ctx: KernelContext,
}

#[pymethods]
impl Kernels {
    #[new]
    #[pyo3(signature = (op, order=64))]
    fn new(op: &Operator, order: i64) -> PyResult<Self> {
        Ok(Self { ctx: KernelContext::new(&op.spec, order, DEFAULT_ETA).map_err(py_err)? })
    }

    /// `(Ω₁, Ω₂)` at `(r, t)` with source point `(ρ, θ)`.
    fn omega(&self, r: f64, t: f64, rho: f64, theta: f64) -> PyResult<(C64, C64)> {
        let v = kernel_decomposed(&self.ctx, r, t, rho, theta).map_err(py_err)?;
        Ok((v.omega1, v.omega2))
    }

    /// `TF` on the grid of `F`; returns `(TF, ‖ℒTF − F‖∞ at interior nodes)`.
    #[pyo3(signature = (radii, values, hat=false))]
    fn solve_t(&self, radii: Vec<f64>, values: Vec<Vec<C64>>, hat: bool) -> PyResult<(Vec<Vec<C64>>, f64)> {
        let f = grid(radii, values)?;
        let mode = if hat { KernelMode::Hat } else { KernelMode::Plain };
        let rep = solve_t(&self.ctx, &f, mode, f64::INFINITY).map_err(py_err)?;
        Ok((rows(&rep.solution), rep.residual))
    }
}

/// `P` from `λ` and `β`: `{"k", "verdict", "reason", "witness"}` with hypothesis 𝓗 checked on `|j| ≤ order`.
#[pyfunction]
#[pyo3(signature = (lam, beta, order=8, m=129))]
fn second_order<'py>(py: Python<'py>, lam: C64, beta: &Bound<'py, PyAny>, order: i64, m: usize) -> PyResult<Bound<'py, PyDict>> {
    let beta = periodic(beta, m | 1)?;
    let p = build_p(lam, &beta).map_err(py_err)?;
    let window = find_spectral_values(&p.operator, -order, order, 1e-8).map_err(py_err)?;
    let h = hypothesis_h_check(&p, &window);
    let d = PyDict::new(py);
    d.set_item("k", p.k)?;
    d.set_item(
        "verdict",
        match h.verdict {
            HVerdict::Satisfied => "satisfied",
            HVerdict::Violated => "violated",
            HVerdict::Indeterminate => "indeterminate",
        },
    )?;
    d.set_item("reason", h.reason)?;
    d.set_item("witness", h.witness.map(|w| (w.condition, w.sigma, w.j)))?;
    Ok(d)
}

/// `μ`, `λ = 1/μ` and the ellipticity bounds of `a₁₁∂xx + 2a₁₂∂xy + a₂₂∂yy + a₁∂x + a₂∂y`.
#[pyfunction]
#[pyo3(signature = (a11, a12="0", a22=None, a1="0", a2="0", rho0=0.1, terms=4))]
fn normalize_operator<'py>(
    py: Python<'py>,
    a11: &str,
    a12: &str,
    a22: Option<&str>,
    a1: &str,
    a2: &str,
    rho0: f64,
    terms: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let op = PlaneOperator::from_expressions(a11, a12, a22.unwrap_or(a11), a1, a2).map_err(py_err)?;
    let rep = normalize(&op, NormalizeOptions { rho0, terms, ..NormalizeOptions::default() }).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mu", rep.mu)?;
    d.set_item("lambda", rep.lambda)?;
    d.set_item("c1", rep.c1_est)?;
    d.set_item("c2", rep.c2_est)?;
    d.set_item("error_estimate", rep.estimate.error_estimate)?;
    Ok(d)
}

/// Evaluates an expression in `x, y, t, rho, theta, r`; unset variables are 0.
#[pyfunction]
#[pyo3(signature = (src, x=0.0, y=0.0, t=0.0))]
fn eval_expression(src: &str, x: f64, y: f64, t: f64) -> PyResult<C64> {
    let e = parse_expression(src).map_err(py_err)?;
    let rho = x.hypot(y);
    Ok(e.eval(&Vars { x, y, t, rho, theta: y.atan2(x), r: rho }))
}

#[pymodule]
fn dclab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Operator>()?;
    m.add_class::<BasicSolution>()?;
    m.add_class::<Kernels>()?;
    m.add_function(wrap_pyfunction!(second_order, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_operator, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expression, m)?)?;
    let py = m.py();
    m.add("InvalidInputError", py.get_type::<InvalidInputError>())?;
    m.add("NumericError", py.get_type::<NumericError>())?;
    m.add("InvariantError", py.get_type::<InvariantError>())?;
    Ok(())
}
