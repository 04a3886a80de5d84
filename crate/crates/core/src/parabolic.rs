//! Finite differences for `y_t = y_xx + h(p·t, x) y + g(y)` on `[0, L]`.
//!
//! Space is second-order centered with ghost nodes for the flux conditions.
//! Time is Lie splitting: an explicit two-stage reaction step (a convex
//! combination of Euler steps, so monotone under the step bound) followed by
//! an implicit diffusion solve.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficient::Affine;
use crate::hull::HullPoint;
use crate::output::{csv, fmt_num};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParabolicError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("nonlinearity fails {condition}: {detail}")]
    InvalidNonlinearity { condition: &'static str, detail: String },
    #[error("step {dt} exceeds the monotonicity bound {bound} at t = {at}")]
    StepTooLarge { dt: f64, bound: f64, at: f64 },
    #[error("cocycle extraction needs a spatially homogeneous profile")]
    HeterogeneousProfile,
    #[error("field has {got} values, grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields, from = "BoundaryRepr")]
pub enum BoundaryCondition {
    Neumann,
    /// `∂y/∂n + alpha_bar·y = 0`.
    Robin { alpha_bar: f64 },
    Dirichlet,
}

// Empty struct variants so `deny_unknown_fields` also covers the unit kinds.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum BoundaryRepr {
    Neumann {},
    Robin { alpha_bar: f64 },
    Dirichlet {},
}

impl From<BoundaryRepr> for BoundaryCondition {
    fn from(r: BoundaryRepr) -> Self {
        match r {
            BoundaryRepr::Neumann {} => BoundaryCondition::Neumann,
            BoundaryRepr::Robin { alpha_bar } => BoundaryCondition::Robin { alpha_bar },
            BoundaryRepr::Dirichlet {} => BoundaryCondition::Dirichlet,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Neumann => f.write_str("neumann"),
            BoundaryCondition::Robin { alpha_bar } => write!(f, "robin:{alpha_bar}"),
            BoundaryCondition::Dirichlet => f.write_str("dirichlet"),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = ParabolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "neumann" => Ok(BoundaryCondition::Neumann),
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "robin" => Ok(BoundaryCondition::Robin { alpha_bar: 1.0 }),
            _ => match lower.strip_prefix("robin:").map(str::parse::<f64>) {
                Some(Ok(a)) => Ok(BoundaryCondition::Robin { alpha_bar: a }),
                _ => Err(ParabolicError::InvalidGrid(format!(
                    "unknown boundary condition '{s}' (neumann, dirichlet, robin:<alpha>)"
                ))),
            },
        }
    }
}

/// A tridiagonal matrix; `sub[0]` and `sup[m-1]` are unused.
#[derive(Debug, Clone)]
struct Tridiag {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl Tridiag {
    fn len(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                }
                if i + 1 < m {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `scale·self + shift·I`.
    fn affine(&self, scale: f64, shift: f64) -> Tridiag {
        Tridiag {
            sub: self.sub.iter().map(|v| scale * v).collect(),
            diag: self.diag.iter().map(|v| scale * v + shift).collect(),
            sup: self.sup.iter().map(|v| scale * v).collect(),
        }
    }

    /// Number of eigenvalues below `x`, for matrices similar to a symmetric
    /// one (`sub[i+1]·sup[i] ≥ 0`).
    fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i > 0 { self.sub[i] * self.sup[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (1.0 + x.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }
}

/// LU factors of a tridiagonal matrix, reused across steps.
#[derive(Debug, Clone)]
struct Thomas {
    sub: Vec<f64>,
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Thomas {
    fn new(m: &Tridiag) -> Thomas {
        let n = m.len();
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = m.diag[i] - if i > 0 { m.sub[i] * c_prime[i - 1] } else { 0.0 };
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                c_prime[i] = m.sup[i] * inv_pivot[i];
            }
        }
        Thomas {
            sub: m.sub.clone(),
            c_prime,
            inv_pivot,
        }
    }

    fn solve_in_place(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - self.sub[i] * d[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.c_prime[i] * d[i + 1];
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub length: f64,
    pub n_nodes: usize,
    pub bc: BoundaryCondition,
    pub dx: f64,
    laplacian: Tridiag,
    gamma0: f64,
    e0: FieldState,
}

impl Grid {
    pub fn new(length: f64, n_nodes: usize, bc: BoundaryCondition) -> Result<Grid, ParabolicError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ParabolicError::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n_nodes < 16 {
            return Err(ParabolicError::InvalidGrid(format!("need at least 16 nodes, got {n_nodes}")));
        }
        if let BoundaryCondition::Robin { alpha_bar } = bc {
            if !(alpha_bar >= 0.0 && alpha_bar.is_finite()) {
                return Err(ParabolicError::InvalidGrid(format!(
                    "robin coefficient must be nonnegative, got {alpha_bar}"
                )));
            }
        }
        let dx = length / (n_nodes - 1) as f64;
        let laplacian = minus_laplacian(n_nodes, dx, bc);
        let mut grid = Grid {
            length,
            n_nodes,
            bc,
            dx,
            laplacian,
            gamma0: 0.0,
            e0: FieldState {
                values: vec![1.0; n_nodes],
                bc,
            },
        };
        if bc != BoundaryCondition::Neumann {
            let (g, e) = grid.compute_eigenpair();
            grid.gamma0 = g;
            grid.e0 = e;
        }
        Ok(grid)
    }

    /// The unit interval.
    pub fn unit(n_nodes: usize, bc: BoundaryCondition) -> Result<Grid, ParabolicError> {
        Grid::new(1.0, n_nodes, bc)
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.length
        } else {
            i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.x(i)).collect()
    }

    /// Nodes carrying unknowns: all of them, or the interior under Dirichlet.
    fn unknowns(&self) -> std::ops::Range<usize> {
        match self.bc {
            BoundaryCondition::Dirichlet => 1..self.n_nodes - 1,
            _ => 0..self.n_nodes,
        }
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn e0(&self) -> &FieldState {
        &self.e0
    }

    /// Discrete `-Δ` applied to a field (zero at Dirichlet boundary nodes).
    pub fn apply_minus_laplacian(&self, z: &FieldState) -> Vec<f64> {
        let r = self.unknowns();
        let inner = self.laplacian.apply(&z.values[r.clone()]);
        let mut out = vec![0.0; self.n_nodes];
        out[r].copy_from_slice(&inner);
        out
    }

    fn compute_eigenpair(&self) -> (f64, FieldState) {
        let a = &self.laplacian;
        let m = a.len();
        // Gershgorin bounds
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let off = if i > 0 { a.sub[i].abs() } else { 0.0 } + if i + 1 < m { a.sup[i].abs() } else { 0.0 };
            lo = lo.min(a.diag[i] - off);
            hi = hi.max(a.diag[i] + off);
        }
        lo = lo.min(0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if a.sturm_count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let gamma = 0.5 * (lo + hi);
        // inverse iteration just below the eigenvalue
        let shift = gamma - 1e-9 * (1.0 + gamma.abs());
        let fac = Thomas::new(&a.affine(1.0, -shift));
        let mut v = vec![1.0; m];
        for _ in 0..6 {
            fac.solve_in_place(&mut v);
            let s = v.iter().cloned().fold(0.0, |acc: f64, x| acc.max(x.abs()));
            v.iter_mut().for_each(|x| *x /= s);
        }
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let mut values = vec![0.0; self.n_nodes];
        values[self.unknowns()].copy_from_slice(&v);
        (gamma, FieldState { values, bc: self.bc })
    }
}

fn minus_laplacian(n: usize, dx: f64, bc: BoundaryCondition) -> Tridiag {
    let k = 1.0 / (dx * dx);
    let m = if bc == BoundaryCondition::Dirichlet { n - 2 } else { n };
    let mut t = Tridiag {
        sub: vec![-k; m],
        diag: vec![2.0 * k; m],
        sup: vec![-k; m],
    };
    match bc {
        BoundaryCondition::Dirichlet => {}
        BoundaryCondition::Neumann | BoundaryCondition::Robin { .. } => {
            let alpha = match bc {
                BoundaryCondition::Robin { alpha_bar } => alpha_bar,
                _ => 0.0,
            };
            // ghost node y_{-1} = y_1 - 2 dx alpha y_0, and symmetrically
            t.diag[0] = (2.0 + 2.0 * dx * alpha) * k;
            t.sup[0] = -2.0 * k;
            t.diag[m - 1] = (2.0 + 2.0 * dx * alpha) * k;
            t.sub[m - 1] = -2.0 * k;
        }
    }
    t
}

/// Smallest eigenvalue of the discrete `-Δ` and its positive eigenvector with
/// sup-norm 1.
pub fn principal_eigenpair(grid: &Grid) -> (f64, FieldState) {
    (grid.gamma0, grid.e0.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub bc: BoundaryCondition,
}

impl FieldState {
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> FieldState {
        let mut values: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        if grid.bc == BoundaryCondition::Dirichlet {
            values[0] = 0.0;
            values[grid.n_nodes - 1] = 0.0;
        }
        FieldState { values, bc: grid.bc }
    }

    pub fn constant(grid: &Grid, c: f64) -> FieldState {
        FieldState::from_fn(grid, |_| c)
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<FieldState, ParabolicError> {
        if values.len() != grid.n_nodes {
            return Err(ParabolicError::ShapeMismatch {
                expected: grid.n_nodes,
                got: values.len(),
            });
        }
        let n = values.len();
        if grid.bc == BoundaryCondition::Dirichlet && (values[0] != 0.0 || values[n - 1] != 0.0) {
            return Err(ParabolicError::InvalidArgument(
                "dirichlet fields vanish at the boundary".into(),
            ));
        }
        Ok(FieldState { values, bc: grid.bc })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Minimum over interior nodes.
    pub fn min_interior(&self) -> f64 {
        let n = self.values.len();
        self.values[1..n - 1].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, s: f64) -> FieldState {
        FieldState {
            values: self.values.iter().map(|v| s * v).collect(),
            bc: self.bc,
        }
    }

    pub fn add(&self, other: &FieldState) -> FieldState {
        FieldState {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            bc: self.bc,
        }
    }

    /// `sup |self - other|`.
    pub fn distance(&self, other: &FieldState) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn to_csv(&self, grid: &Grid) -> String {
        csv(
            "x,value",
            grid.nodes().into_iter().zip(&self.values).map(|(x, v)| [x, *v]),
        )
    }
}

/// Snapshots as `t,x,value`, time outermost.
pub fn archive_csv(grid: &Grid, samples: &[(f64, FieldState)]) -> String {
    let mut out = String::from("t,x,value\n");
    let xs = grid.nodes();
    for (t, z) in samples {
        for (x, v) in xs.iter().zip(&z.values) {
            out.push_str(&format!("{},{},{}\n", fmt_num(*t), fmt_num(*x), fmt_num(*v)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    /// `g(y) = -rho |y|^{theta-1} y`.
    PurePower { rho: f64, theta: f64 },
    /// `g(y) = -rho sign(y) (|y| - r0)_+^theta`.
    Deadzone { rho: f64, theta: f64, r0: f64 },
}

impl NonlinearitySpec {
    pub fn pure_power(rho: f64, theta: f64) -> Result<Self, ParabolicError> {
        let g = NonlinearitySpec::PurePower { rho, theta };
        g.validate()?;
        Ok(g)
    }

    pub fn deadzone(rho: f64, theta: f64, r0: f64) -> Result<Self, ParabolicError> {
        let g = NonlinearitySpec::Deadzone { rho, theta, r0 };
        g.validate()?;
        Ok(g)
    }

    pub fn rho(&self) -> f64 {
        match *self {
            NonlinearitySpec::PurePower { rho, .. } | NonlinearitySpec::Deadzone { rho, .. } => rho,
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            NonlinearitySpec::PurePower { theta, .. } | NonlinearitySpec::Deadzone { theta, .. } => theta,
        }
    }

    /// Half-width of the zero set of `g`.
    pub fn r0(&self) -> f64 {
        match *self {
            NonlinearitySpec::PurePower { .. } => 0.0,
            NonlinearitySpec::Deadzone { r0, .. } => r0,
        }
    }

    pub fn is_deadzone(&self) -> bool {
        matches!(self, NonlinearitySpec::Deadzone { .. })
    }

    pub fn eval(&self, y: f64) -> f64 {
        let excess = (y.abs() - self.r0()).max(0.0);
        if excess == 0.0 {
            return 0.0;
        }
        -self.rho() * y.signum() * excess.powf(self.theta())
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let excess = (y.abs() - self.r0()).max(0.0);
        if excess == 0.0 {
            return 0.0;
        }
        -self.rho() * self.theta() * excess.powf(self.theta() - 1.0)
    }

    /// Radius of an absorbing ball for `sup |h| ≤ sup_h`.
    pub fn absorbing_radius(&self, sup_h: f64) -> f64 {
        self.r0() + (2.0 * sup_h / self.rho()).powf(1.0 / (self.theta() - 1.0)) + 1.0
    }

    /// Parameter ranges, then the structural conditions on a sample grid.
    pub fn validate(&self) -> Result<(), ParabolicError> {
        let bad = |condition, detail: String| Err(ParabolicError::InvalidNonlinearity { condition, detail });
        let (rho, theta, r0) = (self.rho(), self.theta(), self.r0());
        if !(rho > 0.0 && rho.is_finite()) {
            return bad("parameters", format!("rho must be positive, got {rho}"));
        }
        if !(theta > 1.0 && theta.is_finite()) {
            return bad("parameters", format!("theta must exceed 1, got {theta}"));
        }
        if self.is_deadzone() && !(r0 > 0.0 && r0.is_finite()) {
            return bad("parameters", format!("deadzone r0 must be positive, got {r0}"));
        }
        let mut ys: Vec<f64> = (-12..=6).map(|k| 10f64.powi(k)).collect();
        ys.extend([0.5, 1.0, 2.0, 3.0].iter().map(|m| m * r0).filter(|v| *v > 0.0));
        ys.extend([1e-9, 1e-6, 1e-3].iter().map(|d| r0 + d));

        // (c1) g(0) = 0 = g'(0)
        if self.eval(0.0) != 0.0 || self.derivative(0.0) != 0.0 {
            return bad("c1", "g(0) or g'(0) nonzero".into());
        }
        let ratios: Vec<f64> = (1..=6).map(|k| (self.eval(10f64.powi(-2 * k)) / 10f64.powi(-2 * k)).abs()).collect();
        if ratios.windows(2).any(|w| w[1] > w[0]) {
            return bad("c1", "g(y)/y does not shrink as y -> 0".into());
        }
        for &y in &ys {
            for s in [1.0, -1.0] {
                let v = s * y;
                // (c2) sign condition
                if v * self.eval(v) > 0.0 {
                    return bad("c2", format!("y g(y) > 0 at y = {v}"));
                }
                // (c4) oddness
                if self.eval(-v) != -self.eval(v) {
                    return bad("c4", format!("g(-y) != -g(y) at y = {v}"));
                }
            }
            // (c5) zero set is [-r0, r0]
            if (y <= r0) != (self.eval(y) == 0.0) {
                return bad("c5", format!("zero set mismatch at y = {y}"));
            }
        }
        let mut beyond: Vec<f64> = ys.iter().cloned().filter(|y| *y > r0).collect();
        beyond.sort_by(f64::total_cmp);
        beyond.dedup();
        // (c3) g(y)/y strictly decreasing toward -inf beyond r0
        let q: Vec<f64> = beyond.iter().map(|y| self.eval(*y) / y).collect();
        if q.windows(2).any(|w| w[1] >= w[0]) {
            return bad("c3", "g(y)/y not strictly decreasing beyond r0".into());
        }
        // (c6) strict sublinearity
        for &y in &beyond {
            for l in [1.5, 2.0, 5.0] {
                if self.eval(l * y) >= l * self.eval(y) {
                    return bad("c6", format!("g({l} y) >= {l} g(y) at y = {y}"));
                }
            }
        }
        Ok(())
    }
}

/// `h(p·t, x) = gamma_offset + driver_scale · a(p·t) · profile(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoefficientSpec {
    pub gamma_offset: f64,
    pub driver_scale: f64,
    pub driver: HullPoint,
    /// Per-node profile; `None` is all ones.
    pub profile: Option<Vec<f64>>,
}

impl LinearCoefficientSpec {
    pub fn new(gamma_offset: f64, driver: HullPoint) -> Self {
        LinearCoefficientSpec {
            gamma_offset,
            driver_scale: 1.0,
            driver,
            profile: None,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.driver_scale = scale;
        self
    }

    pub fn with_profile(mut self, profile: Vec<f64>) -> Self {
        self.profile = Some(profile);
        self
    }

    /// The coefficient seen from `p·s`.
    pub fn shifted(&self, s: f64) -> Self {
        LinearCoefficientSpec {
            driver: self.driver.advance(s),
            ..self.clone()
        }
    }

    /// The common profile value when the profile is spatially constant.
    pub fn homogeneous_profile(&self) -> Option<f64> {
        match &self.profile {
            None => Some(1.0),
            Some(p) => {
                let first = *p.first()?;
                p.iter().all(|v| *v == first).then_some(first)
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        let pmax = match &self.profile {
            None => 1.0,
            Some(p) => p.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        };
        self.gamma_offset.abs() + self.driver_scale.abs() * pmax * self.driver.sup_abs()
    }

    /// The scalar coefficient `h - gamma0` driving the principal mode, for
    /// homogeneous profiles.
    pub fn effective_coefficient(&self, gamma0: f64) -> Result<Affine, ParabolicError> {
        let k = self.homogeneous_profile().ok_or(ParabolicError::HeterogeneousProfile)?;
        Ok(Affine::new(self.driver.clone(), self.gamma_offset - gamma0, self.driver_scale * k))
    }

    fn profile_at(&self, i: usize) -> f64 {
        self.profile.as_ref().map_or(1.0, |p| p[i])
    }
}

/// One step of the split scheme with a fixed `dt`.
struct Stepper<'a> {
    coeff: &'a LinearCoefficientSpec,
    g: Option<&'a NonlinearitySpec>,
    grid: &'a Grid,
    dt: f64,
    sigma: f64,
    factors: Thomas,
    work: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(
        coeff: &'a LinearCoefficientSpec,
        g: Option<&'a NonlinearitySpec>,
        grid: &'a Grid,
        dt: f64,
    ) -> Result<Stepper<'a>, ParabolicError> {
        if let Some(p) = &coeff.profile {
            if p.len() != grid.n_nodes {
                return Err(ParabolicError::ShapeMismatch {
                    expected: grid.n_nodes,
                    got: p.len(),
                });
            }
        }
        // the part of h up to gamma0 goes into the implicit operator, which
        // then stays an M-matrix
        let sigma = coeff.gamma_offset.min(grid.gamma0);
        let m = grid.laplacian.affine(dt, 1.0 - dt * sigma);
        Ok(Stepper {
            coeff,
            g,
            grid,
            dt,
            sigma,
            factors: Thomas::new(&m),
            work: vec![0.0; grid.n_nodes],
        })
    }

    fn reaction(&self, a: f64, i: usize, y: f64) -> f64 {
        let h = self.coeff.gamma_offset - self.sigma + self.coeff.driver_scale * a * self.coeff.profile_at(i);
        h * y + self.g.map_or(0.0, |g| g.eval(y))
    }

    fn check_bound(&self, a: f64, state: &[f64], at: f64) -> Result<(), ParabolicError> {
        let r = self.grid.unknowns();
        let mut worst: f64 = 0.0;
        for i in r.clone() {
            let h = self.coeff.gamma_offset - self.sigma + self.coeff.driver_scale * a * self.coeff.profile_at(i);
            worst = worst.max(h.abs());
        }
        let ymax = state[r].iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let gp = self.g.map_or(0.0, |g| g.derivative(ymax).abs());
        let rate = worst + gp;
        if self.dt * rate > 1.0 + 1e-12 {
            return Err(ParabolicError::StepTooLarge {
                dt: self.dt,
                bound: 1.0 / rate,
                at,
            });
        }
        Ok(())
    }

    /// Advances `y` from time `s` to `s + dt`.
    fn step(&mut self, y: &mut [f64], s: f64) -> Result<(), ParabolicError> {
        let r = self.grid.unknowns();
        let dt = self.dt;
        let a0 = self.coeff.driver.evaluate(s);
        let a1 = self.coeff.driver.evaluate(s + dt);
        self.check_bound(a0, y, s)?;
        let mut stage = std::mem::take(&mut self.work);
        for i in r.clone() {
            stage[i] = y[i] + dt * self.reaction(a0, i, y[i]);
        }
        self.check_bound(a1, &stage, s + dt)?;
        for i in r.clone() {
            let second = stage[i] + dt * self.reaction(a1, i, stage[i]);
            y[i] = 0.5 * (y[i] + second);
        }
        self.work = stage;
        self.factors.solve_in_place(&mut y[r]);
        Ok(())
    }
}

fn check_inputs(grid: &Grid, z0: &FieldState, t: f64, dt: f64) -> Result<(), ParabolicError> {
    if z0.values.len() != grid.n_nodes {
        return Err(ParabolicError::ShapeMismatch {
            expected: grid.n_nodes,
            got: z0.values.len(),
        });
    }
    if !(t >= 0.0 && t.is_finite() && dt > 0.0) {
        return Err(ParabolicError::InvalidArgument(format!(
            "need t >= 0 and dt > 0 (t={t}, dt={dt})"
        )));
    }
    Ok(())
}

/// Snapshots of the solution every `sample_every` (which must divide `t`
/// up to rounding). The step is reduced so samples fall on step boundaries.
pub fn evolve_sampled(
    coeff: &LinearCoefficientSpec,
    g: Option<&NonlinearitySpec>,
    grid: &Grid,
    z0: &FieldState,
    t: f64,
    dt: f64,
    sample_every: f64,
) -> Result<Vec<(f64, FieldState)>, ParabolicError> {
    check_inputs(grid, z0, t, dt)?;
    if !(sample_every > 0.0) {
        return Err(ParabolicError::InvalidArgument("sample spacing must be positive".into()));
    }
    let n_samples = (t / sample_every).round() as usize;
    if ((n_samples as f64) * sample_every - t).abs() > 1e-9 * t.max(1.0) {
        return Err(ParabolicError::InvalidArgument(format!(
            "sample spacing {sample_every} does not divide {t}"
        )));
    }
    let per = (sample_every / dt).ceil().max(1.0) as usize;
    let h = sample_every / per as f64;
    let mut stepper = Stepper::new(coeff, g, grid, h)?;
    let mut y = z0.values.clone();
    let mut out = vec![(0.0, z0.clone())];
    for k in 0..n_samples {
        for j in 0..per {
            let s = (k * per + j) as f64 * h;
            stepper.step(&mut y, s)?;
        }
        out.push((
            (k + 1) as f64 * sample_every,
            FieldState {
                values: y.clone(),
                bc: grid.bc,
            },
        ));
    }
    Ok(out)
}

fn evolve_inner(
    coeff: &LinearCoefficientSpec,
    g: Option<&NonlinearitySpec>,
    grid: &Grid,
    z0: &FieldState,
    t: f64,
    dt: f64,
) -> Result<FieldState, ParabolicError> {
    check_inputs(grid, z0, t, dt)?;
    if t == 0.0 {
        return Ok(z0.clone());
    }
    let n = (t / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut stepper = Stepper::new(coeff, g, grid, h)?;
    let mut y = z0.values.clone();
    for k in 0..n {
        stepper.step(&mut y, k as f64 * h)?;
    }
    Ok(FieldState { values: y, bc: grid.bc })
}

/// `u(t, p, z0)` for the nonlinear problem.
pub fn evolve(
    coeff: &LinearCoefficientSpec,
    g: &NonlinearitySpec,
    grid: &Grid,
    z0: &FieldState,
    t: f64,
    dt: f64,
) -> Result<FieldState, ParabolicError> {
    evolve_inner(coeff, Some(g), grid, z0, t, dt)
}

/// `φ(t, p) z0` for the linearized problem.
pub fn evolve_linear(
    coeff: &LinearCoefficientSpec,
    grid: &Grid,
    z0: &FieldState,
    t: f64,
    dt: f64,
) -> Result<FieldState, ParabolicError> {
    evolve_inner(coeff, None, grid, z0, t, dt)
}

/// `ln ‖φ(t,p) z0‖ - ln ‖z0‖`, renormalizing along the way so that long
/// horizons neither overflow nor underflow.
pub fn linear_log_growth(
    coeff: &LinearCoefficientSpec,
    grid: &Grid,
    z0: &FieldState,
    t: f64,
    dt: f64,
) -> Result<f64, ParabolicError> {
    check_inputs(grid, z0, t, dt)?;
    let n0 = z0.sup_norm();
    if n0 == 0.0 {
        return Err(ParabolicError::InvalidArgument("initial field is zero".into()));
    }
    let chunks = (t / LOG_CHUNK).ceil().max(1.0) as usize;
    let span = t / chunks as f64;
    let per = (span / dt).ceil().max(1.0) as usize;
    let h = span / per as f64;
    let mut stepper = Stepper::new(coeff, None, grid, h)?;
    let mut y: Vec<f64> = z0.values.iter().map(|v| v / n0).collect();
    let mut acc = 0.0;
    for k in 0..chunks {
        for j in 0..per {
            stepper.step(&mut y, (k * per + j) as f64 * h)?;
        }
        let n = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if n == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += n.ln();
        y.iter_mut().for_each(|v| *v /= n);
    }
    Ok(acc)
}

const LOG_CHUNK: f64 = 20.0;

/// Largest step satisfying the monotonicity bound while `|y| ≤ radius`.
pub fn stable_dt(coeff: &LinearCoefficientSpec, g: Option<&NonlinearitySpec>, grid: &Grid, radius: f64) -> f64 {
    let sigma = coeff.gamma_offset.min(grid.gamma0);
    let pmax = match &coeff.profile {
        None => 1.0,
        Some(p) => p.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    };
    let h = (coeff.gamma_offset - sigma).abs() + coeff.driver_scale.abs() * pmax * coeff.driver.sup_abs();
    let gp = g.map_or(0.0, |g| g.derivative(radius).abs());
    0.9 / (h + gp).max(1e-12)
}

/// `c(t, p)` read off the principal mode: `‖φ(t,p) e0‖` with `h - gamma0` as
/// the effective coefficient. Negative `t` uses `c(-t, p) = 1/c(t, p·(-t))`.
pub fn pde_cocycle(coeff: &LinearCoefficientSpec, grid: &Grid, t: f64, dt: f64) -> Result<f64, ParabolicError> {
    if coeff.homogeneous_profile().is_none() {
        return Err(ParabolicError::HeterogeneousProfile);
    }
    if t >= 0.0 {
        let z = evolve_linear(coeff, grid, &grid.e0, t, dt)?;
        Ok(z.sup_norm())
    } else {
        let z = evolve_linear(&coeff.shifted(t), grid, &grid.e0, -t, dt)?;
        Ok(1.0 / z.sup_norm())
    }
}
