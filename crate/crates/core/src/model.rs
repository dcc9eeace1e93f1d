//! Macroscopic model: quadratic coefficients, the nonlinearity `R(u, Du)`,
//! analytic initial-data families and the admissibility checks used before
//! a network is synthesized.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that `Q` is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "periodic"),
            Boundary::Dirichlet => write!(f, "dirichlet"),
        }
    }
}

/// Quadratic part of the energy density, either as the full symmetric
/// matrix `Q` acting on `(u, Du, ..., D^n u)` or already reduced to the
/// diagonal coefficients `A_0..A_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadratic {
    Coefficients(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

/// One monomial `c * xi0^p * xi1^q` of the nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RTerm {
    pub p: u32,
    pub q: u32,
    pub c: f64,
}

/// Polynomial nonlinearity `R(xi0, xi1) = sum c * xi0^p * xi1^q`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialR {
    pub terms: Vec<RTerm>,
}

/// Value of `R` with its first and second partial derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RDerivatives {
    pub value: f64,
    pub d0: f64,
    pub d1: f64,
    pub d00: f64,
    pub d01: f64,
    pub d11: f64,
}

/// `x^e` for a nonnegative integer exponent, with `0^0 = 1`.
fn ipow(x: f64, e: i64) -> f64 {
    if e < 0 {
        0.0
    } else {
        x.powi(e as i32)
    }
}

impl PolynomialR {
    pub fn new(terms: Vec<RTerm>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.c == 0.0)
    }

    /// Whether any term depends on `xi1`.
    pub fn uses_gradient(&self) -> bool {
        self.terms.iter().any(|t| t.q > 0 && t.c != 0.0)
    }

    /// Exact evaluation of `R` and its partials at `(xi0, xi1)`.
    pub fn eval(&self, xi0: f64, xi1: f64) -> RDerivatives {
        let mut out = RDerivatives::default();
        for t in &self.terms {
            let (p, q) = (t.p as i64, t.q as i64);
            let (pf, qf) = (t.p as f64, t.q as f64);
            out.value += t.c * ipow(xi0, p) * ipow(xi1, q);
            if p >= 1 {
                out.d0 += t.c * pf * ipow(xi0, p - 1) * ipow(xi1, q);
            }
            if q >= 1 {
                out.d1 += t.c * qf * ipow(xi0, p) * ipow(xi1, q - 1);
            }
            if p >= 2 {
                out.d00 += t.c * pf * (pf - 1.0) * ipow(xi0, p - 2) * ipow(xi1, q);
            }
            if p >= 1 && q >= 1 {
                out.d01 += t.c * pf * qf * ipow(xi0, p - 1) * ipow(xi1, q - 1);
            }
            if q >= 2 {
                out.d11 += t.c * qf * (qf - 1.0) * ipow(xi0, p) * ipow(xi1, q - 2);
            }
        }
        out
    }

    /// Sufficient certificate for `R >= 0`: even powers, nonnegative coefficients.
    pub fn has_nonnegativity_certificate(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.c == 0.0 || (t.p % 2 == 0 && t.q % 2 == 0 && t.c >= 0.0))
    }
}

/// `eval_R` in operation form.
pub fn eval_r(r: &PolynomialR, xi0: f64, xi1: f64) -> RDerivatives {
    r.eval(xi0, xi1)
}

/// Real trigonometric polynomial `sum a_m cos(k_m x) + sum b_m sin(k_m x)` with
/// `k_m = 2 pi m / L`. Serialized as lists of `[m, coefficient]` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    #[serde(default)]
    pub cos: Vec<(u32, f64)>,
    #[serde(default)]
    pub sin: Vec<(u32, f64)>,
}

impl TrigSeries {
    pub fn sin_mode(m: u32, amplitude: f64) -> Self {
        Self { cos: vec![], sin: vec![(m, amplitude)] }
    }

    pub fn constant(c: f64) -> Self {
        Self { cos: vec![(0, c)], sin: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&(_, c)| c == 0.0)
    }

    pub fn max_mode(&self) -> u32 {
        self.cos.iter().chain(self.sin.iter()).map(|&(m, _)| m).max().unwrap_or(0)
    }

    /// `d`-th derivative at `x` on a period of length `length`.
    pub fn eval(&self, length: f64, x: f64, d: u32) -> f64 {
        let shift = d as f64 * PI / 2.0;
        let mut acc = 0.0;
        for &(m, a) in &self.cos {
            let k = 2.0 * PI * m as f64 / length;
            if m == 0 {
                if d == 0 {
                    acc += a;
                }
                continue;
            }
            acc += a * k.powi(d as i32) * (k * x + shift).cos();
        }
        for &(m, b) in &self.sin {
            if m == 0 {
                continue;
            }
            let k = 2.0 * PI * m as f64 / length;
            acc += b * k.powi(d as i32) * (k * x + shift).sin();
        }
        acc
    }
}

/// Initial displacement / velocity families. Both are analytic, so every
/// derivative is available in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialData {
    /// Trigonometric polynomials on the circle of length `L`.
    Trig {
        #[serde(default)]
        u0: TrigSeries,
        #[serde(default)]
        v0: TrigSeries,
    },
    /// `(x (L - x) / L^2)^envelope * trig(x)` on `[0, L]`.
    Clamped {
        envelope: u32,
        #[serde(default)]
        u0: TrigSeries,
        #[serde(default)]
        v0: TrigSeries,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialField {
    Displacement,
    Velocity,
}

/// Coefficients (ascending powers of x) of `(x (L - x) / L^2)^m`.
fn envelope_poly(length: f64, m: u32) -> Vec<f64> {
    let base = [0.0, 1.0 / length, -1.0 / (length * length)];
    let mut poly = vec![1.0];
    for _ in 0..m {
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &a) in poly.iter().enumerate() {
            for (j, &b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    poly
}

fn poly_derivative_at(poly: &[f64], x: f64, d: u32) -> f64 {
    let d = d as usize;
    let mut acc = 0.0;
    for i in (d..poly.len()).rev() {
        let falling: f64 = (0..d).map(|r| (i - r) as f64).product();
        acc = acc * x + poly[i] * falling;
    }
    acc
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

impl InitialData {
    pub fn series(&self, field: InitialField) -> &TrigSeries {
        match (self, field) {
            (InitialData::Trig { u0, .. }, InitialField::Displacement)
            | (InitialData::Clamped { u0, .. }, InitialField::Displacement) => u0,
            (InitialData::Trig { v0, .. }, InitialField::Velocity)
            | (InitialData::Clamped { v0, .. }, InitialField::Velocity) => v0,
        }
    }

    /// Exact `d`-th derivative of `u0` or `v0` at `x`.
    pub fn eval(&self, length: f64, field: InitialField, x: f64, d: u32) -> f64 {
        let trig = self.series(field);
        match self {
            InitialData::Trig { .. } => trig.eval(length, x, d),
            InitialData::Clamped { envelope, .. } => {
                let env = envelope_poly(length, *envelope);
                (0..=d)
                    .map(|j| {
                        binomial(d, j)
                            * poly_derivative_at(&env, x, j)
                            * trig.eval(length, x, d - j)
                    })
                    .sum()
            }
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}

/// Complete macroscopic problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Domain length `L`.
    pub length: f64,
    /// Gradient order `n`.
    pub order: usize,
    pub boundary: Boundary,
    pub quadratic: Quadratic,
    #[serde(default)]
    pub nonlinearity: PolynomialR,
    pub initial: InitialData,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Mesh bound `eps0` used for the discrete Poincare constant; defaults to `L / 8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_mesh: Option<f64>,
}

impl ModelSpec {
    /// Reduced coefficients `A_0..A_n`.
    pub fn coefficients(&self) -> Result<Vec<f64>> {
        let a = match &self.quadratic {
            Quadratic::Coefficients(a) => a.clone(),
            Quadratic::Matrix(q) => reduce_quadratic(q)?,
        };
        if a.len() != self.order + 1 {
            return Err(Error::Validation(format!(
                "expected {} quadratic coefficients for n = {}, got {}",
                self.order + 1,
                self.order,
                a.len()
            )));
        }
        Ok(a)
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinearity.is_zero()
    }

    pub fn kappa_mesh(&self) -> f64 {
        self.kappa_mesh.unwrap_or(self.length / 8.0)
    }
}

/// `eval_initial`: exact `d`-th derivative of the initial data, `d <= 2n + 2`.
pub fn eval_initial(spec: &ModelSpec, field: InitialField, x: f64, d: u32) -> Result<f64> {
    let max_d = 2 * spec.order as u32 + 2;
    if d > max_d {
        return Err(Error::Domain(format!("derivative order {d} exceeds 2n + 2 = {max_d}")));
    }
    let tol = 1e-12 * spec.length.max(1.0);
    if !(x >= -tol && x <= spec.length + tol) {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", spec.length)));
    }
    Ok(spec.initial.eval(spec.length, field, x, d))
}

/// Reduce a symmetric `(n+1) x (n+1)` matrix `Q` to the coefficients
/// `A_g = 1/2 sum_{a+b=2g} Q_ab [(-1)^a + (-1)^b] (-1)^g`.
pub fn reduce_quadratic(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let size = q.len();
    if size == 0 {
        return Err(Error::Validation("empty Q matrix".into()));
    }
    if q.iter().any(|row| row.len() != size) {
        return Err(Error::Validation("Q must be square".into()));
    }
    let scale = q.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    for a in 0..size {
        for b in 0..a {
            if (q[a][b] - q[b][a]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Validation(format!(
                    "Q is not symmetric: Q[{a}][{b}] = {} but Q[{b}][{a}] = {}",
                    q[a][b], q[b][a]
                )));
            }
        }
    }
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let n = size - 1;
    let mut out = vec![0.0; n + 1];
    for (g, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in 0..=(2 * g).min(n) {
            let b = 2 * g - a;
            if b > n {
                continue;
            }
            acc += q[a][b] * (sign(a) + sign(b));
        }
        *slot = 0.5 * acc * sign(g);
    }
    Ok(out)
}

/// Discrete Poincare constant: the largest `||u||^2 / ||D_eps u||^2` over
/// zero-average periodic lattice fields, maximised over `eps in (0, eps0]`.
pub fn compute_kappa(length: f64, eps0: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0 < length) {
        return Err(Error::Domain(format!("need 0 < eps0 < L, got eps0 = {eps0}, L = {length}")));
    }
    let s = (PI * eps0 / length).sin();
    Ok(1.0 / ((4.0 / (eps0 * eps0)) * s * s))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Admissibility {
    Strict,
    Relaxed,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub admissibility: Admissibility,
    pub coefficients: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub conditions: Vec<Condition>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.conditions {
            let tag = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(
            f,
            "overall: {} (admissibility: {:?})",
            if self.passed { "pass" } else { "FAIL" },
            self.admissibility
        )
    }
}

fn push(conds: &mut Vec<Condition>, name: &str, passed: bool, detail: String) -> bool {
    conds.push(Condition { name: name.to_string(), passed, detail });
    passed
}

/// Check every admissibility condition; failures are report entries, never errors.
pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut conds = Vec::new();
    let mut notes = Vec::new();
    let n = spec.order;

    let mut ok = push(
        &mut conds,
        "geometry",
        spec.length > 0.0 && spec.length.is_finite() && n >= 1 && spec.horizon > 0.0,
        format!("L = {}, n = {}, T = {}", spec.length, n, spec.horizon),
    );

    let coeffs = match spec.coefficients() {
        Ok(a) => {
            push(&mut conds, "quadratic form", true, format!("A = {a:?}"));
            Some(a)
        }
        Err(e) => {
            push(&mut conds, "quadratic form", false, e.to_string());
            None
        }
    };

    let mut admissibility = Admissibility::None;
    let mut kappa = None;
    if let Some(a) = &coeffs {
        let an = a[n];
        ok &= push(&mut conds, "A_n != 0", an != 0.0, format!("A_n = {an}"));

        let linear = spec.is_linear();
        let a0_ok = if linear { a[0] >= 0.0 } else { a[0] > 0.0 };
        let mid_ok = a[1..n].iter().all(|&x| x >= 0.0);
        let strict = a0_ok && an > 0.0 && mid_ok;
        push(
            &mut conds,
            "strict admissibility",
            strict,
            format!(
                "A_0 {} 0, A_n > 0, A_alpha >= 0 for 0 < alpha < n",
                if linear { ">=" } else { ">" }
            ),
        );
        if linear {
            notes.push("R = 0: A_0 = 0 is admitted (the linear estimates need only A_alpha >= 0)".into());
        }

        let relaxed = if strict {
            false
        } else {
            match compute_kappa(spec.length, spec.kappa_mesh()) {
                Ok(k) => {
                    kappa = Some(k);
                    let lhs: f64 = (1..n)
                        .filter(|&al| a[al] < 0.0)
                        .map(|al| a[al].abs() * k.powi((n - al) as i32))
                        .sum();
                    let pass = a0_ok && an > 0.0 && lhs <= 0.5 * an;
                    push(
                        &mut conds,
                        "relaxed admissibility",
                        pass,
                        format!("sum |A_alpha| kappa^(n-alpha) = {lhs:.6e} vs A_n / 2 = {:.6e} (kappa = {k:.6e})", 0.5 * an),
                    );
                    notes.push(
                        "kappa is read as the discrete Poincare constant sup ||u||^2 / ||D_eps u||^2 over zero-average fields".into(),
                    );
                    pass
                }
                Err(e) => {
                    push(&mut conds, "relaxed admissibility", false, e.to_string());
                    false
                }
            }
        };
        admissibility = if strict {
            Admissibility::Strict
        } else if relaxed {
            Admissibility::Relaxed
        } else {
            Admissibility::None
        };
        ok &= strict || relaxed;
    } else {
        ok = false;
    }

    let r = &spec.nonlinearity;
    ok &= push(
        &mut conds,
        "R is at least cubic",
        r.terms.iter().all(|t| t.c == 0.0 || t.p + t.q >= 3),
        "every term has p + q >= 3".into(),
    );
    if n == 1 {
        ok &= push(
            &mut conds,
            "R depends only on u for n = 1",
            r.terms.iter().all(|t| t.c == 0.0 || t.q == 0),
            "every term has q = 0".into(),
        );
    }
    let cert = r.has_nonnegativity_certificate();
    ok &= push(
        &mut conds,
        "R nonnegativity certificate",
        cert,
        "even powers and nonnegative coefficients".into(),
    );
    if !cert {
        notes.push("R >= 0 could not be certified; the discrete energy bound may not hold".into());
    }

    let init_ok = match (&spec.initial, spec.boundary) {
        (InitialData::Trig { .. }, Boundary::Periodic) => (true, "trig data on the circle".to_string()),
        (InitialData::Clamped { envelope, .. }, Boundary::Dirichlet) => (
            *envelope as usize >= n,
            format!("envelope exponent m = {envelope}, need m >= n = {n}"),
        ),
        (InitialData::Trig { .. }, Boundary::Dirichlet) => {
            (false, "trig data requires periodic boundary".to_string())
        }
        (InitialData::Clamped { .. }, Boundary::Periodic) => {
            (false, "clamped data requires dirichlet boundary".to_string())
        }
    };
    ok &= push(&mut conds, "initial data family", init_ok.0, init_ok.1);

    if spec.boundary == Boundary::Dirichlet && n != 2 {
        notes.push("dirichlet with n != 2 is an extrapolated scenario".into());
    }

    ValidationReport {
        passed: ok,
        admissibility,
        coefficients: coeffs,
        kappa,
        conditions: conds,
        notes,
    }
}
