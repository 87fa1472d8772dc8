//! Inexact block inverses for the finite element problems.

use std::sync::Arc;

use crate::fem::{DoubleProblem, QuadrupleProblem};
use crate::linalg::{BandedSpdMatrix, CholeskyFactor, CsrMatrix};
use crate::operator::{FactorInverse, LinearOperator, Scaled};
use crate::precond::BlockApproxSet;
use crate::{Error, Result};

/// Chebyshev steps used for mass matrices unless told otherwise.
pub const DEFAULT_CHEB_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    P1Triangle,
    P2Triangle,
    Q1Quadrilateral,
}

/// Bounds on the spectrum of `D⁻¹M` for a Jacobi-scaled mass matrix.
pub fn mass_spectral_bounds(element: ElementType) -> Result<(f64, f64)> {
    match element {
        ElementType::P1Triangle => Ok((0.5, 2.0)),
        other => Err(Error::UnsupportedElement(format!("{other:?}"))),
    }
}

/// `m` steps of Chebyshev semi-iteration for `M x = v` on the Jacobi splitting,
/// with the spectrum of `D⁻¹M` assumed inside `[lo, hi]`.
///
/// With `ω = 2/(lo+hi)`, `S = I − ωD⁻¹M` and `g = ωD⁻¹v`, the spectrum of `S`
/// lies in `[−ρ, ρ]`, `ρ = (hi−lo)/(hi+lo)`, and from `y₀ = 0`, `y₁ = g`
///
/// ```text
/// y_{j+1} = ω_{j+1} (S y_j + g − y_{j−1}) + y_{j−1},
/// ω_2 = 2/(2 − ρ²),   ω_{j+1} = 1/(1 − ρ² ω_j / 4).
/// ```
///
/// The result is a fixed polynomial in `D⁻¹M` applied to `D⁻¹v`, so the
/// operator is symmetric; it is positive definite when the bounds hold.
#[derive(Debug, Clone)]
pub struct ChebyshevOp {
    matrix: Arc<CsrMatrix>,
    inv_diag: Vec<f64>,
    steps: usize,
    bounds: (f64, f64),
}

impl ChebyshevOp {
    pub fn new(matrix: Arc<CsrMatrix>, steps: usize, bounds: (f64, f64)) -> Result<Self> {
        crate::linalg::check_len(matrix.rows(), matrix.cols())?;
        let (lo, hi) = bounds;
        if steps == 0 || !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "Chebyshev needs m >= 1 and 0 < lo <= hi, got m = {steps}, [{lo}, {hi}]"
            )));
        }
        let diag = matrix.diagonal();
        if let Some((index, &pivot)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(Error::NotPositiveDefinite { index, pivot });
        }
        let inv_diag = diag.iter().map(|d| 1.0 / d).collect();
        Ok(Self { matrix, inv_diag, steps, bounds })
    }

    /// P1 mass matrix with the standard bounds.
    pub fn p1_mass(mass: Arc<CsrMatrix>, steps: usize) -> Result<Self> {
        Self::new(mass, steps, mass_spectral_bounds(ElementType::P1Triangle)?)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }
}

impl LinearOperator for ChebyshevOp {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply(&self, v: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let (lo, hi) = self.bounds;
        let omega = 2.0 / (lo + hi);
        let rho = (hi - lo) / (hi + lo);
        let g: Vec<f64> = v.iter().zip(&self.inv_diag).map(|(a, d)| omega * d * a).collect();
        y.copy_from_slice(&g);
        if self.steps == 1 {
            return;
        }
        let mut prev = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut my = vec![0.0; n];
        let mut w = 1.0;
        for j in 1..self.steps {
            w = if j == 1 { 2.0 / (2.0 - rho * rho) } else { 1.0 / (1.0 - 0.25 * rho * rho * w) };
            // S y = y − ω D⁻¹ M y
            my.fill(0.0);
            self.matrix.mul_add(1.0, y, &mut my);
            for i in 0..n {
                let sy = y[i] - omega * self.inv_diag[i] * my[i];
                next[i] = w * (sy + g[i] - prev[i]) + prev[i];
            }
            prev.copy_from_slice(y);
            y.copy_from_slice(&next);
        }
    }
}

/// `v ↦ scale · F⁻¹ M F⁻¹ v`, the inverse of `F M⁻¹ F / scale`, with a direct
/// banded solver for `F`.
#[derive(Debug, Clone)]
pub struct MatchingSchurOp {
    factor: Arc<CholeskyFactor>,
    middle: Arc<CsrMatrix>,
    scale: f64,
}

impl MatchingSchurOp {
    pub fn new(f: &CsrMatrix, middle: Arc<CsrMatrix>, scale: f64) -> Result<Self> {
        crate::linalg::check_len(f.rows(), middle.rows())?;
        if f.rows() == 0 {
            return Err(Error::EmptyInactiveSet);
        }
        let factor = Arc::new(BandedSpdMatrix::from_csr(f)?.cholesky()?.into());
        Ok(Self { factor, middle, scale })
    }

    /// Inverse of `(1/√2)(M + √γ K) M⁻¹ (M + √γ K)`.
    pub fn matching(mass: Arc<CsrMatrix>, stiffness: &CsrMatrix, gamma: f64) -> Result<Self> {
        let f = CsrMatrix::lin_comb(1.0, &mass, gamma.sqrt(), stiffness);
        Self::new(&f, mass, std::f64::consts::SQRT_2)
    }
}

impl LinearOperator for MatchingSchurOp {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn apply(&self, v: &[f64], y: &mut [f64]) {
        let mut t = v.to_vec();
        self.factor.solve_in_place(&mut t).expect("dimension checked");
        y.fill(0.0);
        self.middle.mul_add(self.scale, &t, y);
        self.factor.solve_in_place(y).expect("dimension checked");
    }
}

/// `v ↦ C (M + γ K C K) C v` with `C ≈ M⁻¹`: three applications of `C`.
#[derive(Debug, Clone)]
pub struct S3HatOp {
    cheb: Arc<dyn LinearOperator>,
    mass: Arc<CsrMatrix>,
    stiffness: Arc<CsrMatrix>,
    gamma: f64,
}

impl S3HatOp {
    pub fn new(
        cheb: Arc<dyn LinearOperator>,
        mass: Arc<CsrMatrix>,
        stiffness: Arc<CsrMatrix>,
        gamma: f64,
    ) -> Result<Self> {
        crate::linalg::check_len(mass.rows(), cheb.dim())?;
        crate::linalg::check_len(mass.rows(), stiffness.rows())?;
        Ok(Self { cheb, mass, stiffness, gamma })
    }
}

impl LinearOperator for S3HatOp {
    fn dim(&self) -> usize {
        self.mass.rows()
    }

    fn apply(&self, v: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let t = self.cheb.apply_vec(v);
        let kt = self.stiffness.matvec(&t);
        let ckt = self.cheb.apply_vec(&kt);
        let mut u = vec![0.0; n];
        self.mass.mul_add(1.0, &t, &mut u);
        self.stiffness.mul_add(self.gamma, &ckt, &mut u);
        self.cheb.apply(&u, y);
    }
}

/// Block inverses for the double problem: `Â_0⁻¹ = C/α`, `Ŝ_1⁻¹ = αC`
/// (`C` = Chebyshev for `M`), `Ŝ_2⁻¹ = L⁻¹ M L⁻¹ / α`.
pub fn double_block_approximations(problem: &DoubleProblem, cheb_steps: usize) -> Result<BlockApproxSet> {
    let alpha = problem.alpha;
    let mass = Arc::new(problem.ops.mass.clone());
    let cheb: Arc<dyn LinearOperator> = Arc::new(ChebyshevOp::p1_mass(mass.clone(), cheb_steps)?);
    Ok(BlockApproxSet::new(vec![
        Arc::new(Scaled::new(cheb.clone(), 1.0 / alpha)),
        Arc::new(Scaled::new(cheb, alpha)),
        Arc::new(MatchingSchurOp::new(&problem.ops.l, mass, 1.0 / alpha)?),
    ]))
}

/// Block inverses for the quadruple problem with `γ = α + λ`:
///
/// * `Â_0⁻¹ = C/γ`;
/// * `Ŝ_1⁻¹`: direct solve with `λ/(1+ρλ) L + M/γ`;
/// * `Ŝ_2⁻¹ = √2 F⁻¹ M F⁻¹`, `F = M + √γ K`;
/// * `Ŝ_3⁻¹ = C (M + γ K C K) C`;
/// * `Ŝ_4⁻¹ = √2 F_i⁻¹ M_ii F_i⁻¹` on the inactive nodes.
pub fn quadruple_block_approximations(problem: &QuadrupleProblem, cheb_steps: usize) -> Result<BlockApproxSet> {
    let p = problem.params;
    let gamma = p.alpha + p.lambda;
    let mass = Arc::new(problem.ops.mass.clone());
    let stiffness = Arc::new(problem.ops.stiffness.clone());
    let cheb: Arc<dyn LinearOperator> = Arc::new(ChebyshevOp::p1_mass(mass.clone(), cheb_steps)?);

    let s1 = CsrMatrix::lin_comb(p.lambda_rho(), &problem.ops.l, 1.0 / gamma, &mass);
    let s1_factor = Arc::new(BandedSpdMatrix::from_csr(&s1)?.cholesky()?.into());

    let inactive_mass = Arc::new(problem.inactive.mass.clone());
    Ok(BlockApproxSet::new(vec![
        Arc::new(Scaled::new(cheb.clone(), 1.0 / gamma)),
        Arc::new(FactorInverse::new(s1_factor)),
        Arc::new(MatchingSchurOp::matching(mass.clone(), &stiffness, gamma)?),
        Arc::new(S3HatOp::new(cheb, mass, stiffness, gamma)?),
        Arc::new(MatchingSchurOp::matching(inactive_mass, &problem.inactive.stiffness, gamma)?),
    ]))
}
