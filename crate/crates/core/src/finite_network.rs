//! Compilation of thermodynamic quadratic forms into impulse-response
//! matrices.
//!
//! A finite network is the evolution `A q + B q̇ = Q` with `A` (stored
//! energy) and `B` (dissipation) symmetric positive semidefinite. With
//! `B` positive definite the `B`-orthonormal eigenbasis of the pencil
//! gives `f̂'_ij(θ) = Σ_k ψ_ki ψ_kj / (λ_k + θ)`; a singular `B` is
//! handled by deflating its kernel, whose elastic block feeds the
//! constant matrix.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::bernstein::{Atom, BernsteinRep, LevyMeasure};
use crate::error::{Error, Result};
use crate::materials::{superpose, LoadHistory};
use crate::numerics::TimeGrid;

const SYMMETRY_RTOL: f64 = 1e-12;
const PSD_RTOL: f64 = 1e-10;
const KERNEL_RTOL: f64 = 1e-12;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

fn check_symmetric_psd(m: &DMatrix<f64>, scale_floor: f64) -> Result<()> {
    let scale = max_abs(m).max(scale_floor);
    let asym = max_abs(&(m - m.transpose()));
    if asym > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric {
            max_asym: asym,
            tol: SYMMETRY_RTOL,
        });
    }
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -PSD_RTOL * scale {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
    }
    Ok(())
}

/// Thermodynamic pair: stored-energy matrix `a`, dissipation matrix `b`,
/// and the observed degree-of-freedom indices.
#[derive(Debug, Clone)]
pub struct QuadraticFormPair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    observables: Vec<usize>,
}

impl QuadraticFormPair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, observables: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || !b.is_square() || b.nrows() != n {
            return Err(Error::DimensionMismatch("A and B must be square of equal size"));
        }
        check_symmetric_psd(&a, 1.0)?;
        check_symmetric_psd(&b, 1.0)?;
        if observables.is_empty() {
            return Err(Error::NoObservables);
        }
        let mut seen = vec![false; n];
        for &i in &observables {
            if i >= n {
                return Err(Error::ObservableOutOfRange { index: i, dim: n });
            }
            if seen[i] {
                return Err(Error::DimensionMismatch("duplicate observable index"));
            }
            seen[i] = true;
        }
        Ok(Self { a, b, observables })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dissipation(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn observables(&self) -> &[usize] {
        &self.observables
    }
}

/// Eigen data of the pencil `A ψ = λ B ψ` with a `B`-orthonormal basis.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Ascending, clamped to `≥ 0`.
    pub eigenvalues: Vec<f64>,
    /// Columns are the `B`-orthonormal eigenvectors, ordered as the values.
    pub vectors: DMatrix<f64>,
    /// Condition number of `B`.
    pub b_condition: f64,
}

/// Solves the symmetric pencil by Cholesky congruence `B = L Lᵀ`,
/// reducing to a standard symmetric problem on `L⁻¹ A L⁻ᵀ`; this keeps
/// the returned basis `B`-orthonormal by construction.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    if !a.is_square() || !b.is_square() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch("pencil matrices must be square of equal size"));
    }
    let chol = Cholesky::new(b.clone()).ok_or(Error::DegeneratePencil)?;
    let b_eig = b.clone().symmetric_eigen();
    let (bmin, bmax) = (b_eig.eigenvalues.min(), b_eig.eigenvalues.max());
    let b_condition = if bmin > 0.0 { bmax / bmin } else { f64::INFINITY };

    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::DegeneratePencil)?;
    let mut c = &l_inv * a * l_inv.transpose();
    // Symmetrize against rounding before the symmetric solver.
    c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigen();

    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = max_abs(a).max(1.0);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    let back = l_inv.transpose();
    for (col, &i) in order.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        eigenvalues.push(if lam.abs() <= PSD_RTOL * scale { 0.0 } else { lam });
        vectors.set_column(col, &(&back * eig.eigenvectors.column(i)));
    }
    Ok(GeneralizedEigen {
        eigenvalues,
        vectors,
        b_condition,
    })
}

/// Impulse-response matrix in spectral form:
/// `f(t) = Σ_k (1 − e^{−λ_k t}) J^(k) + t · drift + constant`,
/// with every `J^(k)`, `drift` and `constant` symmetric PSD.
#[derive(Debug, Clone)]
pub struct MatrixMaterial {
    dim: usize,
    atoms: Vec<(f64, DMatrix<f64>)>,
    drift: DMatrix<f64>,
    constant: DMatrix<f64>,
}

impl MatrixMaterial {
    pub fn new(
        dim: usize,
        atoms: Vec<(f64, DMatrix<f64>)>,
        drift: DMatrix<f64>,
        constant: DMatrix<f64>,
    ) -> Result<Self> {
        if drift.nrows() != dim || !drift.is_square() || constant.nrows() != dim || !constant.is_square()
        {
            return Err(Error::DimensionMismatch("drift and constant must be dim × dim"));
        }
        check_symmetric_psd(&drift, 1.0)?;
        check_symmetric_psd(&constant, 1.0)?;
        let mut atoms = atoms;
        for (rate, j) in &atoms {
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(Error::NonPositive { name: "atom rate", value: *rate });
            }
            if j.nrows() != dim || !j.is_square() {
                return Err(Error::DimensionMismatch("spectral atom must be dim × dim"));
            }
            check_symmetric_psd(j, 1.0)?;
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, DMatrix<f64>)> = Vec::with_capacity(atoms.len());
        for (rate, j) in atoms {
            match merged.last_mut() {
                Some((last, acc)) if *last == rate => *acc += j,
                _ => merged.push((rate, j)),
            }
        }
        merged.retain(|(_, j)| max_abs(j) > 0.0);
        Ok(Self {
            dim,
            atoms: merged,
            drift,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(f64, DMatrix<f64>)] {
        &self.atoms
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.drift
    }

    pub fn constant(&self) -> &DMatrix<f64> {
        &self.constant
    }

    /// `f(t)` as a full matrix.
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        let mut out = &self.constant + &self.drift * t;
        for (rate, j) in &self.atoms {
            out += j * (-(-(rate * t)).exp_m1());
        }
        out
    }

    pub fn eval_entry(&self, i: usize, j: usize, t: f64) -> f64 {
        let mut v = self.constant[(i, j)] + self.drift[(i, j)] * t;
        for (rate, m) in &self.atoms {
            v -= m[(i, j)] * (-(rate * t)).exp_m1();
        }
        v
    }

    /// Matrix of Stieltjes transforms of `f'` at real `θ > 0`.
    pub fn laplace_fprime(&self, theta: f64) -> DMatrix<f64> {
        let mut out = &self.constant + &self.drift / theta;
        for (rate, j) in &self.atoms {
            out += j * (rate / (theta + rate));
        }
        out
    }

    pub fn laplace_fprime_complex(&self, theta: Complex64) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let mut v = Complex64::new(self.constant[(i, k)], 0.0)
                    + self.drift[(i, k)] / theta;
                for (rate, j) in &self.atoms {
                    v += j[(i, k)] * (rate / (theta + rate));
                }
                out[(i, k)] = v;
            }
        }
        out
    }

    /// The scalar triple of a 1 × 1 material.
    pub fn scalar_reduction(&self) -> Result<BernsteinRep> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch("scalar reduction needs a 1 × 1 material"));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|(rate, j)| Atom { rate: *rate, weight: j[(0, 0)] })
            .collect();
        BernsteinRep::new(
            self.constant[(0, 0)],
            self.drift[(0, 0)],
            LevyMeasure::atoms_only(atoms)?,
        )
    }
}

/// Restriction of a column vector outer product to the observable set.
fn observed_outer(psi: &DVector<f64>, observables: &[usize]) -> DMatrix<f64> {
    let m = observables.len();
    let mut out = DMatrix::zeros(m, m);
    for (i, &oi) in observables.iter().enumerate() {
        for (j, &oj) in observables.iter().enumerate() {
            out[(i, j)] = psi[oi] * psi[oj];
        }
    }
    out
}

/// Compiles quadratic forms into the impulse-response matrix of the
/// observed parameters. A positive definite `B` feeds the eigen route
/// directly; a singular `B` is deflated over its kernel, with the
/// kernel's elastic block contributing the constant matrix.
pub fn material_from_quadratic_forms(p: &QuadraticFormPair) -> Result<MatrixMaterial> {
    let n = p.dim();
    let m = p.observables.len();
    let b_eig = p.b.clone().symmetric_eigen();
    let b_scale = b_eig.eigenvalues.amax().max(1.0);
    let kernel_tol = KERNEL_RTOL * b_scale;
    let kernel: Vec<usize> = (0..n)
        .filter(|&i| b_eig.eigenvalues[i] <= kernel_tol)
        .collect();

    let mut atoms: Vec<(f64, DMatrix<f64>)> = Vec::new();
    let mut drift = DMatrix::zeros(m, m);
    let mut constant = DMatrix::zeros(m, m);
    let rate_tol = PSD_RTOL * max_abs(&p.a).max(1.0);

    let mut push_mode = |lambda: f64, psi: DVector<f64>| {
        let outer = observed_outer(&psi, &p.observables);
        if lambda > rate_tol {
            atoms.push((lambda, outer / lambda));
        } else {
            drift += outer;
        }
    };

    if kernel.is_empty() {
        let eig = generalized_eigen(&p.a, &p.b)?;
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            push_mode(lambda, eig.vectors.column(k).into_owned());
        }
    } else {
        let range: Vec<usize> = (0..n).filter(|i| !kernel.contains(i)).collect();
        let u0 = DMatrix::from_columns(
            &kernel.iter().map(|&i| b_eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
        );
        let a00 = u0.transpose() * &p.a * &u0;
        let a00_eig = a00.clone().symmetric_eigen();
        if a00_eig.eigenvalues.min() <= PSD_RTOL * max_abs(&p.a).max(1.0) {
            return Err(Error::IrregularPencil);
        }
        let a00_inv = a00.try_inverse().ok_or(Error::IrregularPencil)?;

        if range.is_empty() {
            // Purely elastic network: f̂' = A⁻¹ is the constant matrix.
            constant = observed_matrix(&(&u0 * &a00_inv * u0.transpose()), &p.observables);
        } else {
            let up = DMatrix::from_columns(
                &range.iter().map(|&i| b_eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
            );
            let dp = DMatrix::from_diagonal(&DVector::from_iterator(
                range.len(),
                range.iter().map(|&i| b_eig.eigenvalues[i]),
            ));
            let a0p = u0.transpose() * &p.a * &up;
            let app = up.transpose() * &p.a * &up;
            let mut schur = app - a0p.transpose() * &a00_inv * &a0p;
            schur = 0.5 * (&schur + schur.transpose());
            let reduced = generalized_eigen(&schur, &dp)?;
            // Deflected input/output map: W = Uₚ − U₀ A₀₀⁻¹ A₀ₚ.
            let w = &up - &u0 * &a00_inv * &a0p;
            for (k, &lambda) in reduced.eigenvalues.iter().enumerate() {
                push_mode(lambda, &w * reduced.vectors.column(k));
            }
            constant = observed_matrix(&(&u0 * &a00_inv * u0.transpose()), &p.observables);
        }
    }
    MatrixMaterial::new(m, atoms, drift, constant)
}

fn observed_matrix(full: &DMatrix<f64>, observables: &[usize]) -> DMatrix<f64> {
    let m = observables.len();
    let mut out = DMatrix::zeros(m, m);
    for (i, &oi) in observables.iter().enumerate() {
        for (j, &oj) in observables.iter().enumerate() {
            out[(i, j)] = full[(oi, oj)];
        }
    }
    out
}

/// Integrates `A q + B q̇ = Q` by an implicit first-order scheme under a
/// load applied at degree of freedom `loaded`, and returns the maximum
/// discrepancy between the integrated observable trajectories and the
/// creep response of the compiled material.
pub fn verify_evolution(
    p: &QuadraticFormPair,
    material: &MatrixMaterial,
    load: &LoadHistory,
    loaded: usize,
    grid: &TimeGrid,
) -> Result<f64> {
    const STEP_FLOOR: f64 = 1e-12;
    if grid.step() < STEP_FLOOR {
        return Err(Error::StepBelowFloor {
            step: grid.step(),
            floor: STEP_FLOOR,
        });
    }
    if grid.start() != 0.0 {
        return Err(Error::GridMismatch("evolution grid must start at 0"));
    }
    let Some(loaded_col) = p.observables.iter().position(|&i| i == loaded) else {
        return Err(Error::ObservableOutOfRange {
            index: loaded,
            dim: p.dim(),
        });
    };
    if material.dim() != p.observables.len() {
        return Err(Error::DimensionMismatch("material does not match the observable set"));
    }
    let n = p.dim();
    let h = grid.step();
    // (B/h + A) q_{k+1} = B q_k / h + Q(t_{k+1}); Cholesky requires B PD.
    Cholesky::new(p.b.clone()).ok_or(Error::DegeneratePencil)?;
    let system = Cholesky::new(&p.b / h + &p.a).ok_or(Error::DegeneratePencil)?;

    let mut q = DVector::<f64>::zeros(n);
    let mut integrated: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.count()); p.observables.len()];
    for (i, &obs) in p.observables.iter().enumerate() {
        integrated[i].push(q[obs]);
    }
    for k in 1..grid.count() {
        let t = grid.at(k);
        let mut rhs = &p.b * &q / h;
        rhs[loaded] += load.value_at(t);
        q = system.solve(&rhs);
        for (i, &obs) in p.observables.iter().enumerate() {
            integrated[i].push(q[obs]);
        }
    }

    let mut worst = 0.0_f64;
    for (i, _) in p.observables.iter().enumerate() {
        let samples: Vec<f64> = grid
            .times()
            .map(|t| material.eval_entry(i, loaded_col, t))
            .collect();
        let model = superpose(&samples, load, grid);
        for k in 0..grid.count() {
            worst = worst.max((integrated[i][k] - model[k]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{bernstein_grid_check, default_check_grid, Material};
    use approx::assert_relative_eq;

    fn dmat(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn pair_validation() {
        assert!(QuadraticFormPair::new(dmat(2, &[1.0, 0.5, 0.4, 1.0]), DMatrix::identity(2, 2), vec![0]).is_err());
        assert!(matches!(
            QuadraticFormPair::new(
                dmat(2, &[1.0, 2.0, 2.0, 1.0]),
                DMatrix::identity(2, 2),
                vec![0]
            ),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        assert!(matches!(
            QuadraticFormPair::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), vec![7]),
            Err(Error::ObservableOutOfRange { .. })
        ));
        assert!(matches!(
            QuadraticFormPair::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), vec![]),
            Err(Error::NoObservables)
        ));
    }

    #[test]
    fn eigen_scalar_and_scaled_identity() {
        let e = generalized_eigen(&dmat(1, &[2.0]), &dmat(1, &[1.0])).unwrap();
        assert_relative_eq!(e.eigenvalues[0], 2.0, max_relative = 1e-14);
        assert_relative_eq!(e.vectors[(0, 0)].abs(), 1.0, max_relative = 1e-14);

        let e = generalized_eigen(&DMatrix::identity(2, 2), &(2.0 * DMatrix::identity(2, 2)))
            .unwrap();
        assert_relative_eq!(e.eigenvalues[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(e.eigenvalues[1], 0.5, max_relative = 1e-14);
        // B-orthonormal: ψᵀ B ψ = I.
        let b = 2.0 * DMatrix::identity(2, 2);
        let gram = e.vectors.transpose() * &b * &e.vectors;
        assert!(max_abs(&(&gram - DMatrix::identity(2, 2))) < 1e-12);
        assert_relative_eq!(e.b_condition, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn eigen_random_spd_pair_satisfies_pencil() {
        // Fixed full-rank factors make A PSD and B PD.
        let f = dmat(
            5,
            &[
                0.8, -0.3, 0.1, 0.4, 0.0, //
                0.2, 0.9, -0.5, 0.3, 0.1, //
                -0.1, 0.4, 1.1, 0.0, 0.2, //
                0.3, -0.2, 0.2, 0.7, -0.4, //
                0.0, 0.1, -0.3, 0.5, 1.3,
            ],
        );
        let gmat = dmat(
            5,
            &[
                1.2, 0.1, -0.2, 0.0, 0.3, //
                -0.4, 0.9, 0.2, 0.1, 0.0, //
                0.2, -0.1, 1.4, -0.3, 0.1, //
                0.1, 0.2, 0.0, 0.8, -0.2, //
                -0.3, 0.0, 0.1, 0.2, 1.1,
            ],
        );
        let a = &f * f.transpose();
        let b = &gmat * gmat.transpose();
        let e = generalized_eigen(&a, &b).unwrap();
        let scale = max_abs(&a);
        for k in 0..5 {
            let psi = e.vectors.column(k);
            let residual = &a * psi - e.eigenvalues[k] * (&b * psi);
            assert!(residual.amax() <= 1e-10 * scale, "residual {}", residual.amax());
        }
        let gram = e.vectors.transpose() * &b * &e.vectors;
        assert!(max_abs(&(&gram - DMatrix::identity(5, 5))) < 1e-10);
        // Completeness: Σ ψψᵀ = B⁻¹.
        let mut sum = DMatrix::zeros(5, 5);
        for k in 0..5 {
            let psi = e.vectors.column(k).into_owned();
            sum += &psi * psi.transpose();
        }
        let binv = b.clone().try_inverse().unwrap();
        assert!(max_abs(&(&sum - &binv)) <= 1e-9 * max_abs(&binv));
    }

    #[test]
    fn eigen_rejects_singular_dissipation() {
        let a = DMatrix::identity(2, 2);
        let b = dmat(2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            generalized_eigen(&a, &b),
            Err(Error::DegeneratePencil)
        ));
    }

    #[test]
    fn kelvin_voigt_cell_compiles_to_single_mode() {
        let (g, eta) = (2.0, 4.0);
        let p = QuadraticFormPair::new(dmat(1, &[g]), dmat(1, &[eta]), vec![0]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        assert_eq!(m.atoms().len(), 1);
        let (rate, j) = &m.atoms()[0];
        assert_relative_eq!(*rate, g / eta, max_relative = 1e-13);
        assert_relative_eq!(j[(0, 0)], 1.0 / g, max_relative = 1e-13);
        assert_eq!(max_abs(m.drift()), 0.0);
        assert_eq!(max_abs(m.constant()), 0.0);
        // Against the scalar ODE closed form.
        for &t in &[0.1_f64, 1.0, 5.0] {
            let expect = (1.0 / g) * (1.0 - (-(g / eta) * t).exp());
            assert_relative_eq!(m.eval_entry(0, 0, t), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn maxwell_two_dof_compiles_by_deflation() {
        let (g, eta) = (2.0, 4.0);
        let a = dmat(2, &[g, -g, -g, g]);
        let b = dmat(2, &[0.0, 0.0, 0.0, eta]);
        let p = QuadraticFormPair::new(a, b, vec![0]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        assert!(m.atoms().is_empty());
        assert_relative_eq!(m.drift()[(0, 0)], 1.0 / eta, max_relative = 1e-12);
        assert_relative_eq!(m.constant()[(0, 0)], 1.0 / g, max_relative = 1e-12);
        for &t in &[0.0_f64, 0.5, 3.0] {
            assert_relative_eq!(
                m.eval_entry(0, 0, t),
                1.0 / g + t / eta,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn block_diagonal_cells_stay_decoupled() {
        let a = dmat(2, &[1.0, 0.0, 0.0, 3.0]);
        let b = dmat(2, &[2.0, 0.0, 0.0, 5.0]);
        let p = QuadraticFormPair::new(a, b, vec![0, 1]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        assert_eq!(m.atoms().len(), 2);
        for (rate, j) in m.atoms() {
            // Each mode touches exactly one observable.
            assert!(j[(0, 1)].abs() < 1e-14);
            if (*rate - 0.5).abs() < 1e-12 {
                assert_relative_eq!(j[(0, 0)], 1.0, max_relative = 1e-12);
            } else {
                assert_relative_eq!(*rate, 0.6, max_relative = 1e-12);
                assert_relative_eq!(j[(1, 1)], 1.0 / 3.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn irregular_pencil_is_reported() {
        let a = dmat(2, &[1.0, 0.0, 0.0, 0.0]);
        let b = dmat(2, &[1.0, 0.0, 0.0, 0.0]);
        let p = QuadraticFormPair::new(a, b, vec![0]).unwrap();
        assert!(matches!(
            material_from_quadratic_forms(&p),
            Err(Error::IrregularPencil)
        ));
    }

    #[test]
    fn purely_elastic_network_is_constant() {
        let a = dmat(2, &[2.0, 1.0, 1.0, 2.0]);
        let b = DMatrix::zeros(2, 2);
        let p = QuadraticFormPair::new(a.clone(), b, vec![0, 1]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        assert!(m.atoms().is_empty());
        assert_eq!(max_abs(m.drift()), 0.0);
        let inv = a.try_inverse().unwrap();
        assert!(max_abs(&(m.constant() - inv)) < 1e-12);
    }

    #[test]
    fn near_rigid_dissipation_gives_instantaneous_response() {
        // B = εI: the single mode relaxes at rate G/ε, so for t ≫ ε the
        // response is the elastic 1/G up to O(ε) transients.
        let g = 2.0;
        for &eps in &[1e-6_f64, 1e-8] {
            let p =
                QuadraticFormPair::new(dmat(1, &[g]), dmat(1, &[eps]), vec![0]).unwrap();
            let m = material_from_quadratic_forms(&p).unwrap();
            let v = m.eval_entry(0, 0, 1e-3);
            assert_relative_eq!(v, 1.0 / g, max_relative = 1e-9);
        }
    }

    #[test]
    fn scalar_reduction_passes_bernstein_checks() {
        let p = QuadraticFormPair::new(dmat(1, &[2.0]), dmat(1, &[4.0]), vec![0]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        let rep = m.scalar_reduction().unwrap();
        bernstein_grid_check(&Material::Analytic(rep), &default_check_grid()).unwrap();
    }

    #[test]
    fn evolution_matches_material_for_kelvin_voigt() {
        let p = QuadraticFormPair::new(dmat(1, &[1.0]), dmat(1, &[1.0]), vec![0]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        let grid = TimeGrid::new(0.0, 1e-4, 10_001).unwrap();
        let d = verify_evolution(&p, &m, &LoadHistory::unit_step(), 0, &grid).unwrap();
        assert!(d <= 1e-4, "discrepancy {d}");
    }

    #[test]
    fn evolution_zero_load_is_zero() {
        let p = QuadraticFormPair::new(dmat(1, &[1.0]), dmat(1, &[1.0]), vec![0]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        let grid = TimeGrid::new(0.0, 1e-3, 101).unwrap();
        let zero = LoadHistory::new(vec![], vec![]).unwrap();
        let d = verify_evolution(&p, &m, &zero, 0, &grid).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn evolution_rejects_tiny_steps() {
        let p = QuadraticFormPair::new(dmat(1, &[1.0]), dmat(1, &[1.0]), vec![0]).unwrap();
        let m = material_from_quadratic_forms(&p).unwrap();
        let grid = TimeGrid::new(0.0, 1e-13, 10).unwrap();
        assert!(matches!(
            verify_evolution(&p, &m, &LoadHistory::unit_step(), 0, &grid),
            Err(Error::StepBelowFloor { .. })
        ));
    }
}
