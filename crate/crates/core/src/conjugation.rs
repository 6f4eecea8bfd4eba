//! Exact and numeric conjugation of materials.
//!
//! Two materials are conjugate when their impulse responses convolve to
//! `t²/2`, equivalently when the Laplace transforms of their derivatives
//! satisfy `h₁(θ) · θ · h₂(θ) = 1`. For atoms-only representations the
//! map `h ↦ 1/(θ h)` stays inside the Stieltjes class and is computed
//! exactly by partial fractions: the conjugate rates are the real simple
//! zeros of `θ h(θ)`, which strictly interlace the poles, so every root
//! is isolated by bisection inside a deterministic bracket. The same map
//! evaluated numerically yields relaxation curves for any material.

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::bernstein::{Atom, BernsteinRep, LevyMeasure, Material, StableComponent};
use crate::error::{Error, Result};
use crate::finite_network::MatrixMaterial;
use crate::numerics::{self, LaplaceFn, TimeGrid, GAVER_ORDER, INVERSION_RTOL, TALBOT_TERMS};

/// Stieltjes transform data `h(θ) = a + ∫ dμ(x)/(θ + x)` of a pair
/// `(a, μ)` with `μ = m₀ δ₀ + Σ mass · δ_location`.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesRep {
    pub offset: f64,
    pub mass_at_zero: f64,
    /// Atoms of `μ` on `(0, ∞)` as `(location, mass)`.
    pub atoms: Vec<(f64, f64)>,
}

impl StieltjesRep {
    pub fn eval(&self, theta: f64) -> f64 {
        self.offset
            + self.mass_at_zero / theta
            + self
                .atoms
                .iter()
                .map(|&(x, m)| m / (theta + x))
                .sum::<f64>()
    }
}

/// The Stieltjes pair of `f̂'`: `(L, K δ₀ + x·ν)`. Atoms-only inputs.
pub fn stieltjes_of(rep: &BernsteinRep) -> Result<StieltjesRep> {
    if !rep.is_atoms_only() {
        return Err(Error::StablePresent);
    }
    Ok(StieltjesRep {
        offset: rep.constant(),
        mass_at_zero: rep.drift(),
        atoms: rep
            .levy()
            .atoms()
            .iter()
            .map(|a| (a.rate, a.weight * a.rate))
            .collect(),
    })
}

/// `g(−μ)` where `g(θ) = θ h(θ)`; the conjugate rates are its positive
/// zeros. Strictly decreasing in `μ` between consecutive poles.
fn g_neg(rep: &BernsteinRep, mu: f64) -> f64 {
    let mut v = -rep.constant() * mu + rep.drift();
    for a in rep.levy().atoms() {
        v += a.weight * a.rate * mu / (mu - a.rate);
    }
    v
}

/// `g'(θ)` at `θ = −μ`: `L + Σ w λ² / (λ − μ)²`, always positive.
fn g_neg_prime(rep: &BernsteinRep, mu: f64) -> f64 {
    let mut v = rep.constant();
    for a in rep.levy().atoms() {
        let d = a.rate - mu;
        v += a.weight * a.rate * a.rate / (d * d);
    }
    v
}

/// Walks toward `pole` from the right until the sign of `f` is positive.
fn approach_from_right(f: impl Fn(f64) -> f64, pole: f64, first_step: f64) -> Result<f64> {
    let mut d = first_step;
    for _ in 0..200 {
        let x = pole + d;
        if f(x) > 0.0 {
            return Ok(x);
        }
        d *= 0.5;
        if d < f64::EPSILON * pole.max(1.0) {
            break;
        }
    }
    Err(Error::BracketWithoutSignChange {
        lo: pole,
        hi: pole + first_step,
    })
}

/// Walks toward `pole` from the left until the sign of `f` is negative.
fn approach_from_left(f: impl Fn(f64) -> f64, pole: f64, first_step: f64) -> Result<f64> {
    let mut d = first_step;
    for _ in 0..200 {
        let x = pole - d;
        if f(x) < 0.0 {
            return Ok(x);
        }
        d *= 0.5;
        if d < f64::EPSILON * pole.max(1.0) {
            break;
        }
    }
    Err(Error::BracketWithoutSignChange {
        lo: pole - first_step,
        hi: pole,
    })
}

/// Conjugate of an atoms-only representation, by partial fractions of
/// `1/(θ h(θ))` over its real simple poles.
fn conjugate_rep(rep: &BernsteinRep) -> Result<BernsteinRep> {
    let constant = rep.constant();
    let drift = rep.drift();
    let atoms = rep.levy().atoms();
    let n = atoms.len();

    let conj_drift = if drift > 0.0 {
        0.0
    } else {
        1.0 / (constant + rep.levy().atom_mass())
    };
    let conj_constant = if constant > 0.0 {
        0.0
    } else {
        1.0 / (drift + rep.levy().atom_first_moment())
    };

    let mut rates: Vec<f64> = Vec::new();
    if n == 0 {
        // Pure spring, pure dashpot or Maxwell: at most one pole, in
        // closed form at μ = K/L.
        if constant > 0.0 && drift > 0.0 {
            rates.push(drift / constant);
        }
    } else {
        let g = |mu: f64| g_neg(rep, mu);
        let mut brackets: Vec<(f64, f64)> = Vec::new();
        let first = atoms[0].rate;
        let last = atoms[n - 1].rate;
        if drift > 0.0 {
            // g(0) = K > 0, g → −∞ at the first pole.
            let hi = approach_from_left(g, first, 0.5 * first)?;
            brackets.push((0.0, hi));
        }
        for pair in atoms.windows(2) {
            let (a, b) = (pair[0].rate, pair[1].rate);
            let half = 0.5 * (b - a);
            let lo = approach_from_right(g, a, half)?;
            let hi = approach_from_left(g, b, half)?;
            brackets.push((lo, hi));
        }
        if constant > 0.0 {
            let lo = approach_from_right(g, last, 0.5 * last)?;
            let mut hi = last + 1.0 + (drift + rep.levy().atom_first_moment()) / constant;
            for _ in 0..200 {
                if g(hi) < 0.0 {
                    break;
                }
                hi *= 2.0;
            }
            brackets.push((lo, hi));
        }
        rates = numerics::isolate_real_roots(g, &brackets)?;
    }

    let conj_atoms = rates
        .into_iter()
        .map(|mu| Atom {
            rate: mu,
            weight: 1.0 / (mu * g_neg_prime(rep, mu)),
        })
        .collect();
    BernsteinRep::new(
        conj_constant,
        conj_drift,
        LevyMeasure::atoms_only(conj_atoms)?,
    )
}

/// Exact conjugate of an atoms-only analytic material. Involutive up to
/// root-isolation accuracy; output weights, drift and constant are all
/// nonnegative by construction.
pub fn conjugate_exact(m: &Material) -> Result<Material> {
    let rep = m.as_analytic().ok_or(Error::NotAnalytic)?;
    if !rep.is_atoms_only() {
        return Err(Error::StablePresent);
    }
    Ok(Material::Analytic(conjugate_rep(rep)?))
}

/// Conjugate of a pure one-sided stable material: index `α ↦ 1 − α`,
/// scale `c ↦ 1/c`. The index-1/2, unit-scale material is the fixed point.
pub fn conjugate_stable(m: &Material) -> Result<Material> {
    let rep = m.as_analytic().ok_or(Error::NotAnalytic)?;
    if !rep.is_pure_stable() {
        return Err(Error::NotPureStable);
    }
    let s = rep.levy().stable().expect("pure stable");
    let levy = LevyMeasure::new(vec![], Some(StableComponent::new(1.0 - s.alpha, 1.0 / s.scale)?))?;
    Ok(Material::Analytic(BernsteinRep::new(0.0, 0.0, levy)?))
}

/// Conjugation dispatcher: exact for atoms-only, index map for pure
/// stable; anything else has no finite representation.
pub fn conjugate(m: &Material) -> Result<Material> {
    match m.as_analytic() {
        Some(rep) if rep.is_atoms_only() => conjugate_exact(m),
        Some(rep) if rep.is_pure_stable() => conjugate_stable(m),
        Some(_) => Err(Error::StablePresent),
        None => Err(Error::NotAnalytic),
    }
}

/// Power-law tail of a relaxation function:
/// `scale · t^{−exponent} / Γ(1 − exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub exponent: f64,
    pub scale: f64,
}

/// Relaxation function `r(t) = α + β δ₀ + ∫ e^{−t x} dρ(x)`: equilibrium
/// modulus `equilibrium`, explicit δ₀ mass `impulse_mass` (never put on a
/// grid) and the measure `ρ` as decay modes plus an optional power tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationRep {
    pub equilibrium: f64,
    pub impulse_mass: f64,
    /// Atoms of `ρ` as `(decay rate, mass)`.
    pub modes: Vec<(f64, f64)>,
    pub power_tail: Option<PowerTail>,
}

impl RelaxationRep {
    /// Function part of `r` at `t > 0` (the δ₀ term is excluded).
    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.equilibrium;
        for &(x, m) in &self.modes {
            v += m * (-(x * t)).exp();
        }
        if let Some(tail) = &self.power_tail {
            v += tail.scale * t.powf(-tail.exponent) / gamma(1.0 - tail.exponent);
        }
        v
    }

    /// `∫_0^x` of the function part, in closed form.
    pub fn integral(&self, x: f64) -> f64 {
        let mut v = self.equilibrium * x;
        for &(rate, m) in &self.modes {
            v -= m * (-(rate * x)).exp_m1() / rate;
        }
        if let Some(tail) = &self.power_tail {
            v += tail.scale * x.powf(1.0 - tail.exponent)
                / ((1.0 - tail.exponent) * gamma(1.0 - tail.exponent));
        }
        v
    }
}

/// Exact relaxation representation: `r` is the distributional derivative
/// of the conjugate impulse response.
pub fn relaxation_rep(m: &Material) -> Result<RelaxationRep> {
    let rep = m.as_analytic().ok_or(Error::NotAnalytic)?;
    if rep.is_atoms_only() {
        let conj = conjugate_rep(rep)?;
        Ok(RelaxationRep {
            equilibrium: conj.drift(),
            impulse_mass: conj.constant(),
            modes: conj
                .levy()
                .atoms()
                .iter()
                .map(|a| (a.rate, a.weight * a.rate))
                .collect(),
            power_tail: None,
        })
    } else if rep.is_pure_stable() {
        let s = rep.levy().stable().expect("pure stable");
        Ok(RelaxationRep {
            equilibrium: 0.0,
            impulse_mass: 0.0,
            modes: vec![],
            power_tail: Some(PowerTail {
                exponent: s.alpha,
                scale: 1.0 / s.scale,
            }),
        })
    } else {
        Err(Error::StablePresent)
    }
}

/// δ₀ mass of the relaxation function: `lim_{θ→∞} 1/(θ h(θ))`.
pub fn delta_mass(m: &Material) -> Result<f64> {
    let limit = theta_h_limit(m)?;
    Ok(if limit.is_finite() { 1.0 / limit } else { 0.0 })
}

/// `lim_{θ→∞} θ h(θ)`, possibly infinite.
fn theta_h_limit(m: &Material) -> Result<f64> {
    match m {
        Material::Analytic(rep) => Ok(if rep.constant() > 0.0 || rep.levy().stable().is_some() {
            f64::INFINITY
        } else {
            rep.drift() + rep.levy().atom_first_moment()
        }),
        Material::Series(a, b) => Ok(theta_h_limit(a)? + theta_h_limit(b)?),
        Material::Parallel(a, b) => {
            let ca = theta_h_limit(a)?;
            let cb = theta_h_limit(b)?;
            Ok(match (ca.is_finite(), cb.is_finite()) {
                (false, false) => f64::INFINITY,
                (false, true) => cb,
                (true, false) => ca,
                (true, true) => 1.0 / (1.0 / ca + 1.0 / cb),
            })
        }
        Material::Composed { .. } => {
            // θ h(θ) = θ² f̂(θ) → f'(0+): probed by forward differences at
            // two scales; a growing quotient means an unbounded slope.
            let f0 = m.eval_impulse(0.0)?;
            if f0 > 0.0 {
                return Ok(f64::INFINITY);
            }
            let s1 = m.eval_impulse(1e-9)? / 1e-9;
            let s2 = m.eval_impulse(1e-10)? / 1e-10;
            if (s2 - s1).abs() <= 0.01 * s1.abs() {
                Ok(s2)
            } else {
                Ok(f64::INFINITY)
            }
        }
    }
}

/// Samples the function part of the relaxation function by numeric
/// inversion of `1/(θ h(θ)) − β`, cross-checked between accelerators.
/// Grid points must be strictly positive.
pub fn relaxation_curve_numeric(m: &Material, grid: &TimeGrid) -> Result<Vec<f64>> {
    if grid.start() <= 0.0 {
        return Err(Error::InvalidGrid("relaxation grid must start after 0"));
    }
    let beta = delta_mass(m)?;
    let real = |theta: f64| 1.0 / (theta * m.laplace_fprime_or_nan(theta)) - beta;
    let complex_eval = |s: Complex64| {
        match m.laplace_fprime_complex(s) {
            Some(h) => (s * h).inv() - beta,
            None => Complex64::new(f64::NAN, 0.0),
        }
    };
    let has_complex = m.laplace_fprime_complex(Complex64::new(1.0, 0.0)).is_some();
    let f_hat = LaplaceFn {
        real: &real,
        complex: if has_complex { Some(&complex_eval) } else { None },
    };
    // The absolute agreement floor tracks the curve scale near 0+, not the
    // local sample: Gaver–Stehfest errors carry the global magnitude even
    // deep into the decay. `θ r̂(θ)` at `θ = 10/t_first` bounds that scale.
    let theta0 = 10.0 / grid.at(0);
    let near_zero = (theta0 * real(theta0)).abs();
    let first = if has_complex {
        numerics::talbot(complex_eval, grid.at(0), TALBOT_TERMS).abs()
    } else {
        numerics::gaver_stehfest(real, grid.at(0), GAVER_ORDER).abs()
    };
    // Subtracting β inside the transform cancels digits of size β, so the
    // inversion noise also scales with it.
    let floor = (1e-4 * near_zero.max(first)).max(1e-6 * beta.abs()).max(1e-12);
    grid.times()
        .map(|t| Ok(numerics::inverse_laplace(&f_hat, t, floor)?.value))
        .collect()
}

/// Max-abs residual of `(f₁ * f₂)(t) − t²/2` on the grid, by trapezoid
/// convolution. Zero for conjugate pairs up to quadrature error.
pub fn verify_conjugation(m1: &Material, m2: &Material, grid: &TimeGrid) -> Result<f64> {
    let f1: Vec<f64> = grid
        .times()
        .map(|t| m1.eval_impulse(t))
        .collect::<Result<_>>()?;
    let f2: Vec<f64> = grid
        .times()
        .map(|t| m2.eval_impulse(t))
        .collect::<Result<_>>()?;
    let conv = numerics::convolve_grid(&f1, &f2, grid)?;
    Ok(grid
        .times()
        .enumerate()
        .map(|(i, t)| (conv[i] - 0.5 * t * t).abs())
        .fold(0.0, f64::max))
}

/// Sampled matrix relaxation curves with the δ₀ channel kept explicit.
#[derive(Debug, Clone)]
pub struct MatrixRelaxation {
    /// Coefficient matrix of the δ₀ term.
    pub impulse_mass: DMatrix<f64>,
    /// Function-part samples, one symmetric matrix per grid time.
    pub values: Vec<DMatrix<f64>>,
}

/// Matrix relaxation by entrywise numeric inversion of `(θ Ĥ(θ))^{-1}`,
/// where `Ĥ` is the matrix of Stieltjes transforms of the material.
pub fn matrix_relaxation_numeric(mm: &MatrixMaterial, grid: &TimeGrid) -> Result<MatrixRelaxation> {
    if grid.start() <= 0.0 {
        return Err(Error::InvalidGrid("relaxation grid must start after 0"));
    }
    let dim = mm.dim();
    let delta = matrix_delta_mass(mm)?;

    let eval_complex = |s: Complex64| -> Result<DMatrix<Complex64>> {
        let h = mm.laplace_fprime_complex(s);
        (h * s)
            .try_inverse()
            .ok_or(Error::SingularTransform { theta: s.re })
    };
    let eval_real = |theta: f64| -> Result<DMatrix<f64>> {
        let h = mm.laplace_fprime(theta);
        (h * theta)
            .try_inverse()
            .ok_or(Error::SingularTransform { theta })
    };

    // Scale near 0+ from `θ r̂(θ)` a decade beyond the first grid point;
    // the δ-matrix subtraction contributes its own cancellation noise.
    let theta0 = 10.0 / grid.at(0);
    let near_zero = eval_real(theta0)? * theta0;
    let scale = near_zero.amax().max(1e-12);
    let floor = (1e-4 * scale).max(1e-6 * delta.amax());

    let mut values = Vec::with_capacity(grid.count());
    for t in grid.times() {
        let mut talbot_val = DMatrix::<f64>::zeros(dim, dim);
        for (s, w) in numerics::talbot_rule(t, TALBOT_TERMS) {
            let inv = eval_complex(s)?;
            talbot_val.zip_apply(&inv, |out, z| *out += (w * z).re);
        }
        talbot_val -= &delta;
        let mut gaver_val = DMatrix::<f64>::zeros(dim, dim);
        for (theta, c) in numerics::gaver_stehfest_rule(t, GAVER_ORDER) {
            let inv = eval_real(theta)?;
            gaver_val.zip_apply(&inv, |out, v| *out += c * v);
        }
        gaver_val -= &delta;
        for i in 0..dim {
            for j in 0..dim {
                let a = talbot_val[(i, j)];
                let b = gaver_val[(i, j)];
                let diff = (a - b).abs();
                if diff > INVERSION_RTOL * a.abs().max(b.abs()) && diff > floor {
                    return Err(Error::InversionDivergence {
                        t,
                        talbot: a,
                        gaver: b,
                    });
                }
            }
        }
        // Exactly symmetric output.
        values.push(0.5 * (&talbot_val + talbot_val.transpose()));
    }
    Ok(MatrixRelaxation {
        impulse_mass: delta,
        values,
    })
}

/// δ₀ coefficient matrix `lim_{θ→∞} (θ Ĥ(θ))^{-1}`: zero on the range of
/// the constant matrix, inverse of the projected `drift + Σ λ J` on its
/// kernel.
fn matrix_delta_mass(mm: &MatrixMaterial) -> Result<DMatrix<f64>> {
    let dim = mm.dim();
    let constant = mm.constant();
    let eig = constant.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let tol = 1e-12 * lam_max.max(1.0);
    let kernel_cols: Vec<usize> = (0..dim)
        .filter(|&i| eig.eigenvalues[i].abs() <= tol)
        .collect();
    if kernel_cols.is_empty() {
        return Ok(DMatrix::zeros(dim, dim));
    }
    let z = DMatrix::from_columns(
        &kernel_cols
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let mut g_inf = mm.drift().clone();
    for (rate, j) in mm.atoms() {
        g_inf += j * *rate;
    }
    let projected = z.transpose() * &g_inf * &z;
    let inv = projected
        .try_inverse()
        .ok_or(Error::SingularTransform { theta: f64::INFINITY })?;
    Ok(&z * inv * z.transpose())
}
