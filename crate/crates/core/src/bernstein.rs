//! Scalar viscoelastic materials as Bernstein functions.
//!
//! An admissible impulse response has the canonical form
//! `f(t) = L + K t + ∫ (1 − e^{−t x}) ν(dx)` with `L, K ≥ 0` and `ν` a
//! Lévy measure on `(0, ∞)`. Here `ν` is restricted to finitely many
//! atoms plus an optional one-sided stable component, which covers every
//! dictionary material exactly and keeps conjugation exact where a finite
//! closed form exists.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics::{self, LaplaceFn, TimeGrid};

/// One exponential relaxation mode: weight `weight` at rate `rate`.
///
/// Under the material ↔ subordinator bijection the rate is the jump size
/// and the weight is the Poisson intensity of that jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub rate: f64,
    pub weight: f64,
}

/// One-sided stable component of index `alpha ∈ (0, 1)`.
///
/// Denotes the Lévy density `scale · sin(πα)/π · x^{−1−α} dx`, which
/// contributes `scale · t^α / (α Γ(α))` to the impulse response and
/// `scale · θ^{−α}` to the Laplace transform of `f'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableComponent {
    pub alpha: f64,
    pub scale: f64,
}

impl StableComponent {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidStableIndex(alpha));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NonPositive {
                name: "stable scale",
                value: scale,
            });
        }
        Ok(Self { alpha, scale })
    }

    /// Contribution to the impulse response: `scale · t^α / (α Γ(α))`.
    pub fn impulse(&self, t: f64) -> f64 {
        self.scale * t.powf(self.alpha) / (self.alpha * gamma(self.alpha))
    }

    /// Contribution to `f'`: `scale · t^{α−1} / Γ(α)`.
    pub fn derivative(&self, t: f64) -> f64 {
        self.scale * t.powf(self.alpha - 1.0) / gamma(self.alpha)
    }

    /// Contribution to the Laplace transform of `f'`: `scale · θ^{−α}`.
    pub fn laplace(&self, theta: f64) -> f64 {
        self.scale * theta.powf(-self.alpha)
    }

    pub fn laplace_complex(&self, theta: Complex64) -> Complex64 {
        theta.powf(-self.alpha) * self.scale
    }

    /// Coefficient `c` of the Laplace exponent term `c λ^α` of the
    /// associated stable subordinator: `c = scale / (α Γ(α))`.
    pub fn exponent_coefficient(&self) -> f64 {
        self.scale / (self.alpha * gamma(self.alpha))
    }
}

/// Lévy measure on `(0, ∞)`: a finite atom list plus an optional stable
/// component. The representation keeps `∫ x/(1+x) dν < ∞` automatically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevyMeasure {
    atoms: Vec<Atom>,
    stable: Option<StableComponent>,
}

impl LevyMeasure {
    /// Builds a canonical measure: atoms sorted by ascending rate,
    /// duplicate rates merged by weight addition, zero weights dropped.
    pub fn new(atoms: Vec<Atom>, stable: Option<StableComponent>) -> Result<Self> {
        let atoms = canonical_atoms(atoms)?;
        Ok(Self { atoms, stable })
    }

    pub fn atoms_only(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms, None)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn stable(&self) -> Option<&StableComponent> {
        self.stable.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.stable.is_none()
    }

    pub fn is_atoms_only(&self) -> bool {
        self.stable.is_none()
    }

    /// Total atom mass `Σ w_i` (h(0) bookkeeping; excludes the stable part).
    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// First atom moment `Σ w_i λ_i`.
    pub fn atom_first_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.rate).sum()
    }
}

/// Sorts, merges duplicates, drops zero weights; rejects nonpositive rates
/// and negative weights. Idempotent.
pub fn canonical_atoms(mut atoms: Vec<Atom>) -> Result<Vec<Atom>> {
    for a in &atoms {
        if !(a.rate.is_finite() && a.rate > 0.0) {
            return Err(Error::NonPositive {
                name: "atom rate",
                value: a.rate,
            });
        }
        if !(a.weight.is_finite() && a.weight >= 0.0) {
            return Err(Error::NegativeOrNonFinite {
                name: "atom weight",
                value: a.weight,
            });
        }
    }
    atoms.sort_by(|x, y| x.rate.total_cmp(&y.rate));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.rate == a.rate => last.weight += a.weight,
            _ => out.push(a),
        }
    }
    out.retain(|a| a.weight > 0.0);
    Ok(out)
}

/// Canonical scalar material: instantaneous compliance `constant`, fluid
/// drift `drift` and Lévy measure `levy`. The impulse response is
/// `f(t) = constant + drift · t + Σ w_i (1 − e^{−λ_i t}) + stable part`
/// and doubles as the law of a subordinator started at `constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinRep {
    constant: f64,
    drift: f64,
    levy: LevyMeasure,
}

impl BernsteinRep {
    pub fn new(constant: f64, drift: f64, levy: LevyMeasure) -> Result<Self> {
        if !(constant.is_finite() && constant >= 0.0) {
            return Err(Error::NegativeOrNonFinite {
                name: "constant",
                value: constant,
            });
        }
        if !(drift.is_finite() && drift >= 0.0) {
            return Err(Error::NegativeOrNonFinite {
                name: "drift",
                value: drift,
            });
        }
        if constant == 0.0 && drift == 0.0 && levy.is_empty() {
            return Err(Error::ZeroMaterial);
        }
        Ok(Self {
            constant,
            drift,
            levy,
        })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn levy(&self) -> &LevyMeasure {
        &self.levy
    }

    pub fn is_atoms_only(&self) -> bool {
        self.levy.is_atoms_only()
    }

    pub fn is_pure_stable(&self) -> bool {
        self.constant == 0.0
            && self.drift == 0.0
            && self.levy.atoms().is_empty()
            && self.levy.stable().is_some()
    }

    /// Impulse response `f(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.constant + self.drift * t;
        for a in self.levy.atoms() {
            v -= a.weight * (-(a.rate * t)).exp_m1();
        }
        if let Some(s) = self.levy.stable() {
            v += s.impulse(t);
        }
        v
    }

    /// Classical derivative `f'(t)` for `t > 0`; completely monotone.
    pub fn derivative(&self, t: f64) -> f64 {
        let mut v = self.drift;
        for a in self.levy.atoms() {
            v += a.weight * a.rate * (-(a.rate * t)).exp();
        }
        if let Some(s) = self.levy.stable() {
            v += s.derivative(t);
        }
        v
    }

    /// Stieltjes-form Laplace transform of `f'` (including the jump of `f`
    /// at 0): `L + K/θ + Σ w_i λ_i/(θ + λ_i) + scale · θ^{−α}`.
    pub fn laplace_fprime(&self, theta: f64) -> f64 {
        let mut v = self.constant + self.drift / theta;
        for a in self.levy.atoms() {
            v += a.weight * a.rate / (theta + a.rate);
        }
        if let Some(s) = self.levy.stable() {
            v += s.laplace(theta);
        }
        v
    }

    pub fn laplace_fprime_complex(&self, theta: Complex64) -> Complex64 {
        let mut v = Complex64::new(self.constant, 0.0) + self.drift / theta;
        for a in self.levy.atoms() {
            v += a.weight * a.rate / (theta + a.rate);
        }
        if let Some(s) = self.levy.stable() {
            v += s.laplace_complex(theta);
        }
        v
    }

    /// Antiderivative `∫_0^x f(s) ds` in closed form.
    pub fn integral(&self, x: f64) -> f64 {
        let mut v = self.constant * x + 0.5 * self.drift * x * x;
        for a in self.levy.atoms() {
            v += a.weight * (x + (-(a.rate * x)).exp_m1() / a.rate);
        }
        if let Some(s) = self.levy.stable() {
            v += s.scale * x.powf(1.0 + s.alpha) / (s.alpha * (1.0 + s.alpha) * gamma(s.alpha));
        }
        v
    }
}

/// A material: a closed-form representation, or a combination evaluable
/// pointwise. Every value is immutable and every operation is pure.
#[derive(Debug, Clone)]
pub enum Material {
    /// Closed-form `(L, K, ν)` triple.
    Analytic(BernsteinRep),
    /// Functional composition `outer(inner(t))`; Bernstein functions form
    /// a cone stable under composition, so this is again admissible.
    Composed {
        outer: Box<Material>,
        inner: Box<Material>,
    },
    /// Pointwise sum of impulse responses that could not be merged into a
    /// single analytic triple.
    Series(Box<Material>, Box<Material>),
    /// Parallel coupling without an exact conjugation path; represented in
    /// the Laplace domain by `h = h₁ h₂ / (h₁ + h₂)` and evaluated by
    /// numeric inversion.
    Parallel(Box<Material>, Box<Material>),
}

impl Material {
    pub fn analytic(rep: BernsteinRep) -> Self {
        Material::Analytic(rep)
    }

    /// The analytic triple, when this material carries one.
    pub fn as_analytic(&self) -> Option<&BernsteinRep> {
        match self {
            Material::Analytic(rep) => Some(rep),
            _ => None,
        }
    }

    pub fn is_atoms_only_analytic(&self) -> bool {
        self.as_analytic().is_some_and(BernsteinRep::is_atoms_only)
    }

    /// Impulse response `f(t)`; rejects negative times.
    pub fn eval_impulse(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        match self {
            Material::Analytic(rep) => Ok(rep.eval(t)),
            Material::Composed { outer, inner } => outer.eval_impulse(inner.eval_impulse(t)?),
            Material::Series(a, b) => Ok(a.eval_impulse(t)? + b.eval_impulse(t)?),
            Material::Parallel(a, b) => {
                if t == 0.0 {
                    let fa = a.eval_impulse(0.0)?;
                    let fb = b.eval_impulse(0.0)?;
                    return Ok(if fa > 0.0 && fb > 0.0 {
                        1.0 / (1.0 / fa + 1.0 / fb)
                    } else {
                        0.0
                    });
                }
                let real = |theta: f64| self.laplace_fprime_or_nan(theta) / theta;
                let complex_eval;
                let complex: Option<&dyn Fn(Complex64) -> Complex64> =
                    match self.laplace_fprime_complex(Complex64::new(1.0, 0.0)) {
                        Some(_) => {
                            complex_eval = |s: Complex64| {
                                self.laplace_fprime_complex(s)
                                    .unwrap_or(Complex64::new(f64::NAN, 0.0))
                                    / s
                            };
                            Some(&complex_eval)
                        }
                        None => None,
                    };
                // Gaver–Stehfest carries an absolute error of order 1e−4
                // of the curve scale; the children's values bound it here.
                let floor = 1e-4
                    * (1.0 + a.eval_impulse(t).unwrap_or(0.0).min(b.eval_impulse(t).unwrap_or(0.0)));
                let f_hat = LaplaceFn {
                    real: &real,
                    complex,
                };
                Ok(numerics::inverse_laplace(&f_hat, t, floor)?.value)
            }
        }
    }

    /// `f'(t)` for `t > 0`; only analytic representations maintain a
    /// termwise derivative.
    pub fn eval_derivative(&self, t: f64) -> Result<f64> {
        let rep = self.as_analytic().ok_or(Error::NotAnalytic)?;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::NonPositive { name: "t", value: t });
        }
        Ok(rep.derivative(t))
    }

    /// Laplace transform of `f'` at real `θ > 0`. Closed form for analytic
    /// and coupled-analytic values; composed values fall back to numeric
    /// quadrature of the impulse response.
    pub fn laplace_fprime(&self, theta: f64) -> Result<f64> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::NonPositive {
                name: "theta",
                value: theta,
            });
        }
        match self {
            Material::Analytic(rep) => Ok(rep.laplace_fprime(theta)),
            Material::Series(a, b) => Ok(a.laplace_fprime(theta)? + b.laplace_fprime(theta)?),
            Material::Parallel(a, b) => {
                let ha = a.laplace_fprime(theta)?;
                let hb = b.laplace_fprime(theta)?;
                Ok(ha * hb / (ha + hb))
            }
            Material::Composed { .. } => {
                Ok(theta * numerics::laplace_of(|t| self.eval_or_nan(t), theta))
            }
        }
    }

    /// Laplace transform of `f'` on the cut plane, when every constituent
    /// admits a closed form there.
    pub fn laplace_fprime_complex(&self, theta: Complex64) -> Option<Complex64> {
        match self {
            Material::Analytic(rep) => Some(rep.laplace_fprime_complex(theta)),
            Material::Series(a, b) => {
                Some(a.laplace_fprime_complex(theta)? + b.laplace_fprime_complex(theta)?)
            }
            Material::Parallel(a, b) => {
                let ha = a.laplace_fprime_complex(theta)?;
                let hb = b.laplace_fprime_complex(theta)?;
                Some(ha * hb / (ha + hb))
            }
            Material::Composed { .. } => None,
        }
    }

    /// Infallible evaluation for use inside numeric kernels; failures
    /// poison the result with NaN, which the kernels' agreement checks
    /// then surface as an inversion divergence.
    pub(crate) fn eval_or_nan(&self, t: f64) -> f64 {
        self.eval_impulse(t).unwrap_or(f64::NAN)
    }

    pub(crate) fn laplace_fprime_or_nan(&self, theta: f64) -> f64 {
        self.laplace_fprime(theta).unwrap_or(f64::NAN)
    }
}

/// Functional composition `outer(inner(t))`, stored symbolically; no
/// attempt is made to recover a closed-form triple of the composite.
pub fn compose(outer: Material, inner: Material) -> Material {
    Material::Composed {
        outer: Box::new(outer),
        inner: Box::new(inner),
    }
}

/// Numeric Bernstein check on a uniform grid: `f ≥ 0`, forward differences
/// `≥ 0`, second differences `≤ 0`, all within a rounding allowance
/// proportional to the sampled magnitude.
pub fn bernstein_grid_check(m: &Material, grid: &TimeGrid) -> Result<()> {
    let samples: Vec<f64> = grid
        .times()
        .map(|t| m.eval_impulse(t))
        .collect::<Result<_>>()?;
    let scale = samples.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let slack = 1e-10 * scale;
    for (i, &v) in samples.iter().enumerate() {
        if v < -slack {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: v });
        }
        if i + 1 < samples.len() && samples[i + 1] - v < -slack {
            return Err(Error::InvalidGrid("forward difference is negative"));
        }
        if i + 2 < samples.len() {
            let second = samples[i + 2] - 2.0 * samples[i + 1] + v;
            if second > slack {
                return Err(Error::InvalidGrid("second difference is positive"));
            }
        }
    }
    Ok(())
}

/// Default grid of the numeric Bernstein check: `t ∈ [0, 10]`, `h = 0.01`.
pub fn default_check_grid() -> TimeGrid {
    TimeGrid::new(0.0, 0.01, 1001).expect("static grid")
}
