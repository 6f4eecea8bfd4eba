//! Material constructors, rheological composition and response solvers.
//!
//! Series coupling adds impulse responses; parallel coupling adds
//! relaxation functions, which on the exact path is conjugation of the
//! series of the conjugates. Responses to load and strain histories are
//! superpositions over steps and constant-rate ramps.

use crate::bernstein::{Atom, BernsteinRep, LevyMeasure, Material, StableComponent};
use crate::conjugation::{self, conjugate_exact};
use crate::error::{Error, Result};
use crate::numerics::{cumulative_trapezoid, interp_grid, TimeGrid};

fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// Elastic element of stiffness `a`: `f(t) = 1/a`.
pub fn spring(a: f64) -> Result<Material> {
    let a = check_positive("stiffness", a)?;
    Ok(Material::Analytic(BernsteinRep::new(
        1.0 / a,
        0.0,
        LevyMeasure::empty(),
    )?))
}

/// Viscous element with `f(t) = a t` (`a` is a fluidity, the reciprocal
/// of a viscosity); the conjugate of `spring(a)`.
pub fn dashpot(a: f64) -> Result<Material> {
    let a = check_positive("rate", a)?;
    Ok(Material::Analytic(BernsteinRep::new(
        0.0,
        a,
        LevyMeasure::empty(),
    )?))
}

/// Maxwell element: spring of stiffness `g` and dashpot of viscosity
/// `eta` in series, `f(t) = 1/g + t/eta`.
pub fn maxwell(g: f64, eta: f64) -> Result<Material> {
    let g = check_positive("stiffness", g)?;
    let eta = check_positive("viscosity", eta)?;
    Ok(Material::Analytic(BernsteinRep::new(
        1.0 / g,
        1.0 / eta,
        LevyMeasure::empty(),
    )?))
}

/// Kelvin-Voigt element: `f(t) = (1/a)(1 − e^{−(a/b) t})`, a single
/// relaxation mode of rate `a/b` and weight `1/a`.
pub fn kelvin_voigt(a: f64, b: f64) -> Result<Material> {
    let a = check_positive("stiffness", a)?;
    let b = check_positive("viscosity", b)?;
    Ok(Material::Analytic(BernsteinRep::new(
        0.0,
        0.0,
        LevyMeasure::atoms_only(vec![Atom {
            rate: a / b,
            weight: 1.0 / a,
        }])?,
    )?))
}

/// Pure one-sided stable material: `f(t) = c · t^α / (α Γ(α))`.
pub fn stable_material(alpha: f64, c: f64) -> Result<Material> {
    let levy = LevyMeasure::new(vec![], Some(StableComponent::new(alpha, c)?))?;
    Ok(Material::Analytic(BernsteinRep::new(0.0, 0.0, levy)?))
}

/// General finite combination: constant, drift and a Prony atom list.
/// The all-zero material is rejected.
pub fn prony(constant: f64, drift: f64, atoms: &[(f64, f64)]) -> Result<Material> {
    let atoms = atoms
        .iter()
        .map(|&(rate, weight)| Atom { rate, weight })
        .collect();
    Ok(Material::Analytic(BernsteinRep::new(
        constant,
        drift,
        LevyMeasure::atoms_only(atoms)?,
    )?))
}

/// Series coupling: impulse responses add. Two analytic values merge into
/// one analytic triple whenever their stable components are compatible;
/// otherwise the sum is kept symbolically.
pub fn series(m1: &Material, m2: &Material) -> Material {
    if let (Some(a), Some(b)) = (m1.as_analytic(), m2.as_analytic()) {
        if let Some(merged) = merge_reps(a, b) {
            return Material::Analytic(merged);
        }
    }
    Material::Series(Box::new(m1.clone()), Box::new(m2.clone()))
}

fn merge_reps(a: &BernsteinRep, b: &BernsteinRep) -> Option<BernsteinRep> {
    let stable = match (a.levy().stable(), b.levy().stable()) {
        (None, None) => None,
        (Some(s), None) | (None, Some(s)) => Some(*s),
        (Some(s1), Some(s2)) if s1.alpha == s2.alpha => Some(StableComponent {
            alpha: s1.alpha,
            scale: s1.scale + s2.scale,
        }),
        // Different stable indices do not sum to a single component.
        _ => return None,
    };
    let mut atoms: Vec<Atom> = a.levy().atoms().to_vec();
    atoms.extend_from_slice(b.levy().atoms());
    let levy = LevyMeasure::new(atoms, stable).ok()?;
    BernsteinRep::new(a.constant() + b.constant(), a.drift() + b.drift(), levy).ok()
}

/// Parallel coupling: relaxation functions add. Atoms-only pairs take the
/// exact path `conjugate(series(conjugate m₁, conjugate m₂))`; any other
/// pair yields a Laplace-domain value evaluated by numeric inversion.
pub fn parallel(m1: &Material, m2: &Material) -> Result<Material> {
    if m1.is_atoms_only_analytic() && m2.is_atoms_only_analytic() {
        let c1 = conjugate_exact(m1)?;
        let c2 = conjugate_exact(m2)?;
        return conjugate_exact(&series(&c1, &c2));
    }
    Ok(Material::Parallel(Box::new(m1.clone()), Box::new(m2.clone())))
}

/// One jump of the driving history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub time: f64,
    pub jump: f64,
}

/// One constant-rate ramp of the driving history, active on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

/// Piecewise load or strain history: steps plus constant-rate ramps,
/// canonically ordered by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadHistory {
    steps: Vec<Step>,
    ramps: Vec<Ramp>,
}

impl LoadHistory {
    pub fn new(mut steps: Vec<Step>, mut ramps: Vec<Ramp>) -> Result<Self> {
        for s in &steps {
            if !(s.time.is_finite() && s.time >= 0.0) || !s.jump.is_finite() {
                return Err(Error::InvalidLoad("step times must be finite and nonnegative"));
            }
        }
        for r in &ramps {
            if !(r.start.is_finite() && r.start >= 0.0 && r.end.is_finite()) || !r.rate.is_finite()
            {
                return Err(Error::InvalidLoad("ramp bounds must be finite and nonnegative"));
            }
            if r.start >= r.end {
                return Err(Error::InvalidLoad("ramp start must precede its end"));
            }
        }
        steps.sort_by(|a, b| a.time.total_cmp(&b.time));
        ramps.sort_by(|a, b| a.start.total_cmp(&b.start));
        Ok(Self { steps, ramps })
    }

    /// Unit jump at t = 0.
    pub fn unit_step() -> Self {
        Self {
            steps: vec![Step { time: 0.0, jump: 1.0 }],
            ramps: vec![],
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn ramps(&self) -> &[Ramp] {
        &self.ramps
    }

    /// Value of the history at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for s in &self.steps {
            if t >= s.time {
                v += s.jump;
            }
        }
        for r in &self.ramps {
            if t >= r.start {
                v += r.rate * (t.min(r.end) - r.start);
            }
        }
        v
    }

    /// Scales all jumps and rates.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            steps: self
                .steps
                .iter()
                .map(|s| Step { time: s.time, jump: s.jump * factor })
                .collect(),
            ramps: self
                .ramps
                .iter()
                .map(|r| Ramp { rate: r.rate * factor, ..*r })
                .collect(),
        }
    }
}

/// Superposition kernel shared by the scalar and matrix creep solvers:
/// steps read the sampled response, ramps read its cumulative trapezoid
/// integral, both interpolated on the grid.
pub(crate) fn superpose(samples: &[f64], load: &LoadHistory, grid: &TimeGrid) -> Vec<f64> {
    let cumulative = cumulative_trapezoid(samples, grid.step());
    grid.times()
        .map(|t| {
            let mut q = 0.0;
            for s in load.steps() {
                if t >= s.time {
                    q += s.jump * interp_grid(samples, grid, t - s.time);
                }
            }
            for r in load.ramps() {
                if t >= r.start {
                    let upper = interp_grid(&cumulative, grid, t - r.start);
                    let lower = interp_grid(&cumulative, grid, (t - r.end).max(0.0));
                    q += r.rate * (upper - lower);
                }
            }
            q
        })
        .collect()
}

/// Creep response `q(t) = ∫_{[0,t]} f(t−τ) dQ(τ)` sampled on the grid.
pub fn respond_creep(m: &Material, load: &LoadHistory, grid: &TimeGrid) -> Result<Vec<f64>> {
    if grid.start() != 0.0 {
        return Err(Error::GridMismatch("creep grid must start at 0"));
    }
    let samples: Vec<f64> = grid
        .times()
        .map(|t| m.eval_impulse(t))
        .collect::<Result<_>>()?;
    Ok(superpose(&samples, load, grid))
}

/// Relaxation response with the δ₀ channel kept out of the sampled curve:
/// strain jumps through the δ₀ mass appear as explicit impulses, strain
/// ramps through it as bounded contributions inside `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResponse {
    pub values: Vec<f64>,
    /// `(time, mass)` of instantaneous force impulses `β · jump`.
    pub impulses: Vec<(f64, f64)>,
}

/// Relaxation response `Q(t) = ∫_{[0,t]} r(t−τ) dq(τ)` to a strain
/// history. Exact closed forms when the material admits a finite
/// relaxation representation, numeric inversion otherwise.
pub fn respond_relaxation(
    m: &Material,
    strain: &LoadHistory,
    grid: &TimeGrid,
) -> Result<RelaxationResponse> {
    if grid.start() != 0.0 {
        return Err(Error::GridMismatch("relaxation grid must start at 0"));
    }
    let exact = conjugation::relaxation_rep(m).ok();
    let (beta, values) = match &exact {
        Some(rep) => {
            let values = grid
                .times()
                .map(|t| {
                    let mut q = 0.0;
                    for s in strain.steps() {
                        if t >= s.time {
                            q += s.jump * rep.eval(t - s.time);
                        }
                    }
                    for r in strain.ramps() {
                        if t >= r.start {
                            q += r.rate
                                * (rep.integral(t - r.start) - rep.integral((t - r.end).max(0.0)));
                        }
                    }
                    q
                })
                .collect();
            (rep.impulse_mass, values)
        }
        None => {
            let beta = conjugation::delta_mass(m)?;
            // The t = 0 sample of the numeric curve stands for the 0+ limit
            // and is taken at h/100.
            let h = grid.step();
            let near_zero = TimeGrid::new(0.01 * h, h, 2)?;
            let mut r_samples = vec![conjugation::relaxation_curve_numeric(m, &near_zero)?[0]];
            let tail_grid = TimeGrid::new(h, h, (grid.count() - 1).max(2))?;
            let mut tail = conjugation::relaxation_curve_numeric(m, &tail_grid)?;
            tail.truncate(grid.count() - 1);
            r_samples.extend(tail);
            (beta, superpose(&r_samples, strain, grid))
        }
    };
    let mut values = values;
    // δ₀ acting on ramps contributes β · rate while the ramp is active.
    for (i, t) in grid.times().enumerate() {
        for r in strain.ramps() {
            if t >= r.start && t < r.end {
                values[i] += beta * r.rate;
            }
        }
    }
    let impulses = strain
        .steps()
        .iter()
        .filter(|s| beta != 0.0 && s.jump != 0.0)
        .map(|s| (s.time, beta * s.jump))
        .collect();
    Ok(RelaxationResponse { values, impulses })
}
