//! Subordinator and PAIS simulation, and Monte Carlo validation of the
//! material ↔ process correspondence.
//!
//! A scalar material `(L, K, ν)` is in bijection with the subordinator
//! started at `L`, with drift `K` and Lévy measure `ν`: an atom of `ν` at
//! rate `x` with weight `w` is a compound-Poisson jump of size `x` and
//! intensity `w`. Sampling is event-driven for the atom part, exact in
//! distribution for the one-sided stable part, and reproducible across
//! schedulings through one counter-based RNG stream per path index.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::bernstein::{BernsteinRep, LevyMeasure, Material};
use crate::error::{Error, Result};
use crate::finite_network::MatrixMaterial;
use crate::numerics::compensated_sum;

/// Law of a simulable subordinator: start level `X₀`, drift and Lévy
/// measure; a field-for-field mirror of the scalar material triple.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorSpec {
    start: f64,
    drift: f64,
    levy: LevyMeasure,
}

impl SubordinatorSpec {
    pub fn new(start: f64, drift: f64, levy: LevyMeasure) -> Result<Self> {
        if !(start.is_finite() && start >= 0.0) {
            return Err(Error::NegativeOrNonFinite { name: "start", value: start });
        }
        if !(drift.is_finite() && drift >= 0.0) {
            return Err(Error::NegativeOrNonFinite { name: "drift", value: drift });
        }
        Ok(Self { start, drift, levy })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn levy(&self) -> &LevyMeasure {
        &self.levy
    }

    /// Laplace exponent `φ(λ) = K λ + Σ w (1 − e^{−λ x}) + c λ^α`, so that
    /// `E e^{−λ (X_τ − X_0)} = e^{−τ φ(λ)}`.
    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        let mut v = self.drift * lambda;
        for a in self.levy.atoms() {
            v -= a.weight * (-(lambda * a.rate)).exp_m1();
        }
        if let Some(s) = self.levy.stable() {
            v += s.exponent_coefficient() * lambda.powf(s.alpha);
        }
        v
    }
}

/// Field-for-field bijection, material → subordinator.
pub fn subordinator_from_material(m: &Material) -> Result<SubordinatorSpec> {
    let rep = m.as_analytic().ok_or(Error::NotAnalytic)?;
    SubordinatorSpec::new(rep.constant(), rep.drift(), rep.levy().clone())
}

/// Field-for-field bijection, subordinator → material.
pub fn material_from_subordinator(s: &SubordinatorSpec) -> Result<Material> {
    Ok(Material::Analytic(BernsteinRep::new(
        s.start,
        s.drift,
        s.levy.clone(),
    )?))
}

/// One sampled trajectory: values at strictly increasing times, with the
/// compound-Poisson jumps recorded as generated. Between recorded times
/// the path is reconstructed right-continuously.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(time, size)` of every atom jump, in time order.
    pub jumps: Vec<(f64, f64)>,
}

impl Path {
    pub fn end_value(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }
}

/// Samples a standard totally skewed positive stable variable with
/// `E e^{−λ S} = e^{−λ^α}` by the Chambers–Mallows–Stuck construction
/// specialized to `α ∈ (0, 1)`.
pub(crate) fn sample_one_sided_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    let u = PI * rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
    let w = -rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12).ln();
    let s1 = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let s2 = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    s1 * s2
}

/// Stable increment over `dt` for the exponent term `c λ^α`.
fn stable_increment(coefficient: f64, alpha: f64, dt: f64, rng: &mut impl Rng) -> f64 {
    (coefficient * dt).powf(1.0 / alpha) * sample_one_sided_stable(alpha, rng)
}

/// Event-driven path construction over `[0, horizon]`: exponential
/// inter-arrivals per atom (no time discretization for the atom part),
/// drift added continuously, stable increments drawn exactly in
/// distribution between consecutive recorded times.
pub fn sample_path(s: &SubordinatorSpec, horizon: f64, seed: u64) -> Result<Path> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::NonPositive { name: "horizon", value: horizon });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<(f64, f64)> = Vec::new();
    for atom in s.levy.atoms() {
        let exp = Exp::new(atom.weight).expect("positive intensity");
        let mut t = 0.0;
        loop {
            t += exp.sample(&mut rng);
            if t > horizon {
                break;
            }
            events.push((t, atom.rate));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let stable = s.levy.stable().map(|c| (c.exponent_coefficient(), c.alpha));
    let mut times = Vec::with_capacity(events.len() + 2);
    let mut values = Vec::with_capacity(events.len() + 2);
    let mut level = s.start;
    let mut last_t = 0.0;
    times.push(0.0);
    values.push(level);
    for &(t, size) in &events {
        if let Some((coef, alpha)) = stable {
            level += stable_increment(coef, alpha, t - last_t, &mut rng);
        }
        level += s.drift * (t - last_t) + size;
        times.push(t);
        values.push(level);
        last_t = t;
    }
    if last_t < horizon {
        if let Some((coef, alpha)) = stable {
            level += stable_increment(coef, alpha, horizon - last_t, &mut rng);
        }
        level += s.drift * (horizon - last_t);
        times.push(horizon);
        values.push(level);
    }
    Ok(Path {
        times,
        values,
        jumps: events,
    })
}

/// Increment `X_τ − X_0` alone, matching `sample_path` in distribution
/// but without building the trajectory.
fn sample_increment(s: &SubordinatorSpec, horizon: f64, rng: &mut ChaCha8Rng) -> f64 {
    let mut inc = s.drift * horizon;
    for atom in s.levy.atoms() {
        let count = Poisson::new(atom.weight * horizon)
            .expect("positive mean")
            .sample(rng);
        inc += count * atom.rate;
    }
    if let Some(c) = s.levy.stable() {
        inc += stable_increment(c.exponent_coefficient(), c.alpha, horizon, rng);
    }
    inc
}

/// Monte Carlo check of the subordinator Laplace functional.
#[derive(Debug, Clone, Copy)]
pub struct McCheck {
    pub estimate: f64,
    pub stderr: f64,
    pub analytic: f64,
}

impl McCheck {
    /// Whether the estimate sits within `4 · stderr` of the analytic value.
    pub fn passes(&self) -> bool {
        (self.estimate - self.analytic).abs() <= 4.0 * self.stderr
    }
}

/// Estimates `E e^{−λ (X_τ − X_0)}` over `n_paths` independent paths and
/// compares with `e^{−τ φ(λ)}`. One RNG stream per path index keeps the
/// result independent of the parallel schedule.
pub fn mc_laplace_check(
    s: &SubordinatorSpec,
    lambda: f64,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McCheck> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::NegativeOrNonFinite { name: "lambda", value: lambda });
    }
    if n_paths < 100 {
        return Err(Error::NonPositive {
            name: "n_paths (minimum 100)",
            value: n_paths as f64,
        });
    }
    let values: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            (-lambda * sample_increment(s, horizon, &mut rng)).exp()
        })
        .collect();
    let n = n_paths as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    Ok(McCheck {
        estimate: mean,
        stderr: (var / n).sqrt(),
        analytic: (-horizon * s.laplace_exponent(lambda)).exp(),
    })
}

/// Local characteristics of a simulable PAIS: deterministic start `Y₀`,
/// Gaussian covariance `Σ` and finite-activity jump atoms `(point,
/// intensity)`. The Lévy–Khintchine drift `η` and the compensation of
/// small jumps play no role in the material maps and are not carried.
#[derive(Debug, Clone)]
pub struct PaisCharacteristics {
    start: DVector<f64>,
    sigma: DMatrix<f64>,
    jump_atoms: Vec<(DVector<f64>, f64)>,
}

impl PaisCharacteristics {
    pub fn new(
        start: DVector<f64>,
        sigma: DMatrix<f64>,
        jump_atoms: Vec<(DVector<f64>, f64)>,
    ) -> Result<Self> {
        let dim = start.len();
        if sigma.nrows() != dim || !sigma.is_square() {
            return Err(Error::DimensionMismatch("sigma must be dim × dim"));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 1e-12 * sigma.amax().max(1.0) {
            return Err(Error::NotSymmetric { max_asym: asym, tol: 1e-12 });
        }
        let min_eig = sigma.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < -1e-10 * sigma.amax().max(1.0) {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: min_eig });
        }
        for (y, intensity) in &jump_atoms {
            if y.len() != dim {
                return Err(Error::DimensionMismatch("jump point dimension mismatch"));
            }
            if y.norm() == 0.0 {
                return Err(Error::ZeroJumpPoint);
            }
            if !(intensity.is_finite() && *intensity > 0.0) {
                return Err(Error::NonPositive { name: "jump intensity", value: *intensity });
            }
        }
        Ok(Self { start, sigma, jump_atoms })
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn jump_atoms(&self) -> &[(DVector<f64>, f64)] {
        &self.jump_atoms
    }
}

/// Closed-form material of a PAIS:
/// `f_ij(t) = Y₀^i Y₀^j + t Σ_ij + Σ_atoms intensity (1 − e^{−t|y|²}) y_i y_j / |y|²`,
/// i.e. one rank-one spectral atom at rate `|y|²` per jump point.
pub fn material_from_characteristics(c: &PaisCharacteristics) -> Result<MatrixMaterial> {
    let dim = c.dim();
    let constant = c.start() * c.start().transpose();
    let mut atoms = Vec::with_capacity(c.jump_atoms.len());
    for (y, intensity) in &c.jump_atoms {
        let norm2 = y.norm_squared();
        atoms.push((norm2, (y * y.transpose()) * (*intensity / norm2)));
    }
    MatrixMaterial::new(dim, atoms, c.sigma.clone(), constant)
}

/// One sampled PAIS trajectory with everything its material estimator
/// needs: the recorded jumps, and both the known and the realized
/// Gaussian quadratic variation over the horizon.
#[derive(Debug, Clone)]
pub struct PaisPath {
    pub times: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    /// `(time, jump vector)`, or `None` for externally loaded paths
    /// without records.
    pub jumps: Option<Vec<(f64, DVector<f64>)>>,
    /// Exact `⟨Y^c, Y^c⟩` over the horizon: `horizon · Σ`.
    pub qv_known: DMatrix<f64>,
    /// Realized quadratic variation of the sampled Gaussian increments.
    pub qv_realized: DMatrix<f64>,
}

impl PaisPath {
    pub fn start(&self) -> &DVector<f64> {
        &self.values[0]
    }
}

/// Samples a PAIS path: Brownian part with covariance `t Σ` on
/// `n_gauss_steps` uniform increments, plus exactly recorded
/// compound-Poisson jumps of the atoms.
pub fn sample_pais_path(
    c: &PaisCharacteristics,
    horizon: f64,
    n_gauss_steps: usize,
    seed: u64,
) -> Result<PaisPath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::NonPositive { name: "horizon", value: horizon });
    }
    if n_gauss_steps == 0 {
        return Err(Error::NonPositive { name: "n_gauss_steps", value: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_pais_path_with(c, horizon, n_gauss_steps, &mut rng)
}

fn sample_pais_path_with(
    c: &PaisCharacteristics,
    horizon: f64,
    n_gauss_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PaisPath> {
    let dim = c.dim();
    // Symmetric PSD square root of Σ.
    let eig = c.sigma.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let sigma_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&sqrt_vals)
        * eig.eigenvectors.transpose();
    let has_gauss = sqrt_vals.iter().any(|&v| v > 0.0);

    let mut jump_events: Vec<(f64, DVector<f64>)> = Vec::new();
    for (y, intensity) in &c.jump_atoms {
        let exp = Exp::new(*intensity).expect("positive intensity");
        let mut t = 0.0;
        loop {
            t += exp.sample(rng);
            if t > horizon {
                break;
            }
            jump_events.push((t, y.clone()));
        }
    }
    jump_events.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Merge the Gaussian grid with the jump times.
    let dt = horizon / n_gauss_steps as f64;
    let mut grid_times: Vec<f64> = (0..=n_gauss_steps).map(|i| dt * i as f64).collect();
    grid_times.extend(jump_events.iter().map(|(t, _)| *t));
    grid_times.sort_by(f64::total_cmp);
    grid_times.dedup();

    let mut times = Vec::with_capacity(grid_times.len());
    let mut values = Vec::with_capacity(grid_times.len());
    let mut qv_realized = DMatrix::<f64>::zeros(dim, dim);
    let mut level = c.start.clone();
    let mut last_t = 0.0;
    let mut next_jump = 0usize;
    times.push(0.0);
    values.push(level.clone());
    for &t in grid_times.iter().skip(1) {
        if has_gauss {
            let step = t - last_t;
            let z = DVector::from_iterator(dim, (0..dim).map(|_| {
                let g: f64 = StandardNormal.sample(rng);
                g
            }));
            let inc = &sigma_sqrt * z * step.sqrt();
            qv_realized += &inc * inc.transpose();
            level += inc;
        }
        while next_jump < jump_events.len() && jump_events[next_jump].0 <= t {
            level += &jump_events[next_jump].1;
            next_jump += 1;
        }
        times.push(t);
        values.push(level.clone());
        last_t = t;
    }
    Ok(PaisPath {
        times,
        values,
        jumps: Some(jump_events),
        qv_known: &c.sigma * horizon,
        qv_realized,
    })
}

/// Samples an ensemble of independent PAIS paths, one RNG stream per path
/// index; the ensemble is identical for any worker count.
pub fn sample_pais_ensemble(
    c: &PaisCharacteristics,
    horizon: f64,
    n_gauss_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PaisPath>> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_pais_path_with(c, horizon, n_gauss_steps, &mut rng)
        })
        .collect()
}

/// Which quadratic-variation record feeds the `t · Y₁^{c2}` term of the
/// estimator: the exact `t Σ` supplied by the simulator, or the realized
/// variance of the discretized increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvMode {
    Known,
    Realized,
}

/// Monte Carlo estimate of an impulse-response matrix on a time grid,
/// with entrywise standard errors.
#[derive(Debug, Clone)]
pub struct MaterialEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<DMatrix<f64>>,
    pub stderr: Vec<DMatrix<f64>>,
}

/// Path-functional estimator of the material of a PAIS over unit horizon:
/// `f_ij(t) = Y₀^i Y₀^j + E[t QV_ij + Σ_jumps (1 − e^{−t|Δ|²}) Δ_i Δ_j / |Δ|²]`.
pub fn estimate_material_from_paths(
    paths: &[PaisPath],
    t_grid: &[f64],
    mode: QvMode,
) -> Result<MaterialEstimate> {
    if paths.is_empty() {
        return Err(Error::NonPositive { name: "paths", value: 0.0 });
    }
    let dim = paths[0].start().len();
    let start = paths[0].start().clone();
    let base = &start * start.transpose();
    let n = paths.len() as f64;

    let mut mean = Vec::with_capacity(t_grid.len());
    let mut stderr = Vec::with_capacity(t_grid.len());
    // Per-path functional values, reused across the grid entry by entry.
    let mut per_path: Vec<DMatrix<f64>> = vec![DMatrix::zeros(dim, dim); paths.len()];
    for &t in t_grid {
        for (p, path) in paths.iter().enumerate() {
            let qv = match mode {
                QvMode::Known => &path.qv_known,
                QvMode::Realized => &path.qv_realized,
            };
            let mut g = qv * t;
            let jumps = path.jumps.as_ref().ok_or(Error::MissingJumpRecords)?;
            for (_, delta) in jumps {
                let norm2 = delta.norm_squared();
                let weight = -(-(t * norm2)).exp_m1() / norm2;
                g += delta * delta.transpose() * weight;
            }
            per_path[p] = g;
        }
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut se = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let vals: Vec<f64> = per_path.iter().map(|g| g[(i, j)]).collect();
                let mu = compensated_sum(vals.iter().copied()) / n;
                let var =
                    compensated_sum(vals.iter().map(|v| (v - mu) * (v - mu))) / (n - 1.0).max(1.0);
                m[(i, j)] = base[(i, j)] + mu;
                se[(i, j)] = (var / n).sqrt();
            }
        }
        mean.push(m);
        stderr.push(se);
    }
    Ok(MaterialEstimate {
        times: t_grid.to_vec(),
        mean,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{kelvin_voigt, maxwell, stable_material};
    use approx::assert_relative_eq;
    use statrs::function::erf::erfc;

    #[test]
    fn bijection_round_trip_is_field_exact() {
        // Kelvin-Voigt(1,1): Poisson jumps of size 1, intensity 1, start 0.
        let m = kelvin_voigt(1.0, 1.0).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        assert_eq!(s.start(), 0.0);
        assert_eq!(s.drift(), 0.0);
        assert_eq!(s.levy().atoms().len(), 1);
        assert_eq!(s.levy().atoms()[0].rate, 1.0);
        assert_eq!(s.levy().atoms()[0].weight, 1.0);

        // Maxwell(G, η): uniform translation of speed 1/η from 1/G.
        let m = maxwell(2.0, 4.0).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        assert_eq!(s.start(), 0.5);
        assert_eq!(s.drift(), 0.25);
        assert!(s.levy().is_empty());

        let back = material_from_subordinator(&s).unwrap();
        assert_eq!(back.as_analytic(), m.as_analytic());

        // Composed inputs carry no triple.
        let c = crate::bernstein::compose(m.clone(), kelvin_voigt(1.0, 1.0).unwrap());
        assert!(matches!(subordinator_from_material(&c), Err(Error::NotAnalytic)));
    }

    #[test]
    fn drift_only_path_is_affine_line() {
        let m = maxwell(2.0, 4.0).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        let p = sample_path(&s, 10.0, 7).unwrap();
        assert!(p.jumps.is_empty());
        for (t, v) in p.times.iter().zip(&p.values) {
            assert_relative_eq!(*v, 0.5 + 0.25 * t, max_relative = 1e-14);
        }
        assert_eq!(p.end_value(), 0.5 + 0.25 * 10.0);
    }

    #[test]
    fn poisson_jump_count_is_consistent() {
        // Atom (size 2, intensity 3) over horizon 10: 30 expected jumps.
        let m = prony_atoms(&[(2.0, 3.0)]);
        let s = subordinator_from_material(&m).unwrap();
        let mut total = 0usize;
        let reps = 40;
        for seed in 0..reps {
            let p = sample_path(&s, 10.0, seed).unwrap();
            for (_, size) in &p.jumps {
                assert_eq!(*size, 2.0);
            }
            total += p.jumps.len();
        }
        let mean = total as f64 / reps as f64;
        // 4 σ / √reps band around the Poisson mean 30.
        let band = 4.0 * (30.0_f64).sqrt() / (reps as f64).sqrt();
        assert!((mean - 30.0).abs() <= band, "mean {mean}");
    }

    fn prony_atoms(atoms: &[(f64, f64)]) -> Material {
        crate::materials::prony(0.0, 0.0, atoms).unwrap()
    }

    #[test]
    fn path_values_reconstruct_jump_sum() {
        let m = prony_atoms(&[(1.5, 2.0), (0.5, 1.0)]);
        let s = subordinator_from_material(&m).unwrap();
        let p = sample_path(&s, 5.0, 42).unwrap();
        let jump_sum: f64 = p.jumps.iter().map(|(_, x)| x).sum();
        assert_relative_eq!(p.end_value(), jump_sum, max_relative = 1e-12);
        // Jump times strictly increasing.
        assert!(p.jumps.windows(2).all(|w| w[0].0 < w[1].0));
        // Deterministic under the same seed.
        let q = sample_path(&s, 5.0, 42).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn stable_endpoint_passes_kolmogorov_smirnov() {
        // φ(λ) = √λ: the endpoint is Lévy-distributed with CDF
        // erfc(1/(2√x)). KS at the 1% level, n = 2000.
        let scale = 0.5 * std::f64::consts::PI.sqrt();
        let m = stable_material(0.5, scale).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        let n = 2000;
        let mut xs: Vec<f64> = (0..n)
            .map(|seed| sample_path(&s, 1.0, 1000 + seed as u64).unwrap().end_value())
            .collect();
        xs.sort_by(f64::total_cmp);
        let mut d = 0.0_f64;
        for (i, &x) in xs.iter().enumerate() {
            let cdf = erfc(1.0 / (2.0 * x.sqrt()));
            d = d.max(((i + 1) as f64 / n as f64 - cdf).abs());
            d = d.max((cdf - i as f64 / n as f64).abs());
        }
        let critical = 1.628 / (n as f64).sqrt();
        assert!(d <= critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn mc_check_drift_only_is_exact() {
        let m = maxwell(2.0, 4.0).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        let r = mc_laplace_check(&s, 3.0, 2.0, 200, 1).unwrap();
        assert_eq!(r.stderr, 0.0);
        assert_relative_eq!(r.estimate, (-3.0_f64 * (0.25 * 2.0)).exp(), max_relative = 1e-13);
        // X₀ = L cancels in the increment; the analytic side matches.
        assert_relative_eq!(r.estimate, r.analytic, max_relative = 1e-13);
        assert!(r.passes());
    }

    #[test]
    fn mc_check_kelvin_voigt_functional() {
        let m = kelvin_voigt(1.0, 1.0).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        let r = mc_laplace_check(&s, 1.0, 1.0, 20_000, 11).unwrap();
        assert_relative_eq!(r.analytic, 0.5314636053866157, max_relative = 1e-12);
        assert!(r.passes(), "estimate {} vs {}", r.estimate, r.analytic);
    }

    #[test]
    fn mc_check_is_schedule_independent() {
        let m = kelvin_voigt(1.0, 1.0).unwrap();
        let s = subordinator_from_material(&m).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| mc_laplace_check(&s, 1.0, 1.0, 5000, 3).unwrap());
        let b = quad.install(|| mc_laplace_check(&s, 1.0, 1.0, 5000, 3).unwrap());
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn independent_sum_matches_summed_exponents() {
        // Series remark: X¹ + X² has exponent φ₁ + φ₂.
        let s1 = subordinator_from_material(&kelvin_voigt(1.0, 1.0).unwrap()).unwrap();
        let s2 = subordinator_from_material(&maxwell(2.0, 4.0).unwrap()).unwrap();
        let lambda = 0.8;
        let horizon = 1.0;
        let n = 20_000;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let mut r1 = ChaCha8Rng::seed_from_u64(77);
                r1.set_stream(i as u64);
                let mut r2 = ChaCha8Rng::seed_from_u64(together_seed());
                r2.set_stream(i as u64);
                let inc = sample_increment(&s1, horizon, &mut r1)
                    + sample_increment(&s2, horizon, &mut r2);
                (-lambda * inc).exp()
            })
            .collect();
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)))
            / (n as f64 - 1.0);
        let stderr = (var / n as f64).sqrt();
        let analytic =
            (-horizon * (s1.laplace_exponent(lambda) + s2.laplace_exponent(lambda))).exp();
        assert!(
            (mean - analytic).abs() <= 4.0 * stderr,
            "mean {mean} analytic {analytic} stderr {stderr}"
        );
    }

    fn together_seed() -> u64 {
        0x5eed
    }

    #[test]
    fn jump_measure_projection_moments() {
        // E Σ g(ΔY) = τ w g(x) for g ∈ {1, id, square}.
        let (x, w, tau) = (2.0, 3.0, 5.0);
        let m = prony_atoms(&[(x, w)]);
        let s = subordinator_from_material(&m).unwrap();
        let n = 4000;
        let mut sums = [0.0_f64; 3];
        let mut sq = [0.0_f64; 3];
        for seed in 0..n {
            let p = sample_path(&s, tau, 90_000 + seed as u64).unwrap();
            let g = [
                p.jumps.len() as f64,
                p.jumps.iter().map(|(_, y)| y).sum::<f64>(),
                p.jumps.iter().map(|(_, y)| y * y).sum::<f64>(),
            ];
            for k in 0..3 {
                sums[k] += g[k];
                sq[k] += g[k] * g[k];
            }
        }
        let expected = [tau * w, tau * w * x, tau * w * x * x];
        for k in 0..3 {
            let mean = sums[k] / n as f64;
            let var = (sq[k] / n as f64 - mean * mean).max(0.0);
            let stderr = (var / n as f64).sqrt();
            assert!(
                (mean - expected[k]).abs() <= 4.0 * stderr,
                "moment {k}: {mean} vs {}",
                expected[k]
            );
        }
    }

    #[test]
    fn characteristics_validation() {
        let y0 = DVector::from_vec(vec![0.0, 0.0]);
        let sigma = DMatrix::identity(2, 2);
        assert!(PaisCharacteristics::new(
            y0.clone(),
            sigma.clone(),
            vec![(DVector::from_vec(vec![0.0, 0.0]), 1.0)]
        )
        .is_err());
        assert!(PaisCharacteristics::new(
            y0.clone(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.2, 1.0]),
            vec![]
        )
        .is_err());
        assert!(PaisCharacteristics::new(y0, sigma, vec![]).is_ok());
    }

    #[test]
    fn characteristics_to_material_examples() {
        // Single jump direction e₁: f₁₁ = 1 − e^{−t}, other entries 0.
        let c = PaisCharacteristics::new(
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
            vec![(DVector::from_vec(vec![1.0, 0.0]), 1.0)],
        )
        .unwrap();
        let m = material_from_characteristics(&c).unwrap();
        let f = m.eval(1.0);
        assert_relative_eq!(f[(0, 0)], 1.0 - (-1.0_f64).exp(), max_relative = 1e-14);
        assert_eq!(f[(0, 1)], 0.0);
        assert_eq!(f[(1, 1)], 0.0);

        // Pure Gaussian: f = t I.
        let c = PaisCharacteristics::new(DVector::zeros(2), DMatrix::identity(2, 2), vec![])
            .unwrap();
        let m = material_from_characteristics(&c).unwrap();
        let f = m.eval(3.0);
        assert_eq!(f[(0, 0)], 3.0);
        assert_eq!(f[(1, 1)], 3.0);
        assert_eq!(f[(0, 1)], 0.0);

        // y = (1,1), intensity 2: rate 2 with matrix [[1,1],[1,1]].
        let c = PaisCharacteristics::new(
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
            vec![(DVector::from_vec(vec![1.0, 1.0]), 2.0)],
        )
        .unwrap();
        let m = material_from_characteristics(&c).unwrap();
        assert_eq!(m.atoms().len(), 1);
        let (rate, j) = &m.atoms()[0];
        assert_relative_eq!(*rate, 2.0, max_relative = 1e-14);
        for v in j.iter() {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn pais_path_with_no_noise_is_constant() {
        let c = PaisCharacteristics::new(
            DVector::from_vec(vec![1.5]),
            DMatrix::zeros(1, 1),
            vec![],
        )
        .unwrap();
        let p = sample_pais_path(&c, 1.0, 8, 5).unwrap();
        for v in &p.values {
            assert_eq!(v[0], 1.5);
        }
        assert_eq!(p.qv_realized[(0, 0)], 0.0);
    }

    #[test]
    fn pais_jump_counts_follow_the_intensity() {
        let intensity = 2.0;
        let c = PaisCharacteristics::new(
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
            vec![(DVector::from_vec(vec![1.0]), intensity)],
        )
        .unwrap();
        let n = 2000;
        let paths = sample_pais_ensemble(&c, 1.0, 1, n, 17).unwrap();
        let total: usize = paths.iter().map(|p| p.jumps.as_ref().unwrap().len()).sum();
        let mean = total as f64 / n as f64;
        let band = 4.0 * intensity.sqrt() / (n as f64).sqrt();
        assert!((mean - intensity).abs() <= band, "mean {mean}");
    }

    #[test]
    fn pais_gaussian_covariance_matches_sigma() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let c = PaisCharacteristics::new(DVector::zeros(2), sigma.clone(), vec![]).unwrap();
        let n = 20_000;
        let paths = sample_pais_ensemble(&c, 1.0, 4, n, 21).unwrap();
        let mut cov = DMatrix::<f64>::zeros(2, 2);
        for p in &paths {
            let y1 = p.values.last().unwrap();
            cov += y1 * y1.transpose();
        }
        cov /= n as f64;
        // Entrywise 4σ band; fourth moments of a Gaussian bound the spread.
        for i in 0..2 {
            for j in 0..2 {
                let var = sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)] * sigma[(i, j)];
                let band = 4.0 * (var / n as f64).sqrt();
                assert!(
                    (cov[(i, j)] - sigma[(i, j)]).abs() <= band,
                    "cov[{i},{j}] = {} vs {}",
                    cov[(i, j)],
                    sigma[(i, j)]
                );
            }
        }
    }

    #[test]
    fn estimator_on_deterministic_paths_is_constant() {
        let c = PaisCharacteristics::new(
            DVector::from_vec(vec![2.0]),
            DMatrix::zeros(1, 1),
            vec![],
        )
        .unwrap();
        let paths = sample_pais_ensemble(&c, 1.0, 4, 50, 9).unwrap();
        let est = estimate_material_from_paths(&paths, &[0.5, 1.0, 2.0], QvMode::Known).unwrap();
        for (m, se) in est.mean.iter().zip(&est.stderr) {
            assert_eq!(m[(0, 0)], 4.0);
            assert_eq!(se[(0, 0)], 0.0);
        }
    }

    #[test]
    fn estimator_matches_closed_form_for_pure_jump() {
        let c = PaisCharacteristics::new(
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
            vec![(DVector::from_vec(vec![1.0]), 1.0)],
        )
        .unwrap();
        let paths = sample_pais_ensemble(&c, 1.0, 1, 20_000, 31).unwrap();
        let closed = material_from_characteristics(&c).unwrap();
        let est = estimate_material_from_paths(&paths, &[1.0], QvMode::Known).unwrap();
        let diff = (est.mean[0][(0, 0)] - closed.eval_entry(0, 0, 1.0)).abs();
        assert!(diff <= 4.0 * est.stderr[0][(0, 0)], "diff {diff}");
    }

    #[test]
    fn estimator_realized_variance_mode_tracks_gaussian_term() {
        let sigma2 = 0.7;
        let c = PaisCharacteristics::new(
            DVector::zeros(1),
            DMatrix::from_element(1, 1, sigma2),
            vec![],
        )
        .unwrap();
        let paths = sample_pais_ensemble(&c, 1.0, 16, 10_000, 13).unwrap();
        let est = estimate_material_from_paths(&paths, &[0.5, 2.0], QvMode::Realized).unwrap();
        for (k, &t) in [0.5, 2.0].iter().enumerate() {
            let diff = (est.mean[k][(0, 0)] - t * sigma2).abs();
            let se = est.stderr[k][(0, 0)];
            assert!(se > 0.0);
            assert!(diff <= 4.0 * se, "t={t}: diff {diff}, stderr {se}");
        }
    }

    #[test]
    fn estimator_requires_jump_records() {
        let c = PaisCharacteristics::new(
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            vec![],
        )
        .unwrap();
        let mut paths = sample_pais_ensemble(&c, 1.0, 4, 10, 2).unwrap();
        for p in &mut paths {
            p.jumps = None;
        }
        assert!(matches!(
            estimate_material_from_paths(&paths, &[1.0], QvMode::Known),
            Err(Error::MissingJumpRecords)
        ));
    }
}
