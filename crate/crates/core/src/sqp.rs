//! Small dense equality-constrained SQP.
//!
//! Each iteration takes a tangential step from the KKT system
//!
//! ```text
//! [ B + mu I   C' ] [ s ]   [ -g ]
//! [ C          0  ] [ l ] = [  0 ]
//! ```
//!
//! where `B` is the Lagrangian Hessian (by finite differences, or a
//! Powell-damped BFGS approximation) and the Levenberg term `mu` keeps the
//! reduced Hessian positive definite and the step's displacement within
//! the step cap. Feasibility is then restored by
//! Gauss-Newton projection onto the constraint manifold and the result is
//! accepted by an Armijo test on the l1 merit `f + nu |c|_1`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{Error, Result};

/// A smooth objective with `M` smooth equality constraints in `N` variables.
pub trait SmoothProblem<const N: usize, const M: usize> {
    fn objective(&self, x: &SVector<f64, N>) -> Result<f64>;
    fn gradient(&self, x: &SVector<f64, N>) -> Result<SVector<f64, N>>;
    fn constraints(&self, x: &SVector<f64, N>) -> SVector<f64, M>;
    fn constraint_jacobian(&self, x: &SVector<f64, N>) -> SMatrix<f64, M, N>;

    /// Size of a step as measured against the step cap.
    fn displacement_norm(&self, s: &SVector<f64, N>) -> f64 {
        s.norm()
    }

    /// Hessian of `f + lambda' c`, by central differences of its gradient.
    fn lagrangian_hessian(&self, x: &SVector<f64, N>, lambda: &SVector<f64, M>) -> Result<SMatrix<f64, N, N>> {
        let grad = |x: &SVector<f64, N>| -> Result<SVector<f64, N>> {
            Ok(self.gradient(x)? + self.constraint_jacobian(x).transpose() * lambda)
        };
        let h = 1e-4 * x.amax().max(1.0);
        let mut hess = SMatrix::<f64, N, N>::zeros();
        for k in 0..N {
            let mut f = *x;
            let mut b = *x;
            f[k] += h;
            b[k] -= h;
            hess.set_column(k, &((grad(&f)? - grad(&b)?) / (2.0 * h)));
        }
        Ok((hess + hess.transpose()) * 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianModel {
    /// [`SmoothProblem::lagrangian_hessian`] at every iterate.
    #[default]
    Exact,
    /// Powell-damped BFGS updates from a scaled identity.
    Bfgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpSettings {
    /// Largest step accepted, in `displacement_norm` units.
    pub step_cap: f64,
    /// Largest `|c|_inf` of an accepted iterate.
    pub feasibility_tol: f64,
    /// A step smaller than this marks a stationary point.
    pub optimality_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub max_restoration: usize,
    pub kkt_retries: usize,
    pub hessian: HessianModel,
}

impl Default for SqpSettings {
    fn default() -> Self {
        SqpSettings {
            step_cap: 0.5,
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            armijo: 1e-4,
            max_backtracks: 30,
            max_restoration: 20,
            kkt_retries: 5,
            hessian: HessianModel::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpState<const N: usize, const M: usize> {
    pub x: SVector<f64, N>,
    /// Least-squares multipliers at `x`.
    pub multipliers: SVector<f64, M>,
    pub objective: f64,
    pub merit: f64,
    /// l1 penalty weight of the merit function.
    pub penalty: f64,
    pub gradient: SVector<f64, N>,
    pub hessian: SMatrix<f64, N, N>,
    pub iteration: usize,
    /// Displacement of the last accepted step.
    pub last_step: f64,
}

impl<const N: usize, const M: usize> SqpState<N, M> {
    /// Starts from `x0`, first projecting it onto the constraints.
    pub fn new<P: SmoothProblem<N, M>>(problem: &P, x0: SVector<f64, N>, settings: &SqpSettings) -> Result<Self> {
        let x = restore(problem, x0, settings)?;
        let gradient = problem.gradient(&x)?;
        let objective = problem.objective(&x)?;
        let multipliers = least_squares_multipliers(&problem.constraint_jacobian(&x), &gradient)?;
        let hessian = match settings.hessian {
            HessianModel::Exact => problem.lagrangian_hessian(&x, &multipliers)?,
            HessianModel::Bfgs => SMatrix::identity() * (gradient.norm().max(f64::EPSILON) / settings.step_cap),
        };
        let penalty = multipliers.amax() + 1.0;
        Ok(SqpState {
            x,
            multipliers,
            objective,
            merit: objective + penalty * problem.constraints(&x).lp_norm(1),
            penalty,
            gradient,
            hessian,
            iteration: 0,
            last_step: f64::INFINITY,
        })
    }

    /// Projects onto the constraints of `problem` when they have moved, as
    /// when a side length changes between iterations.
    pub fn reproject<P: SmoothProblem<N, M>>(&self, problem: &P, settings: &SqpSettings) -> Result<Self> {
        if self.violation(problem) <= settings.feasibility_tol * 1e-3 {
            return Ok(self.clone());
        }
        let x = restore(problem, self.x, settings)?;
        let gradient = problem.gradient(&x)?;
        let objective = problem.objective(&x)?;
        let multipliers = least_squares_multipliers(&problem.constraint_jacobian(&x), &gradient)?;
        let hessian = match settings.hessian {
            HessianModel::Exact => problem.lagrangian_hessian(&x, &multipliers)?,
            HessianModel::Bfgs => self.hessian,
        };
        let penalty = self.penalty.max(multipliers.amax() + 1.0);
        Ok(SqpState {
            x,
            multipliers,
            objective,
            merit: objective + penalty * problem.constraints(&x).lp_norm(1),
            penalty,
            gradient,
            hessian,
            iteration: self.iteration,
            last_step: self.last_step,
        })
    }

    /// `|c(x)|_inf` for `problem`.
    pub fn violation<P: SmoothProblem<N, M>>(&self, problem: &P) -> f64 {
        problem.constraints(&self.x).amax()
    }

    pub fn is_stationary(&self, settings: &SqpSettings) -> bool {
        self.last_step < settings.optimality_tol
    }
}

fn least_squares_multipliers<const N: usize, const M: usize>(
    c: &SMatrix<f64, M, N>,
    g: &SVector<f64, N>,
) -> Result<SVector<f64, M>> {
    let cct = c * c.transpose();
    let chol = cct.cholesky().ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    Ok(-chol.solve(&(c * g)))
}

/// Gauss-Newton projection `x <- x - C'(CC')^-1 c` until feasible.
pub fn restore<P: SmoothProblem<N, M>, const N: usize, const M: usize>(
    problem: &P,
    mut x: SVector<f64, N>,
    settings: &SqpSettings,
) -> Result<SVector<f64, N>> {
    let target = settings.feasibility_tol * 1e-3;
    for _ in 0..settings.max_restoration {
        let c = problem.constraints(&x);
        if c.amax() <= target {
            return Ok(x);
        }
        let jac = problem.constraint_jacobian(&x);
        let Some(chol) = (jac * jac.transpose()).cholesky() else {
            break;
        };
        x -= jac.transpose() * chol.solve(&c);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("restoration iterate"));
        }
    }
    let violation = problem.constraints(&x).amax();
    if violation <= settings.feasibility_tol {
        Ok(x)
    } else {
        Err(Error::RestorationFailed { violation })
    }
}

/// Solves the damped KKT system for the tangential step, retrying with
/// growing dual regularisation when the factorisation breaks down.
fn kkt_solve<const N: usize, const M: usize>(
    b: &SMatrix<f64, N, N>,
    c: &SMatrix<f64, M, N>,
    g: &SVector<f64, N>,
    mu: f64,
    retries: usize,
) -> Result<SVector<f64, N>> {
    let n = N + M;
    let mut k = DMatrix::zeros(n, n);
    k.view_mut((0, 0), (N, N)).copy_from(&(b + SMatrix::<f64, N, N>::identity() * mu));
    k.view_mut((0, N), (N, M)).copy_from(&c.transpose());
    k.view_mut((N, 0), (M, N)).copy_from(c);
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, N).copy_from(&(-g));

    let scale = b.amax().max(1.0);
    for attempt in 0..=retries {
        let mut kk = k.clone();
        if attempt > 0 {
            let delta = scale * 1e-12 * 100f64.powi(attempt as i32);
            for i in N..n {
                kk[(i, i)] = -delta;
            }
        }
        if let Some(sol) = kk.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                return Ok(SVector::from_iterator(sol.rows(0, N).iter().copied()));
            }
        }
    }
    Err(Error::KktSingular { retries })
}

/// Smallest Levenberg shift making the Hessian positive semi-definite on
/// the tangent space of the constraints.
fn curvature_shift<const N: usize, const M: usize>(b: &SMatrix<f64, N, N>, c: &SMatrix<f64, M, N>) -> f64 {
    let Some(chol) = (c * c.transpose()).cholesky() else {
        return 0.0;
    };
    let proj = SMatrix::<f64, N, N>::identity() - c.transpose() * chol.solve(c);
    let reduced = proj * b * proj;
    let sym = DMatrix::from_fn(N, N, |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
    let lowest = sym.symmetric_eigenvalues().min();
    (-lowest).max(0.0)
}

/// Tangential step from `state`, damped so its displacement is at most the cap.
pub fn tangent_step<P: SmoothProblem<N, M>, const N: usize, const M: usize>(
    problem: &P,
    state: &SqpState<N, M>,
    settings: &SqpSettings,
) -> Result<SVector<f64, N>> {
    let c = problem.constraint_jacobian(&state.x);
    let g = &state.gradient;
    let solve = |mu: f64| kkt_solve(&state.hessian, &c, g, mu, settings.kkt_retries);
    let size = |s: &SVector<f64, N>| problem.displacement_norm(s);

    let scale = state.hessian.amax().max(f64::MIN_POSITIVE);
    let floor = curvature_shift(&state.hessian, &c);
    let mut lo = floor * (1.0 + 1e-4) + scale * 1e-12;
    if floor == 0.0 {
        if let Ok(free) = solve(0.0) {
            if size(&free) <= settings.step_cap {
                return Ok(free);
            }
        }
    }
    if let Ok(step) = solve(lo) {
        if size(&step) <= settings.step_cap {
            return Ok(step);
        }
    }
    let mut hi = lo + scale;
    let mut step = solve(hi)?;
    while size(&step) > settings.step_cap {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::KktSingular { retries: settings.kkt_retries });
        }
        step = solve(hi)?;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match solve(mid) {
            Ok(trial) if size(&trial) <= settings.step_cap => {
                hi = mid;
                step = trial;
            }
            _ => lo = mid,
        }
    }
    Ok(step)
}

/// Line search along `step`, restoration, and BFGS update.
pub fn advance<P: SmoothProblem<N, M>, const N: usize, const M: usize>(
    problem: &P,
    state: &SqpState<N, M>,
    step: &SVector<f64, N>,
    settings: &SqpSettings,
) -> Result<SqpState<N, M>> {
    let c0 = problem.constraints(&state.x);
    let penalty = state.penalty.max(state.multipliers.amax() + 1.0);
    let merit0 = state.objective + penalty * c0.lp_norm(1);
    let slope = state.gradient.dot(step) - penalty * c0.lp_norm(1);

    let mut t = 1.0;
    let mut accepted = None;
    for _ in 0..=settings.max_backtracks {
        let trial = restore(problem, state.x + step * t, settings);
        if let Ok(x) = trial {
            if let Ok(f) = problem.objective(&x) {
                let merit = f + penalty * problem.constraints(&x).lp_norm(1);
                if merit <= merit0 + settings.armijo * t * slope {
                    accepted = Some((x, f, merit));
                    break;
                }
            }
        }
        t *= 0.5;
    }
    let Some((x, objective, merit)) = accepted else {
        // a predicted decrease below rounding means we are already stationary
        let predicted = state.gradient.dot(step).abs();
        if predicted <= 1e-9 * merit0.abs().max(1.0) && c0.amax() <= settings.feasibility_tol {
            let mut still = state.clone();
            still.last_step = 0.0;
            still.iteration += 1;
            return Ok(still);
        }
        return Err(Error::LineSearchFailed);
    };

    let gradient = problem.gradient(&x)?;
    let jac_old = problem.constraint_jacobian(&state.x);
    let jac_new = problem.constraint_jacobian(&x);
    let lam = &state.multipliers;
    let s = x - state.x;
    let y = (gradient + jac_new.transpose() * lam) - (state.gradient + jac_old.transpose() * lam);
    let multipliers = least_squares_multipliers(&jac_new, &gradient)?;
    let hessian = match settings.hessian {
        HessianModel::Exact => problem.lagrangian_hessian(&x, &multipliers)?,
        HessianModel::Bfgs => damped_bfgs(&state.hessian, &s, &y),
    };

    Ok(SqpState {
        x,
        multipliers,
        objective,
        merit,
        penalty,
        gradient,
        hessian,
        iteration: state.iteration + 1,
        last_step: problem.displacement_norm(&s),
    })
}

/// Powell-damped BFGS update; keeps `b` positive definite.
fn damped_bfgs<const N: usize>(b: &SMatrix<f64, N, N>, s: &SVector<f64, N>, y: &SVector<f64, N>) -> SMatrix<f64, N, N> {
    let bs = b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) || s.norm() < 1e-14 {
        return *b;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + bs * (1.0 - theta);
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return *b;
    }
    b - bs * bs.transpose() / sbs + r * r.transpose() / sr
}

/// One full SQP iteration.
pub fn sqp_step<P: SmoothProblem<N, M>, const N: usize, const M: usize>(
    problem: &P,
    state: &SqpState<N, M>,
    settings: &SqpSettings,
) -> Result<SqpState<N, M>> {
    if !state.x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("sqp state"));
    }
    let step = tangent_step(problem, state, settings)?;
    advance(problem, state, &step, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix2x3, Vector2, Vector3};

    /// Quadratic `0.5 |x - a|^2` on the plane `x . n = d`.
    struct PlaneProjection {
        a: Vector3<f64>,
        n: Vector3<f64>,
        d: f64,
    }

    impl SmoothProblem<3, 1> for PlaneProjection {
        fn objective(&self, x: &Vector3<f64>) -> Result<f64> {
            Ok(0.5 * (x - self.a).norm_squared())
        }
        fn gradient(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
            Ok(x - self.a)
        }
        fn constraints(&self, x: &Vector3<f64>) -> SVector<f64, 1> {
            SVector::<f64, 1>::new(x.dot(&self.n) - self.d)
        }
        fn constraint_jacobian(&self, _: &Vector3<f64>) -> SMatrix<f64, 1, 3> {
            self.n.transpose()
        }
    }

    /// Linear objective on the unit sphere intersected with a plane: `min x`
    /// subject to `|p|^2 = 1` and `z = 0`. Minimiser `(-1, 0, 0)`.
    struct Circle;

    impl SmoothProblem<3, 2> for Circle {
        fn objective(&self, x: &Vector3<f64>) -> Result<f64> {
            Ok(x.x)
        }
        fn gradient(&self, _: &Vector3<f64>) -> Result<Vector3<f64>> {
            Ok(Vector3::x())
        }
        fn constraints(&self, x: &Vector3<f64>) -> Vector2<f64> {
            Vector2::new(x.norm_squared() - 1.0, x.z)
        }
        fn constraint_jacobian(&self, x: &Vector3<f64>) -> Matrix2x3<f64> {
            Matrix2x3::new(2.0 * x.x, 2.0 * x.y, 2.0 * x.z, 0.0, 0.0, 1.0)
        }
    }

    fn solve<P: SmoothProblem<N, M>, const N: usize, const M: usize>(
        p: &P,
        x0: SVector<f64, N>,
        settings: &SqpSettings,
    ) -> SqpState<N, M> {
        let mut st = SqpState::new(p, x0, settings).unwrap();
        for _ in 0..200 {
            st = sqp_step(p, &st, settings).unwrap();
            if st.is_stationary(settings) {
                break;
            }
        }
        st
    }

    #[test]
    fn projects_onto_plane() {
        let p = PlaneProjection {
            a: Vector3::new(3.0, -1.0, 2.0),
            n: Vector3::new(1.0, 2.0, 2.0) / 3.0,
            d: 1.0,
        };
        let settings = SqpSettings { step_cap: 10.0, ..SqpSettings::default() };
        let st = solve(&p, Vector3::zeros(), &settings);
        let expected = p.a - p.n * (p.a.dot(&p.n) - p.d);
        assert_abs_diff_eq!(st.x, expected, epsilon = 1e-7);
        // multiplier satisfies g + C' lambda = 0
        assert_abs_diff_eq!(st.multipliers[0], -(p.a.dot(&p.n) - p.d) * -1.0, epsilon = 1e-7);
    }

    #[test]
    fn finds_constrained_minimum_on_circle() {
        for hessian in [HessianModel::Exact, HessianModel::Bfgs] {
            let settings = SqpSettings { step_cap: 0.3, hessian, ..SqpSettings::default() };
            let st = solve(&Circle, Vector3::new(0.6, 0.8, 0.1), &settings);
            assert_abs_diff_eq!(st.x, Vector3::new(-1.0, 0.0, 0.0), epsilon = 1e-6);
            assert!(st.violation(&Circle) <= settings.feasibility_tol);
        }
    }

    #[test]
    fn exact_hessian_of_circle_lagrangian() {
        // f = x, c = (|p|^2 - 1, z): Hessian is 2 lambda_1 I
        let lam = Vector2::new(0.7, -3.0);
        let h = Circle.lagrangian_hessian(&Vector3::new(0.3, 0.4, 0.0), &lam).unwrap();
        assert_abs_diff_eq!(h, SMatrix::<f64, 3, 3>::identity() * 1.4, epsilon = 1e-8);
    }

    #[test]
    fn negative_curvature_is_shifted_away() {
        // maximising x on the circle from near the maximiser: the reduced
        // Hessian is negative there, the step must still descend
        let settings = SqpSettings { step_cap: 0.3, ..SqpSettings::default() };
        let st = solve(&Circle, Vector3::new(0.999, 0.0447, 0.0), &settings);
        assert_abs_diff_eq!(st.x, Vector3::new(-1.0, 0.0, 0.0), epsilon = 1e-6);
    }

    #[test]
    fn steps_respect_cap_and_keep_feasibility() {
        let settings = SqpSettings { step_cap: 0.2, hessian: HessianModel::Bfgs, ..SqpSettings::default() };
        let mut st = SqpState::new(&Circle, Vector3::new(0.9, 0.5, -0.2), &settings).unwrap();
        for _ in 0..30 {
            let before = st.violation(&Circle);
            let step = tangent_step(&Circle, &st, &settings).unwrap();
            assert!(step.norm() <= settings.step_cap * (1.0 + 1e-9));
            st = advance(&Circle, &st, &step, &settings).unwrap();
            assert!(st.violation(&Circle) <= before + 1e-8);
        }
    }

    #[test]
    fn stationary_point_gives_negligible_step() {
        let settings = SqpSettings::default();
        let st = SqpState::new(&Circle, Vector3::new(-1.0, 0.0, 0.0), &settings).unwrap();
        let step = tangent_step(&Circle, &st, &settings).unwrap();
        assert!(step.norm() < settings.optimality_tol);
    }

    #[test]
    fn bfgs_update_stays_positive_definite() {
        let b = SMatrix::<f64, 3, 3>::identity();
        let s = Vector3::new(1.0, 0.0, 0.0);
        // negative curvature pair
        let y = Vector3::new(-2.0, 0.5, 0.0);
        let next = damped_bfgs(&b, &s, &y);
        assert!(next.cholesky().is_some());
        // secant-like pair is reproduced
        let y = Vector3::new(3.0, 0.0, 0.0);
        assert_abs_diff_eq!(damped_bfgs(&b, &s, &y) * s, y, epsilon = 1e-12);
    }
}
