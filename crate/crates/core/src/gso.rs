//! Standard Group Search Optimizer.
//!
//! A group of `N` members searches an `n`-dimensional box. Every iteration the
//! member with the lowest cost acts as the producer and scans three points
//! (ahead, right, left) along its head direction. The remaining members either
//! copy the producer's area (scroungers) or perform a random walk (rangers).
//!
//! Each member carries two cost values: `error`, the raw objective, and `cost`,
//! the value used for producer selection. They coincide unless weight decay is
//! enabled, in which case `cost` is the regularized value. The group's
//! best-so-far record always tracks the raw objective.

use std::f64::consts::PI;

use rand_distr::StandardNormal;

use crate::weight_decay::{self, WdParams};
use crate::{Error, Result};

/// RNG used for every seeded run. Normal draws go through
/// [`rand_distr::StandardNormal`] (ziggurat).
pub type GsoRng = rand_chacha::ChaCha8Rng;

/// Re-export so callers can write `cgso::Rng` for the trait bound.
pub use rand::Rng;

/// A cost function over `R^n`. Must be a pure function of the position.
pub trait Objective {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

pub(crate) fn checked_eval<O: Objective + ?Sized>(objective: &O, x: &[f64]) -> Result<f64> {
    let v = objective.evaluate(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteCost(v))
    }
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBounds(format!(
                "lower has {} components, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.len() < 2 {
            return Err(Error::InvalidBounds(format!(
                "dimension must be at least 2, got {}",
                lower.len()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i].partial_cmp(&upper[i]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidBounds(format!(
                "component {i}: lower {} is not below upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^n`.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Bounds restricted to `len` components starting at `offset`.
    pub fn restrict(&self, offset: usize, len: usize) -> Result<Self> {
        if offset + len > self.dim() {
            return Err(Error::InvalidBounds(format!(
                "span {offset}+{len} exceeds dimension {}",
                self.dim()
            )));
        }
        Self::new(
            self.lower[offset..offset + len].to_vec(),
            self.upper[offset..offset + len].to_vec(),
        )
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// Maximum pursuit distance: the length of the box diagonal.
pub fn compute_lmax(bounds: &Bounds) -> f64 {
    bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lo, hi)| (hi - lo).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Out-of-bounds moves are discarded and the member keeps its previous position.
    Revert,
    /// Each violating component is clamped onto the violated bound.
    Absorb,
}

pub fn enforce_bounds(
    candidate: &[f64],
    previous: &[f64],
    bounds: &Bounds,
    policy: BoundaryPolicy,
) -> Vec<f64> {
    match policy {
        BoundaryPolicy::Revert => {
            if bounds.contains(candidate) {
                candidate.to_vec()
            } else {
                previous.to_vec()
            }
        }
        BoundaryPolicy::Absorb => candidate
            .iter()
            .zip(bounds.lower.iter().zip(&bounds.upper))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect(),
    }
}

/// Unit search direction from polar head angles. `angles.len() = n - 1`.
pub fn direction(angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    // suffix[j] = prod_{q >= j} cos(angles[q])
    let mut suffix = vec![1.0; n];
    for q in (0..n - 1).rev() {
        suffix[q] = suffix[q + 1] * angles[q].cos();
    }
    let mut d = Vec::with_capacity(n);
    d.push(suffix[0]);
    for j in 1..n {
        d.push(angles[j - 1].sin() * suffix[j]);
    }
    d
}

/// [`direction`] with a length check against the configured dimension `n`.
pub fn direction_from_angles(angles: &[f64], n: usize) -> Result<Vec<f64>> {
    if n < 2 || angles.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            actual: angles.len(),
        });
    }
    Ok(direction(angles))
}

/// Fixed parameters of one GSO group.
#[derive(Debug, Clone, PartialEq)]
pub struct GsoParams {
    pub population: usize,
    pub max_iter: usize,
    pub scrounger_fraction: f64,
    pub theta_max: f64,
    pub alpha_max: f64,
    pub l_max: f64,
    pub a: usize,
    pub boundary_policy: BoundaryPolicy,
}

impl GsoParams {
    /// Defaults for a search space: `a = round(sqrt(n + 1))`,
    /// `theta_max = pi / a^2`, `alpha_max = theta_max / 2`, `l_max` the box
    /// diagonal, 50 members, 50 iterations, 80% scroungers, revert bounds.
    pub fn for_bounds(bounds: &Bounds) -> Self {
        let n = bounds.dim();
        let a = ((n + 1) as f64).sqrt().round() as usize;
        let theta_max = PI / (a * a) as f64;
        Self {
            population: 50,
            max_iter: 50,
            scrounger_fraction: 0.8,
            theta_max,
            alpha_max: theta_max / 2.0,
            l_max: compute_lmax(bounds),
            a,
            boundary_policy: BoundaryPolicy::Revert,
        }
    }

    pub fn with_population(mut self, population: usize) -> Self {
        self.population = population;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.boundary_policy = policy;
        self
    }

    pub fn with_scrounger_fraction(mut self, fraction: f64) -> Self {
        self.scrounger_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::InvalidParameter("population must be >= 1".into()));
        }
        if !(self.scrounger_fraction > 0.0 && self.scrounger_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "scrounger fraction {} not in (0, 1)",
                self.scrounger_fraction
            )));
        }
        if self.l_max.is_nan() || self.l_max <= 0.0 {
            return Err(Error::InvalidParameter(format!("l_max {} must be > 0", self.l_max)));
        }
        if self.a == 0 {
            return Err(Error::InvalidParameter("a must be >= 1".into()));
        }
        Ok(())
    }
}

/// A candidate solution and its search state.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub position: Vec<f64>,
    pub head_angle: Vec<f64>,
    /// Value used for producer selection (regularized when weight decay is on).
    pub cost: f64,
    /// Raw objective value at `position`.
    pub error: f64,
    pub prev_position: Vec<f64>,
    pub lambda: f64,
    pub error_sum: f64,
    pub error_count: u64,
}

impl Member {
    fn random<R: Rng + ?Sized>(bounds: &Bounds, lambda: f64, rng: &mut R) -> Self {
        let position = bounds.sample(rng);
        // uniform in (-pi, pi]
        let head_angle = (0..bounds.dim() - 1)
            .map(|_| PI - 2.0 * PI * rng.random::<f64>())
            .collect();
        Self {
            prev_position: position.clone(),
            position,
            head_angle,
            cost: f64::INFINITY,
            error: f64::INFINITY,
            lambda,
            error_sum: 0.0,
            error_count: 0,
        }
    }

    pub fn mean_error(&self) -> Option<f64> {
        (self.error_count > 0).then(|| self.error_sum / self.error_count as f64)
    }
}

/// Producer scan points `[zero, right, left]` for fixed draws.
pub fn scan_points(
    position: &[f64],
    angle: &[f64],
    r1: f64,
    r2: &[f64],
    params: &GsoParams,
) -> [Vec<f64>; 3] {
    let step = r1 * params.l_max;
    let offset = |sign: f64| -> Vec<f64> {
        let turned: Vec<f64> = angle
            .iter()
            .zip(r2)
            .map(|(phi, r)| phi + sign * r * params.theta_max / 2.0)
            .collect();
        let d = direction(&turned);
        position.iter().zip(&d).map(|(x, d)| x + step * d).collect()
    };
    [offset(0.0), offset(1.0), offset(-1.0)]
}

/// Draws `r1 ~ N(0, 1)` and `r2 ~ U(0, 1)^(n-1)` once and returns the three
/// scan points sharing them.
pub fn producer_scan<R: Rng + ?Sized>(
    producer: &Member,
    params: &GsoParams,
    rng: &mut R,
) -> [Vec<f64>; 3] {
    let r1: f64 = rng.sample(StandardNormal);
    let r2 = uniform_vec(producer.head_angle.len(), rng);
    scan_points(&producer.position, &producer.head_angle, r1, &r2, params)
}

/// Area copying: `x + r3 * (producer - x)` component-wise.
pub fn scrounge(position: &[f64], producer: &[f64], r3: &[f64]) -> Vec<f64> {
    position
        .iter()
        .zip(producer)
        .zip(r3)
        .map(|((x, p), r)| x + r * (p - x))
        .collect()
}

pub fn scrounger_step<R: Rng + ?Sized>(
    member: &Member,
    producer_position: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let r3 = uniform_vec(member.position.len(), rng);
    scrounge(&member.position, producer_position, &r3)
}

/// Head turn `phi + r2 * alpha_max`.
pub fn turn_head(angle: &[f64], r2: &[f64], alpha_max: f64) -> Vec<f64> {
    angle.iter().zip(r2).map(|(phi, r)| phi + r * alpha_max).collect()
}

/// Random walk for fixed draws: turn the head, then step `a * r1 * l_max`
/// along the new direction. Returns `(position, head_angle)`.
pub fn range_move(
    position: &[f64],
    angle: &[f64],
    r1: f64,
    r2: &[f64],
    params: &GsoParams,
) -> (Vec<f64>, Vec<f64>) {
    let angle = turn_head(angle, r2, params.alpha_max);
    let length = params.a as f64 * r1 * params.l_max;
    let d = direction(&angle);
    let position = position.iter().zip(&d).map(|(x, d)| x + length * d).collect();
    (position, angle)
}

pub fn ranger_step<R: Rng + ?Sized>(
    member: &Member,
    params: &GsoParams,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let r2 = uniform_vec(member.head_angle.len(), rng);
    let r1: f64 = rng.sample(StandardNormal);
    range_move(&member.position, &member.head_angle, r1, &r2, params)
}

fn uniform_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>()).collect()
}

/// Index of the minimal-cost member; ties go to the lowest index.
pub fn argmin_cost(members: &[Member]) -> usize {
    let mut best = 0;
    for (i, m) in members.iter().enumerate().skip(1) {
        if m.cost < members[best].cost {
            best = i;
        }
    }
    best
}

/// A population plus the bookkeeping needed to step it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupState {
    pub members: Vec<Member>,
    pub producer_index: usize,
    pub best_position: Vec<f64>,
    /// Lowest raw objective value ever evaluated by this group.
    pub best_cost: f64,
    pub iteration: usize,
    pub stagnation: usize,
    pub saved_angle: Vec<f64>,
    pub evaluations: u64,
    /// Cumulative scrounger / ranger designations.
    pub scroungers: u64,
    pub rangers: u64,
    bounds: Bounds,
}

impl GroupState {
    /// Draws `population` members uniformly in `bounds` without evaluating them.
    pub fn random<R: Rng + ?Sized>(
        bounds: &Bounds,
        population: usize,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<Self> {
        if population == 0 {
            return Err(Error::InvalidParameter("population must be >= 1".into()));
        }
        let lambda = if wd.enabled { wd.lambda0 } else { 0.0 };
        let members: Vec<Member> = (0..population)
            .map(|_| Member::random(bounds, lambda, rng))
            .collect();
        let best_position = members[0].position.clone();
        let saved_angle = members[0].head_angle.clone();
        Ok(Self {
            members,
            producer_index: 0,
            best_position,
            best_cost: f64::INFINITY,
            iteration: 0,
            stagnation: 0,
            saved_angle,
            evaluations: 0,
            scroungers: 0,
            rangers: 0,
            bounds: bounds.clone(),
        })
    }

    /// Evaluates every member and selects the producer.
    pub fn evaluate_all<O: Objective + ?Sized>(&mut self, objective: &O, wd: &WdParams) -> Result<()> {
        for i in 0..self.members.len() {
            self.evaluate_member(i, objective, wd)?;
            if wd.enabled {
                let e = self.members[i].error;
                weight_decay::update_error_history(&mut self.members[i], e);
            }
        }
        self.producer_index = argmin_cost(&self.members);
        self.saved_angle = self.members[self.producer_index].head_angle.clone();
        Ok(())
    }

    /// Random initialisation followed by evaluation.
    pub fn new<O: Objective + ?Sized, R: Rng + ?Sized>(
        bounds: &Bounds,
        params: &GsoParams,
        wd: &WdParams,
        objective: &O,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let mut group = Self::random(bounds, params.population, wd, rng)?;
        group.evaluate_all(objective, wd)?;
        Ok(group)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn producer(&self) -> &Member {
        &self.members[self.producer_index]
    }

    /// Overrides the best-so-far cost. Used by cooperative drivers when the
    /// context around this group changed and the stored best was re-scored.
    pub fn rebase_best(&mut self, cost: f64) {
        self.best_cost = cost;
    }

    fn score<O: Objective + ?Sized>(
        &mut self,
        x: &[f64],
        lambda: f64,
        objective: &O,
        wd: &WdParams,
    ) -> Result<(f64, f64)> {
        let error = checked_eval(objective, x)?;
        self.evaluations += 1;
        if error < self.best_cost {
            self.best_cost = error;
            self.best_position.clear();
            self.best_position.extend_from_slice(x);
        }
        let cost = if wd.enabled {
            weight_decay::regularized_cost(error, lambda, x)
        } else {
            error
        };
        Ok((error, cost))
    }

    fn evaluate_member<O: Objective + ?Sized>(
        &mut self,
        i: usize,
        objective: &O,
        wd: &WdParams,
    ) -> Result<()> {
        let x = std::mem::take(&mut self.members[i].position);
        let lambda = self.members[i].lambda;
        let scored = self.score(&x, lambda, objective, wd);
        self.members[i].position = x;
        let (error, cost) = scored?;
        self.members[i].error = error;
        self.members[i].cost = cost;
        Ok(())
    }

    /// Overwrites member `i` with `position` and re-evaluates it. Used for
    /// information exchange between groups.
    pub fn replace_member<O: Objective + ?Sized>(
        &mut self,
        i: usize,
        position: &[f64],
        objective: &O,
        wd: &WdParams,
    ) -> Result<()> {
        if position.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: position.len(),
            });
        }
        let m = &mut self.members[i];
        m.position = position.to_vec();
        m.prev_position = position.to_vec();
        self.evaluate_member(i, objective, wd)
    }

    /// Producer behaviour: scan, move on strict improvement, otherwise turn
    /// the head and, after `a` failures in a row, restore the angle the
    /// streak started from.
    pub fn producer_update<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        params: &GsoParams,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        let p = self.producer_index;
        let current = self.members[p].position.clone();
        let lambda = self.members[p].lambda;
        let scans = producer_scan(&self.members[p], params, rng);

        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        for candidate in scans {
            let candidate =
                enforce_bounds(&candidate, &current, &self.bounds, params.boundary_policy);
            let (error, cost) = self.score(&candidate, lambda, objective, wd)?;
            if best.as_ref().is_none_or(|(_, _, c)| cost < *c) {
                best = Some((candidate, error, cost));
            }
        }
        let (candidate, error, cost) = best.expect("three scan points");

        if cost < self.members[p].cost {
            let m = &mut self.members[p];
            m.prev_position = std::mem::replace(&mut m.position, candidate);
            m.error = error;
            m.cost = cost;
            self.stagnation = 0;
        } else {
            if self.stagnation == 0 {
                self.saved_angle = self.members[p].head_angle.clone();
            }
            let r2 = uniform_vec(self.members[p].head_angle.len(), rng);
            let m = &mut self.members[p];
            m.head_angle = turn_head(&m.head_angle, &r2, params.alpha_max);
            self.stagnation += 1;
            if self.stagnation >= params.a {
                m.head_angle = self.saved_angle.clone();
                self.stagnation = 0;
            }
        }
        Ok(())
    }

    /// One full iteration: producer selection and update, scrounger/ranger
    /// moves, bound handling, optional weight decay, re-evaluation.
    ///
    /// All random draws happen before any evaluation, in member order.
    pub fn iterate<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        params: &GsoParams,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        let p = argmin_cost(&self.members);
        if p != self.producer_index {
            self.stagnation = 0;
            self.producer_index = p;
        }
        self.producer_update(objective, params, wd, rng)?;

        let producer_position = self.members[p].position.clone();
        let n_members = self.members.len();
        let mut moved = vec![false; n_members];
        for (i, flag) in moved.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let scrounger = rng.random::<f64>() < params.scrounger_fraction;
            if scrounger {
                self.scroungers += 1;
            } else {
                self.rangers += 1;
            }
            let m = &self.members[i];
            let candidate = if scrounger {
                scrounger_step(m, &producer_position, rng)
            } else {
                let (x, angle) = ranger_step(m, params, rng);
                self.members[i].head_angle = angle;
                x
            };
            let m = &mut self.members[i];
            let next = enforce_bounds(&candidate, &m.position, &self.bounds, params.boundary_policy);
            m.prev_position = std::mem::replace(&mut m.position, next);
            *flag = true;
        }

        if wd.enabled {
            for m in &mut self.members {
                let decayed = weight_decay::apply_decay(&m.position, m.lambda);
                m.position = enforce_bounds(&decayed, &m.position, &self.bounds, params.boundary_policy);
            }
        }

        for (i, &was_moved) in moved.iter().enumerate() {
            if !(was_moved || wd.enabled) {
                continue;
            }
            self.evaluate_member(i, objective, wd)?;
            if wd.enabled {
                let e = self.members[i].error;
                weight_decay::observe(&mut self.members[i], e, wd);
            }
        }

        let next = argmin_cost(&self.members);
        if next != self.producer_index {
            self.stagnation = 0;
            self.producer_index = next;
        }
        self.iteration += 1;
        Ok(())
    }
}

/// Seeds the run RNG.
pub fn seeded_rng(seed: u64) -> GsoRng {
    use rand::SeedableRng;
    GsoRng::seed_from_u64(seed)
}
