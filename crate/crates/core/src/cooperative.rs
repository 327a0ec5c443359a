//! Cooperative GSO drivers.
//!
//! The search space is cut into `K` contiguous spans, each optimised by its
//! own GSO group. A sub-position is scored by splicing it into the context
//! vector made of every other group's best sub-position. Groups are updated in
//! order and the context is refreshed right after each group, so group `j + 1`
//! already sees group `j`'s new best.
//!
//! The `H` variant additionally runs a full-dimensional group `Q` and swaps
//! best solutions in both directions once per iteration, never overwriting a
//! producer.
//!
//! Bookkeeping: `context_cost` is always the objective value of the current
//! assembled context. Before a group is touched its best-so-far cost is
//! re-based to `context_cost`, since the stored best sub-position is exactly the
//! group's slot in that context.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gso::{argmin_cost, Bounds, BoundaryPolicy, GroupState, GsoParams, Objective};
use crate::weight_decay::WdParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    spans: Vec<Span>,
    dim: usize,
}

/// Balanced contiguous split: the first `n mod k` spans get one extra
/// dimension.
pub fn make_partition(n: usize, k: usize) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::Partition(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let base = n / k;
    let extra = n % k;
    let mut spans = Vec::with_capacity(k);
    let mut offset = 0;
    for j in 0..k {
        let len = base + usize::from(j < extra);
        spans.push(Span { offset, len });
        offset += len;
    }
    Ok(Partition { spans, dim: n })
}

impl Partition {
    pub fn k(&self) -> usize {
        self.spans.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn split(&self, full: &[f64]) -> Vec<Vec<f64>> {
        self.spans.iter().map(|s| full[s.range()].to_vec()).collect()
    }

    pub fn assemble(&self, parts: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (s, part) in self.spans.iter().zip(parts) {
            out[s.range()].copy_from_slice(part);
        }
        out
    }
}

/// `b(j, vec)`: every group's best sub-position except slot `j`, which holds
/// `vec`.
pub fn context_vector(
    partition: &Partition,
    bests: &[Vec<f64>],
    j: usize,
    vec: &[f64],
) -> Result<Vec<f64>> {
    let span = partition
        .spans
        .get(j)
        .ok_or_else(|| Error::Partition(format!("no span {j} in a {}-way partition", partition.k())))?;
    if vec.len() != span.len {
        return Err(Error::DimensionMismatch {
            expected: span.len,
            actual: vec.len(),
        });
    }
    if bests.len() != partition.k() {
        return Err(Error::Partition(format!(
            "{} context entries for {} spans",
            bests.len(),
            partition.k()
        )));
    }
    let mut out = vec![0.0; partition.dim];
    for (i, s) in partition.spans.iter().enumerate() {
        let src = if i == j { vec } else { &bests[i][..] };
        if src.len() != s.len {
            return Err(Error::DimensionMismatch {
                expected: s.len,
                actual: src.len(),
            });
        }
        out[s.range()].copy_from_slice(src);
    }
    Ok(out)
}

/// The full objective evaluated at `b(j, vec)`.
pub fn sub_cost<O: Objective + ?Sized>(
    partition: &Partition,
    bests: &[Vec<f64>],
    j: usize,
    objective: &O,
    vec: &[f64],
) -> Result<f64> {
    objective.evaluate(&context_vector(partition, bests, j, vec)?)
}

/// Objective for group `j` over its own span, with the rest of the vector
/// taken from a fixed context.
struct InContext<'a, O: ?Sized> {
    context: &'a [f64],
    span: Span,
    objective: &'a O,
}

impl<O: Objective + ?Sized> Objective for InContext<'_, O> {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let mut full = self.context.to_vec();
        full[self.span.range()].copy_from_slice(x);
        self.objective.evaluate(&full)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    S,
    H,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooperativeParams {
    pub variant: Variant,
    pub k: usize,
    pub population: usize,
    pub scrounger_fraction: f64,
    pub boundary_policy: BoundaryPolicy,
    /// Upper index bound (exclusive) for picking the member that receives an
    /// exchanged solution. `None` means `ceil(N / 2)`.
    pub exchange_half: Option<usize>,
}

impl Default for CooperativeParams {
    fn default() -> Self {
        Self {
            variant: Variant::S,
            k: 5,
            population: 50,
            scrounger_fraction: 0.8,
            boundary_policy: BoundaryPolicy::Absorb,
            exchange_half: None,
        }
    }
}

impl CooperativeParams {
    fn group_params(&self, bounds: &Bounds) -> GsoParams {
        GsoParams::for_bounds(bounds)
            .with_population(self.population)
            .with_scrounger_fraction(self.scrounger_fraction)
            .with_policy(self.boundary_policy)
    }
}

/// Picks a member index uniformly in `0..half` that is not `producer`,
/// redrawing on collision. `None` when no such index exists.
pub fn pick_exchange_index<R: Rng + ?Sized>(
    members: usize,
    half: usize,
    producer: usize,
    rng: &mut R,
) -> Option<usize> {
    let half = half.min(members);
    if half == 0 || (half == 1 && producer == 0) {
        return None;
    }
    loop {
        let i = rng.random_range(0..half);
        if i != producer {
            return Some(i);
        }
    }
}

/// One overwrite performed by an information exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exchange {
    /// `None` for the full-dimensional group.
    pub group: Option<usize>,
    pub member: usize,
    pub producer: usize,
}

#[derive(Debug, Clone)]
pub struct CooperativeState {
    partition: Partition,
    pub params: CooperativeParams,
    pub subgroups: Vec<GroupState>,
    sub_params: Vec<GsoParams>,
    pub q_group: Option<GroupState>,
    q_params: Option<GsoParams>,
    /// Best sub-position of each group.
    pub context_best: Vec<Vec<f64>>,
    /// Objective value of the assembled `context_best`.
    pub context_cost: f64,
    pub iteration: usize,
    /// Exchanges performed by the most recent `H` iteration.
    pub last_exchanges: Vec<Exchange>,
}

impl CooperativeState {
    pub fn new<O: Objective + ?Sized, R: Rng + ?Sized>(
        bounds: &Bounds,
        params: CooperativeParams,
        wd: &WdParams,
        objective: &O,
        rng: &mut R,
    ) -> Result<Self> {
        let partition = make_partition(bounds.dim(), params.k)?;
        if let Some(s) = partition.spans.iter().find(|s| s.len < 2) {
            return Err(Error::Partition(format!(
                "span at offset {} has a single dimension; each group needs at least 2 (use k <= n / 2)",
                s.offset
            )));
        }
        let mut subgroups = Vec::with_capacity(params.k);
        let mut sub_params = Vec::with_capacity(params.k);
        for s in &partition.spans {
            let sub_bounds = bounds.restrict(s.offset, s.len)?;
            let gp = params.group_params(&sub_bounds);
            gp.validate()?;
            subgroups.push(GroupState::random(&sub_bounds, gp.population, wd, rng)?);
            sub_params.push(gp);
        }

        // groups not yet scored contribute their first member to the context
        let mut context_best: Vec<Vec<f64>> =
            subgroups.iter().map(|g| g.members[0].position.clone()).collect();
        let mut context_cost = f64::INFINITY;
        for j in 0..partition.k() {
            let context = partition.assemble(&context_best);
            let obj = InContext {
                context: &context,
                span: partition.spans[j],
                objective,
            };
            subgroups[j].evaluate_all(&obj, wd)?;
            context_best[j] = subgroups[j].best_position.clone();
            context_cost = subgroups[j].best_cost;
        }

        let (q_group, q_params) = match params.variant {
            Variant::S => (None, None),
            Variant::H => {
                let qp = params.group_params(bounds);
                let q = GroupState::new(bounds, &qp, wd, objective, rng)?;
                (Some(q), Some(qp))
            }
        };

        Ok(Self {
            partition,
            params,
            subgroups,
            sub_params,
            q_group,
            q_params,
            context_best,
            context_cost,
            iteration: 0,
            last_exchanges: Vec::new(),
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn sub_params(&self) -> &[GsoParams] {
        &self.sub_params
    }

    /// Total objective evaluations so far, all groups included.
    pub fn evaluations(&self) -> u64 {
        self.subgroups.iter().map(|g| g.evaluations).sum::<u64>()
            + self.q_group.as_ref().map_or(0, |q| q.evaluations)
    }

    pub fn assembled(&self) -> Vec<f64> {
        self.partition.assemble(&self.context_best)
    }

    /// Runs `f` on group `j` evaluated in the current context, then folds any
    /// improvement back into the context.
    fn with_group<O, F>(&mut self, j: usize, objective: &O, f: F) -> Result<()>
    where
        O: Objective + ?Sized,
        F: FnOnce(&mut GroupState, &GsoParams, &dyn Objective) -> Result<()>,
    {
        let context = self.assembled();
        let obj = InContext {
            context: &context,
            span: self.partition.spans[j],
            objective,
        };
        let group = &mut self.subgroups[j];
        group.rebase_best(self.context_cost);
        group.best_position.clone_from(&self.context_best[j]);
        f(group, &self.sub_params[j], &obj)?;
        if group.best_cost < self.context_cost {
            self.context_cost = group.best_cost;
            self.context_best[j].clone_from(&group.best_position);
        }
        Ok(())
    }

    /// One pass over all groups in order.
    pub fn s_iteration<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        for j in 0..self.partition.k() {
            self.with_group(j, objective, |g, p, obj| g.iterate(obj, p, wd, rng))?;
        }
        Ok(())
    }

    /// One iteration of the configured variant.
    pub fn iterate<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        self.last_exchanges.clear();
        self.s_iteration(objective, wd, rng)?;
        if self.params.variant == Variant::H {
            self.h_exchange_and_q(objective, wd, rng)?;
        }
        self.iteration += 1;
        Ok(())
    }

    fn half(&self, members: usize) -> usize {
        self.params.exchange_half.unwrap_or(members.div_ceil(2))
    }

    fn h_exchange_and_q<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        self.exchange_into_q(objective, wd, rng)?;
        let q = self
            .q_group
            .as_mut()
            .ok_or_else(|| Error::InvalidParameter("H iteration without a Q group".into()))?;
        let q_params = self.q_params.as_ref().expect("Q params exist with Q");
        q.iterate(objective, q_params, wd, rng)?;
        self.exchange_from_q(objective, wd, rng)
    }

    /// Copies the assembled context over a non-producer member of `Q`.
    fn exchange_into_q<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        let assembled = self.assembled();
        let half = self.params.exchange_half;
        let q = self
            .q_group
            .as_mut()
            .ok_or_else(|| Error::InvalidParameter("H iteration without a Q group".into()))?;
        let producer = argmin_cost(&q.members);
        let half = half.unwrap_or(q.members.len().div_ceil(2));
        if let Some(i) = pick_exchange_index(q.members.len(), half, producer, rng) {
            q.replace_member(i, &assembled, objective, wd)?;
            self.last_exchanges.push(Exchange {
                group: None,
                member: i,
                producer,
            });
        }
        Ok(())
    }

    /// Copies each span of `Q`'s best over a non-producer member of the
    /// matching group.
    fn exchange_from_q<O: Objective + ?Sized, R: Rng + ?Sized>(
        &mut self,
        objective: &O,
        wd: &WdParams,
        rng: &mut R,
    ) -> Result<()> {
        let q_best = match &self.q_group {
            Some(q) => q.best_position.clone(),
            None => return Err(Error::InvalidParameter("H iteration without a Q group".into())),
        };
        for j in 0..self.partition.k() {
            let span = self.partition.spans[j];
            let members = self.subgroups[j].members.len();
            let half = self.half(members);
            let producer = argmin_cost(&self.subgroups[j].members);
            let Some(i) = pick_exchange_index(members, half, producer, rng) else {
                continue;
            };
            let piece = &q_best[span.range()];
            self.with_group(j, objective, |g, _, obj| g.replace_member(i, piece, obj, wd))?;
            self.last_exchanges.push(Exchange {
                group: Some(j),
                member: i,
                producer,
            });
        }
        Ok(())
    }

    /// Best full-dimensional solution: the assembled context, or `Q`'s best
    /// when that is strictly better.
    pub fn report_best(&self) -> (Vec<f64>, f64) {
        if let Some(q) = &self.q_group {
            if q.best_cost < self.context_cost {
                return (q.best_position.clone(), q.best_cost);
            }
        }
        (self.assembled(), self.context_cost)
    }

    pub fn best_cost(&self) -> f64 {
        self.report_best().1
    }
}
