//! The type-set SED codec for binary symmetric channels.
//!
//! Strings of equal length that share a prior, a posterior and a parent set
//! are stored together as one heap-index interval `[start, end]`. A set
//! spawns its children as the interval `[2 start + 1, 2 end + 2]`; the group
//! partition moves whole sets and cuts at most one of them, and any child set
//! that would end up with two parents is cut at the matching place.
//!
//! Per step the work is linear in the number of live sets apart from the
//! sort, and that number grows roughly quadratically in time.

use std::collections::BTreeMap;

use log::debug;

use crate::arrivals::ArrivalModel;
use crate::channel::Dmc;
use crate::codec::{FeedbackCodec, StepStats};
use crate::error::{Error, Result};
use crate::sed_exact::{BeliefState, Phase, DRIFT_TOLERANCE, MASS_FLOOR};
use crate::strings::{index_len, VarString};

pub type SetId = usize;

/// Largest belief [`expand_to_strings`] will materialize.
pub const EXPAND_LIMIT: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Zero,
    One,
    Unassigned,
}

impl Group {
    pub fn symbol(self) -> Option<usize> {
        match self {
            Group::Zero => Some(0),
            Group::One => Some(1),
            Group::Unassigned => None,
        }
    }

    fn flipped(self) -> Self {
        match self {
            Group::Zero => Group::One,
            Group::One => Group::Zero,
            Group::Unassigned => Group::Unassigned,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeSet {
    pub id: SetId,
    pub start: u128,
    pub end: u128,
    pub strlen: u32,
    /// Prior of each member string.
    pub prior: f64,
    /// Posterior of each member string.
    pub posterior: f64,
    pub parent: Option<SetId>,
    pub created_at: u64,
    pub group: Group,
    pub spawned: bool,
    alive: bool,
}

impl TypeSet {
    pub fn cardinality(&self) -> u128 {
        self.end - self.start + 1
    }

    pub fn prior_mass(&self) -> f64 {
        self.cardinality() as f64 * self.prior
    }

    pub fn posterior_mass(&self) -> f64 {
        self.cardinality() as f64 * self.posterior
    }

    pub fn contains(&self, index: u128) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }
}

/// Per-step type-set statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CensusRecord {
    pub t: u64,
    /// Live sets right before the partition.
    pub before: usize,
    /// Live sets right after the partition and its repair splits.
    pub after: usize,
    /// The event that the step split the crossing set at the typical length
    /// (at `t = 1`: that nothing was split).
    pub event: bool,
    /// Sets cut this step, including repair splits.
    pub splits: usize,
    /// Depth of the deepest repair chain (0 when only the crossing set was cut).
    pub split_depth: u32,
}

/// What the last partition did with the set that crossed the 1/2 mark.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrossingInfo {
    pub set: Option<SetId>,
    /// Per-string prior of that set.
    pub prior: f64,
    pub strlen: u32,
    /// Strings moved from it to group 1.
    pub moved: u128,
    pub split: bool,
}

#[derive(Clone, Debug)]
pub struct TypeSetState {
    t: u64,
    n: u32,
    phase: Phase,
    slab: Vec<TypeSet>,
    // live sets per string length, keyed by interval start
    by_len: Vec<BTreeMap<u128, SetId>>,
    mass: [f64; 2],
    crossing: CrossingInfo,
    census: Vec<CensusRecord>,
}

impl TypeSetState {
    /// The two singleton sets `{0}` and `{1}` at `t = 1`, both with prior 1/2.
    pub fn init(n: u32) -> Self {
        let mut state = TypeSetState {
            t: 1,
            n,
            phase: Phase::Prior,
            slab: Vec::new(),
            by_len: vec![BTreeMap::new(); n as usize + 2],
            mass: [0.0; 2],
            crossing: CrossingInfo::default(),
            census: Vec::new(),
        };
        for index in [1u128, 2] {
            state.insert(TypeSet {
                id: 0,
                start: index,
                end: index,
                strlen: 1,
                prior: 0.5,
                posterior: 0.0,
                parent: None,
                created_at: 1,
                group: Group::Unassigned,
                spawned: false,
                alive: true,
            });
        }
        state
    }

    fn insert(&mut self, mut set: TypeSet) -> SetId {
        let id = self.slab.len();
        set.id = id;
        self.by_len[set.strlen as usize].insert(set.start, id);
        self.slab.push(set);
        id
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set(&self, id: SetId) -> &TypeSet {
        &self.slab[id]
    }

    /// Live sets in heap order (by length, then interval start).
    pub fn live_sets(&self) -> impl Iterator<Item = &TypeSet> + '_ {
        self.by_len
            .iter()
            .flat_map(|level| level.values())
            .map(move |&id| &self.slab[id])
    }

    pub fn num_live(&self) -> usize {
        self.by_len.iter().map(BTreeMap::len).sum()
    }

    pub fn group_masses(&self) -> [f64; 2] {
        self.mass
    }

    pub fn crossing(&self) -> CrossingInfo {
        self.crossing
    }

    pub fn census(&self) -> &[CensusRecord] {
        &self.census
    }

    /// Live set containing `s`, if any.
    pub fn find(&self, s: VarString) -> Option<&TypeSet> {
        let level = self.by_len.get(s.len() as usize)?;
        let (_, &id) = level.range(..=s.heap_index()).next_back()?;
        let set = &self.slab[id];
        set.contains(s.heap_index()).then_some(set)
    }

    pub fn total_mass(&self) -> f64 {
        match self.phase {
            Phase::Prior => self.live_sets().map(TypeSet::prior_mass).sum(),
            Phase::Posterior => self.live_sets().map(TypeSet::posterior_mass).sum(),
        }
    }

    pub fn entropy_bits(&self) -> f64 {
        -self
            .live_sets()
            .map(|s| {
                let p = match self.phase {
                    Phase::Prior => s.prior,
                    Phase::Posterior => s.posterior,
                };
                if p > 0.0 {
                    s.cardinality() as f64 * p * p.log2()
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    }

    /// Starts step `t`: sets created at `t - 1` that have not spawned yet
    /// produce their child interval. Does nothing past the message length.
    pub fn spawn_children(&mut self, t: u64) -> Result<()> {
        if t != self.t + 1 {
            return Err(Error::InvalidState(format!(
                "spawn for step {t} while the state is at step {}",
                self.t
            )));
        }
        self.t = t;
        self.phase = Phase::Prior;
        if t > self.n as u64 {
            return Ok(());
        }
        let parents: Vec<SetId> = self
            .live_sets()
            .filter(|s| s.created_at == t - 1 && !s.spawned)
            .map(|s| s.id)
            .collect();
        for pid in parents {
            let parent = &self.slab[pid];
            let child = TypeSet {
                id: 0,
                start: 2 * parent.start + 1,
                end: 2 * parent.end + 2,
                strlen: parent.strlen + 1,
                prior: 0.0,
                posterior: 0.0,
                parent: Some(pid),
                created_at: t,
                group: Group::Unassigned,
                spawned: false,
                alive: true,
            };
            self.slab[pid].spawned = true;
            self.insert(child);
        }
        Ok(())
    }

    /// Per-set prior: `stay(l) * rho(self) + grow(l - 1) * rho(parent)`, where
    /// sets created this step have no posterior of their own yet.
    pub fn update_priors(&mut self, model: &ArrivalModel) -> Result<()> {
        let t = self.t;
        let ids: Vec<SetId> = self.live_sets().map(|s| s.id).collect();
        let mut priors = Vec::with_capacity(ids.len());
        for &id in &ids {
            let set = &self.slab[id];
            let (stay, _) = model.weights_at(set.strlen, t);
            let own = if set.created_at == t { 0.0 } else { set.posterior };
            let inherited = match set.parent {
                Some(pid) if self.slab[pid].alive => {
                    let (_, grow) = model.weights_at(set.strlen - 1, t);
                    grow * self.slab[pid].posterior
                }
                _ => 0.0,
            };
            priors.push(stay * own + inherited);
        }
        for (&id, prior) in ids.iter().zip(priors) {
            self.slab[id].prior = prior;
            self.slab[id].group = Group::Unassigned;
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Invariant(format!(
                "prior mass {total} at t = {t} (type-set bookkeeping is broken)"
            )));
        }
        Ok(())
    }

    /// Cuts set `id` after heap index `cut`; the suffix becomes a new set.
    /// Children are re-parented and the one child interval that straddles the
    /// cut is cut in turn. Returns the suffix id and the recursion depth.
    fn split(&mut self, id: SetId, cut: u128) -> Result<(SetId, u32)> {
        let original = self.slab[id].clone();
        debug_assert!(original.start <= cut && cut < original.end);
        self.slab[id].end = cut;
        let suffix = self.insert(TypeSet {
            start: cut + 1,
            ..original.clone()
        });
        let child_len = original.strlen as usize + 1;
        if child_len >= self.by_len.len() {
            return Ok((suffix, 0));
        }
        // children wholly after the cut now descend from the suffix
        let after: Vec<SetId> = self.by_len[child_len]
            .range(2 * cut + 3..=2 * original.end + 2)
            .map(|(_, &c)| c)
            .collect();
        for c in after {
            if self.slab[c].parent != Some(id) {
                return Err(Error::Invariant(format!(
                    "set {c} lies under set {id} but has parent {:?}",
                    self.slab[c].parent
                )));
            }
            self.slab[c].parent = Some(suffix);
        }
        // the child holding both cut ⊞ 1 and (cut + 1) ⊞ 0
        let straddler = self.by_len[child_len]
            .range(..=2 * cut + 2)
            .next_back()
            .map(|(_, &c)| c)
            .filter(|&c| self.slab[c].end >= 2 * cut + 3);
        let Some(c) = straddler else {
            return Ok((suffix, 0));
        };
        if self.slab[c].parent != Some(id) {
            return Err(Error::Invariant(format!(
                "straddling set {c} does not descend from the split set {id}"
            )));
        }
        let (c_suffix, depth) = self.split(c, 2 * cut + 2)?;
        self.slab[c_suffix].parent = Some(suffix);
        Ok((suffix, depth + 1))
    }

    /// Groups the sets, cutting the crossing set so group 0 lands as close to
    /// 1/2 as whole strings allow, then repairs parents and records the census.
    /// `q` is the arrival probability at this step (used only for the census event).
    pub fn partition_and_split(&mut self, q: f64) -> Result<()> {
        let before = self.num_live();
        let mut order: Vec<SetId> = self
            .live_sets()
            .filter(|s| s.prior > 0.0)
            .map(|s| s.id)
            .collect();
        if order.is_empty() {
            return Err(Error::InvalidState("no set carries prior mass".into()));
        }
        // live_sets is already in (strlen, start) order, so a stable sort on
        // the prior alone gives the full tie-break
        order.sort_by(|&a, &b| {
            self.slab[b]
                .prior
                .partial_cmp(&self.slab[a].prior)
                .expect("priors are finite")
        });
        let ids: Vec<SetId> = self.live_sets().map(|s| s.id).collect();
        for id in ids {
            self.slab[id].group = Group::One;
        }
        let mut cumulative = 0.0;
        let mut crossing = *order.last().expect("non-empty");
        for &id in &order {
            self.slab[id].group = Group::Zero;
            cumulative += self.slab[id].prior_mass();
            if cumulative > 0.5 {
                crossing = id;
                break;
            }
        }
        let star = self.slab[crossing].clone();
        let moved = strings_to_move(cumulative, star.prior, star.cardinality());
        let mut splits = 0;
        let mut depth = 0;
        let split = moved > 0 && moved < star.cardinality();
        if moved == star.cardinality() {
            self.slab[crossing].group = Group::One;
        } else if split {
            // the first `moved` strings go to group 1, the rest stay in group 0
            let (suffix, d) = self.split(crossing, star.start + moved - 1)?;
            self.slab[crossing].group = Group::One;
            self.slab[suffix].group = Group::Zero;
            splits = 2 + d as usize - 1;
            depth = d;
        }
        self.recompute_prior_masses();
        if self.mass[0] < self.mass[1] {
            let ids: Vec<SetId> = self.live_sets().map(|s| s.id).collect();
            for id in ids {
                self.slab[id].group = self.slab[id].group.flipped();
            }
            self.mass.swap(0, 1);
        }
        let event = if self.t == 1 {
            !split
        } else {
            let typical = ((q * self.t as f64).floor() as u64).min(self.n as u64);
            split && star.strlen as u64 == typical
        };
        self.crossing = CrossingInfo {
            set: Some(crossing),
            prior: star.prior,
            strlen: star.strlen,
            moved,
            split,
        };
        self.census.push(CensusRecord {
            t: self.t,
            before,
            after: self.num_live(),
            event,
            splits: if split { splits } else { 0 },
            split_depth: depth,
        });
        Ok(())
    }

    fn recompute_prior_masses(&mut self) {
        let mut mass = [0.0; 2];
        for s in self.live_sets() {
            if let Some(x) = s.group.symbol() {
                mass[x] += s.prior_mass();
            }
        }
        self.mass = mass;
    }

    /// Drops sets whose prior is zero; they can never regain mass.
    pub fn collect_garbage(&mut self) {
        let dead: Vec<SetId> = self.live_sets().filter(|s| s.prior == 0.0).map(|s| s.id).collect();
        for id in dead {
            let set = &mut self.slab[id];
            set.alive = false;
            set.posterior = 0.0;
            self.by_len[set.strlen as usize].remove(&set.start);
        }
    }

    /// Bayes update with output `y` of a binary-input channel.
    pub fn posterior_update(&mut self, channel: &Dmc, y: usize) -> Result<()> {
        let likelihood = [channel.prob(0, y), channel.prob(1, y)];
        let denom = likelihood[0] * self.mass[0] + likelihood[1] * self.mass[1];
        if !(denom > 0.0) {
            return Err(Error::InvalidState(format!("output {y} has zero probability")));
        }
        let ids: Vec<SetId> = self.live_sets().map(|s| s.id).collect();
        for &id in &ids {
            let set = &mut self.slab[id];
            let x = set.group.symbol().ok_or_else(|| {
                Error::InvalidState(format!("set {id} has no group at posterior time"))
            })?;
            let rho = likelihood[x] * set.prior / denom;
            set.posterior = if rho < MASS_FLOOR { 0.0 } else { rho };
        }
        self.phase = Phase::Posterior;
        let total = self.total_mass();
        if (total - 1.0).abs() > DRIFT_TOLERANCE {
            debug!("renormalizing type-set posterior with total {total}");
            for &id in &ids {
                self.slab[id].posterior /= total;
            }
        }
        Ok(())
    }

    /// Decodes once the heaviest set is a single full-length string with
    /// posterior at least `1 - epsilon`. Ties go to the smaller interval start.
    pub fn check_stop(&self, epsilon: f64) -> Option<VarString> {
        let best = self
            .live_sets()
            .reduce(|best, s| if s.posterior > best.posterior { s } else { best })?;
        (best.posterior >= 1.0 - epsilon && best.cardinality() == 1 && best.strlen == self.n)
            .then(|| VarString::from_heap_index(best.start))
    }

    /// Group of the set holding `s`.
    pub fn encode(&self, s: VarString) -> Result<usize> {
        self.find(s)
            .and_then(|set| set.group.symbol())
            .ok_or_else(|| Error::InvalidState(format!("string {s} is not in any grouped set")))
    }
}

/// Number of strings to move from the crossing set to group 1, choosing
/// between floor and ceil of the excess over 1/2 in units of one string.
/// Exact ties keep the floor.
pub fn strings_to_move(group0_mass: f64, per_string: f64, cardinality: u128) -> u128 {
    if !(per_string > 0.0) {
        return 0;
    }
    let excess = (group0_mass - 0.5) / per_string;
    let clamp = |v: f64| -> u128 {
        if v <= 0.0 {
            0
        } else {
            (v as u128).min(cardinality)
        }
    };
    let low = clamp(excess.floor());
    let high = clamp(excess.ceil());
    let objective = |k: u128| (2.0 * group0_mass - 1.0 - 2.0 * k as f64 * per_string).abs();
    if objective(high) < objective(low) {
        high
    } else {
        low
    }
}

/// Per-string view of the state: every member of every live set with the
/// prior or posterior of the current phase.
pub fn expand_to_strings(state: &TypeSetState) -> Result<BeliefState> {
    let total: u128 = state.live_sets().map(TypeSet::cardinality).sum();
    if total > EXPAND_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "refusing to expand {total} strings"
        )));
    }
    let mut entries = Vec::with_capacity(total as usize);
    for set in state.live_sets() {
        let mass = match state.phase {
            Phase::Prior => set.prior,
            Phase::Posterior => set.posterior,
        };
        entries.extend((set.start..=set.end).map(|i| (VarString::from_heap_index(i), mass)));
    }
    BeliefState::from_entries(state.t, state.phase, entries)
}

/// Checks that every member string's parent lies in the set's recorded parent.
pub fn check_single_parent(state: &TypeSetState) -> Result<()> {
    for set in state.live_sets().filter(|s| s.strlen > 1) {
        let (first, last) = ((set.start - 1) / 2, (set.end - 1) / 2);
        let parent = match set.parent {
            Some(p) => state.set(p),
            None => {
                return Err(Error::Invariant(format!("set {} has no parent", set.id)));
            }
        };
        if parent.is_alive() && !(parent.contains(first) && parent.contains(last)) {
            return Err(Error::Invariant(format!(
                "set {} [{}, {}] has parents outside its parent set {} [{}, {}]",
                set.id, set.start, set.end, parent.id, parent.start, parent.end
            )));
        }
    }
    Ok(())
}

/// Checks that same-length intervals are disjoint and stay within their level.
pub fn check_interval_cover(state: &TypeSetState) -> Result<()> {
    for (len, level) in state.by_len.iter().enumerate() {
        let mut prev_end: Option<u128> = None;
        for (&start, &id) in level {
            let set = state.set(id);
            if set.start != start || set.strlen as usize != len || index_len(set.end) as usize != len
            {
                return Err(Error::Invariant(format!("set {id} is filed under the wrong key")));
            }
            if set.end < set.start {
                return Err(Error::Invariant(format!("set {id} has an empty interval")));
            }
            if prev_end.is_some_and(|e| e >= start) {
                return Err(Error::Invariant(format!("set {id} overlaps its predecessor")));
            }
            prev_end = Some(set.end);
        }
    }
    Ok(())
}

/// Stateful type-set codec.
#[derive(Clone, Debug)]
pub struct TypeSetCodec {
    model: ArrivalModel,
    channel: Dmc,
    epsilon: f64,
    state: Option<TypeSetState>,
}

impl TypeSetCodec {
    pub fn new(model: ArrivalModel, channel: Dmc, epsilon: f64) -> Result<Self> {
        if channel.bsc_crossover().is_none() {
            return Err(Error::UnsupportedChannel(
                "the type-set codec needs a binary symmetric channel".into(),
            ));
        }
        if !model.kind().is_incremental() {
            return Err(Error::InvalidParameter(
                "the type-set codec needs periodic or bernoulli arrivals".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be in (0, 1), got {epsilon}")));
        }
        Ok(TypeSetCodec {
            model,
            channel,
            epsilon,
            state: None,
        })
    }

    pub fn state(&self) -> Option<&TypeSetState> {
        self.state.as_ref()
    }
}

impl FeedbackCodec for TypeSetCodec {
    fn time(&self) -> u64 {
        self.state.as_ref().map_or(0, TypeSetState::time)
    }

    fn prepare(&mut self) -> Result<()> {
        let state = match self.state.as_mut() {
            None => self.state.insert(TypeSetState::init(self.model.n())),
            Some(state) => {
                let t = state.time() + 1;
                state.spawn_children(t)?;
                state.update_priors(&self.model)?;
                state
            }
        };
        let q = self.model.q_at(state.time());
        state.partition_and_split(q)?;
        state.collect_garbage();
        Ok(())
    }

    fn encode(&self, received: VarString) -> Result<usize> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::InvalidState("encode before prepare".into()))?
            .encode(received)
    }

    fn observe(&mut self, y: usize) -> Result<Option<VarString>> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| Error::InvalidState("observe before prepare".into()))?;
        state.posterior_update(&self.channel, y)?;
        Ok(state.check_stop(self.epsilon))
    }

    fn entropy_bits(&self) -> f64 {
        self.state.as_ref().map_or(0.0, TypeSetState::entropy_bits)
    }

    fn census(&self) -> Option<&[CensusRecord]> {
        self.state.as_ref().map(TypeSetState::census)
    }

    fn stats(&self) -> StepStats {
        let Some(state) = self.state.as_ref() else {
            return StepStats::default();
        };
        let max_mass = state
            .live_sets()
            .map(|s| match state.phase {
                Phase::Prior => s.prior,
                Phase::Posterior => s.posterior,
            })
            .fold(0.0, f64::max);
        StepStats {
            support_size: state
                .live_sets()
                .filter(|s| s.prior > 0.0)
                .map(TypeSet::cardinality)
                .sum(),
            mass_g0: state.mass[0],
            max_mass,
            num_sets: Some(state.num_live()),
            split_depth: state.census.last().map(|c| c.split_depth),
        }
    }
}
