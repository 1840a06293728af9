//! Extensional reference for the type-set codec.
//!
//! Every string is stored on its own with a label; strings sharing a label
//! play the role of one type set. The partition rule is applied at the label
//! level exactly as the type-set codec states it, but splits are done by
//! relabelling strings, and the single-parent property is restored by a plain
//! fixpoint (split any label whose strings have different parent labels)
//! instead of interval arithmetic. Slow, and meant for small `n` only.

use std::collections::{BTreeMap, BTreeSet};

use crate::arrivals::ArrivalModel;
use crate::channel::Dmc;
use crate::codec::{FeedbackCodec, StepStats};
use crate::error::{Error, Result};
use crate::sed_exact::{BeliefState, Phase, DRIFT_TOLERANCE, MASS_FLOOR};
use crate::sed_typeset::{strings_to_move, CensusRecord};
use crate::strings::VarString;

type Label = u64;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    label: Label,
    // label of the parent string, frozen once the parent is gone
    parent_label: Option<Label>,
    prior: f64,
    posterior: f64,
    group: Option<usize>,
}

/// One label viewed as a set: members in heap order and the shared values.
#[derive(Clone, Debug)]
struct LabelView {
    label: Label,
    members: Vec<VarString>,
    prior: f64,
    posterior: f64,
}

impl LabelView {
    fn first(&self) -> VarString {
        self.members[0]
    }

    fn strlen(&self) -> u32 {
        self.first().len()
    }

    fn prior_mass(&self) -> f64 {
        self.members.len() as f64 * self.prior
    }

    fn posterior_mass(&self) -> f64 {
        self.members.len() as f64 * self.posterior
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceState {
    t: u64,
    n: u32,
    phase: Phase,
    strings: BTreeMap<VarString, Entry>,
    next_label: Label,
    mass: [f64; 2],
    census: Vec<CensusRecord>,
}

impl ReferenceState {
    pub fn init(n: u32) -> Self {
        let mut strings = BTreeMap::new();
        for (label, bit) in [(0, 0u8), (1, 1)] {
            strings.insert(
                VarString::EMPTY.push(bit),
                Entry {
                    label,
                    parent_label: None,
                    prior: 0.5,
                    posterior: 0.0,
                    group: None,
                },
            );
        }
        ReferenceState {
            t: 1,
            n,
            phase: Phase::Prior,
            strings,
            next_label: 2,
            mass: [0.0; 2],
            census: Vec::new(),
        }
    }

    fn fresh_label(&mut self) -> Label {
        self.next_label += 1;
        self.next_label - 1
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn census(&self) -> &[CensusRecord] {
        &self.census
    }

    pub fn group_masses(&self) -> [f64; 2] {
        self.mass
    }

    pub fn group_of(&self, s: VarString) -> Option<usize> {
        self.strings.get(&s).and_then(|e| e.group)
    }

    /// Labels in heap order of their first member. Fails if members of a
    /// label disagree on prior or posterior.
    fn labels(&self) -> Result<Vec<LabelView>> {
        let mut by_label: BTreeMap<Label, LabelView> = BTreeMap::new();
        for (&s, e) in &self.strings {
            let view = by_label.entry(e.label).or_insert_with(|| LabelView {
                label: e.label,
                members: Vec::new(),
                prior: e.prior,
                posterior: e.posterior,
            });
            if view.prior != e.prior || view.posterior != e.posterior {
                return Err(Error::Invariant(format!(
                    "label {} holds strings with different beliefs",
                    e.label
                )));
            }
            view.members.push(s);
        }
        let mut views: Vec<LabelView> = by_label.into_values().collect();
        views.sort_by_key(|v| v.first());
        Ok(views)
    }

    pub fn num_labels(&self) -> usize {
        self.strings.values().map(|e| e.label).collect::<BTreeSet<_>>().len()
    }

    pub fn to_belief(&self) -> Result<BeliefState> {
        let entries = self
            .strings
            .iter()
            .map(|(&s, e)| {
                let mass = match self.phase {
                    Phase::Prior => e.prior,
                    Phase::Posterior => e.posterior,
                };
                (s, mass)
            })
            .collect();
        BeliefState::from_entries(self.t, self.phase, entries)
    }

    /// Spawn and prior update for step `t`.
    pub fn advance(&mut self, model: &ArrivalModel) -> Result<()> {
        let t = self.t + 1;
        self.t = t;
        self.phase = Phase::Prior;
        let mut children = Vec::new();
        if t <= self.n as u64 {
            let mut child_label: BTreeMap<Label, Label> = BTreeMap::new();
            let parents: Vec<(VarString, Label)> = self
                .strings
                .iter()
                .filter(|(s, _)| s.len() as u64 == t - 1)
                .map(|(&s, e)| (s, e.label))
                .collect();
            for (s, label) in parents {
                let cl = match child_label.get(&label) {
                    Some(&cl) => cl,
                    None => {
                        let cl = self.fresh_label();
                        child_label.insert(label, cl);
                        cl
                    }
                };
                for bit in [0, 1] {
                    children.push((s.push(bit), cl, label));
                }
            }
        }
        let mut priors = BTreeMap::new();
        for (&s, e) in &self.strings {
            let (stay, _) = model.weights_at(s.len(), t);
            let inherited = self.inherited(model, s, t);
            priors.insert(s, stay * e.posterior + inherited);
        }
        for (s, cl, pl) in children {
            let prior = self.inherited(model, s, t);
            self.strings.insert(
                s,
                Entry {
                    label: cl,
                    parent_label: Some(pl),
                    prior,
                    posterior: 0.0,
                    group: None,
                },
            );
        }
        for (s, prior) in priors {
            let e = self.strings.get_mut(&s).expect("present");
            e.prior = prior;
            e.group = None;
        }
        Ok(())
    }

    fn inherited(&self, model: &ArrivalModel, s: VarString, t: u64) -> f64 {
        match s.parent().filter(|p| !p.is_empty()).and_then(|p| self.strings.get(&p)) {
            Some(parent) => model.weights_at(s.len() - 1, t).1 * parent.posterior,
            None => 0.0,
        }
    }

    /// Label-level greedy partition with the same split count rule, a
    /// relabelling split, and the fixpoint parent repair.
    pub fn partition(&mut self, q: f64) -> Result<()> {
        let views = self.labels()?;
        let before = views.len();
        let mut order: Vec<&LabelView> = views.iter().filter(|v| v.prior > 0.0).collect();
        order.sort_by(|a, b| {
            b.prior
                .partial_cmp(&a.prior)
                .expect("finite")
                .then(a.strlen().cmp(&b.strlen()))
                .then(a.first().cmp(&b.first()))
        });
        let mut in_g0 = BTreeSet::new();
        let mut cumulative = 0.0;
        let mut crossing = *order.last().ok_or_else(|| Error::InvalidState("no mass".into()))?;
        for v in &order {
            in_g0.insert(v.label);
            cumulative += v.prior_mass();
            if cumulative > 0.5 {
                crossing = v;
                break;
            }
        }
        let card = crossing.members.len() as u128;
        let moved = strings_to_move(cumulative, crossing.prior, card);
        let split = moved > 0 && moved < card;
        let mut group_of_label: BTreeMap<Label, usize> = views
            .iter()
            .map(|v| (v.label, if in_g0.contains(&v.label) { 0 } else { 1 }))
            .collect();
        if moved == card {
            group_of_label.insert(crossing.label, 1);
        }
        let mut group_of_string: BTreeMap<VarString, usize> = BTreeMap::new();
        for v in &views {
            for &s in &v.members {
                group_of_string.insert(s, group_of_label[&v.label]);
            }
        }
        if split {
            // the strings that stay in group 0 get a new label
            let stay = self.fresh_label();
            for &s in &crossing.members[moved as usize..] {
                self.strings.get_mut(&s).expect("present").label = stay;
            }
            for &s in &crossing.members[..moved as usize] {
                group_of_string.insert(s, 1);
            }
        }
        self.repair();
        for (s, g) in group_of_string {
            self.strings.get_mut(&s).expect("present").group = Some(g);
        }
        let views = self.labels()?;
        let mut mass = [0.0; 2];
        for v in &views {
            let g = self.strings[&v.first()].group.expect("assigned");
            mass[g] += v.prior_mass();
        }
        if mass[0] < mass[1] {
            for e in self.strings.values_mut() {
                e.group = e.group.map(|g| 1 - g);
            }
            mass.swap(0, 1);
        }
        self.mass = mass;
        let event = if self.t == 1 {
            !split
        } else {
            let typical = ((q * self.t as f64).floor() as u64).min(self.n as u64);
            split && crossing.strlen() as u64 == typical
        };
        self.census.push(CensusRecord {
            t: self.t,
            before,
            after: views.len(),
            event,
            splits: 0,
            split_depth: 0,
        });
        Ok(())
    }

    fn repair(&mut self) {
        loop {
            // refresh parent labels from live parents
            let updates: Vec<(VarString, Label)> = self
                .strings
                .keys()
                .filter_map(|&s| {
                    let p = s.parent().filter(|p| !p.is_empty())?;
                    self.strings.get(&p).map(|e| (s, e.label))
                })
                .collect();
            for (s, l) in updates {
                self.strings.get_mut(&s).expect("present").parent_label = Some(l);
            }
            let mut seen: BTreeMap<Label, Option<Label>> = BTreeMap::new();
            let mut conflict = None;
            for (&s, e) in &self.strings {
                match seen.get(&e.label) {
                    None => {
                        seen.insert(e.label, e.parent_label);
                    }
                    Some(&pl) if pl != e.parent_label => {
                        conflict = Some((e.label, s));
                        break;
                    }
                    _ => {}
                }
            }
            let Some((label, _)) = conflict else {
                return;
            };
            // members of `label` keep it per first parent label, others move to
            // one fresh label per further parent label
            let members: Vec<VarString> = self
                .strings
                .iter()
                .filter(|(_, e)| e.label == label)
                .map(|(&s, _)| s)
                .collect();
            let first_parent = self.strings[&members[0]].parent_label;
            let mut fresh: BTreeMap<Option<Label>, Label> = BTreeMap::new();
            for s in members {
                let pl = self.strings[&s].parent_label;
                if pl == first_parent {
                    continue;
                }
                let nl = match fresh.get(&pl) {
                    Some(&nl) => nl,
                    None => {
                        let nl = self.fresh_label();
                        fresh.insert(pl, nl);
                        nl
                    }
                };
                self.strings.get_mut(&s).expect("present").label = nl;
            }
        }
    }

    pub fn collect_garbage(&mut self) {
        self.strings.retain(|_, e| e.prior != 0.0);
    }

    pub fn posterior_update(&mut self, channel: &Dmc, y: usize) -> Result<()> {
        let likelihood = [channel.prob(0, y), channel.prob(1, y)];
        let denom = likelihood[0] * self.mass[0] + likelihood[1] * self.mass[1];
        for e in self.strings.values_mut() {
            let g = e.group.ok_or_else(|| Error::InvalidState("ungrouped string".into()))?;
            let rho = likelihood[g] * e.prior / denom;
            e.posterior = if rho < MASS_FLOOR { 0.0 } else { rho };
        }
        self.phase = Phase::Posterior;
        // same summation order as the set view: one term per label, heap order
        let total: f64 = self.labels()?.iter().map(LabelView::posterior_mass).sum();
        if (total - 1.0).abs() > DRIFT_TOLERANCE {
            for e in self.strings.values_mut() {
                e.posterior /= total;
            }
        }
        Ok(())
    }

    pub fn check_stop(&self, epsilon: f64) -> Result<Option<VarString>> {
        let views = self.labels()?;
        let best = views
            .iter()
            .reduce(|best, v| if v.posterior > best.posterior { v } else { best });
        Ok(best
            .filter(|v| {
                v.posterior >= 1.0 - epsilon && v.members.len() == 1 && v.strlen() == self.n
            })
            .map(LabelView::first))
    }

    pub fn entropy_bits(&self) -> f64 {
        self.strings
            .values()
            .map(|e| match self.phase {
                Phase::Prior => e.prior,
                Phase::Posterior => e.posterior,
            })
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }
}

/// The reference wrapped as a codec so the harness can run it.
#[derive(Clone, Debug)]
pub struct ReferenceCodec {
    model: ArrivalModel,
    channel: Dmc,
    epsilon: f64,
    state: Option<ReferenceState>,
}

impl ReferenceCodec {
    pub fn new(model: ArrivalModel, channel: Dmc, epsilon: f64) -> Result<Self> {
        if channel.bsc_crossover().is_none() || !model.kind().is_incremental() {
            return Err(Error::InvalidParameter(
                "the reference needs a BSC and incremental arrivals".into(),
            ));
        }
        Ok(ReferenceCodec {
            model,
            channel,
            epsilon,
            state: None,
        })
    }

    pub fn state(&self) -> Option<&ReferenceState> {
        self.state.as_ref()
    }
}

impl FeedbackCodec for ReferenceCodec {
    fn time(&self) -> u64 {
        self.state.as_ref().map_or(0, ReferenceState::time)
    }

    fn prepare(&mut self) -> Result<()> {
        let state = match self.state.as_mut() {
            None => self.state.insert(ReferenceState::init(self.model.n())),
            Some(state) => {
                state.advance(&self.model)?;
                state
            }
        };
        let q = self.model.q_at(state.t);
        state.partition(q)?;
        state.collect_garbage();
        Ok(())
    }

    fn encode(&self, received: VarString) -> Result<usize> {
        self.state
            .as_ref()
            .and_then(|s| s.group_of(received))
            .ok_or_else(|| Error::InvalidState(format!("string {received} has no group")))
    }

    fn observe(&mut self, y: usize) -> Result<Option<VarString>> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| Error::InvalidState("observe before prepare".into()))?;
        state.posterior_update(&self.channel, y)?;
        state.check_stop(self.epsilon)
    }

    fn entropy_bits(&self) -> f64 {
        self.state.as_ref().map_or(0.0, ReferenceState::entropy_bits)
    }

    fn census(&self) -> Option<&[CensusRecord]> {
        self.state.as_ref().map(ReferenceState::census)
    }

    fn stats(&self) -> StepStats {
        let Some(state) = self.state.as_ref() else {
            return StepStats::default();
        };
        StepStats {
            support_size: state.strings.values().filter(|e| e.prior > 0.0).count() as u128,
            mass_g0: state.mass[0],
            max_mass: state
                .strings
                .values()
                .map(|e| match state.phase {
                    Phase::Prior => e.prior,
                    Phase::Posterior => e.posterior,
                })
                .fold(0.0, f64::max),
            num_sets: Some(state.num_labels()),
            split_depth: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_steps_by_hand() {
        let model = ArrivalModel::periodic(3).unwrap();
        let ch = Dmc::bsc(0.1).unwrap();
        let mut r = ReferenceState::init(3);
        r.partition(1.0).unwrap();
        assert_eq!(r.group_masses(), [0.5, 0.5]);
        assert_eq!(r.census()[0].before, 2);
        assert!(r.census()[0].event);
        r.collect_garbage();
        r.posterior_update(&ch, 0).unwrap();
        r.advance(&model).unwrap();
        r.partition(1.0).unwrap();
        assert_eq!(r.census()[1].before, 4);
        r.collect_garbage();
        assert_eq!(r.strings.len(), 4);
        let b = r.to_belief().unwrap();
        assert!((b.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relabel_repair_splits_children() {
        let mut r = ReferenceState::init(4);
        // one parent label over 00,01 with children labelled together
        r.strings.clear();
        let mk = |label, parent_label| Entry {
            label,
            parent_label,
            prior: 0.1,
            posterior: 0.1,
            group: None,
        };
        let s = |b: &[u8]| VarString::from_bits(b).unwrap();
        r.strings.insert(s(&[0, 0]), mk(1, None));
        r.strings.insert(s(&[0, 1]), mk(2, None));
        for bits in [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1]] {
            r.strings.insert(s(&bits), mk(3, Some(1)));
        }
        r.repair();
        assert_eq!(r.strings[&s(&[0, 0, 1])].label, 3);
        assert_ne!(r.strings[&s(&[0, 1, 0])].label, 3);
        assert_eq!(r.strings[&s(&[0, 1, 0])].label, r.strings[&s(&[0, 1, 1])].label);
        assert_eq!(r.num_labels(), 4);
    }
}
