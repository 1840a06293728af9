//! The exact instantaneous SED codec.
//!
//! The belief is kept extensionally: one mass per variable-length string in
//! the support. Each step runs prior update, group partition, encoding,
//! posterior update, and the stopping check. Cost grows with the support
//! size, which is exponential in the message length.

use std::cmp::Ordering;

use log::debug;

use crate::arrivals::ArrivalModel;
use crate::channel::Dmc;
use crate::codec::{FeedbackCodec, StepStats};
use crate::error::{Error, Result};
use crate::strings::VarString;

/// Masses below this are flushed to zero.
pub const MASS_FLOOR: f64 = 1e-300;
/// Total-mass drift that triggers renormalization.
pub const DRIFT_TOLERANCE: f64 = 1e-12;
/// Default support cap for [`partition_exact`].
pub const EXHAUSTIVE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Prior,
    Posterior,
}

/// Distribution of `B*_t` given past outputs, before or after observing `y_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    pub t: u64,
    pub phase: Phase,
    // sorted by heap index, all masses > 0
    entries: Vec<(VarString, f64)>,
}

impl BeliefState {
    /// Builds a belief from arbitrary `(string, mass)` pairs. Duplicates are
    /// summed and zero masses dropped; masses are not renormalized.
    pub fn from_entries(t: u64, phase: Phase, mut entries: Vec<(VarString, f64)>) -> Result<Self> {
        if entries.iter().any(|(_, m)| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParameter("masses must be finite and non-negative".into()));
        }
        entries.sort_by_key(|(s, _)| *s);
        let entries = merge_sorted(entries);
        Ok(BeliefState { t, phase, entries })
    }

    /// Prior belief at `t = 1`.
    pub fn initial(model: &ArrivalModel) -> Self {
        let entries = model.initial_prior();
        BeliefState {
            t: 1,
            phase: Phase::Prior,
            entries,
        }
    }

    pub fn entries(&self) -> &[(VarString, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass_of(&self, s: VarString) -> f64 {
        self.entries
            .binary_search_by_key(&s, |(k, _)| *k)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    pub fn entropy_bits(&self) -> f64 {
        -self
            .entries
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(_, m)| m * m.log2())
            .sum::<f64>()
    }

    /// Heaviest string; ties go to the smaller heap index.
    pub fn max_entry(&self) -> Option<(VarString, f64)> {
        self.entries.iter().copied().reduce(|best, e| if e.1 > best.1 { e } else { best })
    }
}

fn merge_sorted(entries: Vec<(VarString, f64)>) -> Vec<(VarString, f64)> {
    let mut out: Vec<(VarString, f64)> = Vec::with_capacity(entries.len());
    for (s, m) in entries {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += m,
            _ => out.push((s, m)),
        }
    }
    out.retain(|(_, m)| *m > 0.0);
    out
}

/// Flushes tiny masses and renormalizes when the total has drifted.
fn settle(entries: &mut Vec<(VarString, f64)>) {
    let before = entries.len();
    entries.retain(|(_, m)| *m >= MASS_FLOOR);
    if entries.len() != before {
        debug!("flushed {} strings below the mass floor", before - entries.len());
    }
    let total: f64 = entries.iter().map(|(_, m)| m).sum();
    if (total - 1.0).abs() > DRIFT_TOLERANCE && total > 0.0 {
        debug!("renormalizing belief with total mass {total}");
        entries.iter_mut().for_each(|(_, m)| *m /= total);
    }
}

/// Propagates the posterior at `t - 1` through the arrival law to the prior at `t`.
pub fn prior_update(posterior: &BeliefState, model: &ArrivalModel) -> Result<BeliefState> {
    if posterior.phase != Phase::Posterior {
        return Err(Error::InvalidState("prior update needs a posterior belief".into()));
    }
    let t = posterior.t + 1;
    let n = model.n();
    if posterior.entries.iter().all(|(s, _)| s.len() >= n) {
        return Ok(BeliefState {
            t,
            phase: Phase::Prior,
            entries: posterior.entries.clone(),
        });
    }
    let mut next = Vec::with_capacity(posterior.entries.len() * 3);
    for &(s, m) in &posterior.entries {
        let (stay, grow) = model.weights_at(s.len(), t);
        if stay > 0.0 {
            next.push((s, stay * m));
        }
        if grow > 0.0 {
            next.push((s.push(0), grow * m));
            next.push((s.push(1), grow * m));
        }
    }
    next.sort_by_key(|(s, _)| *s);
    Ok(BeliefState {
        t,
        phase: Phase::Prior,
        entries: merge_sorted(next),
    })
}

/// Assignment of every support string to a channel input.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    // heap order, aligned with the prior it was built from
    assignment: Vec<(VarString, u8)>,
    mass: [f64; 2],
}

impl Partition {
    pub fn group_of(&self, s: VarString) -> Option<usize> {
        self.assignment
            .binary_search_by_key(&s, |(k, _)| *k)
            .ok()
            .map(|i| self.assignment[i].1 as usize)
    }

    pub fn members(&self, x: usize) -> impl Iterator<Item = VarString> + '_ {
        self.assignment
            .iter()
            .filter(move |(_, g)| *g as usize == x)
            .map(|(s, _)| *s)
    }

    pub fn mass(&self, x: usize) -> f64 {
        self.mass[x]
    }

    pub fn masses(&self) -> [f64; 2] {
        self.mass
    }

    fn from_groups(prior: &BeliefState, groups: &[u8]) -> Self {
        let mut mass = [0.0; 2];
        for ((_, m), &g) in prior.entries.iter().zip(groups) {
            mass[g as usize] += m;
        }
        Partition {
            assignment: prior.entries.iter().zip(groups).map(|((s, _), &g)| (*s, g)).collect(),
            mass,
        }
    }
}

/// `sum_x |mass(G_x) - caid(x)|`.
pub fn partition_objective(partition: &Partition, caid: &[f64]) -> f64 {
    partition
        .mass
        .iter()
        .zip(caid)
        .map(|(m, c)| (m - c).abs())
        .sum()
}

fn check_caid(caid: &[f64]) -> Result<usize> {
    if caid.len() != 2 {
        return Err(Error::UnsupportedChannel(format!(
            "group partitioning is implemented for 2-input channels, caid has {} entries",
            caid.len()
        )));
    }
    // index of the group that must carry the larger mass; ties favour 0
    Ok(if caid[0] >= caid[1] { 0 } else { 1 })
}

fn priority_cmp(entries: &[(VarString, f64)], a: u32, b: u32) -> Ordering {
    let (sa, ma) = entries[a as usize];
    let (sb, mb) = entries[b as usize];
    mb.partial_cmp(&ma).unwrap_or(Ordering::Equal).then(sa.cmp(&sb))
}

/// Positions of the prior's entries sorted by mass (descending), then heap index.
pub fn priority_order(prior: &BeliefState) -> Vec<u32> {
    let mut order: Vec<u32> = (0..prior.entries.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| priority_cmp(&prior.entries, a, b));
    order
}

/// Greedy SED partition: fill the heavier group in priority order until it
/// reaches its target, try the last string on the other side, and swap the
/// labels if the ordering constraint is violated.
pub fn partition_greedy(prior: &BeliefState, caid: &[f64]) -> Result<Partition> {
    let order = priority_order(prior);
    greedy_from_order(prior, caid, &order)
}

fn greedy_from_order(prior: &BeliefState, caid: &[f64], order: &[u32]) -> Result<Partition> {
    let heavy = check_caid(caid)?;
    if prior.is_empty() {
        return Err(Error::InvalidState("cannot partition an empty support".into()));
    }
    let light = 1 - heavy;
    let target = caid[heavy];
    let mut groups = vec![light as u8; prior.entries.len()];
    let mut heavy_mass = 0.0;
    let mut last = None;
    for &pos in order {
        if heavy_mass >= target {
            break;
        }
        groups[pos as usize] = heavy as u8;
        heavy_mass += prior.entries[pos as usize].1;
        last = Some(pos as usize);
    }
    if let Some(pos) = last {
        let without = heavy_mass - prior.entries[pos].1;
        if (without - target).abs() < (heavy_mass - target).abs() {
            groups[pos] = light as u8;
        }
    }
    let mut partition = Partition::from_groups(prior, &groups);
    if partition.mass[heavy] < partition.mass[light] {
        partition.assignment.iter_mut().for_each(|(_, g)| *g = 1 - *g);
        partition.mass.swap(0, 1);
    }
    Ok(partition)
}

/// Exhaustive minimizer of [`partition_objective`] subject to the ordering
/// constraint. Ties go to the lexicographically smallest group-0 membership
/// vector in heap order. Only for small supports.
pub fn partition_exact(prior: &BeliefState, caid: &[f64], cap: usize) -> Result<Partition> {
    let heavy = check_caid(caid)?;
    let size = prior.entries.len();
    if size == 0 {
        return Err(Error::InvalidState("cannot partition an empty support".into()));
    }
    if size > cap || size > 30 {
        return Err(Error::SupportTooLarge { size, cap });
    }
    let masses: Vec<f64> = prior.entries.iter().map(|(_, m)| *m).collect();
    let mut best: Option<(f64, u64)> = None;
    for mask in 0u64..(1u64 << size) {
        // bit (size - 1 - j) set means entry j is in group 0
        let mut m = [0.0; 2];
        for (j, &mj) in masses.iter().enumerate() {
            let in_zero = (mask >> (size - 1 - j)) & 1 == 1;
            m[if in_zero { 0 } else { 1 }] += mj;
        }
        if m[heavy] < m[1 - heavy] {
            continue;
        }
        let objective = (m[0] - caid[0]).abs() + (m[1] - caid[1]).abs();
        match best {
            Some((b, _)) if objective >= b - 1e-12 => {}
            _ => best = Some((objective, mask)),
        }
    }
    let (_, mask) = best.expect("the all-heavy partition satisfies the ordering constraint");
    let groups: Vec<u8> = (0..size)
        .map(|j| if (mask >> (size - 1 - j)) & 1 == 1 { 0 } else { 1 })
        .collect();
    Ok(Partition::from_groups(prior, &groups))
}

/// Index of the group holding `received`.
pub fn encode(partition: &Partition, received: VarString) -> Result<usize> {
    partition.group_of(received).ok_or_else(|| {
        Error::InvalidState(format!("string {received} is not in the support"))
    })
}

/// Bayes update of the prior with output `y`, given the inputs the partition assigns.
pub fn posterior_update(
    prior: &BeliefState,
    partition: &Partition,
    ch: &Dmc,
    y: usize,
) -> Result<BeliefState> {
    if prior.phase != Phase::Prior {
        return Err(Error::InvalidState("posterior update needs a prior belief".into()));
    }
    if partition.assignment.len() != prior.entries.len() {
        return Err(Error::InvalidState("partition does not match the prior".into()));
    }
    let likelihood = [ch.prob(0, y), ch.prob(1, y)];
    let denom = likelihood[0] * partition.mass[0] + likelihood[1] * partition.mass[1];
    if !(denom > 0.0) {
        return Err(Error::InvalidState(format!(
            "output {y} has zero probability under the current partition"
        )));
    }
    let mut entries: Vec<(VarString, f64)> = prior
        .entries
        .iter()
        .zip(&partition.assignment)
        .map(|(&(s, m), &(_, g))| (s, likelihood[g as usize] * m / denom))
        .collect();
    entries.retain(|(_, m)| *m > 0.0);
    settle(&mut entries);
    Ok(BeliefState {
        t: prior.t,
        phase: Phase::Posterior,
        entries,
    })
}

/// Stopping rule: the heaviest length-`n` string once its mass reaches `1 - epsilon`.
/// Strings shorter than `n` are not candidates.
pub fn check_stop(posterior: &BeliefState, n: u32, epsilon: f64) -> Option<VarString> {
    let (s, m) = posterior
        .entries
        .iter()
        .filter(|(s, _)| s.len() == n)
        .copied()
        .reduce(|best, e| if e.1 > best.1 { e } else { best })?;
    (m >= 1.0 - epsilon).then_some(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionRule {
    Greedy,
    Exhaustive { cap: usize },
}

/// Stateful exact codec. Encoder and decoder each own one.
#[derive(Clone, Debug)]
pub struct ExactCodec {
    model: ArrivalModel,
    channel: Dmc,
    caid: [f64; 2],
    epsilon: f64,
    rule: PartitionRule,
    belief: Option<BeliefState>,
    partition: Option<Partition>,
    // priority order of the next prior when the next prior update is the identity
    order_hint: Option<Vec<u32>>,
}

impl ExactCodec {
    pub fn new(
        model: ArrivalModel,
        channel: Dmc,
        caid: [f64; 2],
        epsilon: f64,
        rule: PartitionRule,
    ) -> Result<Self> {
        if channel.input_size() != 2 {
            return Err(Error::UnsupportedChannel(
                "the exact codec partitions into two groups".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be in (0, 1), got {epsilon}")));
        }
        Ok(ExactCodec {
            model,
            channel,
            caid,
            epsilon,
            rule,
            belief: None,
            partition: None,
            order_hint: None,
        })
    }

    pub fn belief(&self) -> Option<&BeliefState> {
        self.belief.as_ref()
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn model(&self) -> &ArrivalModel {
        &self.model
    }
}

impl FeedbackCodec for ExactCodec {
    fn time(&self) -> u64 {
        self.belief.as_ref().map_or(0, |b| b.t)
    }

    fn prepare(&mut self) -> Result<()> {
        let (prior, identity) = match self.belief.take() {
            None => (BeliefState::initial(&self.model), false),
            Some(post) => {
                let prior = prior_update(&post, &self.model)?;
                let identity = prior.entries.len() == post.entries.len()
                    && prior.entries.iter().zip(&post.entries).all(|(a, b)| a.0 == b.0);
                (prior, identity)
            }
        };
        let partition = match self.rule {
            PartitionRule::Greedy => {
                let order = match self.order_hint.take() {
                    Some(mut hint) if identity && hint.len() == prior.entries.len() => {
                        // the hint is two presorted runs; the stable sort merges them
                        hint.sort_by(|&a, &b| priority_cmp(&prior.entries, a, b));
                        hint
                    }
                    _ => priority_order(&prior),
                };
                greedy_from_order(&prior, &self.caid, &order)?
            }
            PartitionRule::Exhaustive { cap } => partition_exact(&prior, &self.caid, cap)?,
        };
        self.belief = Some(prior);
        self.partition = Some(partition);
        Ok(())
    }

    fn encode(&self, received: VarString) -> Result<usize> {
        let partition = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::InvalidState("encode before prepare".into()))?;
        encode(partition, received)
    }

    fn observe(&mut self, y: usize) -> Result<Option<VarString>> {
        let prior = self
            .belief
            .take()
            .ok_or_else(|| Error::InvalidState("observe before prepare".into()))?;
        let partition = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::InvalidState("observe before prepare".into()))?;
        let post = posterior_update(&prior, partition, &self.channel, y)?;
        self.order_hint = None;
        if matches!(self.rule, PartitionRule::Greedy) && post.entries.len() == prior.entries.len() {
            let order = priority_order(&prior);
            let mut hint = Vec::with_capacity(order.len());
            for g in 0..2u8 {
                hint.extend(order.iter().filter(|&&p| partition.assignment[p as usize].1 == g));
            }
            self.order_hint = Some(hint);
        }
        let decision = check_stop(&post, self.model.n(), self.epsilon);
        self.belief = Some(post);
        Ok(decision)
    }

    fn entropy_bits(&self) -> f64 {
        self.belief.as_ref().map_or(0.0, BeliefState::entropy_bits)
    }

    fn stats(&self) -> StepStats {
        let belief = self.belief.as_ref();
        StepStats {
            support_size: belief.map_or(0, |b| b.len() as u128),
            mass_g0: self.partition.as_ref().map_or(0.0, |p| p.mass[0]),
            max_mass: belief.and_then(|b| b.max_entry()).map_or(0.0, |e| e.1),
            num_sets: None,
            split_depth: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vs(bits: &str) -> VarString {
        let b: Vec<u8> = bits.bytes().map(|c| c - b'0').collect();
        VarString::from_bits(&b).unwrap()
    }

    fn belief(phase: Phase, items: &[(&str, f64)]) -> BeliefState {
        BeliefState::from_entries(1, phase, items.iter().map(|(s, m)| (vs(s), *m)).collect()).unwrap()
    }

    // Exhaustive reference: minimum objective over all partitions honouring
    // mass(G0) >= mass(G1), computed independently of partition_exact.
    fn brute_force_objective(masses: &[f64]) -> f64 {
        let k = masses.len();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << k) {
            let m0: f64 = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| masses[j]).sum();
            let m1: f64 = masses.iter().sum::<f64>() - m0;
            if m0 >= m1 {
                best = best.min((m0 - 0.5).abs() + (m1 - 0.5).abs());
            }
        }
        best
    }

    #[test]
    fn bootstrap_prior() {
        let b = BeliefState::initial(&ArrivalModel::bernoulli(4, 0.5).unwrap());
        assert_eq!(b.t, 1);
        assert_eq!(b.entries(), &[(vs("0"), 0.5), (vs("1"), 0.5)]);
    }

    #[test]
    fn prior_update_half_arrival() {
        let m = ArrivalModel::bernoulli(4, 0.5).unwrap();
        let post = belief(Phase::Posterior, &[("0", 0.9), ("1", 0.1)]);
        let prior = prior_update(&post, &m).unwrap();
        assert_eq!(prior.t, 2);
        let expected = [
            ("0", 0.45),
            ("1", 0.05),
            ("00", 0.225),
            ("01", 0.225),
            ("10", 0.025),
            ("11", 0.025),
        ];
        assert_eq!(prior.len(), 6);
        for (s, v) in expected {
            assert_abs_diff_eq!(prior.mass_of(vs(s)), v, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(prior.total_mass(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn periodic_support_is_full_level() {
        let m = ArrivalModel::periodic(3).unwrap();
        let mut post = belief(Phase::Posterior, &[("0", 0.7), ("1", 0.3)]);
        for t in 2..=5u32 {
            let prior = prior_update(&post, &m).unwrap();
            let level = t.min(3);
            assert_eq!(prior.len(), 1 << level);
            assert!(prior.entries().iter().all(|(s, _)| s.len() == level));
            post = BeliefState { phase: Phase::Posterior, ..prior };
        }
    }

    #[test]
    fn block_prior_update_is_identity() {
        let m = ArrivalModel::block(3).unwrap();
        let post = BeliefState {
            phase: Phase::Posterior,
            ..BeliefState::initial(&m)
        };
        let prior = prior_update(&post, &m).unwrap();
        assert_eq!(prior.entries(), post.entries());
    }

    #[test]
    fn greedy_on_even_pair() {
        let prior = belief(Phase::Prior, &[("0", 0.5), ("1", 0.5)]);
        let p = partition_greedy(&prior, &[0.5, 0.5]).unwrap();
        assert_eq!(p.members(0).collect::<Vec<_>>(), vec![vs("0")]);
        assert_eq!(p.members(1).collect::<Vec<_>>(), vec![vs("1")]);
    }

    #[test]
    fn greedy_on_two_heavy_strings() {
        let prior = belief(Phase::Prior, &[("00", 0.4), ("01", 0.4), ("10", 0.2)]);
        let greedy = partition_greedy(&prior, &[0.5, 0.5]).unwrap();
        let exact = partition_exact(&prior, &[0.5, 0.5], EXHAUSTIVE_CAP).unwrap();
        let oracle = brute_force_objective(&[0.4, 0.4, 0.2]);
        assert_abs_diff_eq!(oracle, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(partition_objective(&greedy, &[0.5, 0.5]), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(partition_objective(&exact, &[0.5, 0.5]), oracle, epsilon = 1e-12);
        // greedy drops 01 from {00, 01} and then swaps labels
        assert_eq!(greedy.members(0).collect::<Vec<_>>(), vec![vs("01"), vs("10")]);
        assert_abs_diff_eq!(greedy.mass(0), 0.6, epsilon = 1e-12);
        assert!(greedy.mass(0) >= greedy.mass(1));
    }

    #[test]
    fn greedy_on_dominant_string() {
        let prior = belief(Phase::Prior, &[("00", 0.7), ("01", 0.2), ("10", 0.1)]);
        let greedy = partition_greedy(&prior, &[0.5, 0.5]).unwrap();
        assert_eq!(greedy.members(0).collect::<Vec<_>>(), vec![vs("00")]);
        let oracle = brute_force_objective(&[0.7, 0.2, 0.1]);
        assert_abs_diff_eq!(oracle, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(partition_objective(&greedy, &[0.5, 0.5]), oracle, epsilon = 1e-12);
        let exact = partition_exact(&prior, &[0.5, 0.5], EXHAUSTIVE_CAP).unwrap();
        assert_eq!(exact.members(0).collect::<Vec<_>>(), vec![vs("00")]);
    }

    #[test]
    fn exact_refuses_large_support() {
        let items: Vec<(VarString, f64)> =
            (0..32u128).map(|p| (VarString::from_payload(5, p), 1.0 / 32.0)).collect();
        let prior = BeliefState::from_entries(1, Phase::Prior, items).unwrap();
        assert!(matches!(
            partition_exact(&prior, &[0.5, 0.5], EXHAUSTIVE_CAP),
            Err(Error::SupportTooLarge { size: 32, cap: 20 })
        ));
        let empty = BeliefState::from_entries(1, Phase::Prior, vec![]).unwrap();
        assert!(partition_greedy(&empty, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn encode_reports_group() {
        let prior = belief(Phase::Prior, &[("00", 0.3), ("01", 0.3), ("10", 0.2), ("11", 0.2)]);
        let p = Partition::from_groups(&prior, &[0, 0, 1, 1]);
        assert_eq!(encode(&p, vs("01")).unwrap(), 0);
        assert_eq!(encode(&p, vs("11")).unwrap(), 1);
        assert!(encode(&p, vs("0")).is_err());
    }

    #[test]
    fn posterior_examples() {
        let prior = belief(Phase::Prior, &[("0", 0.5), ("1", 0.5)]);
        let p = partition_greedy(&prior, &[0.5, 0.5]).unwrap();
        let post = posterior_update(&prior, &p, &Dmc::bsc(0.1).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(post.mass_of(vs("0")), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(post.mass_of(vs("1")), 0.1, epsilon = 1e-15);

        let noiseless = posterior_update(&prior, &p, &Dmc::noiseless(2), 1).unwrap();
        assert_eq!(noiseless.entries(), &[(vs("1"), 1.0)]);

        let useless = posterior_update(&prior, &p, &Dmc::bsc(0.5).unwrap(), 1).unwrap();
        assert_eq!(useless.entries(), prior.entries());
    }

    #[test]
    fn stop_examples() {
        let post = belief(Phase::Posterior, &[("0101", 0.9995), ("0110", 0.0005)]);
        assert_eq!(check_stop(&post, 4, 1e-3), Some(vs("0101")));
        let short = belief(Phase::Posterior, &[("010", 0.9999), ("0110", 0.0001)]);
        assert_eq!(check_stop(&short, 4, 1e-3), None);
        let two = belief(Phase::Posterior, &[("00", 0.6), ("01", 0.39), ("0", 0.01)]);
        assert_eq!(check_stop(&two, 2, 0.5), Some(vs("00")));
        let tie = belief(Phase::Posterior, &[("00", 0.5), ("01", 0.5)]);
        assert_eq!(check_stop(&tie, 2, 0.5), Some(vs("00")));
    }

    #[test]
    fn noiseless_codec_decodes() {
        let model = ArrivalModel::periodic(4).unwrap();
        let mut codec =
            ExactCodec::new(model, Dmc::noiseless(2), [0.5, 0.5], 1e-3, PartitionRule::Greedy).unwrap();
        let message = vs("1011");
        for t in 1..=20u64 {
            codec.prepare().unwrap();
            let x = codec.encode(message.truncate(t as u32)).unwrap();
            if let Some(decoded) = codec.observe(x).unwrap() {
                assert_eq!(decoded, message);
                assert!(t >= 4);
                return;
            }
        }
        panic!("noiseless channel never stopped");
    }

    #[test]
    fn order_hint_matches_full_sort() {
        // block mode reuses the previous order; the partition must equal a fresh greedy one
        use rand::SeedableRng;
        let model = ArrivalModel::block(6).unwrap();
        let ch = Dmc::bsc(0.2).unwrap();
        let mut codec =
            ExactCodec::new(model, ch.clone(), [0.5, 0.5], 1e-6, PartitionRule::Greedy).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            codec.prepare().unwrap();
            let fresh = partition_greedy(codec.belief().unwrap(), &[0.5, 0.5]).unwrap();
            assert_eq!(codec.partition().unwrap(), &fresh);
            let x = codec.encode(vs("101100")).unwrap();
            codec.observe(ch.sample_output(x, &mut rng)).unwrap();
        }
    }
}
