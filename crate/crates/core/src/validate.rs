//! Self-checks: the type-set codec against the per-string reference, and
//! the codec invariants over randomized configurations.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arrivals::{ArrivalKind, ArrivalModel};
use crate::channel::Dmc;
use crate::codec::FeedbackCodec;
use crate::error::{Error, Result};
use crate::harness::{prepare, run_trials, trial_rng, CodecKind, ExperimentConfig};
use crate::reference::ReferenceCodec;
use crate::sed_exact::{BeliefState, ExactCodec, PartitionRule};
use crate::sed_typeset::{check_interval_cover, check_single_parent, expand_to_strings, TypeSetCodec};

/// Largest disagreement allowed between the two implementations.
pub const MATCH_TOLERANCE: f64 = 1e-12;
/// Normalization tolerance for the invariant suite.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceCase {
    pub n: u32,
    pub q: f64,
    pub p: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub steps: u64,
}

impl fmt::Display for EquivalenceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} q={} p={} epsilon={} seed={} steps={}",
            self.n, self.q, self.p, self.epsilon, self.seed, self.steps
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceOutcome {
    pub case: EquivalenceCase,
    pub steps_compared: u64,
    pub stopped_at: Option<u64>,
    pub max_mass_gap: f64,
    pub mismatch: Option<String>,
}

fn compare_beliefs(a: &BeliefState, b: &BeliefState, what: &str) -> std::result::Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("{what}: supports of size {} and {}", a.len(), b.len()));
    }
    let mut gap: f64 = 0.0;
    for (x, y) in a.entries().iter().zip(b.entries()) {
        if x.0 != y.0 {
            return Err(format!("{what}: string {} against {}", x.0, y.0));
        }
        gap = gap.max((x.1 - y.1).abs());
    }
    if gap > MATCH_TOLERANCE {
        return Err(format!("{what}: masses differ by {gap:e}"));
    }
    Ok(gap)
}

/// Runs the type-set codec and the reference side by side on one trace and
/// one channel-noise stream, comparing everything after every step.
pub fn check_equivalence(case: &EquivalenceCase) -> Result<EquivalenceOutcome> {
    let model = ArrivalModel::bernoulli(case.n, case.q)?;
    let channel = Dmc::bsc(case.p)?;
    let mut fast = TypeSetCodec::new(model.clone(), channel.clone(), case.epsilon)?;
    let mut slow = ReferenceCodec::new(model.clone(), channel.clone(), case.epsilon)?;
    let mut rng = trial_rng(case.seed, 0);
    let trace = model.sample_trace(&mut rng);
    let mut outcome = EquivalenceOutcome {
        case: case.clone(),
        steps_compared: 0,
        stopped_at: None,
        max_mass_gap: 0.0,
        mismatch: None,
    };
    for t in 1..=case.steps {
        fast.prepare()?;
        slow.prepare()?;
        let step = (|| -> std::result::Result<(), String> {
            let fs = fast.state().expect("prepared");
            let ss = slow.state().expect("prepared");
            let (fc, sc) = (fs.census()[t as usize - 1], ss.census()[t as usize - 1]);
            if (fc.before, fc.after, fc.event) != (sc.before, sc.after, sc.event) {
                return Err(format!("census {fc:?} against {sc:?}"));
            }
            let (fm, sm) = (fs.group_masses(), ss.group_masses());
            let gap = (fm[0] - sm[0]).abs().max((fm[1] - sm[1]).abs());
            if gap > MATCH_TOLERANCE {
                return Err(format!("group masses {fm:?} against {sm:?}"));
            }
            let fb = expand_to_strings(fs).map_err(|e| e.to_string())?;
            let sb = ss.to_belief().map_err(|e| e.to_string())?;
            outcome.max_mass_gap = outcome.max_mass_gap.max(gap).max(compare_beliefs(&fb, &sb, "prior")?);
            Ok(())
        })();
        if let Err(msg) = step {
            outcome.mismatch = Some(format!("t={t}: {msg}"));
            return Ok(outcome);
        }
        let received = trace.prefix_at(t);
        let (xf, xs) = (fast.encode(received)?, slow.encode(received)?);
        if xf != xs {
            outcome.mismatch = Some(format!("t={t}: inputs {xf} and {xs}"));
            return Ok(outcome);
        }
        let y = channel.sample_output(xf, &mut rng);
        let (df, ds) = (fast.observe(y)?, slow.observe(y)?);
        if df != ds {
            outcome.mismatch = Some(format!("t={t}: decisions {df:?} and {ds:?}"));
            return Ok(outcome);
        }
        if df.is_some() && outcome.stopped_at.is_none() {
            outcome.stopped_at = Some(t);
        }
        let fb = expand_to_strings(fast.state().expect("prepared"))?;
        let sb = slow.state().expect("prepared").to_belief()?;
        match compare_beliefs(&fb, &sb, "posterior") {
            Ok(gap) => outcome.max_mass_gap = outcome.max_mass_gap.max(gap),
            Err(msg) => {
                outcome.mismatch = Some(format!("t={t}: {msg}"));
                return Ok(outcome);
            }
        }
        outcome.steps_compared = t;
    }
    Ok(outcome)
}

/// `count` cases cycling through the given grids, with distinct seeds.
pub fn equivalence_cases(
    count: usize,
    lengths: &[u32],
    qs: &[f64],
    ps: &[f64],
    steps: u64,
    master_seed: u64,
) -> Vec<EquivalenceCase> {
    (0..count)
        .map(|i| EquivalenceCase {
            n: lengths[i % lengths.len()],
            q: qs[(i / lengths.len()) % qs.len()],
            p: ps[(i / (lengths.len() * qs.len())) % ps.len()],
            epsilon: 1e-3,
            seed: master_seed.wrapping_add(i as u64),
            steps,
        })
        .collect()
}

/// Outcome of a suite: how many cases ran and what failed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn absorb(&mut self, label: &str, result: Result<Vec<String>>) {
        self.cases += 1;
        match result {
            Ok(v) => self.failures.extend(v.into_iter().map(|m| format!("{label}: {m}"))),
            Err(e) => self.failures.push(format!("{label}: {e}")),
        }
    }
}

pub fn equivalence_suite(cases: &[EquivalenceCase]) -> SuiteReport {
    let mut report = SuiteReport::default();
    for case in cases {
        let result = check_equivalence(case).map(|o| o.mismatch.into_iter().collect());
        report.absorb(&case.to_string(), result);
    }
    report
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCase {
    pub codec: CodecKind,
    pub channel: Dmc,
    pub arrivals: ArrivalKind,
    pub n: u32,
    pub epsilon: f64,
    pub seed: u64,
}

impl fmt::Display for InvariantCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "codec={} channel={} arrivals={} n={} epsilon={} seed={}",
            self.codec, self.channel, self.arrivals, self.n, self.epsilon, self.seed
        )
    }
}

impl InvariantCase {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let codec = if rng.random_bool(0.5) { CodecKind::Typeset } else { CodecKind::Exact };
        let p = rng.random_range(0.01..0.25);
        let channel = if codec == CodecKind::Exact && rng.random_bool(0.3) {
            let a = rng.random_range(0.01..0.3);
            Dmc::new(vec![vec![1.0 - a, a], vec![p, 1.0 - p]]).expect("stochastic")
        } else {
            Dmc::bsc(p).expect("valid crossover")
        };
        let arrivals = if rng.random_bool(0.3) {
            ArrivalKind::Periodic
        } else {
            ArrivalKind::bernoulli(rng.random_range(0.2..=1.0))
        };
        InvariantCase {
            codec,
            channel,
            arrivals,
            n: rng.random_range(2..=8),
            epsilon: [1e-2, 1e-3, 1e-4][rng.random_range(0..3)],
            seed: rng.random(),
        }
    }

    fn config(&self, trials: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.codec, self.channel.clone(), self.arrivals.clone(), self.n);
        cfg.epsilon = self.epsilon;
        cfg.trials = trials;
        cfg.master_seed = self.seed;
        cfg
    }
}

/// A codec paired with a view of its belief, for the checks below.
enum Side {
    Exact(ExactCodec),
    Typeset(TypeSetCodec),
}

impl Side {
    fn codec(&mut self) -> &mut dyn FeedbackCodec {
        match self {
            Side::Exact(c) => c,
            Side::Typeset(c) => c,
        }
    }

    fn belief(&self) -> Result<BeliefState> {
        match self {
            Side::Exact(c) => c
                .belief()
                .cloned()
                .ok_or_else(|| Error::InvalidState("no belief".into())),
            Side::Typeset(c) => expand_to_strings(c.state().expect("prepared")),
        }
    }

    /// Checks that only make sense right after a partition.
    fn partition_checks(&self, out: &mut Vec<String>, t: u64) -> Result<()> {
        let Side::Typeset(c) = self else {
            return Ok(());
        };
        let state = c.state().expect("prepared");
        check_single_parent(state)?;
        check_interval_cover(state)?;
        // the single-parent property string by string
        for set in state.live_sets().filter(|s| s.strlen > 1 && s.cardinality() <= 1 << 12) {
            let parent = state.set(set.parent.expect("checked above"));
            if !parent.is_alive() {
                continue;
            }
            for i in set.start..=set.end {
                if !parent.contains((i - 1) / 2) {
                    out.push(format!("t={t}: string {i} of set {} has a parent outside set {}", set.id, parent.id));
                }
            }
        }
        let m = state.group_masses();
        let crossing = state.crossing();
        let g0_strings: u128 = state
            .live_sets()
            .filter(|s| s.group.symbol() == Some(0))
            .map(|s| s.cardinality())
            .sum();
        if g0_strings != 1 && (m[0] - 0.5).abs() > crossing.prior / 2.0 + MATCH_TOLERANCE {
            out.push(format!(
                "t={t}: group 0 mass {} is further than {} from 1/2",
                m[0],
                crossing.prior / 2.0
            ));
        }
        Ok(())
    }
}

fn make_side(cfg: &ExperimentConfig) -> Result<Side> {
    let prep = prepare(cfg)?;
    Ok(match cfg.codec {
        CodecKind::Typeset => Side::Typeset(TypeSetCodec::new(prep.model, cfg.channel.clone(), cfg.epsilon)?),
        _ => Side::Exact(ExactCodec::new(
            prep.model,
            cfg.channel.clone(),
            prep.caid,
            cfg.epsilon,
            PartitionRule::Greedy,
        )?),
    })
}

/// Steps an encoder and a separate decoder through a trial, checking
/// normalization, the partition invariants and that both stay identical.
fn lockstep_trial(cfg: &ExperimentConfig, index: u64) -> Result<Vec<String>> {
    let prep = prepare(cfg)?;
    let mut encoder = make_side(cfg)?;
    let mut decoder = make_side(cfg)?;
    let mut rng = trial_rng(cfg.master_seed, index);
    let trace = prep.model.sample_trace(&mut rng);
    let mut out = Vec::new();
    for t in 1..=prep.cap {
        encoder.codec().prepare()?;
        decoder.codec().prepare()?;
        encoder.partition_checks(&mut out, t)?;
        let prior = encoder.belief()?;
        if (prior.total_mass() - 1.0).abs() > NORMALIZATION_TOLERANCE {
            out.push(format!("t={t}: prior mass {}", prior.total_mass()));
        }
        let x = encoder.codec().encode(trace.prefix_at(t))?;
        let y = cfg.channel.sample_output(x, &mut rng);
        let de = encoder.codec().observe(y)?;
        let dd = decoder.codec().observe(y)?;
        let post = encoder.belief()?;
        if (post.total_mass() - 1.0).abs() > NORMALIZATION_TOLERANCE {
            out.push(format!("t={t}: posterior mass {}", post.total_mass()));
        }
        if de != dd || post != decoder.belief()? {
            out.push(format!("t={t}: encoder and decoder disagree"));
        }
        if de.is_some() {
            if t < trace.tau_n() {
                out.push(format!("t={t}: stopped before the last arrival at {}", trace.tau_n()));
            }
            break;
        }
        if !out.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// All invariant checks for one case.
pub fn check_invariants(case: &InvariantCase, trials: u64) -> Result<Vec<String>> {
    let cfg = case.config(trials);
    let mut out = Vec::new();
    for i in 0..trials {
        out.extend(lockstep_trial(&cfg, i)?);
    }
    let (_, records) = run_trials(&cfg)?;
    for r in records.iter().filter(|r| !r.truncated && r.lambda < r.tau_n) {
        out.push(format!("trial {}: lambda {} below tau_n {}", r.index, r.lambda, r.tau_n));
    }
    // records may not depend on the worker count
    for threads in [2, 3] {
        let (_, again) = run_trials(&ExperimentConfig {
            threads: Some(threads),
            ..cfg.clone()
        })?;
        if again != records {
            out.push(format!("results change with {threads} threads"));
        }
    }
    Ok(out)
}

pub fn invariant_suite(count: usize, trials: u64, master_seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut report = SuiteReport::default();
    for _ in 0..count {
        let case = InvariantCase::random(&mut rng);
        report.absorb(&case.to_string(), check_invariants(&case, trials));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_agrees_on_a_few_cases() {
        let cases = equivalence_cases(12, &[4, 6, 8], &[0.3, 0.7, 1.0], &[0.05, 0.11], 40, 99);
        let report = equivalence_suite(&cases);
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.cases, 12);
    }

    #[test]
    fn comparison_catches_differences() {
        let a = BeliefState::from_entries(1, crate::sed_exact::Phase::Prior, vec![(crate::VarString::EMPTY.push(0), 1.0)]).unwrap();
        let b = BeliefState::from_entries(1, crate::sed_exact::Phase::Prior, vec![(crate::VarString::EMPTY.push(1), 1.0)]).unwrap();
        assert!(compare_beliefs(&a, &b, "x").is_err());
        assert_eq!(compare_beliefs(&a, &a, "x"), Ok(0.0));
    }

    #[test]
    fn invariants_hold_on_a_few_cases() {
        let report = invariant_suite(10, 2, 5);
        assert!(report.passed(), "{:?}", report.failures);
    }
}
