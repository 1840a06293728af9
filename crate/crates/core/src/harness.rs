//! Monte Carlo trials: an arrival trace, a channel and a codec in a loop.
//!
//! Trial `i` of an experiment draws everything from a ChaCha8 stream selected
//! by `(master_seed, i)`, so any trial can be rerun on its own and the
//! summary does not depend on how trials are spread over threads. The trace
//! is drawn first and then one uniform per channel use, which gives codecs
//! run on the same config common random numbers.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{rate_point, RatePoint};
use crate::arrivals::{ArrivalKind, ArrivalModel, ArrivalTrace};
use crate::channel::{channel_info, Dmc, DEFAULT_TOLERANCE};
use crate::codec::FeedbackCodec;
use crate::error::{Error, Result};
use crate::reference::ReferenceCodec;
use crate::sed_exact::{ExactCodec, PartitionRule};
use crate::sed_typeset::{CensusRecord, TypeSetCodec};
use crate::strings::VarString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodecKind {
    /// Exact SED with instantaneous encoding.
    Exact,
    /// Type-set SED with instantaneous encoding (BSC only).
    Typeset,
    /// Exact SED over all `2^n` messages, every bit known at `t = 1`.
    ExactBlock,
    /// Wait for the last bit, then run block SED.
    ExactBuffered,
    /// Per-string reference for the type-set codec.
    Reference,
}

impl CodecKind {
    pub const ALL: [CodecKind; 5] = [
        CodecKind::Exact,
        CodecKind::Typeset,
        CodecKind::ExactBlock,
        CodecKind::ExactBuffered,
        CodecKind::Reference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CodecKind::Exact => "exact",
            CodecKind::Typeset => "typeset",
            CodecKind::ExactBlock => "exact-block",
            CodecKind::ExactBuffered => "exact-buffered",
            CodecKind::Reference => "reference",
        }
    }

    fn needs_bsc(self) -> bool {
        matches!(self, CodecKind::Typeset | CodecKind::Reference)
    }
}

impl fmt::Display for CodecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodecKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown codec `{s}` (expected exact, typeset, exact-block, exact-buffered or reference)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub codec: CodecKind,
    pub channel: Dmc,
    /// Arrival process; for `exact-buffered` this is the process being waited on,
    /// and `exact-block` ignores it.
    pub arrivals: ArrivalKind,
    pub n: u32,
    pub epsilon: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// Channel uses before a trial is cut off; `None` means `ceil(50 n / C)`.
    pub time_cap: Option<u64>,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Keep running after the decoder stops until at least this step.
    pub run_until: Option<u64>,
    /// Record the posterior entropy after this step.
    pub entropy_at: Option<u64>,
    pub record_census: bool,
    pub dump_trace: bool,
}

impl ExperimentConfig {
    pub fn new(codec: CodecKind, channel: Dmc, arrivals: ArrivalKind, n: u32) -> Self {
        ExperimentConfig {
            codec,
            channel,
            arrivals,
            n,
            epsilon: 1e-3,
            trials: 1000,
            master_seed: 1,
            time_cap: None,
            threads: None,
            run_until: None,
            entropy_at: None,
            record_census: false,
            dump_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.codec.needs_bsc() && self.channel.bsc_crossover().is_none() {
            return Err(Error::UnsupportedChannel(format!(
                "the {} codec needs a binary symmetric channel",
                self.codec
            )));
        }
        if self.channel.input_size() != 2 {
            return Err(Error::UnsupportedChannel("codecs need a binary-input channel".into()));
        }
        if self.record_census && !self.codec.needs_bsc() {
            return Err(Error::InvalidParameter(
                "census needs the typeset or reference codec".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        self.model().map(|_| ())
    }

    /// The arrival model the codec actually runs with.
    pub fn model(&self) -> Result<ArrivalModel> {
        let kind = match self.codec {
            CodecKind::ExactBlock => ArrivalKind::BlockAtStart,
            CodecKind::ExactBuffered => match &self.arrivals {
                ArrivalKind::Buffered(_) => self.arrivals.clone(),
                k if k.is_incremental() => ArrivalKind::Buffered(Box::new(k.clone())),
                _ => {
                    return Err(Error::InvalidParameter(
                        "exact-buffered needs periodic or bernoulli arrivals".into(),
                    ))
                }
            },
            _ => match &self.arrivals {
                k if k.is_incremental() => k.clone(),
                k => {
                    return Err(Error::InvalidParameter(format!(
                        "the {} codec needs periodic or bernoulli arrivals, got {k}",
                        self.codec
                    )))
                }
            },
        };
        ArrivalModel::new(kind, self.n)
    }

    /// Arrival label for summaries: `periodic`, the constant q, or the model text.
    pub fn arrivals_label(&self) -> String {
        let inner = match &self.arrivals {
            ArrivalKind::Buffered(inner) => inner.as_ref(),
            k => k,
        };
        match inner {
            ArrivalKind::Periodic => "periodic".into(),
            k => k.constant_q().map_or_else(|| k.to_string(), |q| q.to_string()),
        }
    }

    /// One line describing the whole config, used as CSV provenance.
    pub fn describe(&self) -> String {
        format!(
            "codec={} channel={} arrivals={} n={} epsilon={} trials={} seed={} time_cap={}",
            self.codec,
            self.channel,
            self.arrivals,
            self.n,
            self.epsilon,
            self.trials,
            self.master_seed,
            self.time_cap.map_or("auto".to_string(), |c| c.to_string()),
        )
    }
}

/// Per-step row of a trial trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    /// `send` for steps the codec ran, `wait` for idle steps of the buffered baseline.
    pub phase: &'static str,
    pub support_size: u128,
    pub mass_g0: f64,
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub max_posterior: f64,
    pub num_sets: Option<usize>,
    pub split_depth: Option<u32>,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "t,phase,support_size,mass_G0,x,y,max_posterior";
    pub const CSV_HEADER_SETS: &'static str =
        "t,phase,support_size,mass_G0,x,y,max_posterior,num_sets,split_depth";

    pub fn csv_row(&self, with_sets: bool) -> String {
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        let mut row = format!(
            "{},{},{},{},{},{},{}",
            self.t,
            self.phase,
            self.support_size,
            self.mass_g0,
            opt(self.x),
            opt(self.y),
            self.max_posterior
        );
        if with_sets {
            row.push_str(&format!(
                ",{},{}",
                opt(self.num_sets),
                self.split_depth.map_or(String::new(), |d| d.to_string())
            ));
        }
        row
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    /// Stopping time, or the cap for truncated trials.
    pub lambda: u64,
    pub tau_n: u64,
    pub correct: bool,
    pub truncated: bool,
    pub decoded: Option<VarString>,
    pub entropy_bits: Option<f64>,
    pub census: Option<Vec<CensusRecord>>,
    pub trace: Option<Vec<TraceRow>>,
}

/// Shared per-experiment values.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub model: ArrivalModel,
    pub caid: [f64; 2],
    pub capacity: f64,
    pub cap: u64,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let model = cfg.model()?;
    let info = channel_info(&cfg.channel, DEFAULT_TOLERANCE)?;
    let cap = match cfg.time_cap {
        Some(c) => c,
        None if info.capacity > 1e-9 => (50.0 * cfg.n as f64 / info.capacity).ceil() as u64,
        None => 50 * cfg.n as u64,
    };
    Ok(Prepared {
        model,
        caid: [info.caid[0], info.caid[1]],
        capacity: info.capacity,
        cap,
    })
}

pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Builds the codec a trial runs.
pub fn build_codec(cfg: &ExperimentConfig, prep: &Prepared) -> Result<Box<dyn FeedbackCodec>> {
    let model = prep.model.clone();
    let channel = cfg.channel.clone();
    Ok(match cfg.codec {
        CodecKind::Exact | CodecKind::ExactBlock | CodecKind::ExactBuffered => Box::new(
            ExactCodec::new(model, channel, prep.caid, cfg.epsilon, PartitionRule::Greedy)?,
        ),
        CodecKind::Typeset => Box::new(TypeSetCodec::new(model, channel, cfg.epsilon)?),
        CodecKind::Reference => Box::new(ReferenceCodec::new(model, channel, cfg.epsilon)?),
    })
}

pub fn run_trial(cfg: &ExperimentConfig, prep: &Prepared, index: u64) -> Result<TrialRecord> {
    run_trial_inner(cfg, prep, index).map_err(|e| Error::Trial {
        index,
        source: Box::new(e),
    })
}

fn run_trial_inner(cfg: &ExperimentConfig, prep: &Prepared, index: u64) -> Result<TrialRecord> {
    let mut rng = trial_rng(cfg.master_seed, index);
    let trace = prep.model.sample_trace(&mut rng);
    let tau_n = trace.tau_n();
    let message = trace.message();
    // the buffered baseline idles until the last bit is in
    let offset = match cfg.codec {
        CodecKind::ExactBuffered => tau_n - 1,
        _ => 0,
    };
    let mut codec = build_codec(cfg, prep)?;
    let mut rows = cfg.dump_trace.then(Vec::new);
    if let Some(rows) = rows.as_mut() {
        rows.extend((1..=offset.min(prep.cap)).map(|t| TraceRow {
            t,
            phase: "wait",
            support_size: 0,
            mass_g0: 0.0,
            x: None,
            y: None,
            max_posterior: 0.0,
            num_sets: None,
            split_depth: None,
        }));
    }
    let last_step = prep.cap.max(cfg.run_until.unwrap_or(0));
    let mut stop: Option<(u64, VarString)> = None;
    let mut entropy = None;
    let mut t = offset;
    while t < last_step {
        t += 1;
        codec.prepare()?;
        let received = received_at(cfg.codec, &trace, t - offset, message);
        let x = codec.encode(received)?;
        let y = cfg.channel.sample_output(x, &mut rng);
        let decision = codec.observe(y)?;
        if stop.is_none() {
            if let Some(d) = decision {
                stop = Some((t, d));
            }
        }
        if cfg.entropy_at == Some(t) {
            entropy = Some(codec.entropy_bits());
        }
        if let Some(rows) = rows.as_mut() {
            let stats = codec.stats();
            rows.push(TraceRow {
                t,
                phase: "send",
                support_size: stats.support_size,
                mass_g0: stats.mass_g0,
                x: Some(x),
                y: Some(y),
                max_posterior: stats.max_mass,
                num_sets: stats.num_sets,
                split_depth: stats.split_depth,
            });
        }
        if stop.is_some() && t >= cfg.run_until.unwrap_or(0) && t >= cfg.entropy_at.unwrap_or(0) {
            break;
        }
    }
    let census = if cfg.record_census {
        Some(codec.census().map(<[CensusRecord]>::to_vec).ok_or_else(|| {
            Error::InvalidParameter("census needs the typeset or reference codec".into())
        })?)
    } else {
        None
    };
    let (lambda, decoded, truncated) = match stop {
        Some((l, d)) if l <= prep.cap => (l, Some(d), false),
        _ => (prep.cap, None, true),
    };
    if truncated {
        debug!("trial {index} truncated at {}", prep.cap);
    }
    Ok(TrialRecord {
        index,
        lambda,
        tau_n,
        correct: decoded == Some(message),
        truncated,
        decoded,
        entropy_bits: entropy,
        census,
        trace: rows,
    })
}

fn received_at(kind: CodecKind, trace: &ArrivalTrace, step: u64, message: VarString) -> VarString {
    match kind {
        CodecKind::ExactBlock | CodecKind::ExactBuffered => message,
        _ => trace.prefix_at(step),
    }
}

/// Runs every trial; records come back in index order whatever the thread count.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<(Prepared, Vec<TrialRecord>)> {
    let prep = prepare(cfg)?;
    let records = run_indexed(cfg.threads, cfg.trials, |i| run_trial(cfg, &prep, i))?;
    Ok((prep, records))
}

#[cfg(feature = "parallel")]
fn run_indexed<T, F>(threads: Option<usize>, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let work = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_indexed<T, F>(_threads: Option<usize>, count: u64, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T>,
{
    (0..count).map(f).collect()
}

/// Mean census over trials, indexed by step.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusAggregate {
    pub q: f64,
    /// `rows[k]` describes step `k + 1`.
    pub rows: Vec<CensusRow>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusRow {
    pub t: u64,
    pub mean_before: f64,
    pub mean_after: f64,
    /// Fraction of trials in which the event failed at this step.
    pub event_failure: f64,
    /// Fraction of trials in which the crossing set was cut.
    pub split_frequency: f64,
    pub trials: u64,
}

impl CensusAggregate {
    pub fn from_records(q: f64, records: &[TrialRecord]) -> Self {
        let len = records
            .iter()
            .filter_map(|r| r.census.as_ref().map(Vec::len))
            .max()
            .unwrap_or(0);
        let mut rows: Vec<CensusRow> = (0..len)
            .map(|k| CensusRow {
                t: k as u64 + 1,
                mean_before: 0.0,
                mean_after: 0.0,
                event_failure: 0.0,
                split_frequency: 0.0,
                trials: 0,
            })
            .collect();
        for census in records.iter().filter_map(|r| r.census.as_ref()) {
            for (row, c) in rows.iter_mut().zip(census) {
                row.mean_before += c.before as f64;
                row.mean_after += c.after as f64;
                row.event_failure += (!c.event) as u8 as f64;
                row.split_frequency += (c.splits > 0) as u8 as f64;
                row.trials += 1;
            }
        }
        for row in &mut rows {
            if row.trials > 0 {
                let m = row.trials as f64;
                row.mean_before /= m;
                row.mean_after /= m;
                row.event_failure /= m;
                row.split_frequency /= m;
            }
        }
        CensusAggregate { q, rows }
    }

    pub fn at(&self, t: u64) -> Option<&CensusRow> {
        self.rows.get(t.checked_sub(1)? as usize)
    }

    /// Mean event-failure frequency over steps `from..=to`.
    pub fn mean_event_failure(&self, from: u64, to: u64) -> f64 {
        self.mean_over(from, to, |r| r.event_failure)
    }

    /// Mean split frequency over steps `from..=to`.
    pub fn mean_split_frequency(&self, from: u64, to: u64) -> f64 {
        self.mean_over(from, to, |r| r.split_frequency)
    }

    fn mean_over(&self, from: u64, to: u64, f: impl Fn(&CensusRow) -> f64) -> f64 {
        let vals: Vec<f64> = (from..=to).filter_map(|t| self.at(t)).map(f).collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub codec: CodecKind,
    pub n: u32,
    pub arrivals: String,
    /// BSC crossover; `None` for other channels.
    pub p: Option<f64>,
    pub epsilon: f64,
    pub point: RatePoint,
    pub error_ci_halfwidth: f64,
    pub truncated_frac: f64,
    pub lambda_below_tau: u64,
    /// Mean and standard error of the recorded posterior entropy.
    pub entropy: Option<(f64, f64)>,
    pub census: Option<CensusAggregate>,
}

impl Summary {
    pub const CSV_HEADER: &'static str =
        "codec,n,q_or_periodic,p,epsilon,trials,mean_lambda,rate,error_rate,ci,truncated_frac";

    pub fn from_records(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<Self> {
        let point = rate_point(records, cfg.n)?;
        let m = records.len() as f64;
        let truncated = records.iter().filter(|r| r.truncated).count() as f64;
        let e = point.error_rate;
        let entropies: Vec<f64> = records.iter().filter_map(|r| r.entropy_bits).collect();
        let entropy = (!entropies.is_empty()).then(|| mean_and_se(&entropies));
        let census = cfg.record_census.then(|| {
            CensusAggregate::from_records(cfg.arrivals.constant_q().unwrap_or(1.0), records)
        });
        let truncated_frac = truncated / m;
        if truncated_frac >= 0.01 {
            warn!("{:.2}% of trials truncated for {}", 100.0 * truncated_frac, cfg.describe());
        }
        Ok(Summary {
            codec: cfg.codec,
            n: cfg.n,
            arrivals: cfg.arrivals_label(),
            p: cfg.channel.bsc_crossover(),
            epsilon: cfg.epsilon,
            point,
            error_ci_halfwidth: 1.96 * (e * (1.0 - e) / m).sqrt(),
            truncated_frac,
            lambda_below_tau: records
                .iter()
                .filter(|r| !r.truncated && r.lambda < r.tau_n)
                .count() as u64,
            entropy,
            census,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.codec,
            self.n,
            self.arrivals,
            self.p.map_or("n/a".to_string(), |p| p.to_string()),
            self.epsilon,
            self.point.trials,
            self.point.mean_lambda,
            self.point.rate,
            self.point.error_rate,
            self.point.ci_halfwidth,
            self.truncated_frac
        )
    }
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    let (_, records) = run_trials(cfg)?;
    Summary::from_records(cfg, &records)
}

/// One experiment per message length.
pub fn sweep(template: &ExperimentConfig, lengths: &[u32]) -> Result<Vec<Summary>> {
    lengths
        .iter()
        .map(|&n| {
            let cfg = ExperimentConfig {
                n,
                ..template.clone()
            };
            run_experiment(&cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(codec: CodecKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(codec, Dmc::bsc(0.05).unwrap(), ArrivalKind::Periodic, 4);
        cfg.trials = 40;
        cfg.master_seed = 7;
        cfg
    }

    #[test]
    fn trials_are_reproducible() {
        let cfg = base(CodecKind::Typeset);
        let prep = prepare(&cfg).unwrap();
        let a = run_trial(&cfg, &prep, 5).unwrap();
        let b = run_trial(&cfg, &prep, 5).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&cfg, &prep, 6).unwrap();
        assert_ne!((a.lambda, a.decoded), (c.lambda, c.decoded));
    }

    #[test]
    fn noiseless_channel_decodes() {
        let mut cfg = ExperimentConfig::new(
            CodecKind::Exact,
            Dmc::noiseless(2),
            ArrivalKind::Periodic,
            4,
        );
        cfg.trials = 10;
        let (_, records) = run_trials(&cfg).unwrap();
        assert!(records.iter().all(|r| r.correct && !r.truncated));
        let lambdas: Vec<u64> = records.iter().map(|r| r.lambda).collect();
        assert!(lambdas.iter().all(|&l| l == lambdas[0] && l >= 4 && l <= 6), "{lambdas:?}");
    }

    #[test]
    fn single_trial_summary() {
        let mut cfg = base(CodecKind::Exact);
        cfg.trials = 1;
        let (_, records) = run_trials(&cfg).unwrap();
        let s = Summary::from_records(&cfg, &records).unwrap();
        assert_eq!(s.point.mean_lambda, records[0].lambda as f64);
        assert_eq!(s.point.error_rate, (!records[0].correct) as u8 as f64);
    }

    #[test]
    fn typeset_matches_reference_trials() {
        let mut cfg = base(CodecKind::Typeset);
        cfg.channel = Dmc::bsc(0.02).unwrap();
        cfg.n = 8;
        cfg.trials = 10;
        let (_, a) = run_trials(&cfg).unwrap();
        cfg.codec = CodecKind::Reference;
        let (_, b) = run_trials(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.lambda, x.correct), (y.lambda, y.correct));
        }
    }

    #[test]
    fn buffered_waits_for_last_bit() {
        let mut cfg = base(CodecKind::ExactBuffered);
        cfg.arrivals = ArrivalKind::bernoulli(0.5);
        cfg.dump_trace = true;
        cfg.trials = 5;
        let (_, records) = run_trials(&cfg).unwrap();
        for r in &records {
            assert!(r.lambda >= r.tau_n);
            let rows = r.trace.as_ref().unwrap();
            assert_eq!(rows.iter().filter(|row| row.phase == "wait").count() as u64, r.tau_n - 1);
        }
    }

    #[test]
    fn truncation_counts_as_error() {
        let mut cfg = base(CodecKind::Exact);
        cfg.time_cap = Some(2);
        let (prep, records) = run_trials(&cfg).unwrap();
        assert_eq!(prep.cap, 2);
        assert!(records.iter().all(|r| r.truncated && !r.correct && r.lambda == 2));
    }

    #[test]
    fn codec_names_round_trip() {
        for k in CodecKind::ALL {
            assert_eq!(k.name().parse::<CodecKind>().unwrap(), k);
        }
        assert!("blockwise".parse::<CodecKind>().is_err());
    }

    #[test]
    fn census_needs_type_sets() {
        let mut cfg = base(CodecKind::Exact);
        cfg.record_census = true;
        assert!(cfg.validate().is_err());
        cfg.codec = CodecKind::Typeset;
        cfg.run_until = Some(12);
        cfg.trials = 3;
        let s = run_experiment(&cfg).unwrap();
        let census = s.census.unwrap();
        assert_eq!(census.at(1).unwrap().mean_before, 2.0);
        assert_eq!(census.at(2).unwrap().mean_before, 4.0);
        assert!(census.rows.len() >= 12);
    }
}
