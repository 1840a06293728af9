//! Rate summaries, reliability lower bounds, entropy estimates and the
//! type-set count bound.

use log::warn;

use crate::error::{Error, Result};
use crate::harness::{mean_and_se, run_trials, ExperimentConfig, TrialRecord};

/// Inputs of the two reliability lower bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    /// Capacity in bits.
    pub capacity: f64,
    /// Largest pairwise output divergence in bits.
    pub c1: f64,
    /// Rate in bits per channel use.
    pub rate: f64,
    /// Limit of `E[tau_n] / n`.
    pub tau_bar_over_n: f64,
    /// Limit of the per-bit posterior entropy at the evaluation time.
    pub h_limit: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.capacity, self.c1, self.rate, self.tau_bar_over_n, self.h_limit];
        if fields.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("bound inputs must be nonnegative: {self:?}")));
        }
        if self.capacity == 0.0 {
            return Err(Error::InvalidParameter("capacity must be positive".into()));
        }
        if self.h_limit > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "per-bit entropy {} exceeds 1",
                self.h_limit
            )));
        }
        Ok(())
    }
}

/// A bound value; `clamped` is set when the raw formula went negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub clamped: bool,
}

impl BoundValue {
    fn clamp(raw: f64) -> Self {
        BoundValue {
            value: raw.max(0.0),
            clamped: raw < 0.0,
        }
    }
}

/// `C1 (1 - (h / C + tau_bar / n) R)` for instantaneous encoding.
pub fn reliability_lb_instantaneous(b: &BoundInputs) -> Result<BoundValue> {
    b.validate()?;
    Ok(BoundValue::clamp(
        b.c1 * (1.0 - (b.h_limit / b.capacity + b.tau_bar_over_n) * b.rate),
    ))
}

/// `C1 (1 - (1 / C + tau_bar / n) R)` for buffer-then-transmit.
pub fn reliability_lb_buffer(b: &BoundInputs) -> Result<BoundValue> {
    b.validate()?;
    Ok(BoundValue::clamp(
        b.c1 * (1.0 - (1.0 / b.capacity + b.tau_bar_over_n) * b.rate),
    ))
}

/// Rate at which the instantaneous bound reaches zero.
pub fn zero_crossing_instantaneous(capacity: f64, h_limit: f64, tau_bar_over_n: f64) -> f64 {
    1.0 / (h_limit / capacity + tau_bar_over_n)
}

/// Rate at which the buffer bound reaches zero.
pub fn zero_crossing_buffer(capacity: f64, tau_bar_over_n: f64) -> f64 {
    1.0 / (1.0 / capacity + tau_bar_over_n)
}

/// One row of the bounds table. `lb_instantaneous` is `None` when the
/// arrival model has no finite slack and the bound does not apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub rate: f64,
    pub lb_instantaneous: Option<BoundValue>,
    pub lb_buffer: Option<BoundValue>,
    pub capacity: f64,
    pub c1: f64,
    pub h_limit: f64,
    pub tau_bar_over_n: f64,
}

impl BoundRow {
    pub const CSV_HEADER: &'static str = "R,lb_instantaneous,lb_buffer,C,C1,h_limit,tau_bar_over_n";

    pub fn csv_row(&self) -> String {
        let v = |b: Option<BoundValue>| b.map_or("n/a".to_string(), |b| b.value.to_string());
        format!(
            "{},{},{},{},{},{},{}",
            self.rate,
            v(self.lb_instantaneous),
            v(self.lb_buffer),
            self.capacity,
            self.c1,
            self.h_limit,
            self.tau_bar_over_n
        )
    }
}

/// Both bounds over a rate grid. With `finite_slack = false` both columns are
/// reported as not applicable.
pub fn bounds_table(
    capacity: f64,
    c1: f64,
    h_limit: f64,
    tau_bar_over_n: f64,
    finite_slack: bool,
    rates: &[f64],
) -> Result<Vec<BoundRow>> {
    rates
        .iter()
        .map(|&rate| {
            let b = BoundInputs {
                capacity,
                c1,
                rate,
                tau_bar_over_n,
                h_limit,
            };
            let (inst, buf) = if finite_slack {
                (
                    Some(reliability_lb_instantaneous(&b)?),
                    Some(reliability_lb_buffer(&b)?),
                )
            } else {
                b.validate()?;
                (None, None)
            };
            Ok(BoundRow {
                rate,
                lb_instantaneous: inst,
                lb_buffer: buf,
                capacity,
                c1,
                h_limit,
                tau_bar_over_n,
            })
        })
        .collect()
}

/// Heuristic mean type-set counts at step `t + 1`: `(before, after)` the partition.
pub fn typeset_count_bound(q: f64, t: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q <= 1.0) || !(t >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "count bound needs 0 < q <= 1 and t >= 1, got q = {q}, t = {t}"
        )));
    }
    let before = (2.0 - q) / 2.0 * t * t + (3.0 - q / 2.0) * t + q;
    Ok((before, before + (1.0 - q) * t + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub n: u32,
    pub trials: u64,
    pub mean_lambda: f64,
    pub lambda_sd: f64,
    pub rate: f64,
    pub error_rate: f64,
    /// Half-width of the 95% interval for the rate (delta method).
    pub ci_halfwidth: f64,
}

impl RatePoint {
    pub fn ci(&self) -> (f64, f64) {
        (self.rate - self.ci_halfwidth, self.rate + self.ci_halfwidth)
    }
}

/// Rate `n / mean(lambda)`, with truncated trials counted at the cap and as errors.
pub fn rate_point(records: &[TrialRecord], n: u32) -> Result<RatePoint> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no trials to summarize".into()));
    }
    if records.len() < 30 {
        warn!("rate interval from only {} trials", records.len());
    }
    let lambdas: Vec<f64> = records.iter().map(|r| r.lambda as f64).collect();
    let m = lambdas.len() as f64;
    let (mean, se) = mean_and_se(&lambdas);
    let sd = se * m.sqrt();
    let errors = records.iter().filter(|r| !r.correct || r.truncated).count() as f64;
    Ok(RatePoint {
        n,
        trials: records.len() as u64,
        mean_lambda: mean,
        lambda_sd: sd,
        rate: n as f64 / mean,
        error_rate: errors / m,
        ci_halfwidth: 1.96 * n as f64 * se / (mean * mean),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub n: u32,
    pub t_eval: u64,
    pub mean_bits: f64,
    pub se_bits: f64,
}

impl EntropyEstimate {
    pub fn per_bit(&self) -> f64 {
        self.mean_bits / self.n as f64
    }

    pub fn per_bit_se(&self) -> f64 {
        self.se_bits / self.n as f64
    }
}

/// Mean posterior entropy after step `t_eval`, over the trials of `cfg`.
/// Trials keep running past their stopping time so every trial reaches `t_eval`.
pub fn entropy_estimate(cfg: &ExperimentConfig, t_eval: u64) -> Result<EntropyEstimate> {
    if t_eval == 0 {
        return Err(Error::InvalidParameter("entropy needs t_eval >= 1".into()));
    }
    let cfg = ExperimentConfig {
        entropy_at: Some(t_eval),
        run_until: Some(t_eval),
        time_cap: cfg.time_cap.map(|c| c.max(t_eval)),
        ..cfg.clone()
    };
    let (_, records) = run_trials(&cfg)?;
    let values: Vec<f64> = records
        .iter()
        .map(|r| {
            r.entropy_bits
                .ok_or_else(|| Error::InvalidState(format!("trial {} has no entropy", r.index)))
        })
        .collect::<Result<_>>()?;
    let (mean_bits, se_bits) = mean_and_se(&values);
    Ok(EntropyEstimate {
        n: cfg.n,
        t_eval,
        mean_bits,
        se_bits,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
