//! The step interface shared by every codec the harness can drive.

use crate::error::Result;
use crate::sed_typeset::CensusRecord;
use crate::strings::VarString;

/// Snapshot of a codec's belief for trace dumps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    /// Number of strings with positive mass.
    pub support_size: u128,
    /// Prior mass of group 0 (meaningful after [`FeedbackCodec::prepare`]).
    pub mass_g0: f64,
    /// Largest per-string mass in the current phase.
    pub max_mass: f64,
    /// Live type sets, for codecs that keep them.
    pub num_sets: Option<usize>,
    /// Deepest recursive split in the current step.
    pub split_depth: Option<u32>,
}

/// One side of a feedback link. Encoder and decoder run the same belief
/// pipeline; only the encoder calls [`FeedbackCodec::encode`].
pub trait FeedbackCodec {
    /// Time index of the step being prepared or just completed (0 before the first step).
    fn time(&self) -> u64;

    /// Advances to the next step: prior update and group partition.
    fn prepare(&mut self) -> Result<()>;

    /// Channel input for the string `B*_t` the encoder holds.
    fn encode(&self, received: VarString) -> Result<usize>;

    /// Posterior update with channel output `y`; returns the decoded message
    /// once the stopping rule fires.
    fn observe(&mut self, y: usize) -> Result<Option<VarString>>;

    /// Shannon entropy of the current belief, in bits.
    fn entropy_bits(&self) -> f64;

    fn stats(&self) -> StepStats;

    /// Per-step type-set counts, for codecs that keep type sets.
    fn census(&self) -> Option<&[CensusRecord]> {
        None
    }
}
