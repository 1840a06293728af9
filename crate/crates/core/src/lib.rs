//! Instantaneous SED feedback coding of streaming bits.
//!
//! Message bits reach the encoder at random times; at every channel use the
//! encoder partitions the strings that could have arrived so far into two
//! groups of nearly equal probability and sends the index of the group that
//! holds the true prefix. Noiseless feedback lets the encoder track the
//! decoder's belief exactly.
//!
//! - [`sed_exact`] keeps the belief string by string.
//! - [`sed_typeset`] groups strings into heap-index intervals (type sets) and
//!   runs in polynomial time on binary symmetric channels.
//! - [`reference`] is a string-by-string implementation of the type-set rule,
//!   used to check [`sed_typeset`].
//! - [`harness`] runs seeded Monte Carlo experiments and [`analysis`]
//!   evaluates the reliability bounds and type-set count bounds.

pub mod analysis;
pub mod arrivals;
pub mod channel;
pub mod codec;
pub mod error;
pub mod harness;
pub mod reference;
pub mod sed_exact;
pub mod sed_typeset;
pub mod strings;
pub mod validate;

pub use arrivals::{ArrivalKind, ArrivalModel, ArrivalTrace};
pub use channel::{ChannelInfo, Dmc};
pub use codec::FeedbackCodec;
pub use error::{Error, Result};
pub use strings::VarString;
