//! Variable-length binary strings identified by their heap index.
//!
//! The empty string has index 0 and appending bit `b` to the string with
//! index `i` gives `2i + 1 + b`. Strings of length `l` therefore occupy the
//! contiguous range `[2^l - 1, 2^(l+1) - 2]`, and within one length the
//! numeric order is the lexicographic order.

use std::fmt;

use crate::error::{Error, Result};

/// Longest string whose children still have a representable index.
pub const MAX_LEN: u32 = 126;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VarString(u128);

impl VarString {
    pub const EMPTY: VarString = VarString(0);

    pub fn from_heap_index(index: u128) -> Self {
        VarString(index)
    }

    pub fn heap_index(self) -> u128 {
        self.0
    }

    pub fn len(self) -> u32 {
        127 - (self.0 + 1).leading_zeros()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// `self ⊞ bit`.
    pub fn push(self, bit: u8) -> Self {
        debug_assert!(bit <= 1);
        debug_assert!(self.len() <= MAX_LEN);
        VarString(2 * self.0 + 1 + bit as u128)
    }

    /// `self ⊟`: drops the last bit. `None` for the empty string.
    pub fn parent(self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            Some(VarString((self.0 - 1) / 2))
        }
    }

    /// The bits read as a big-endian integer.
    pub fn payload(self) -> u128 {
        self.0 + 1 - (1u128 << self.len())
    }

    pub fn from_payload(len: u32, payload: u128) -> Self {
        VarString(first_index(len) + payload)
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > MAX_LEN as usize + 1 {
            return Err(Error::InvalidParameter(format!(
                "strings longer than {} bits are not representable",
                MAX_LEN + 1
            )));
        }
        Ok(bits.iter().fold(VarString::EMPTY, |s, &b| s.push(b)))
    }

    pub fn bits(self) -> Vec<u8> {
        let len = self.len();
        let payload = self.payload();
        (0..len)
            .rev()
            .map(|k| ((payload >> k) & 1) as u8)
            .collect()
    }

    /// The first `len` bits of this string.
    pub fn truncate(self, len: u32) -> Self {
        let own = self.len();
        if len >= own {
            return self;
        }
        VarString::from_payload(len, self.payload() >> (own - len))
    }
}

/// Heap index of the all-zeros string of length `len`.
pub fn first_index(len: u32) -> u128 {
    (1u128 << len) - 1
}

/// Heap index of the all-ones string of length `len`.
pub fn last_index(len: u32) -> u128 {
    (1u128 << (len + 1)) - 2
}

/// Length of the string with heap index `index`.
pub fn index_len(index: u128) -> u32 {
    VarString(index).len()
}

impl fmt::Display for VarString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("ε");
        }
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VarString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VarString({self}#{})", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn heap_numbering_of_short_strings() {
        let idx = |s: &[u8]| VarString::from_bits(s).unwrap().heap_index();
        assert_eq!(idx(&[]), 0);
        assert_eq!(idx(&[0]), 1);
        assert_eq!(idx(&[1]), 2);
        assert_eq!(idx(&[0, 0]), 3);
        assert_eq!(idx(&[0, 1]), 4);
        assert_eq!(idx(&[1, 0]), 5);
        assert_eq!(idx(&[1, 1]), 6);
        assert_eq!(first_index(2), 3);
        assert_eq!(last_index(2), 6);
    }

    #[test]
    fn display_and_truncate() {
        let s = VarString::from_bits(&[1, 0, 1, 1]).unwrap();
        assert_eq!(s.to_string(), "1011");
        assert_eq!(s.truncate(2).to_string(), "10");
        assert_eq!(s.truncate(9), s);
        assert_eq!(VarString::EMPTY.to_string(), "ε");
    }

    #[test]
    fn long_strings_fit() {
        let ones = vec![1u8; 127];
        let s = VarString::from_bits(&ones).unwrap();
        assert_eq!(s.len(), 127);
        assert_eq!(s.heap_index(), u128::MAX - 1);
        assert!(VarString::from_bits(&[0u8; 128]).is_err());
    }

    proptest! {
        #[test]
        fn index_determines_bits(bits in proptest::collection::vec(0u8..2, 0..100)) {
            let s = VarString::from_bits(&bits).unwrap();
            prop_assert_eq!(s.len() as usize, bits.len());
            prop_assert_eq!(s.bits(), bits.clone());
            if let Some(p) = s.parent() {
                prop_assert_eq!(p.bits(), bits[..bits.len() - 1].to_vec());
            }
        }

        #[test]
        fn index_order_is_lexicographic_within_length(
            a in proptest::collection::vec(0u8..2, 1..40),
            b in proptest::collection::vec(0u8..2, 1..40),
        ) {
            let len = a.len().min(b.len());
            let (a, b) = (&a[..len], &b[..len]);
            let (sa, sb) = (VarString::from_bits(a).unwrap(), VarString::from_bits(b).unwrap());
            prop_assert_eq!(a.cmp(b), sa.cmp(&sb));
        }
    }
}
