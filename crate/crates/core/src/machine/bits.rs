use std::fmt;
use std::ops::{BitAnd, BitOr, Not};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// 256-bit word, least significant limb first.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits256(pub [u64; 4]);

impl Bits256 {
    pub const BITS: usize = 256;
    pub const ZERO: Bits256 = Bits256([0; 4]);

    pub fn bit(i: usize) -> Self {
        assert!(i < Self::BITS, "bit {i} out of range");
        let mut limbs = [0; 4];
        limbs[i / 64] = 1 << (i % 64);
        Bits256(limbs)
    }

    pub fn from_bits(bits: impl IntoIterator<Item = usize>) -> Self {
        bits.into_iter().fold(Self::ZERO, |acc, i| acc | Self::bit(i))
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|l| l.count_ones()).sum()
    }

    /// `self & mask == mask`
    pub fn covers(&self, mask: Bits256) -> bool {
        *self & mask == mask
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (k, limb) in self.0.iter().enumerate() {
            out[32 - 8 * (k + 1)..32 - 8 * k].copy_from_slice(&limb.to_be_bytes());
        }
        out
    }

    pub fn from_be_bytes(bytes: &[u8; 32]) -> Self {
        let mut limbs = [0u64; 4];
        for (k, limb) in limbs.iter_mut().enumerate() {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[32 - 8 * (k + 1)..32 - 8 * k]);
            *limb = u64::from_be_bytes(b);
        }
        Bits256(limbs)
    }

    /// Minimal `0x`-prefixed hex form, `0x0` for zero.
    pub fn to_hex(&self) -> String {
        let full: String = self.to_be_bytes().iter().map(|b| format!("{b:02x}")).collect();
        let trimmed = full.trim_start_matches('0');
        format!("0x{}", if trimmed.is_empty() { "0" } else { trimmed })
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        if digits.is_empty() || digits.len() > 64 {
            return None;
        }
        let padded = format!("{digits:0>64}");
        let mut bytes = [0u8; 32];
        for (i, b) in bytes.iter_mut().enumerate() {
            *b = u8::from_str_radix(&padded[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(Self::from_be_bytes(&bytes))
    }
}

impl BitAnd for Bits256 {
    type Output = Bits256;
    fn bitand(self, rhs: Self) -> Self {
        Bits256(std::array::from_fn(|i| self.0[i] & rhs.0[i]))
    }
}

impl BitOr for Bits256 {
    type Output = Bits256;
    fn bitor(self, rhs: Self) -> Self {
        Bits256(std::array::from_fn(|i| self.0[i] | rhs.0[i]))
    }
}

impl Not for Bits256 {
    type Output = Bits256;
    fn not(self) -> Self {
        Bits256(self.0.map(|l| !l))
    }
}

impl fmt::Debug for Bits256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Display for Bits256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Bits256 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Bits256 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bits256::from_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("bad 256-bit hex `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_forms() {
        assert_eq!(Bits256::ZERO.to_hex(), "0x0");
        assert_eq!(Bits256::from_bits([0, 2]).to_hex(), "0x5");
        assert_eq!(Bits256::bit(64).to_hex(), "0x10000000000000000");
        assert_eq!(Bits256::bit(255).to_hex(), format!("0x8{}", "0".repeat(63)));
    }

    proptest! {
        #[test]
        fn hex_round_trip(limbs in any::<[u64; 4]>()) {
            let b = Bits256(limbs);
            prop_assert_eq!(Bits256::from_hex(&b.to_hex()), Some(b));
            prop_assert_eq!(Bits256::from_be_bytes(&b.to_be_bytes()), b);
        }

        #[test]
        fn mask_algebra(a in any::<[u64; 4]>(), m in any::<[u64; 4]>()) {
            let (a, m) = (Bits256(a), Bits256(m));
            prop_assert_eq!((a & !m) | (a & m), a);
            prop_assert_eq!((a | m).covers(m), true);
            prop_assert_eq!(a.count_ones() , (a & m).count_ones() + (a & !m).count_ones());
        }
    }
}
