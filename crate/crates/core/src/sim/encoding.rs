use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tiny_keccak::{Hasher, Keccak};

use crate::model::ChoreographyModel;

/// 20-byte account address. Displays with the mixed-case checksum used by
/// Solidity address literals.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub [u8; 20]);

pub fn keccak256(data: &[u8]) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut k = Keccak::v256();
    k.update(data);
    k.finalize(&mut out);
    out
}

impl Address {
    pub fn lower_hex(&self) -> String {
        let mut s = String::with_capacity(42);
        s.push_str("0x");
        for b in self.0 {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    pub fn checksummed(&self) -> String {
        let lower = self.lower_hex();
        let hash = keccak256(&lower.as_bytes()[2..]);
        let mut out = String::from("0x");
        for (i, c) in lower[2..].chars().enumerate() {
            let nibble = (hash[i / 2] >> if i % 2 == 0 { 4 } else { 0 }) & 0x0f;
            if c.is_ascii_alphabetic() && nibble >= 8 {
                out.push(c.to_ascii_uppercase());
            } else {
                out.push(c);
            }
        }
        out
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.checksummed())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lower_hex())
    }
}

impl FromStr for Address {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        if hex.len() != 40 {
            return Err(format!("address `{s}` must have 40 hex digits"));
        }
        let mut out = [0u8; 20];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                .map_err(|_| format!("address `{s}` is not hexadecimal"))?;
        }
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.checksummed())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskEntry {
    pub task_id: String,
    pub initiator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParticipantEntry {
    pub participant_id: String,
    pub address: Address,
}

/// Index and address assignment shared by prompts, contracts and replay.
/// Position in each list is the index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Encoding {
    pub tasks: Vec<TaskEntry>,
    pub participants: Vec<ParticipantEntry>,
    pub variables: Vec<String>,
}

impl Encoding {
    pub fn task_index(&self, task_id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.task_id == task_id)
    }

    pub fn address_of(&self, participant_id: &str) -> Option<Address> {
        self.participants
            .iter()
            .find(|p| p.participant_id == participant_id)
            .map(|p| p.address)
    }

    pub fn participant_at(&self, address: &Address) -> Option<&str> {
        self.participants
            .iter()
            .find(|p| &p.address == address)
            .map(|p| p.participant_id.as_str())
    }

    pub fn variable_index(&self, variable_id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == variable_id)
    }

    /// Plain-text listing embedded into prompts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("Tasks (taskIndex: task id, initiating participant):\n");
        for (i, t) in self.tasks.iter().enumerate() {
            let _ = writeln!(out, "  {i}: {} (initiator {})", t.task_id, t.initiator);
        }
        out.push_str("Participants (participant id: address):\n");
        for p in &self.participants {
            let _ = writeln!(out, "  {}: {}", p.participant_id, p.address);
        }
        out.push_str("Condition variables (variableIndex: variable id):\n");
        if self.variables.is_empty() {
            out.push_str("  (none)\n");
        }
        for (i, v) in self.variables.iter().enumerate() {
            let _ = writeln!(out, "  {i}: {v}");
        }
        out
    }
}

/// Dense indices in document order and one seeded pseudo-address per
/// participant. Participant `i` draws from stream `i` of a ChaCha8 generator
/// keyed by `seed`.
pub fn build_encoding(model: &ChoreographyModel, seed: u64) -> Encoding {
    let mut participants: Vec<ParticipantEntry> = Vec::new();
    for (i, p) in model.participants.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let address = loop {
            let mut bytes = [0u8; 20];
            rng.fill_bytes(&mut bytes);
            let a = Address(bytes);
            // low addresses are EVM precompiles
            if bytes[..19].iter().any(|&b| b != 0) && participants.iter().all(|q| q.address != a) {
                break a;
            }
        };
        participants.push(ParticipantEntry {
            participant_id: p.participant_id.clone(),
            address,
        });
    }
    Encoding {
        tasks: model
            .tasks
            .iter()
            .map(|t| TaskEntry {
                task_id: t.task_id.clone(),
                initiator: t.initiator.clone(),
            })
            .collect(),
        participants,
        variables: model.condition_variables(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Participant, Task};

    #[test]
    fn checksum_matches_published_vectors() {
        for s in [
            "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed",
            "0xfB6916095ca1df60bB79Ce92cE3Ea74c37c5d359",
            "0xdbF03B407c01E7cD3CBea99509d93f8DDDC8C6FB",
            "0xD1220A0cf47c7B9Be7A2E6BA89F429762e7b9aDb",
        ] {
            let a: Address = s.parse().unwrap();
            assert_eq!(a.checksummed(), s);
        }
    }

    fn model() -> ChoreographyModel {
        let mut m = ChoreographyModel::empty("m");
        for id in ["P1", "P2"] {
            m.participants.push(Participant { participant_id: id.into(), name: id.into() });
        }
        for (id, init) in [("T1", "P1"), ("T2", "P2")] {
            m.tasks.push(Task { task_id: id.into(), name: id.into(), initiator: init.into(), recipient: "P1".into() });
        }
        m
    }

    #[test]
    fn dense_and_deterministic() {
        let e = build_encoding(&model(), 42);
        assert_eq!(e.task_index("T1"), Some(0));
        assert_eq!(e.task_index("T2"), Some(1));
        assert_ne!(e.address_of("P1"), e.address_of("P2"));
        assert_eq!(e, build_encoding(&model(), 42));
        assert_ne!(e, build_encoding(&model(), 43));
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<Encoding>(&json).unwrap(), e);
        assert!(e.render().contains(&e.address_of("P2").unwrap().to_string()));
    }
}
