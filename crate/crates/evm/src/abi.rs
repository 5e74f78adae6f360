use chorbench_core::sim::keccak256;

/// First four bytes of the keccak hash of a canonical signature.
pub fn selector(signature: &str) -> [u8; 4] {
    let h = keccak256(signature.as_bytes());
    [h[0], h[1], h[2], h[3]]
}

fn word_u64(v: u64) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[24..].copy_from_slice(&v.to_be_bytes());
    w
}

/// Calldata for the fixed contract interface.
pub struct Abi;

impl Abi {
    pub fn execute_task(task_index: usize) -> Vec<u8> {
        let mut d = selector("executeTask(uint256)").to_vec();
        d.extend_from_slice(&word_u64(task_index as u64));
        d
    }

    pub fn set_data(variable_index: usize, value: bool) -> Vec<u8> {
        let mut d = selector("setData(uint256,bool)").to_vec();
        d.extend_from_slice(&word_u64(variable_index as u64));
        d.extend_from_slice(&word_u64(value as u64));
        d
    }

    pub fn token_state() -> Vec<u8> {
        selector("tokenState()").to_vec()
    }

    pub fn is_ended() -> Vec<u8> {
        selector("isEnded()").to_vec()
    }

    /// Reads a single `bool` return word. Anything else is `None`.
    pub fn decode_bool(ret: &[u8]) -> Option<bool> {
        if ret.len() != 32 || ret[..31].iter().any(|&b| b != 0) {
            return None;
        }
        match ret[31] {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        }
    }
}
