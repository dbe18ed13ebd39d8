use serde::{Deserialize, Serialize};

use crate::env::{ActionId, Observation};
use crate::rng::mix64;

/// 64-bit digest of one observation, the terminal flag included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObsDigest(pub u64);

impl ObsDigest {
    pub fn of(obs: &Observation, terminal: bool) -> Self {
        let mut h = 0x243F_6A88_85A3_08D3u64 ^ obs.payload.len() as u64;
        for v in &obs.payload {
            h = mix64(h ^ (*v as i64 as u64));
        }
        let lives = obs.lives.map_or(u64::MAX, u64::from);
        h = mix64(h ^ lives);
        h = mix64(h ^ obs.score_delta as u64);
        ObsDigest(mix64(h ^ terminal as u64))
    }
}

/// 128-bit digest of an action/observation sequence, built incrementally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HistoryKey(pub u128);

impl HistoryKey {
    /// Key of the empty history.
    pub const ROOT: HistoryKey = HistoryKey(0x6A09_E667_F3BC_C908_BB67_AE85_84CA_A73B);

    pub fn extend(self, action: ActionId, obs: ObsDigest) -> HistoryKey {
        let lo = self.0 as u64;
        let hi = (self.0 >> 64) as u64;
        let x = mix64(obs.0 ^ (action.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let new_lo = mix64(lo ^ x).wrapping_add(hi.rotate_left(23));
        let new_hi = mix64(hi ^ x.rotate_left(41) ^ 0xD6E8_FEB8_6659_FD93) ^ new_lo;
        HistoryKey(((new_hi as u128) << 64) | new_lo as u128)
    }
}
