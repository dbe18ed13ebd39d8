use crate::rng::stable_hash;

/// Trial seed from (base seed, agent, game, trial). Depends on nothing else,
/// so scheduling order cannot change it.
pub fn trial_seed(base_seed: u64, agent: &str, game: &str, trial: u32) -> u64 {
    let mut bytes = Vec::with_capacity(agent.len() + game.len() + 14);
    bytes.extend_from_slice(&base_seed.to_le_bytes());
    bytes.extend_from_slice(agent.as_bytes());
    bytes.push(0);
    bytes.extend_from_slice(game.as_bytes());
    bytes.push(0);
    bytes.extend_from_slice(&trial.to_le_bytes());
    stable_hash(&bytes)
}
