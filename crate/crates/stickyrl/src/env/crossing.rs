use super::Game;

/// Cross a stack of lanes from the bottom curb to the top one. Lane `r`
/// (1-based) is hazardous at episode frame `t` when `(t + r) % period == 0`;
/// ending a frame in a hazardous lane sends the avatar back to the bottom.
/// Climbing keeps `t + r` on one parity, so the start of a climb has to be
/// timed. Each crossing pays +1 and restarts from the bottom. The game lasts
/// a fixed number of frames.
#[derive(Clone, Debug)]
pub struct Crossing {
    lanes: i32,
    period: u32,
    row: i32,
}

pub const CROSSING_EPISODE_FRAMES: u32 = 400;

impl Crossing {
    pub const NOOP: usize = 0;
    pub const UP: usize = 1;
    pub const DOWN: usize = 2;

    pub fn new(mode: u32, difficulty: u32) -> Self {
        Crossing {
            lanes: if mode == 2 { 5 } else { 3 },
            period: if difficulty == 2 { 2 } else { 4 },
            row: 0,
        }
    }

    pub fn lanes(&self) -> i32 {
        self.lanes
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn row(&self) -> i32 {
        self.row
    }

    /// Hazard phase at episode frame `frame`.
    pub fn phase(&self, frame: u32) -> u32 {
        frame % self.period
    }

    fn hazard(&self, lane: i32, frame: u32) -> bool {
        (1..=self.lanes).contains(&lane) && (frame + lane as u32).is_multiple_of(self.period)
    }
}

impl Game for Crossing {
    fn action_count(&self) -> usize {
        3
    }

    fn observation_len(&self) -> usize {
        2
    }

    fn reset(&mut self) {
        self.row = 0;
    }

    fn advance(&mut self, action: usize, frame: u32) -> (i64, bool) {
        match action {
            Self::UP => self.row += 1,
            Self::DOWN => self.row = (self.row - 1).max(0),
            _ => {}
        }
        let over = frame + 1 >= CROSSING_EPISODE_FRAMES;
        if self.row > self.lanes {
            self.row = 0;
            return (1, over);
        }
        if self.hazard(self.row, frame + 1) {
            self.row = 0;
        }
        (0, over)
    }

    fn payload(&self, frame: u32) -> Vec<i32> {
        vec![self.row, self.phase(frame) as i32]
    }

    fn encode(&self) -> Vec<i64> {
        vec![self.row as i64]
    }

    fn decode(&mut self, data: &[i64]) -> Option<()> {
        let [row] = data else { return None };
        self.row = i32::try_from(*row).ok().filter(|r| (0..=self.lanes).contains(r))?;
        Some(())
    }
}
