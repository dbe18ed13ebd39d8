use super::Game;

/// Two rows. The agent walks the top row from column 0 toward the goal in
/// the last column. The bottom row holds a support pillar every
/// `PILLAR_SPACING` columns and open air elsewhere: DOWN above a pillar does
/// nothing, DOWN above air is a fall. A fall costs a life and the penalty and
/// respawns the agent at column 0. Three lives.
///
/// With a frame skip equal to the pillar spacing, a player that only ever
/// holds one action per window stops on pillars, so only drift between
/// windows can put it over air.
///
/// Mode 2 replaces one stretch of the walkway with a plank that is only
/// present on alternate `PLANK_PERIOD`-frame phases; standing on the missing
/// plank is a fall, so the crossing has to be timed with NOOPs.
#[derive(Clone, Debug)]
pub struct CliffCorridor {
    width: i32,
    plank: Option<(i32, i32)>,
    goal_reward: i64,
    fall_penalty: i64,
    col: i32,
    lives: u32,
}

pub const PILLAR_SPACING: i32 = 5;
pub const PLANK_PERIOD: u32 = 5;
const LIVES: u32 = 3;

impl CliffCorridor {
    pub const NOOP: usize = 0;
    pub const LEFT: usize = 1;
    pub const RIGHT: usize = 2;
    pub const DOWN: usize = 3;

    pub fn new(mode: u32, difficulty: u32) -> Self {
        let (goal_reward, fall_penalty) = if difficulty == 2 { (5, 5) } else { (10, 1) };
        CliffCorridor {
            width: 21,
            plank: (mode == 2).then_some((11, 14)),
            goal_reward,
            fall_penalty,
            col: 0,
            lives: LIVES,
        }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn column(&self) -> i32 {
        self.col
    }

    pub fn over_pillar(&self) -> bool {
        self.col % PILLAR_SPACING == 0
    }

    fn plank_present(frame: u32) -> bool {
        (frame / PLANK_PERIOD).is_multiple_of(2)
    }

    fn on_missing_plank(&self, frame: u32) -> bool {
        match self.plank {
            Some((lo, hi)) => (lo..=hi).contains(&self.col) && !Self::plank_present(frame),
            None => false,
        }
    }

    fn fall(&mut self) -> (i64, bool) {
        self.lives -= 1;
        self.col = 0;
        (-self.fall_penalty, self.lives == 0)
    }
}

impl Game for CliffCorridor {
    fn action_count(&self) -> usize {
        4
    }

    fn observation_len(&self) -> usize {
        if self.plank.is_some() {
            2
        } else {
            1
        }
    }

    fn reset(&mut self) {
        self.col = 0;
        self.lives = LIVES;
    }

    fn advance(&mut self, action: usize, frame: u32) -> (i64, bool) {
        match action {
            Self::LEFT => self.col = (self.col - 1).max(0),
            Self::RIGHT => self.col = (self.col + 1).min(self.width - 1),
            Self::DOWN if !self.over_pillar() => return self.fall(),
            _ => {}
        }
        if self.col == self.width - 1 {
            return (self.goal_reward, true);
        }
        if self.on_missing_plank(frame) {
            return self.fall();
        }
        (0, false)
    }

    fn payload(&self, frame: u32) -> Vec<i32> {
        match self.plank {
            Some(_) => vec![self.col, Self::plank_present(frame) as i32],
            None => vec![self.col],
        }
    }

    fn lives(&self) -> Option<u32> {
        Some(self.lives)
    }

    fn encode(&self) -> Vec<i64> {
        vec![self.col as i64, self.lives as i64]
    }

    fn decode(&mut self, data: &[i64]) -> Option<()> {
        let [col, lives] = data else { return None };
        let col = i32::try_from(*col).ok().filter(|c| (0..self.width).contains(c))?;
        let lives = u32::try_from(*lives).ok().filter(|l| *l <= LIVES)?;
        self.col = col;
        self.lives = lives;
        Some(())
    }
}
