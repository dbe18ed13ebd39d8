use super::Game;

/// A line of cells. Start at 0; reaching the last cell pays +1 and ends the
/// game. Mode 2 doubles the length and puts a -1 cell halfway. Difficulty 2
/// swaps LEFT and RIGHT.
#[derive(Clone, Debug)]
pub struct ChainWalk {
    length: i32,
    penalty_cell: Option<i32>,
    swapped: bool,
    pos: i32,
}

impl ChainWalk {
    pub const NOOP: usize = 0;
    pub const LEFT: usize = 1;
    pub const RIGHT: usize = 2;

    pub fn new(mode: u32, difficulty: u32) -> Self {
        let (length, penalty_cell) = if mode == 2 { (16, Some(8)) } else { (8, None) };
        ChainWalk {
            length,
            penalty_cell,
            swapped: difficulty == 2,
            pos: 0,
        }
    }

    pub fn length(&self) -> i32 {
        self.length
    }

    pub fn position(&self) -> i32 {
        self.pos
    }
}

impl Game for ChainWalk {
    fn action_count(&self) -> usize {
        3
    }

    fn observation_len(&self) -> usize {
        1
    }

    fn reset(&mut self) {
        self.pos = 0;
    }

    fn advance(&mut self, action: usize, _frame: u32) -> (i64, bool) {
        let step = match (action, self.swapped) {
            (Self::LEFT, false) | (Self::RIGHT, true) => -1,
            (Self::RIGHT, false) | (Self::LEFT, true) => 1,
            _ => 0,
        };
        let next = (self.pos + step).clamp(0, self.length - 1);
        let moved = next != self.pos;
        self.pos = next;
        if self.pos == self.length - 1 {
            return (1, true);
        }
        if moved && Some(self.pos) == self.penalty_cell {
            return (-1, false);
        }
        (0, false)
    }

    fn payload(&self, _frame: u32) -> Vec<i32> {
        vec![self.pos]
    }

    fn encode(&self) -> Vec<i64> {
        vec![self.pos as i64]
    }

    fn decode(&mut self, data: &[i64]) -> Option<()> {
        let [pos] = data else { return None };
        let pos = i32::try_from(*pos).ok().filter(|p| (0..self.length).contains(p))?;
        self.pos = pos;
        Some(())
    }
}
