use super::Game;

/// Square room. Start in one corner, the key in the adjacent corner along
/// the top, the door in the corner below the start. The door pays +100 and
/// ends the game once the key has been picked up; nothing else pays.
/// Difficulty 2 lines the middle row with a trap corridor costing -1 per
/// entered cell.
#[derive(Clone, Debug)]
pub struct KeyDoor {
    size: i32,
    traps: bool,
    x: i32,
    y: i32,
    has_key: bool,
}

impl KeyDoor {
    pub const NOOP: usize = 0;
    pub const UP: usize = 1;
    pub const DOWN: usize = 2;
    pub const LEFT: usize = 3;
    pub const RIGHT: usize = 4;

    pub fn new(mode: u32, difficulty: u32) -> Self {
        KeyDoor {
            size: if mode == 2 { 7 } else { 5 },
            traps: difficulty == 2,
            x: 0,
            y: 0,
            has_key: false,
        }
    }

    pub fn size(&self) -> i32 {
        self.size
    }

    pub fn key_cell(&self) -> (i32, i32) {
        (self.size - 1, 0)
    }

    pub fn door_cell(&self) -> (i32, i32) {
        (0, self.size - 1)
    }

    pub fn is_trap(&self, x: i32, y: i32) -> bool {
        self.traps && y == self.size / 2 && (1..self.size - 1).contains(&x)
    }
}

impl Game for KeyDoor {
    fn action_count(&self) -> usize {
        5
    }

    fn observation_len(&self) -> usize {
        3
    }

    fn reset(&mut self) {
        self.x = 0;
        self.y = 0;
        self.has_key = false;
    }

    fn advance(&mut self, action: usize, _frame: u32) -> (i64, bool) {
        let (dx, dy) = match action {
            Self::UP => (0, -1),
            Self::DOWN => (0, 1),
            Self::LEFT => (-1, 0),
            Self::RIGHT => (1, 0),
            _ => (0, 0),
        };
        let nx = (self.x + dx).clamp(0, self.size - 1);
        let ny = (self.y + dy).clamp(0, self.size - 1);
        let moved = (nx, ny) != (self.x, self.y);
        self.x = nx;
        self.y = ny;
        if (self.x, self.y) == self.key_cell() {
            self.has_key = true;
        }
        if self.has_key && (self.x, self.y) == self.door_cell() {
            return (100, true);
        }
        if moved && self.is_trap(self.x, self.y) {
            return (-1, false);
        }
        (0, false)
    }

    fn payload(&self, _frame: u32) -> Vec<i32> {
        vec![self.x, self.y, self.has_key as i32]
    }

    fn encode(&self) -> Vec<i64> {
        vec![self.x as i64, self.y as i64, self.has_key as i64]
    }

    fn decode(&mut self, data: &[i64]) -> Option<()> {
        let [x, y, k] = data else { return None };
        let range = 0..self.size as i64;
        if !range.contains(x) || !range.contains(y) || !(0..=1).contains(k) {
            return None;
        }
        self.x = *x as i32;
        self.y = *y as i32;
        self.has_key = *k == 1;
        Some(())
    }
}
