pub struct Table {
    slots: Vec<u32>,
}

impl Table {
    pub fn new(n: usize) -> Self {
        Table { slots: vec![0; n] }
    }

    pub fn set_slot(&mut self, idx: usize, value: u32) -> bool {
        let pos = idx * 2;
        if value > 0 {
            assert!(pos < self.slots.len());
            self.slots[pos] = value;
            return true;
        }
        false
    }

    pub fn get(&self, idx: usize) -> u32 {
        self.slots[idx * 2]
    }
}
