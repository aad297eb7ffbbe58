use std::cell::RefCell;

pub struct Inventory {
    items: RefCell<Vec<u32>>,
}

impl Inventory {
    pub fn new(items: Vec<u32>) -> Self {
        Inventory { items: RefCell::new(items) }
    }

    pub fn total(&self) -> u32 {
        let items = self.items.borrow();
        let sum: u32 = items.iter().sum();
        if sum == 0 {
            self.items.borrow_mut().clear();
        }
        sum
    }

    pub fn add(&self, n: u32) {
        self.items.borrow_mut().push(n);
    }

    pub fn len(&self) -> usize {
        self.items.borrow().len()
    }
}
