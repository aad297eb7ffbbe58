#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub horizontal: u16,
    pub vertical: u16,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: u16,
    pub y: u16,
    pub width: u16,
    pub height: u16,
}

impl Rect {
    pub fn inner(&self, margin: Margin) -> Rect {
        if self.width < 2 * margin.horizontal || self.height < 2 * margin.vertical {
            return Rect { x: self.x, y: self.y, width: 0, height: 0 };
        }
        Rect {
            x: self.x + margin.horizontal,
            y: self.y + margin.vertical,
            width: self.width - 2 * margin.horizontal,
            height: self.height - 2 * margin.vertical,
        }
    }
}
