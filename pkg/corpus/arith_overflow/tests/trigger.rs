use arith_overflow::{Margin, Rect};

#[test]
fn trigger_panic() {
    let r = Rect { x: u16::MAX, y: 0, width: 10, height: 10 };
    let _ = r.inner(Margin { horizontal: 1, vertical: 1 });
}
