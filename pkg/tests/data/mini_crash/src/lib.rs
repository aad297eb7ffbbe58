#[inline(never)]
pub fn pick(v: &[i32], i: usize) -> i32 {
    let idx = i * 2;
    let x = v[idx];
    x + 1
}
