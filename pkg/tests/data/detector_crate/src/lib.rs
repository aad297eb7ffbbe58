pub fn halve(v: &[u32], i: usize) -> u32 {
    v[i] / 2
}
