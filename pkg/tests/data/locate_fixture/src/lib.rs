fn first(opt: Option<u32>, values: &[u32]) -> u32 {
    let x = opt.unwrap();
    let y = x + values[1];

    if y > 10 {
        return y;
    }
    helper(y)
}
fn helper(v: u32) -> u32 { v * 2 }
