pub fn diff_at(input: &str, arr: &[i32], num2: usize) -> i32 {
    let num1: i32 = input.trim().parse().unwrap();
    if num1 < 0 {
        return 0;
    }
    let diff = num1 - arr[num2];
    diff
}
