use running_example::diff_at;

#[test]
fn trigger_panic() {
    let _ = diff_at("5", &[1, 2, 3], 5);
}
