use running_example::diff_at;

#[test]
fn in_range() {
    assert_eq!(diff_at(" 5 ", &[1, 2, 3], 1), 3);
}

#[test]
fn negative_input() {
    assert_eq!(diff_at("-4", &[1], 0), 0);
}
