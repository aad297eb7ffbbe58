use utf8_boundary::tail;

#[test]
fn ascii_tail() {
    assert_eq!(tail("hello", 2), "llo");
}

#[test]
fn past_end() {
    assert_eq!(tail("abc", 7), "");
}
