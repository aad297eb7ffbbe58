use detector_crate::halve;

#[test]
fn program_panics() {
    halve(&[4, 6], 7);
}

#[test]
fn assertion_fails() {
    assert_eq!(halve(&[4, 6], 1), 4);
}

#[test]
fn passes() {
    assert_eq!(halve(&[4, 6], 0), 2);
}
