pub fn tail(s: &str, n: usize) -> &str {
    if n >= s.len() {
        return "";
    }
    &s[n..]
}
