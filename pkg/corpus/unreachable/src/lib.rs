fn hex_digit(c: char) -> u32 {
    match c {
        '0'..='9' => c as u32 - '0' as u32,
        'a'..='f' => c as u32 - 'a' as u32 + 10,
        _ => unreachable!(),
    }
}

pub fn parse_hex(s: &str) -> u32 {
    let digits = s.trim_start_matches("0x");
    let mut value = 0;
    for c in digits.chars() {
        value = value * 16 + hex_digit(c);
    }
    value
}
