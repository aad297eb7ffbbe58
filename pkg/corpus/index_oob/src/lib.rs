pub fn payload(data: &[u8], header_len: usize) -> &[u8] {
    let start = header_len + 1;
    &data[start..]
}

pub fn checksum(data: &[u8]) -> u8 {
    data.iter().fold(0u8, |acc, b| acc.wrapping_add(*b))
}
